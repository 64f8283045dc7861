"""Arithmetic backends that circuits are written against.

Every circuit in :mod:`heip.he_image` and :mod:`heip.rle_fourier` only calls
``add``, ``sub``, ``neg``, ``mul``, ``mul_const`` and ``add_const``. Three backends
implement them:

* :class:`HomomorphicEvaluator` on FV ciphertexts,
* :class:`PlainEvaluator` on floats (the plaintext twin),
* :class:`EncodedEvaluator` on exact integer digit polynomials, i.e. the
  plaintext polynomial a ciphertext would decrypt to if t were infinite. It is
  used to size t and to predict overflow without encrypting anything.

Constants are always quantized through the encoder (when one is given) so the
twin and the ciphertext path run literally the same arithmetic.
"""
from __future__ import annotations

from collections import Counter
from fractions import Fraction

from . import fv
from .encoding import FractionalEncoder, as_fraction
from .ring import RingPoly


class HomomorphicEvaluator:
    def __init__(self, params: fv.EncryptionParams, encoder: FractionalEncoder):
        if encoder.n != params.n or encoder.t != params.t:
            raise ValueError("encoder does not match the encryption parameters")
        self.params = params
        self.encoder = encoder
        self.counts: Counter = Counter()
        self._consts: dict[float, RingPoly] = {}
        self._terms: dict[float, dict] = {}

    def const_terms(self, value: float) -> dict:
        value = float(value)
        w = self._terms.get(value)
        if w is None:
            w = self._terms[value] = fv.plain_terms(self.params, self.const(value))
        return w

    def const(self, value: float) -> RingPoly:
        value = float(value)
        p = self._consts.get(value)
        if p is None:
            p = self.encoder.encode(value)
            self._consts[value] = p
        return p

    def zero(self):
        return fv.zero_ciphertext(self.params)

    def add(self, a, b):
        self.counts["add"] += 1
        return fv.add(a, b)

    def sub(self, a, b):
        self.counts["add"] += 1
        return fv.sub(a, b)

    def neg(self, a):
        return fv.negate(a)

    def mul(self, a, b):
        self.counts["ct_mul"] += 1
        return fv.multiply(a, b)

    def mul_const(self, a, w: float):
        w = float(w)
        if w == 1.0:
            return a
        if w == 0.0:
            return fv.zero_ciphertext(self.params, len(a))
        self.counts["plain_mul"] += 1
        return fv.matvec_plain([a], [[self.const_terms(w)]])[0]

    def add_const(self, a, w: float):
        if float(w) == 0.0:
            return a
        return fv.add_plain(a, self.const(w))

    def matvec(self, values: list, rows: list) -> list:
        """[sum_i rows[j][i] * values[i] for each j], public weights only."""
        prow = []
        for row in rows:
            prow.append([None if float(w) == 0.0 else self.const_terms(w) for w in row])
            self.counts["plain_mul"] += sum(1 for w in row if float(w) != 0.0)
            self.counts["add"] += max(sum(1 for w in row if float(w) != 0.0) - 1, 0)
        return fv.matvec_plain(list(values), prow)


class PlainEvaluator:
    """Floats, or exact Fractions with ``exact=True``.

    With an encoder, constants are replaced by what the encoder can represent.
    Deep circuits (the Taylor-expanded trig) cancel huge intermediates, so their
    twin must run exact.
    """

    def __init__(self, encoder: FractionalEncoder | None = None, exact: bool = False):
        self.encoder = encoder
        self.exact = exact
        self.counts: Counter = Counter()
        self._consts: dict = {}

    def lift(self, value):
        """Input value in this evaluator's number type."""
        return as_fraction(value) if self.exact else float(value)

    def const(self, value: float):
        value = float(value)
        c = self._consts.get(value)
        if c is None:
            if self.encoder is not None:
                c = self.encoder.quantize_exact(value) if self.exact else self.encoder.quantize(value)
            else:
                c = Fraction(value) if self.exact else value
            self._consts[value] = c
        return c

    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def add(self, a, b):
        self.counts["add"] += 1
        return a + b

    def sub(self, a, b):
        self.counts["add"] += 1
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        self.counts["ct_mul"] += 1
        return a * b

    def mul_const(self, a, w: float):
        w = float(w)
        if w == 1.0:
            return a
        if w == 0.0:
            return self.zero()
        self.counts["plain_mul"] += 1
        return a * self.const(w)

    def add_const(self, a, w: float):
        if float(w) == 0.0:
            return a
        return a + self.const(w)

    def matvec(self, values: list, rows: list) -> list:
        return _generic_matvec(self, values, rows)


class SparsePoly(dict):
    """Integer polynomial modulo x^n + 1 as {exponent: coefficient}."""

    __slots__ = ("n",)

    def __init__(self, n: int, terms=None):
        super().__init__()
        self.n = n
        if terms:
            for k, v in terms.items():
                if v:
                    self[k] = v

    def max_abs(self) -> int:
        return max((abs(v) for v in self.values()), default=0)

    def to_ring(self, t: int) -> RingPoly:
        from .ring import RingContext

        coeffs = [0] * self.n
        for k, v in self.items():
            coeffs[k] = v
        return RingPoly(RingContext(self.n, t), coeffs)


def _sp_add(a: SparsePoly, b: SparsePoly, sign: int = 1) -> SparsePoly:
    out = SparsePoly(a.n, a)
    for k, v in b.items():
        s = out.get(k, 0) + sign * v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _sp_mul(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    n = a.n
    acc: dict[int, int] = {}
    for i, x in a.items():
        for j, y in b.items():
            k = i + j
            v = x * y
            if k >= n:
                k -= n
                v = -v
            acc[k] = acc.get(k, 0) + v
    return SparsePoly(n, acc)


class EncodedEvaluator:
    """Exact digit-polynomial arithmetic over Z[x]/(x^n + 1), no reduction mod t."""

    def __init__(self, encoder: FractionalEncoder):
        self.encoder = encoder
        self.n = encoder.n
        self.counts: Counter = Counter()
        self._consts: dict[float, SparsePoly] = {}

    def encode(self, value) -> SparsePoly:
        terms = {}
        for e, d in self.encoder.terms(value).items():
            k, s = self.encoder.exponent_slot(e)
            terms[k] = s * d
        return SparsePoly(self.n, terms)

    def const(self, value: float) -> SparsePoly:
        value = float(value)
        c = self._consts.get(value)
        if c is None:
            c = self.encode(value)
            self._consts[value] = c
        return c

    def decode(self, p: SparsePoly) -> float:
        return self.encoder.decode(p.to_ring(2 * p.max_abs() + 3))

    def zero(self):
        return SparsePoly(self.n)

    def add(self, a, b):
        self.counts["add"] += 1
        return _sp_add(a, b)

    def sub(self, a, b):
        self.counts["add"] += 1
        return _sp_add(a, b, -1)

    def neg(self, a):
        return SparsePoly(a.n, {k: -v for k, v in a.items()})

    def mul(self, a, b):
        self.counts["ct_mul"] += 1
        return _sp_mul(a, b)

    def mul_const(self, a, w: float):
        w = float(w)
        if w == 1.0:
            return a
        if w == 0.0:
            return SparsePoly(self.n)
        self.counts["plain_mul"] += 1
        return _sp_mul(a, self.const(w))

    def add_const(self, a, w: float):
        if float(w) == 0.0:
            return a
        return _sp_add(a, self.const(w))

    def matvec(self, values: list, rows: list) -> list:
        return _generic_matvec(self, values, rows)


def _generic_matvec(ev, values, rows):
    out = []
    for row in rows:
        acc = None
        for w, v in zip(row, values):
            if float(w) == 0.0:
                continue
            term = ev.mul_const(v, w)
            acc = term if acc is None else ev.add(acc, term)
        out.append(acc if acc is not None else ev.mul_const(values[0], 0.0))
    return out


def max_coefficient(values) -> int:
    """Largest |coefficient| over a collection of :class:`SparsePoly` results."""
    return max((v.max_abs() for v in values), default=0)


__all__ = [
    "HomomorphicEvaluator",
    "PlainEvaluator",
    "EncodedEvaluator",
    "SparsePoly",
    "max_coefficient",
]
