"""Base-B encodings of integers and reals as plaintext polynomials in R_t.

A real y = sign(y) * (... b_2 B^-2 + b_1 B^-1 + a_0 + a_1 B + ...) becomes

    sign(y) * (... - b_2 x^(n-2) - b_1 x^(n-1) + a_0 + a_1 x + a_2 x^2 + ...)

so that x^n = -1 makes fractional digits multiply like negative powers of B.
Digits are non-negative with one global sign.

Coefficients grow under arithmetic: after d multiplications a coefficient can be
as large as (number of nonzero digits)^d, and decoding is only right while every
coefficient stays inside (-t/2, t/2].
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ring import RingContext, RingPoly


class EncodingOverflow(ValueError):
    pass


def as_fraction(y) -> Fraction:
    """Exact rational value of an int, float, Fraction or numpy scalar."""
    if isinstance(y, Fraction):
        return y
    if isinstance(y, numbers.Integral):
        return Fraction(int(y))
    if isinstance(y, numbers.Real):
        return Fraction(float(y))
    return Fraction(y)


def _centered(p: RingPoly) -> np.ndarray:
    t = p.ctx.q
    c = p.coeffs
    return np.where(c > t // 2, c - t, c)


def balanced_digits(N: int, base: int) -> list[int]:
    """Signed digits of N >= 0, least significant first.

    Base 2 gives the non-adjacent form (digits in {-1, 0, 1}, no two adjacent
    nonzeros); other bases use the digit range centred on zero.
    """
    out = []
    while N:
        if base == 2:
            d = 0 if N % 2 == 0 else 2 - (N % 4)
        else:
            d = N % base
            if d > base // 2:
                d -= base
        out.append(d)
        N = (N - d) // base
    return out


def plain_digits(N: int, base: int) -> list[int]:
    out = []
    while N:
        N, d = divmod(N, base)
        out.append(d)
    return out


@dataclass(frozen=True)
class FractionalEncoder:
    """Reals as base-B digit polynomials.

    With ``balanced=False`` (default) digits are non-negative under a global
    sign. ``balanced=True`` uses signed digits (NAF for B=2); the represented
    value is identical, but sums of products cancel inside coefficients, which
    keeps deep public-weight circuits inside a small t.
    """

    n: int
    t: int
    base: int = 2
    n_int: int = 64
    n_frac: int = 32
    balanced: bool = False

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")
        if self.n_int < 1 or self.n_frac < 0 or self.n_int + self.n_frac > self.n:
            raise ValueError(f"need 1 <= n_int and n_int + n_frac <= n ({self.n})")

    @property
    def ctx(self) -> RingContext:
        return RingContext(self.n, self.t)

    @property
    def precision(self) -> float:
        return float(self.base) ** -self.n_frac

    @classmethod
    def parse(cls, text: str, n: int, t: int) -> "FractionalEncoder":
        """Build from CLI text such as ``B=2,ni=64,nf=32`` (optionally ``,bal=1``)."""
        keys = {"b": "base", "ni": "n_int", "nf": "n_frac", "bal": "balanced"}
        kwargs = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            k, _, v = part.partition("=")
            k = k.strip().lower()
            if k not in keys or not v:
                raise ValueError(f"bad encoder field {part!r}; expected B=..,ni=..,nf=..[,bal=0|1]")
            kwargs[keys[k]] = bool(int(v)) if k == "bal" else int(v)
        return cls(n=n, t=t, **kwargs)

    def spec(self) -> str:
        out = f"B={self.base},ni={self.n_int},nf={self.n_frac}"
        return out + ",bal=1" if self.balanced else out

    def _scaled(self, y) -> tuple[int, int]:
        v = as_fraction(y)
        sign = -1 if v < 0 else 1
        v = abs(v)
        if v.numerator // v.denominator >= self.base**self.n_int:
            raise EncodingOverflow(f"|{float(y)}| needs more than {self.n_int} integer digits")
        scaled = v * self.base**self.n_frac
        return sign, scaled.numerator // scaled.denominator

    def terms(self, y) -> dict[int, int]:
        """{power of B: signed digit}; negative powers are fractional digits."""
        sign, N = self._scaled(y)
        digs = balanced_digits(N, self.base) if self.balanced else plain_digits(N, self.base)
        if len(digs) > self.n_int + self.n_frac:
            raise EncodingOverflow(f"|{float(y)}| needs more than {self.n_int} integer digits")
        return {k - self.n_frac: sign * d for k, d in enumerate(digs) if d}

    def digits(self, y) -> tuple[int, list[int], list[int]]:
        """(sign, integer digits a_0.., fractional digits b_1..) of y, truncated, non-negative form."""
        sign, N = self._scaled(y)
        digs = plain_digits(N, self.base)
        digs += [0] * max(self.n_frac - len(digs), 0)
        fracs = digs[: self.n_frac][::-1]
        while fracs and not fracs[-1]:
            fracs.pop()
        return sign, digs[self.n_frac :], fracs

    def exponent_slot(self, e: int) -> tuple[int, int]:
        """(coefficient index, sign) carrying B^e: x^e, or -x^(n+e) for e < 0."""
        return (e, 1) if e >= 0 else (self.n + e, -1)

    def encode(self, y) -> RingPoly:
        coeffs = [0] * self.n
        for e, d in self.terms(y).items():
            k, s = self.exponent_slot(e)
            coeffs[k] = s * d
        return RingPoly(self.ctx, coeffs)

    def quantize_exact(self, y) -> Fraction:
        """The rational number that ``encode(y)`` actually represents."""
        sign, N = self._scaled(y)
        return sign * Fraction(N, self.base**self.n_frac)

    def quantize(self, y) -> float:
        return float(self.quantize_exact(y))

    def decode(self, p: RingPoly, split: int | None = None) -> float:
        """Coefficients below ``split`` (default n/2) are integer digits, the rest fractional.

        Values beyond float range (only reachable from corrupted plaintexts) map to +-inf.
        """
        v = self.decode_exact(p, split)
        try:
            return float(v)
        except OverflowError:
            return math.inf if v > 0 else -math.inf

    def decode_exact(self, p: RingPoly, split: int | None = None) -> Fraction:
        if p.ctx.n != self.n:
            raise ValueError("ring degree mismatch")
        split = self.n // 2 if split is None else split
        c = _centered(p)
        nz = np.flatnonzero(c != 0)
        ipart = 0
        fnum = 0
        depth = self.n - split
        for k in nz.tolist():
            v = int(c[k])
            if k < split:
                ipart += v * self.base**k
            else:
                # -c_{n-j} * B^-j, scaled by B^depth to stay integral
                fnum -= v * self.base ** (depth - (self.n - k))
        return Fraction(ipart) + Fraction(fnum, self.base**depth)


def decode_fraction(enc: FractionalEncoder, p: RingPoly) -> float:
    return enc.decode(p)


def encode_fraction(enc: FractionalEncoder, y) -> RingPoly:
    return enc.encode(y)


@dataclass(frozen=True)
class IntegerEncoder:
    n: int
    t: int
    base: int = 2

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")

    def encode(self, v: int) -> RingPoly:
        v = int(v)
        sign = -1 if v < 0 else 1
        v = abs(v)
        if v >= self.base**self.n:
            raise EncodingOverflow(f"{v} does not fit in {self.n} base-{self.base} digits")
        coeffs = [0] * self.n
        k = 0
        while v:
            v, d = divmod(v, self.base)
            coeffs[k] = sign * d
            k += 1
        return RingPoly(RingContext(self.n, self.t), coeffs)

    def decode(self, p: RingPoly) -> int:
        c = _centered(p)
        return sum(int(c[k]) * self.base**k for k in np.flatnonzero(c != 0).tolist())


def encode_integer(enc: IntegerEncoder, v: int) -> RingPoly:
    return enc.encode(v)


def decode_integer(enc: IntegerEncoder, p: RingPoly) -> int:
    return enc.decode(p)


def coefficient_headroom(p: RingPoly) -> int:
    """Largest centred coefficient magnitude; decoding is exact while this stays <= t/2."""
    c = _centered(p)
    return int(np.max(np.abs(c))) if len(c) else 0


def required_plain_modulus(max_coeff: int) -> int:
    """Smallest t whose centred range holds coefficients of magnitude ``max_coeff``."""
    return 2 * max_coeff + 1


def digit_budget(value: float, enc: FractionalEncoder) -> int:
    """Number of nonzero digits ``enc`` spends on ``value`` (drives coefficient growth)."""
    return len(enc.terms(value))


__all__ = [
    "EncodingOverflow",
    "FractionalEncoder",
    "balanced_digits",
    "IntegerEncoder",
    "encode_fraction",
    "decode_fraction",
    "encode_integer",
    "decode_integer",
    "coefficient_headroom",
    "required_plain_modulus",
    "digit_budget",
]
