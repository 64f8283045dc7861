"""Approximate run-length decoding with truncated Fourier series.

A run of value a and length b starting at position o0 is the step function
a * 1[o0 < x < o0 + b]. With half-width w and centre o, its Fourier series on
a period of 2P (P = 64) is

    H(w, o, x) = w/P + sum_{k=1}^{deg} 2/(k pi) sin(k w pi/P) cos(k (x - o) pi/P)

The cosine is split with the angle-difference identity, so x (public) only
enters through exact plaintext trig and the encrypted w and o go through
Maclaurin polynomials of ``taylor_order``.

:func:`rle_decode` does not evaluate the series term by term. Expanding the
Maclaurin polynomials turns every output cell into a public linear combination
of the monomials a * w^j * o^l (j odd, l <= order), so the ciphertext work per
run is fixed and the Fourier degree only changes plaintext constants. The
polynomial being evaluated is the same one a term-by-term Horner evaluation
produces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2

from . import fv

PERIOD = 64

# Plaintext modulus for the decode circuit: the encoded monomials a*w^j*o^l reach
# about 2^53 per coefficient on 64-cell rows at degree 64.
PLAIN_MODULUS = int(gmpy2.next_prime(2**62))


@dataclass(frozen=True)
class FourierParams:
    degree: int = 16
    delta: float = 0.5
    taylor_order: int = 10
    period: int = PERIOD
    # cells are sampled at x = j + sample_shift, the centre of cell j
    sample_shift: float = 0.5

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.taylor_order < 1:
            raise ValueError("taylor_order must be >= 1")
        if self.period != PERIOD:
            raise ValueError(f"period is fixed at {PERIOD}")

    @property
    def sin_powers(self) -> tuple[int, ...]:
        return tuple(range(1, self.taylor_order + 1, 2))

    @property
    def offset_powers(self) -> tuple[int, ...]:
        return tuple(range(0, self.taylor_order + 1))


@dataclass(frozen=True, eq=False)
class RleStream:
    """(value, run length) pairs plus the decoded length (16 or 64)."""

    pairs: tuple
    out_len: int

    def __post_init__(self):
        if self.out_len not in (16, 64):
            raise ValueError("out_len must be 16 or 64")
        if not self.pairs:
            raise ValueError("an RLE stream needs at least one pair")


# -- Maclaurin pieces ----------------------------------------------------------------

def sin_coefficient(j: int) -> Fraction:
    return Fraction((-1) ** ((j - 1) // 2), math.factorial(j)) if j % 2 else Fraction(0)


def cos_coefficient(j: int) -> Fraction:
    return Fraction((-1) ** (j // 2), math.factorial(j)) if j % 2 == 0 else Fraction(0)


def taylor_sin_value(x, order: int = 10):
    """Maclaurin polynomial of sin through x^order (exact for Fractions)."""
    return sum(sin_coefficient(j) * x**j for j in range(1, order + 1, 2))


def taylor_cos_value(x, order: int = 10):
    return sum(cos_coefficient(j) * x**j for j in range(0, order + 1, 2))


def _horner(ev, y, coeffs):
    """sum_i coeffs[i] y^i with ciphertext y: one ct-ct multiply per degree above 1."""
    m = len(coeffs) - 1
    if m == 0:
        return ev.add_const(ev.mul_const(y, 0.0), coeffs[0])
    acc = ev.add_const(ev.mul_const(y, coeffs[m]), coeffs[m - 1])
    for i in range(m - 2, -1, -1):
        acc = ev.add_const(ev.mul(acc, y), coeffs[i])
    return acc


def taylor_sin(ev, x, order: int = 10):
    """sin x ~ x * P(x^2), Horner in x^2."""
    y = ev.mul(x, x)
    coeffs = [float(sin_coefficient(j)) for j in range(1, order + 1, 2)]
    return ev.mul(_horner(ev, y, coeffs), x)


def taylor_cos(ev, x, order: int = 10):
    y = ev.mul(x, x)
    coeffs = [float(cos_coefficient(j)) for j in range(0, order + 1, 2)]
    return _horner(ev, y, coeffs)


# -- single step function -------------------------------------------------------------

def step_series(ev, w, o, x: float, p: FourierParams):
    """H(w, o, x), one Fourier term at a time (reference shape of the circuit).

    sin(k w pi/P) and cos/sin(k o pi/P) are Taylor polynomials on encrypted
    arguments; cos(k x pi/P) and sin(k x pi/P) are exact plaintext constants.
    """
    P = p.period
    acc = ev.mul_const(w, 1.0 / P)
    for k in range(1, p.degree + 1):
        theta = k * math.pi / P
        sw = taylor_sin(ev, ev.mul_const(w, theta), p.taylor_order)
        to = ev.mul_const(o, theta)
        diff = ev.add(
            ev.mul_const(taylor_cos(ev, to, p.taylor_order), math.cos(theta * x)),
            ev.mul_const(taylor_sin(ev, to, p.taylor_order), math.sin(theta * x)),
        )
        acc = ev.add(acc, ev.mul_const(ev.mul(sw, diff), 2.0 / (k * math.pi)))
    return acc


def step_series_exact(w: float, o: float, x: float, degree: int, period: int = PERIOD) -> float:
    """The truncated Fourier series with true sin/cos (no Taylor error)."""
    acc = w / period
    for k in range(1, degree + 1):
        th = k * math.pi / period
        acc += 2.0 / (k * math.pi) * math.sin(th * w) * math.cos(th * (x - o))
    return acc


# -- monomial form used by rle_decode ---------------------------------------------------

@lru_cache(maxsize=64)
def cell_weights(p: FourierParams, out_len: int) -> tuple:
    """C[cell][(j, l)] with H(w, o, x_cell) = sum_{j,l} C * w^j o^l, as floats."""
    P = p.period
    keys = [(j, l) for j in p.sin_powers for l in p.offset_powers]
    rows = []
    for cell in range(out_len):
        x = cell + p.sample_shift
        row = dict.fromkeys(keys, 0.0)
        for k in range(1, p.degree + 1):
            th = k * math.pi / P
            cx, sx = math.cos(th * x), math.sin(th * x)
            amp = 2.0 / (k * math.pi)
            for j, l in keys:
                trig = cx * float(cos_coefficient(l)) if l % 2 == 0 else sx * float(sin_coefficient(l))
                row[(j, l)] += amp * float(sin_coefficient(j)) * th ** (j + l) * trig
        row[(1, 0)] += 1.0 / P
        rows.append(tuple(row[key] for key in keys))
    return tuple(keys), tuple(rows)


def powers(ev, x, exps) -> dict[int, object]:
    """x^e for every e in ``exps`` (plus helpers), each by a balanced split."""
    table = {1: x}

    def get(e):
        if e not in table:
            h = e // 2
            table[e] = ev.mul(get(h), get(e - h))
        return table[e]

    for e in sorted(exps):
        if e >= 1:
            get(e)
    return table


def run_terms(ev, pairs, p: FourierParams):
    """(value, half-width, centre) per run; centres are prefix sums of the lengths."""
    out = []
    prefix = None
    shift = p.delta - 0.5
    for a, b in pairs:
        half = ev.mul_const(b, 0.5)
        w = ev.add_const(half, shift) if shift else half
        o = half if prefix is None else ev.add(half, prefix)
        prefix = b if prefix is None else ev.add(prefix, b)
        out.append((a, w, o))
    return out


def rle_decode(ev, pairs, out_len: int, p: FourierParams) -> list:
    """Cells f(j + shift) for j < out_len of the summed step-function series."""
    keys, rows = cell_weights(p, out_len)
    acc = [None] * out_len
    for a, w, o in run_terms(ev, pairs, p):
        wp = powers(ev, w, p.sin_powers)
        op = powers(ev, o, [l for l in p.offset_powers if l])
        for j in p.sin_powers:
            aw = ev.mul(a, wp[j])
            monos = [aw if l == 0 else ev.mul(aw, op[l]) for l in p.offset_powers]
            cols = [keys.index((j, l)) for l in p.offset_powers]
            part = ev.matvec(monos, [[r[c] for c in cols] for r in rows])
            acc = [v if s is None else ev.add(s, v) for s, v in zip(acc, part)]
    return acc


def ct_mul_count(p: FourierParams, runs: int) -> int:
    """Ciphertext-ciphertext multiplies :func:`rle_decode` performs."""

    def n_powers(exps):
        table = {1}

        def visit(e):
            if e not in table:
                h = e // 2
                visit(h)
                visit(e - h)
                table.add(e)

        for e in exps:
            if e >= 1:
                visit(e)
        return len(table) - 1

    per_run = n_powers(p.sin_powers) + n_powers([l for l in p.offset_powers if l])
    per_run += len(p.sin_powers) * len(p.offset_powers)
    return runs * per_run


def monomial_degree(p: FourierParams) -> int:
    """Total degree of the deepest monomial a * w^j * o^l."""
    return 1 + max(p.sin_powers) + max(p.offset_powers)


def required_q_bits(n: int, t: int, p: FourierParams) -> int:
    """Conservative q size for :func:`rle_decode` (checked before evaluating).

    Every multiply level costs about log2(t) + log2(n) bits, and the length
    growth without relinearization adds log2(n) bits per extra component.
    """
    deg = monomial_degree(p)
    levels = math.ceil(math.log2(deg)) + 1
    per_level = t.bit_length() + n.bit_length() + 4
    return t.bit_length() + levels * per_level + deg * n.bit_length() + 40


def preset_params(n: int = 8192) -> fv.EncryptionParams:
    """Deep-circuit parameters (ring degree n, enlarged q, large t)."""
    return fv.EncryptionParams.preset(n, PLAIN_MODULUS, q_bits=fv.DEEP_Q_BITS[n])


def check_depth(params: fv.EncryptionParams, p: FourierParams):
    need = required_q_bits(params.n, params.t, p)
    if params.q.bit_length() < need:
        raise ValueError(
            f"q has {params.q.bit_length()} bits but the decode circuit needs about {need}; "
            f"use the deep preset (fv.DEEP_Q_BITS)"
        )


def rle_decode_h(ev, stream: RleStream, p: FourierParams) -> list:
    check_depth(ev.params, p)
    return rle_decode(ev, stream.pairs, stream.out_len, p)


def expand_pairs(pairs) -> list:
    out = []
    for a, b in pairs:
        out.extend([a] * int(b))
    return out


def rle_decode_twin(pairs, out_len: int, p: FourierParams, encoder=None):
    """(circuit-faithful, ideal) decodings of plain pairs.

    The first runs :func:`rle_decode` on exact rationals with constants
    quantized as the encoder would; the second is the run-length expansion.
    """
    from .evaluator import PlainEvaluator

    ev = PlainEvaluator(encoder, exact=True)
    vals = rle_decode(ev, [(ev.lift(a), ev.lift(b)) for a, b in pairs], out_len, p)
    return [float(v) for v in vals], [float(v) for v in expand_pairs(pairs)]


def rle_decode_exact_trig(pairs, out_len: int, p: FourierParams) -> list:
    """Same step functions with true trig: isolates Fourier truncation from Taylor error."""
    out = [0.0] * out_len
    prefix = 0
    for a, b in pairs:
        w = b / 2 + p.delta - 0.5
        o = b / 2 + prefix
        prefix += b
        for j in range(out_len):
            out[j] += a * step_series_exact(w, o, j + p.sample_shift, p.degree, p.period)
    return out


__all__ = [
    "PERIOD",
    "PLAIN_MODULUS",
    "preset_params",
    "FourierParams",
    "RleStream",
    "sin_coefficient",
    "cos_coefficient",
    "taylor_sin_value",
    "taylor_cos_value",
    "taylor_sin",
    "taylor_cos",
    "step_series",
    "step_series_exact",
    "cell_weights",
    "powers",
    "run_terms",
    "rle_decode",
    "rle_decode_h",
    "rle_decode_twin",
    "rle_decode_exact_trig",
    "ct_mul_count",
    "monomial_degree",
    "required_q_bits",
    "check_depth",
    "expand_pairs",
]
