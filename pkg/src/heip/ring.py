"""Negacyclic polynomial rings Z_q[x]/(x^n + 1) and the samplers the FV scheme needs.

Coefficients are Python integers held in numpy object arrays, so q may be any size.
Multiplication goes through Kronecker substitution on GMP integers (``gmpy2.pack``);
``schoolbook_mul`` is the O(n^2) reference it is tested against.

Nothing here is constant time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import gmpy2
import numpy as np

__all__ = [
    "RingContext",
    "RingPoly",
    "GaussianSampler",
    "poly_add",
    "poly_sub",
    "poly_neg",
    "poly_mul",
    "poly_scalar_mul",
    "schoolbook_mul",
    "centered_lift",
    "sample_binary",
    "sample_uniform",
    "sample_gaussian",
    "negacyclic_convolve",
    "negacyclic_tensor",
    "negacyclic_matvec",
    "sparse_terms",
]


@dataclass(frozen=True)
class RingContext:
    """Parameters of Z_q[x]/(x^n + 1)."""

    n: int
    q: int

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"ring degree must be a power of two >= 8, got {self.n}")
        if self.q < 2:
            raise ValueError(f"modulus must be >= 2, got {self.q}")


def _as_object_array(values: Iterable[int]) -> np.ndarray:
    vals = [int(v) for v in values]
    arr = np.empty(len(vals), dtype=object)
    arr[:] = vals
    return arr


class RingPoly:
    """An element of R_q with coefficients stored canonically in [0, q)."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: RingContext, coeffs: Sequence[int]):
        if len(coeffs) != ctx.n:
            raise ValueError(f"expected {ctx.n} coefficients, got {len(coeffs)}")
        arr = _as_object_array(coeffs) % ctx.q
        arr.flags.writeable = False
        self.ctx = ctx
        self.coeffs = arr

    @classmethod
    def _wrap(cls, ctx: RingContext, arr: np.ndarray) -> "RingPoly":
        # caller guarantees len == n and entries already in [0, q)
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        obj.ctx = ctx
        obj.coeffs = arr
        return obj

    @classmethod
    def zero(cls, ctx: RingContext) -> "RingPoly":
        arr = np.empty(ctx.n, dtype=object)
        arr[:] = 0
        return cls._wrap(ctx, arr)

    @classmethod
    def constant(cls, ctx: RingContext, c: int) -> "RingPoly":
        arr = np.empty(ctx.n, dtype=object)
        arr[:] = 0
        arr[0] = c % ctx.q
        return cls._wrap(ctx, arr)

    @classmethod
    def monomial(cls, ctx: RingContext, k: int, c: int = 1) -> "RingPoly":
        """c * x^k, with x^n = -1 applied for k outside [0, n)."""
        k %= 2 * ctx.n
        if k >= ctx.n:
            k -= ctx.n
            c = -c
        arr = np.empty(ctx.n, dtype=object)
        arr[:] = 0
        arr[k] = c % ctx.q
        return cls._wrap(ctx, arr)

    def centered(self) -> np.ndarray:
        return centered_lift(self)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, RingPoly):
            return NotImplemented
        return self.ctx == other.ctx and bool(np.all(self.coeffs == other.coeffs))

    def __hash__(self):
        return hash((self.ctx, tuple(self.coeffs)))

    def __repr__(self):
        nz = int(np.count_nonzero(self.coeffs != 0))
        return f"RingPoly(n={self.ctx.n}, q_bits={self.ctx.q.bit_length()}, nonzero={nz})"

    def __add__(self, other):
        return poly_add(self, other)

    def __sub__(self, other):
        return poly_sub(self, other)

    def __neg__(self):
        return poly_neg(self)

    def __mul__(self, other):
        if isinstance(other, RingPoly):
            return poly_mul(self, other)
        return poly_scalar_mul(self, other)

    __rmul__ = __mul__


def _check_same(a: RingPoly, b: RingPoly):
    if a.ctx is not b.ctx and a.ctx != b.ctx:
        raise ValueError(f"ring context mismatch: {a.ctx} vs {b.ctx}")


def poly_add(a: RingPoly, b: RingPoly) -> RingPoly:
    _check_same(a, b)
    return RingPoly._wrap(a.ctx, (a.coeffs + b.coeffs) % a.ctx.q)


def poly_sub(a: RingPoly, b: RingPoly) -> RingPoly:
    _check_same(a, b)
    return RingPoly._wrap(a.ctx, (a.coeffs - b.coeffs) % a.ctx.q)


def poly_neg(a: RingPoly) -> RingPoly:
    return RingPoly._wrap(a.ctx, (-a.coeffs) % a.ctx.q)


def poly_scalar_mul(a: RingPoly, k: int) -> RingPoly:
    return RingPoly._wrap(a.ctx, (a.coeffs * int(k)) % a.ctx.q)


def poly_mul(a: RingPoly, b: RingPoly) -> RingPoly:
    """Product in R_q (negacyclic convolution reduced mod q)."""
    _check_same(a, b)
    prod = negacyclic_convolve(a.coeffs, b.coeffs)
    return RingPoly._wrap(a.ctx, prod % a.ctx.q)


def schoolbook_mul(a: RingPoly, b: RingPoly) -> RingPoly:
    """Reference O(n^2) negacyclic product; slow, used to validate ``poly_mul``."""
    _check_same(a, b)
    n, q = a.ctx.n, a.ctx.q
    out = [0] * n
    ac = [int(v) for v in a.coeffs]
    bc = [int(v) for v in b.coeffs]
    for i, ai in enumerate(ac):
        if not ai:
            continue
        for j, bj in enumerate(bc):
            k = i + j
            if k < n:
                out[k] += ai * bj
            else:
                out[k - n] -= ai * bj
    return RingPoly(a.ctx, [v % q for v in out])


def centered_lift(a: RingPoly) -> np.ndarray:
    """Representatives in (-q/2, q/2] as an object array of ints."""
    q = a.ctx.q
    c = a.coeffs
    return np.where(c > q // 2, c - q, c)


# ---------------------------------------------------------------------------
# Kronecker substitution
#
# A polynomial with integer coefficients |c_i| < 2^(k-2) is evaluated at 2^k,
# the big integers are multiplied by GMP, and the slots are read back. Signed
# slots are recovered by adding a per-slot offset h = 2^(k-1) before unpacking.


def _max_abs(values) -> int:
    m = 0
    for v in values:
        if v > m:
            m = v
        elif -v > m:
            m = -v
    return int(m)


def _pack_signed(values, k: int):
    vals = [int(v) for v in values]
    if all(v >= 0 for v in vals):
        return gmpy2.pack(vals, k)
    pos = [v if v > 0 else 0 for v in vals]
    neg = [-v if v < 0 else 0 for v in vals]
    return gmpy2.pack(pos, k) - gmpy2.pack(neg, k)


_OFFSET_CACHE: dict[tuple[int, int], object] = {}


def _offset(count: int, k: int):
    key = (count, k)
    off = _OFFSET_CACHE.get(key)
    if off is None:
        off = gmpy2.pack([1 << (k - 1)] * count, k)
        if len(_OFFSET_CACHE) > 64:
            _OFFSET_CACHE.clear()
        _OFFSET_CACHE[key] = off
    return off


def _slot_bits(bound: int) -> int:
    # two spare bits: one for the sign offset, one for the lo - hi fold
    return max(bound.bit_length() + 3, 8)


def negacyclic_convolve(a, b) -> np.ndarray:
    """Exact product of two integer polynomials modulo x^n + 1 (no reduction mod q)."""
    n = len(a)
    if len(b) != n:
        raise ValueError("length mismatch")
    ma, mb = _max_abs(a), _max_abs(b)
    if ma == 0 or mb == 0:
        out = np.empty(n, dtype=object)
        out[:] = 0
        return out
    k = _slot_bits(ma * mb * n)
    prod = _pack_signed(a, k) * _pack_signed(b, k)
    kn = k * n
    off = _offset(2 * n, k)
    prod += off
    mask = (gmpy2.mpz(1) << kn) - 1
    lo = prod & mask
    hi = prod >> kn
    # slot j of lo - hi is c_j - c_{n+j}; re-add one offset to make it non-negative
    folded = lo - hi + _offset(n, k)
    slots = gmpy2.unpack(folded, k)
    h = 1 << (k - 1)
    out = np.empty(n, dtype=object)
    vals = [int(s) - h for s in slots]
    vals.extend([-h] * (n - len(vals)))
    out[:] = vals
    return out


def negacyclic_tensor(cs: Sequence, ds: Sequence) -> list[np.ndarray]:
    """All convolution sums sum_{r+s=i} c_r * d_s over Z[x]/(x^n + 1), exactly.

    ``cs`` and ``ds`` are sequences of integer coefficient vectors (signed allowed).
    Uses a single bivariate Kronecker product: block r of the packed integer holds
    polynomial r padded to 2n slots.
    """
    n = len(cs[0])
    l1, l2 = len(cs), len(ds)
    ma = max(_max_abs(c) for c in cs)
    mb = max(_max_abs(d) for d in ds)
    lout = l1 + l2 - 1
    if ma == 0 or mb == 0:
        z = np.empty(n, dtype=object)
        z[:] = 0
        return [z.copy() for _ in range(lout)]
    k = _slot_bits(ma * mb * n * min(l1, l2))
    pad = [0] * n

    def pack_blocks(polys):
        flat: list[int] = []
        for p in polys:
            flat.extend(int(v) for v in p)
            flat.extend(pad)
        return _pack_signed(flat, k)

    prod = pack_blocks(cs) * pack_blocks(ds)
    prod += _offset(2 * n * lout, k)
    slots = gmpy2.unpack(prod, k)
    h = 1 << (k - 1)
    total = 2 * n * lout
    vals = [int(s) - h for s in slots]
    vals.extend([-h] * (total - len(vals)))
    arr = np.empty(total, dtype=object)
    arr[:] = vals
    arr = arr.reshape(lout, 2, n)
    folded = arr[:, 0, :] - arr[:, 1, :]
    return [folded[i] for i in range(lout)]


def _unpack_fold(total, n: int, k: int) -> np.ndarray:
    # total packs a full (2n-slot) product; fold the top half negatively
    total = total + _offset(2 * n, k)
    mask = (gmpy2.mpz(1) << (k * n)) - 1
    folded = (total & mask) - (total >> (k * n)) + _offset(n, k)
    slots = gmpy2.unpack(folded, k)
    h = 1 << (k - 1)
    vals = [int(s) - h for s in slots]
    vals.extend([-h] * (n - len(vals)))
    out = np.empty(n, dtype=object)
    out[:] = vals
    return out


def sparse_terms(values) -> dict[int, int]:
    """{index: value} of the nonzero entries of a coefficient vector."""
    return {int(i): int(values[i]) for i in np.flatnonzero(np.asarray(values) != 0)}


def negacyclic_matvec(vectors: Sequence, rows: Sequence[Sequence]) -> list[np.ndarray]:
    """out_j = sum_i rows[j][i] * vectors[i] in Z[x]/(x^n + 1), exactly.

    ``rows[j][i]`` is a sparse weight ``{exponent: coefficient}`` or None (zero).
    Each input vector is packed once and each output unpacked once; a weight
    term c*x^e costs one shift-and-add on the packed integer.
    """
    n = len(vectors[0])
    mv = [_max_abs(v) for v in vectors]
    bound = max(mv + [1])
    for row in rows:
        if len(row) != len(vectors):
            raise ValueError("row length does not match the number of vectors")
        s = 0
        for i, w in enumerate(row):
            if w:
                s += mv[i] * sum(abs(c) for c in w.values())
        bound = max(bound, s)
    k = _slot_bits(bound)
    pv = [_pack_signed(v, k) if m else None for v, m in zip(vectors, mv)]
    out = []
    for row in rows:
        total = gmpy2.mpz(0)
        for i, w in enumerate(row):
            if not w or pv[i] is None:
                continue
            base = pv[i]
            for e, c in w.items():
                term = base << (k * e)
                if c == 1:
                    total += term
                elif c == -1:
                    total -= term
                else:
                    total += term * c
        out.append(_unpack_fold(total, n, k))
    return out


# ---------------------------------------------------------------------------
# Samplers


@dataclass(frozen=True)
class GaussianSampler:
    """Discrete Gaussian over Z, centred at 0, cut off at ``tail_bound`` * sigma."""

    sigma: float = 3.2
    tail_bound: float = 6.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.tail_bound < 3:
            raise ValueError("tail_bound must be >= 3")

    @property
    def bound(self) -> int:
        return int(math.floor(self.tail_bound * self.sigma))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Rejection sampling: uniform candidates in [-bound, bound], accept w.p. rho(x)."""
        b = self.bound
        out = np.empty(0, dtype=np.int64)
        two_s2 = 2.0 * self.sigma * self.sigma
        while out.size < size:
            m = max(2 * (size - out.size) * (2 * b + 1) // max(int(self.sigma * 2.5), 1), 64)
            cand = rng.integers(-b, b + 1, size=m)
            keep = rng.random(m) < np.exp(-(cand.astype(np.float64) ** 2) / two_s2)
            out = np.concatenate([out, cand[keep]])
        return out[:size]


def _default_rng(rng):
    return rng if rng is not None else np.random.default_rng()


def sample_binary(ctx: RingContext, rng: np.random.Generator | None = None) -> RingPoly:
    """Uniform element of R_2 embedded in R_q."""
    bits = _default_rng(rng).integers(0, 2, size=ctx.n)
    arr = np.empty(ctx.n, dtype=object)
    arr[:] = bits.tolist()
    return RingPoly._wrap(ctx, arr)


def sample_uniform(ctx: RingContext, rng: np.random.Generator | None = None) -> RingPoly:
    """Uniform element of R_q.

    Each coefficient is a (bits(q) + 64)-bit random integer reduced mod q, so the
    bias is below 2^-64.
    """
    rng = _default_rng(rng)
    nbytes = (ctx.q.bit_length() + 64 + 7) // 8
    raw = int.from_bytes(rng.bytes(nbytes * ctx.n), "little")
    slots = gmpy2.unpack(gmpy2.mpz(raw), nbytes * 8)
    q = ctx.q
    vals = [int(s) % q for s in slots]
    vals.extend([0] * (ctx.n - len(vals)))
    arr = np.empty(ctx.n, dtype=object)
    arr[:] = vals
    return RingPoly._wrap(ctx, arr)


def sample_gaussian(
    ctx: RingContext,
    sampler: GaussianSampler | None = None,
    rng: np.random.Generator | None = None,
) -> RingPoly:
    sampler = sampler or GaussianSampler()
    vals = sampler.sample(ctx.n, _default_rng(rng))
    arr = np.empty(ctx.n, dtype=object)
    arr[:] = (vals % ctx.q).tolist() if ctx.q < 2**62 else [int(v) % ctx.q for v in vals]
    return RingPoly._wrap(ctx, arr)
