"""The Fan-Vercauteren scheme without relinearization.

Secrets and encryption randomness are drawn from R_2 (binary), errors from a
discrete Gaussian. Multiplication keeps every tensor component, so a product of
ciphertexts of lengths j+1 and k+1 has length j+k+1.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property

import gmpy2
import numpy as np

from .ring import (
    GaussianSampler,
    RingContext,
    RingPoly,
    centered_lift,
    negacyclic_convolve,
    negacyclic_matvec,
    negacyclic_tensor,
    poly_add,
    poly_mul,
    sample_binary,
    sample_gaussian,
    sample_uniform,
    sparse_terms,
)

# q bit-lengths per ring degree; single moduli, not RNS chains.
Q_BITS = {2048: 54, 4096: 109, 8192: 218, 16384: 438}

# Deep circuits (Taylor-expanded trig) need far more headroom than the table above.
DEEP_Q_BITS = {4096: 1000, 8192: 1000, 16384: 1200}


class ParamsMismatch(ValueError):
    pass


def find_modulus(bits: int, n: int) -> int:
    """Largest prime below 2^bits that is 1 mod 2n (odd, so rounding never ties)."""
    step = 2 * n
    cand = ((1 << bits) - 1) // step * step + 1
    while cand > step:
        if gmpy2.is_prime(cand):
            return cand
        cand -= step
    raise ValueError(f"no prime modulus of {bits} bits for n={n}")


@dataclass(frozen=True)
class EncryptionParams:
    n: int
    q: int
    t: int
    sigma: float = 3.2
    security: int = 128  # label only; nothing here estimates security

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if self.t < 2:
            raise ValueError("plaintext modulus t must be >= 2")
        if self.t >= self.q:
            raise ValueError("plaintext modulus t must be smaller than q")

    @classmethod
    def preset(cls, n: int, t: int, q_bits: int | None = None, sigma: float = 3.2):
        if q_bits is None:
            if n not in Q_BITS:
                raise ValueError(f"no preset for n={n}; pass q_bits")
            q_bits = Q_BITS[n]
        return cls(n=n, q=find_modulus(q_bits, n), t=t, sigma=sigma)

    @cached_property
    def ring(self) -> RingContext:
        return RingContext(self.n, self.q)

    @cached_property
    def plain_ring(self) -> RingContext:
        return RingContext(self.n, self.t)

    @property
    def delta(self) -> int:
        return self.q // self.t

    @property
    def sampler(self) -> GaussianSampler:
        return GaussianSampler(self.sigma, 6.0)

    @cached_property
    def fingerprint(self) -> str:
        blob = f"{self.n}:{self.q}:{self.t}:{self.sigma!r}".encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def describe(self) -> str:
        return f"n={self.n} q_bits={self.q.bit_length()} t={self.t} sigma={self.sigma}"


@dataclass(frozen=True, eq=False)
class SecretKey:
    params: EncryptionParams
    s: RingPoly
    _powers: list = field(default_factory=list, repr=False, compare=False)

    def power(self, i: int) -> RingPoly:
        """s^i in R_q, cached."""
        pw = self._powers
        if not pw:
            pw.append(RingPoly.constant(self.params.ring, 1))
        while len(pw) <= i:
            pw.append(poly_mul(pw[-1], self.s))
        return pw[i]


@dataclass(frozen=True, eq=False)
class PublicKey:
    params: EncryptionParams
    p0: RingPoly
    p1: RingPoly


@dataclass(frozen=True, eq=False)
class Ciphertext:
    params: EncryptionParams
    polys: tuple

    def __post_init__(self):
        if len(self.polys) < 2:
            raise ValueError("a ciphertext holds at least two polynomials")

    def __len__(self):
        return len(self.polys)

    @property
    def fingerprint(self) -> str:
        return self.params.fingerprint


def _check_params(a, b):
    if a.params != b.params:
        raise ParamsMismatch(f"parameter mismatch: {a.params.describe()} vs {b.params.describe()}")


def keygen(params: EncryptionParams, rng: np.random.Generator | None = None):
    rng = rng if rng is not None else np.random.default_rng()
    ctx = params.ring
    s = sample_binary(ctx, rng)
    a = sample_uniform(ctx, rng)
    e = sample_gaussian(ctx, params.sampler, rng)
    p0 = -(poly_mul(a, s) + e)
    return SecretKey(params, s), PublicKey(params, p0, a)


def _plain_to_lift(params: EncryptionParams, m: RingPoly) -> np.ndarray:
    if m.ctx.n != params.n or m.ctx.q != params.t:
        raise ValueError(f"plaintext must live in R_t with n={params.n}, t={params.t}")
    return m.coeffs


def encrypt(pk: PublicKey, m: RingPoly, rng: np.random.Generator | None = None) -> Ciphertext:
    params = pk.params
    rng = rng if rng is not None else np.random.default_rng()
    mc = _plain_to_lift(params, m)
    ctx = params.ring
    u = sample_binary(ctx, rng)
    e0 = sample_gaussian(ctx, params.sampler, rng)
    e1 = sample_gaussian(ctx, params.sampler, rng)
    q = params.q
    c0 = (negacyclic_convolve(pk.p0.coeffs, u.coeffs) + e0.coeffs + params.delta * mc) % q
    c1 = (negacyclic_convolve(pk.p1.coeffs, u.coeffs) + e1.coeffs) % q
    return Ciphertext(params, (RingPoly._wrap(ctx, c0), RingPoly._wrap(ctx, c1)))


def _phase(sk: SecretKey, ct: Ciphertext) -> np.ndarray:
    """Centered [sum_i c_i s^i]_q."""
    ctx = sk.params.ring
    acc = ct.polys[0].coeffs
    for i in range(1, len(ct.polys)):
        acc = acc + negacyclic_convolve(ct.polys[i].coeffs, sk.power(i).coeffs)
    return centered_lift(RingPoly._wrap(ctx, acc % ctx.q))


def _round_div(num: np.ndarray, den: int) -> np.ndarray:
    """round(num / den) elementwise, ties away from zero; den > 0."""
    mag = (2 * np.abs(num) + den) // (2 * den)
    return np.where(num < 0, -mag, mag)


def decrypt(sk: SecretKey, ct: Ciphertext) -> RingPoly:
    """m = [round(t/q * [sum c_i s^i]_q)]_t. Garbage once the noise budget is gone."""
    _check_params(sk, ct)
    p = sk.params
    w = _phase(sk, ct)
    m = _round_div(w * p.t, p.q) % p.t
    return RingPoly._wrap(p.plain_ring, m)


def _zero_poly(params):
    return RingPoly.zero(params.ring)


def add(ct0: Ciphertext, ct1: Ciphertext) -> Ciphertext:
    """Component-wise sum; the shorter ciphertext is padded with zero polynomials."""
    _check_params(ct0, ct1)
    a, b = ct0.polys, ct1.polys
    if len(a) < len(b):
        a, b = b, a
    out = [poly_add(a[i], b[i]) for i in range(len(b))] + list(a[len(b):])
    return Ciphertext(ct0.params, tuple(out))


def negate(ct: Ciphertext) -> Ciphertext:
    return Ciphertext(ct.params, tuple(-p for p in ct.polys))


def sub(ct0: Ciphertext, ct1: Ciphertext) -> Ciphertext:
    return add(ct0, negate(ct1))


def multiply(ct0: Ciphertext, ct1: Ciphertext) -> Ciphertext:
    """Tensor product scaled by t/q.

    The convolution sums are taken over the integers on centred representatives,
    then each coefficient is rounded (ties away from zero) and reduced mod q.
    """
    _check_params(ct0, ct1)
    p = ct0.params
    cs = [centered_lift(c) for c in ct0.polys]
    ds = [centered_lift(d) for d in ct1.polys]
    sums = negacyclic_tensor(cs, ds)
    ctx = p.ring
    out = tuple(RingPoly._wrap(ctx, _round_div(v * p.t, p.q) % p.q) for v in sums)
    return Ciphertext(p, out)


def _plain_centered(params: EncryptionParams, pt: RingPoly) -> np.ndarray:
    c = _plain_to_lift(params, pt)
    t = params.t
    return np.where(c > t // 2, c - t, c)


def multiply_plain(ct: Ciphertext, pt: RingPoly) -> Ciphertext:
    """Multiply by a plaintext polynomial (centred lift of pt mod t); length unchanged."""
    p = ct.params
    lift = _plain_centered(p, pt)
    ctx = p.ring
    if not any(lift):
        return Ciphertext(p, tuple(_zero_poly(p) for _ in ct.polys))
    out = tuple(
        RingPoly._wrap(ctx, negacyclic_convolve(c.coeffs, lift) % p.q) for c in ct.polys
    )
    return Ciphertext(p, out)


def plain_terms(params: EncryptionParams, pt: RingPoly) -> dict[int, int]:
    """Sparse centred lift of a plaintext, the weight format of :func:`matvec_plain`."""
    return sparse_terms(_plain_centered(params, pt))


def matvec_plain(cts: list, rows: list) -> list:
    """out_j = sum_i ct_i * rows[j][i] for plaintext weights.

    Weights are RingPolys over R_t, their :func:`plain_terms`, or None for zero.
    Equivalent to multiply_plain followed by add, but each ciphertext is
    converted once and each output once.
    """
    p = cts[0].params
    for ct in cts[1:]:
        _check_params(cts[0], ct)
    length = max(len(ct) for ct in cts)
    wrows = [[plain_terms(p, w) if isinstance(w, RingPoly) else w for w in row] for row in rows]
    zero = np.zeros(p.n, dtype=object)
    outs = [[] for _ in rows]
    for comp in range(length):
        vecs = [centered_lift(ct.polys[comp]) if comp < len(ct) else zero for ct in cts]
        for j, v in enumerate(negacyclic_matvec(vecs, wrows)):
            outs[j].append(RingPoly._wrap(p.ring, v % p.q))
    return [Ciphertext(p, tuple(o)) for o in outs]


def add_plain(ct: Ciphertext, pt: RingPoly) -> Ciphertext:
    p = ct.params
    scaled = (p.delta * _plain_to_lift(p, pt)) % p.q
    first = RingPoly._wrap(p.ring, (ct.polys[0].coeffs + scaled) % p.q)
    return Ciphertext(p, (first,) + tuple(ct.polys[1:]))


def zero_ciphertext(params: EncryptionParams, length: int = 2) -> Ciphertext:
    """The all-zero (noiseless, transparent) encryption of 0."""
    return Ciphertext(params, tuple(_zero_poly(params) for _ in range(length)))


def noise_budget(sk: SecretKey, ct: Ciphertext) -> int:
    """Bits of headroom left: floor(log2 q - log2 t - log2(2 (|r|_inf + 1))), clamped at 0.

    r is the centred difference between the decryption phase and delta * m.
    """
    _check_params(sk, ct)
    p = sk.params
    w = _phase(sk, ct)
    m = _round_div(w * p.t, p.q) % p.t
    r = (w - p.delta * m) % p.q
    r = np.where(r > p.q // 2, r - p.q, r)
    rmax = int(np.max(np.abs(r)))
    bits = math.log2(p.q) - math.log2(p.t) - math.log2(2 * (rmax + 1))
    return max(0, math.floor(bits))
