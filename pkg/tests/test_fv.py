import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heip import fv
from heip.fv import _round_div
from heip.ring import RingPoly, poly_mul


def rand_plain(params, rng):
    return RingPoly(params.plain_ring, rng.integers(0, params.t, size=params.n).tolist())


@pytest.mark.parametrize("n", [2048, 4096, 8192, 16384])
def test_preset_moduli(n):
    p = fv.EncryptionParams.preset(n, 1009)
    assert p.q.bit_length() == fv.Q_BITS[n]
    assert gmpy2.is_prime(p.q)
    assert p.q % (2 * n) == 1


def test_params_validation():
    with pytest.raises(ValueError):
        fv.EncryptionParams(n=100, q=2**40, t=17)
    with pytest.raises(ValueError):
        fv.EncryptionParams(n=64, q=17, t=1009)
    with pytest.raises(ValueError):
        fv.EncryptionParams.preset(512, 17)


def test_round_div_ties_away_from_zero():
    num = np.array([5, -5, 4, -4, 6, -6, 0], dtype=object)
    assert list(_round_div(num, 2)) == [3, -3, 2, -2, 3, -3, 0]
    assert list(_round_div(np.array([7, -7], dtype=object), 3)) == [2, -2]


def test_encrypt_decrypt(small_keys):
    params, sk, pk = small_keys
    rng = np.random.default_rng(1)
    for _ in range(5):
        m = rand_plain(params, rng)
        assert fv.decrypt(sk, fv.encrypt(pk, m, rng)) == m


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_homomorphic_ring_ops(small_keys, seed):
    params, sk, pk = small_keys
    rng = np.random.default_rng(seed)
    a, b = rand_plain(params, rng), rand_plain(params, rng)
    ca, cb = fv.encrypt(pk, a, rng), fv.encrypt(pk, b, rng)
    assert fv.decrypt(sk, fv.add(ca, cb)) == a + b
    assert fv.decrypt(sk, fv.sub(ca, cb)) == a - b
    assert fv.decrypt(sk, fv.negate(ca)) == -a
    assert fv.decrypt(sk, fv.multiply(ca, cb)) == poly_mul(a, b)
    assert fv.decrypt(sk, fv.multiply_plain(ca, b)) == poly_mul(a, b)
    assert fv.decrypt(sk, fv.add_plain(ca, b)) == a + b


def test_length_grows_without_relinearization(small_keys):
    params, sk, pk = small_keys
    rng = np.random.default_rng(2)
    m = RingPoly.constant(params.plain_ring, 3)
    c = fv.encrypt(pk, m, rng)
    c2 = fv.multiply(c, c)
    c3 = fv.multiply(c2, c)
    assert (len(c), len(c2), len(c3)) == (2, 3, 4)
    assert len(fv.multiply(c2, c2)) == 5
    assert len(fv.add(c, c3)) == 4
    assert fv.decrypt(sk, c3) == RingPoly.constant(params.plain_ring, 27)


def test_matvec_plain_matches_multiply_plain(small_keys):
    params, sk, pk = small_keys
    rng = np.random.default_rng(3)
    cts = [fv.encrypt(pk, rand_plain(params, rng), rng) for _ in range(3)]
    cts[1] = fv.multiply(cts[1], cts[2])
    ws = [[rand_plain(params, rng), None, rand_plain(params, rng)],
          [None, rand_plain(params, rng), rand_plain(params, rng)]]
    got = fv.matvec_plain(cts, ws)
    for row, out in zip(ws, got):
        want = None
        for ct, w in zip(cts, row):
            if w is None:
                continue
            term = fv.multiply_plain(ct, w)
            want = term if want is None else fv.add(want, term)
        assert fv.decrypt(sk, out) == fv.decrypt(sk, want)
        assert len(out) == 3


def test_noise_budget_shrinks(small_keys):
    params, sk, pk = small_keys
    rng = np.random.default_rng(4)
    c = fv.encrypt(pk, rand_plain(params, rng), rng)
    fresh = fv.noise_budget(sk, c)
    assert fresh > 60
    assert fv.noise_budget(sk, fv.add(c, c)) >= fresh - 1
    assert fv.noise_budget(sk, fv.multiply(c, c)) < fresh - 10
    assert fv.noise_budget(sk, fv.zero_ciphertext(params)) > fresh


def test_params_mismatch(small_keys):
    params, sk, pk = small_keys
    other = fv.EncryptionParams.preset(256, 17, q_bits=120)
    sk2, pk2 = fv.keygen(other, np.random.default_rng(0))
    c = fv.encrypt(pk, RingPoly.zero(params.plain_ring))
    c2 = fv.encrypt(pk2, RingPoly.zero(other.plain_ring))
    with pytest.raises(fv.ParamsMismatch):
        fv.add(c, c2)
    with pytest.raises(fv.ParamsMismatch):
        fv.decrypt(sk2, c)
    with pytest.raises(ValueError):
        fv.encrypt(pk, RingPoly.zero(other.plain_ring))


def test_exhausted_budget_breaks_decryption():
    params = fv.EncryptionParams.preset(256, 257, q_bits=40)
    rng = np.random.default_rng(5)
    sk, pk = fv.keygen(params, rng)
    m = rand_plain(params, rng)
    c = fv.encrypt(pk, m, rng)
    acc, want = c, m
    for _ in range(3):
        acc, want = fv.multiply(acc, c), poly_mul(want, m)
    assert fv.noise_budget(sk, acc) == 0
    assert fv.decrypt(sk, acc) != want
