import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from heip.encoding import (
    EncodingOverflow,
    FractionalEncoder,
    IntegerEncoder,
    balanced_digits,
    decode_fraction,
    encode_fraction,
)
from heip.ring import poly_mul

reals = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("balanced", [False, True])
@given(y=reals)
@settings(max_examples=80, deadline=None)
def test_roundtrip_within_precision(balanced, y):
    enc = FractionalEncoder(256, 65537, balanced=balanced)
    assert abs(decode_fraction(enc, encode_fraction(enc, y)) - y) <= 2.0**-32


@pytest.mark.parametrize("balanced", [False, True])
@given(a=st.floats(-300, 300), b=st.floats(-300, 300))
@settings(max_examples=60, deadline=None)
def test_product_decodes_to_product(balanced, a, b):
    enc = FractionalEncoder(512, 2**40 + 15, balanced=balanced)
    got = enc.decode_exact(poly_mul(enc.encode(a), enc.encode(b)))
    assert got == enc.quantize_exact(a) * enc.quantize_exact(b)


def test_fraction_digits_sit_at_top_degrees():
    enc = FractionalEncoder(64, 1009, n_int=32, n_frac=32)
    p = enc.encode(0.5)
    assert p.coeffs[63] == 1009 - 1  # 2^-1 -> -x^(n-1)
    assert sum(1 for c in p.coeffs if c) == 1
    q = enc.encode(2.75)  # 2 + 1/2 + 1/4
    nz = {k: int(c) for k, c in enumerate(q.coeffs) if c}
    assert nz == {1: 1, 63: 1008, 62: 1008}
    assert enc.decode(enc.encode(-2.75)) == -2.75


def test_digits_and_truncation():
    enc = FractionalEncoder(64, 1009, n_int=32, n_frac=4)
    assert enc.digits(5.8125) == (1, [1, 0, 1], [1, 1, 0, 1])
    assert enc.quantize(0.03) == 0.0  # below 2^-4, truncated toward zero
    assert enc.quantize(-0.1875) == -0.1875


def test_overflow():
    enc = FractionalEncoder(64, 1009, n_int=8, n_frac=8)
    enc.encode(255.5)
    with pytest.raises(EncodingOverflow):
        enc.encode(256)


@given(st.integers(0, 2**80))
def test_naf_digits(N):
    d = balanced_digits(N, 2)
    assert sum(v * 2**k for k, v in enumerate(d)) == N
    assert set(d) <= {-1, 0, 1}
    assert all(not (d[k] and d[k + 1]) for k in range(len(d) - 1))


@given(st.integers(0, 10**12), st.sampled_from([3, 10, 16]))
def test_balanced_digits_other_bases(N, base):
    d = balanced_digits(N, base)
    assert sum(v * base**k for k, v in enumerate(d)) == N
    assert all(abs(v) <= base // 2 for v in d)


def test_parse_and_spec():
    enc = FractionalEncoder.parse("B=2,ni=64,nf=32", 2048, 1009)
    assert (enc.base, enc.n_int, enc.n_frac, enc.balanced) == (2, 64, 32, False)
    assert FractionalEncoder.parse(enc.spec(), 2048, 1009) == enc
    bal = FractionalEncoder.parse("B=3,ni=20,nf=10,bal=1", 2048, 1009)
    assert bal.balanced and bal.spec() == "B=3,ni=20,nf=10,bal=1"
    with pytest.raises(ValueError):
        FractionalEncoder.parse("B=2,zz=3", 2048, 1009)
    with pytest.raises(ValueError):
        FractionalEncoder(64, 1009, n_int=40, n_frac=40)


@given(st.integers(-(2**60), 2**60))
def test_integer_encoder(v):
    enc = IntegerEncoder(128, 1009)
    assert enc.decode(enc.encode(v)) == v


def test_exact_quantization_is_dyadic():
    enc = FractionalEncoder(256, 1009)
    q = enc.quantize_exact(math.pi)
    assert q.denominator <= 2**32
    assert 0 <= math.pi - q < 2**-32
    assert enc.quantize_exact(Fraction(1, 3)) == Fraction(2**32 // 3, 2**32)
