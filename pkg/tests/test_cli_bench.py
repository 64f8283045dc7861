import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from heip import fv
from heip.cli_bench import (
    BENCH_HEADER,
    CipherFile,
    CipherFileError,
    bench,
    deserialize,
    main,
    parse_pairs,
    serialize,
    write_bench_csv,
)
from heip.encoding import FractionalEncoder
from heip.he_image import PlainImage
from heip.jpeg_io import read_ppm, write_ppm
from heip.samples import synthetic_photo


def _file(seed=0, kind="image", length=2):
    params = fv.EncryptionParams.preset(64, 257, q_bits=70)
    rng = np.random.default_rng(seed)
    sk, pk = fv.keygen(params, rng)
    enc = FractionalEncoder(64, 257, n_int=16, n_frac=8, balanced=bool(seed % 2))
    cts = [fv.encrypt(pk, enc.encode(float(v)), rng) for v in range(6)]
    if length > 2:
        cts[0] = fv.multiply(cts[0], cts[1])
    return CipherFile(kind, params, (2, 3, 1), cts, enc, {"note": "x", "seed": seed})


@given(st.integers(0, 1000), st.sampled_from([2, 3]))
@settings(max_examples=10, deadline=None)
def test_roundtrip_canonical(seed, length):
    cf = _file(seed, length=length)
    data = serialize(cf)
    back = deserialize(data)
    assert serialize(back) == data
    assert back.params == cf.params and back.encoder == cf.encoder and back.meta == cf.meta
    assert all(a.polys == b.polys for a, b in zip(back.cells, cf.cells))


def test_rejects_bad_files():
    data = serialize(_file())
    with pytest.raises(CipherFileError, match="magic"):
        deserialize(b"JUNK" + data[4:])
    with pytest.raises(CipherFileError, match="version"):
        deserialize(data[:4] + b"\x00\x09" + data[6:])
    with pytest.raises(CipherFileError, match="truncated"):
        deserialize(data[:-5])
    with pytest.raises(CipherFileError, match="trailing"):
        deserialize(data + b"\x00")
    # flip a bit inside q: the stored fingerprint no longer matches
    with pytest.raises(CipherFileError):
        deserialize(data[:20] + bytes([data[20] ^ 1]) + data[21:])
    with pytest.raises(CipherFileError):
        CipherFile("image", _file().params, (5,), [])


def test_parse_pairs():
    assert parse_pairs("20:8,30:3,15:5") == [(20, 8), (30, 3), (15, 5)]
    with pytest.raises(ValueError):
        parse_pairs("20-8")


def test_cli_roundtrip_and_determinism(tmp_path, capsys):
    arr = synthetic_photo(6, 5, 3, seed=3)
    src = tmp_path / "in.ppm"
    src.write_bytes(write_ppm(PlainImage.from_array(arr)))
    k = tmp_path / "k"
    assert main(["--seed", "1", "keygen", "--n", "256", "--t", "1009", "--q-bits", "60", "--out", str(k)]) == 0
    outs = []
    for name in ("a", "b"):
        p = tmp_path / f"{name}.ct"
        assert main(["--seed", "5", "encrypt-image", "--pk", str(k / "public.key"), "--in", str(src),
                     "--out", str(p), "--encoder", "B=2,ni=64,nf=32"]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]
    back = tmp_path / "out.ppm"
    assert main(["decrypt-image", "--sk", str(k / "secret.key"), "--in", str(tmp_path / "a.ct"), "--out", str(back)]) == 0
    assert back.read_bytes() == src.read_bytes()
    assert main(["noise-budget", "--sk", str(k / "secret.key"), "--in", str(tmp_path / "a.ct")]) == 0
    assert "min" in capsys.readouterr().out


def test_cli_jpeg_pipeline(tmp_path):
    arr = synthetic_photo(12, 12, 3, seed=4)
    src = tmp_path / "in.ppm"
    src.write_bytes(write_ppm(PlainImage.from_array(arr)))
    k = tmp_path / "k"
    main(["--seed", "2", "keygen", "--n", "256", "--t", "65537", "--q-bits", "80", "--out", str(k)])
    main(["--seed", "3", "encrypt-image", "--pk", str(k / "public.key"), "--in", str(src),
          "--out", str(tmp_path / "a.ct"), "--encoder", "B=2,ni=32,nf=16,bal=1"])
    assert main(["resize", "--mode", "bilinear", "--width", "9", "--height", "9",
                 "--in", str(tmp_path / "a.ct"), "--out", str(tmp_path / "r.ct")]) == 0
    assert main(["jpeg-encode", "--quality", "75", "--in", str(tmp_path / "r.ct"), "--out", str(tmp_path / "c.ct")]) == 0
    assert main(["jpeg-finalize", "--sk", str(k / "secret.key"), "--in", str(tmp_path / "c.ct"),
                 "--out", str(tmp_path / "o.jpg")]) == 0
    im = Image.open(io.BytesIO((tmp_path / "o.jpg").read_bytes()))
    im.load()
    assert im.size == (9, 9)


def test_cli_errors(tmp_path, capsys):
    assert main(["decrypt-image", "--sk", str(tmp_path / "missing"), "--in", "x", "--out", "y"]) == 1
    assert "error" in capsys.readouterr().err
    bad = tmp_path / "bad.ct"
    bad.write_bytes(b"nope")
    assert main(["resize", "--mode", "bilinear", "--width", "2", "--height", "2", "--in", str(bad), "--out", "z"]) == 1
    with pytest.raises(SystemExit):
        main(["keygen", "--n", "1000", "--t", "7", "--out", str(tmp_path)])
    with pytest.raises(SystemExit):
        main(["--threads", "4", "bench", "--csv", "x"])


def test_cli_rle(tmp_path):
    k = tmp_path / "k"
    main(["--seed", "4", "keygen", "--n", "256", "--t", "1009", "--q-bits", "60", "--out", str(k)])
    ct = tmp_path / "r.ct"
    assert main(["rle-encrypt", "--pk", str(k / "public.key"), "--pairs", "20:8,30:3,15:5",
                 "--out-len", "16", "--out", str(ct)]) == 0
    assert CipherFile.read(ct).shape == (3, 2)
    # the toy modulus is far too small for the Taylor circuit; the depth check refuses
    assert main(["rle-decode", "--degree", "16", "--out-len", "16", "--in", str(ct), "--out", str(tmp_path / "o")]) == 1
    assert main(["rle-encrypt", "--pk", str(k / "public.key"), "--pairs", "20:8", "--out-len", "16",
                 "--out", str(ct)]) == 1


def test_bench_shape(tmp_path):
    reports = bench(("enc", "dec"), (2048,), reps=5, seed=0)
    path = tmp_path / "b.csv"
    write_bench_csv(reports, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == BENCH_HEADER
    assert [(r[0], r[1]) for r in rows[1:]] == [("enc", "2048"), ("dec", "2048")]
    with pytest.raises(ValueError):
        bench(("enc",), (2048,), reps=3)
    with pytest.raises(ValueError):
        bench(("fft",), (2048,), reps=5)
