"""Client-side format work: PPM, rounding, zig-zag, Huffman coding, JFIF output.

Entropy coding produces data-dependent lengths, so it only ever runs on the
key holder's side after decryption. The server hands over real-valued
B_uv / Q_uv; :func:`client_finalize` rounds them and applies the luminance level
shift that the JPEG format expects.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .he_image import PlainImage, QuantMatrix, jpeg_forward_twin, jpeg_tables

# -- PPM -----------------------------------------------------------------------

_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


class FormatError(ValueError):
    pass


def read_ppm(data: bytes) -> PlainImage:
    """Binary PPM (P6) or PGM (P5), maxval 255."""
    pos = 0
    fields = []
    for _ in range(4):
        m = _PNM_TOKEN.match(data, pos)
        if not m:
            raise FormatError("truncated PNM header")
        fields.append(m.group(1))
        pos = m.end()
    magic = fields[0]
    if magic not in (b"P6", b"P5"):
        raise FormatError(f"unsupported PNM magic {magic!r}; expected P6 or P5")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise FormatError("malformed PNM header") from exc
    if w < 1 or h < 1:
        raise FormatError("image dimensions must be positive")
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError("missing whitespace after PNM header")
    pos += 1
    c = 3 if magic == b"P6" else 1
    need = w * h * c
    body = data[pos : pos + need]
    if len(body) < need:
        raise FormatError(f"truncated PNM data: {len(body)} of {need} bytes")
    arr = np.frombuffer(body, dtype=np.uint8).reshape(h, w, c).copy()
    return PlainImage(w, h, c, arr)


def write_ppm(img: PlainImage) -> bytes:
    magic = b"P6" if img.channels == 3 else b"P5"
    head = b"%s\n%d %d\n255\n" % (magic, img.width, img.height)
    return head + np.ascontiguousarray(img.samples, dtype=np.uint8).tobytes()


# -- zig-zag ----------------------------------------------------------------------

# raster index (8*row + col) of the k-th coefficient in zig-zag order
ZIGZAG = (
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
)

UNZIGZAG = tuple(np.argsort(ZIGZAG).tolist())


def zigzag(block) -> np.ndarray:
    return np.asarray(block).reshape(64)[list(ZIGZAG)]


def unzigzag(seq) -> np.ndarray:
    return np.asarray(seq)[list(UNZIGZAG)].reshape(8, 8)


# -- client-side rounding --------------------------------------------------------------

COEFF_LIMIT = 1023  # baseline: AC categories up to 10, DC differences up to 11


def round_half_away(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return (np.sign(a) * np.floor(np.abs(a) + 0.5)).astype(np.int64)


def client_finalize(components, tables: list[QuantMatrix], level_shift: bool = True):
    """Decrypted B_uv/Q_uv blocks to baseline-ready integers.

    ``components`` holds one (nblocks, 8, 8) array per component. The first
    component is luminance: shifting samples by -128 moves its DC by -1024/Q_00;
    the chroma rows of the colour matrix sum to zero, so they need nothing.
    Values are rounded half away from zero and clamped to +-1023 so even a
    corrupted decryption still produces a decodable file.
    """
    out = []
    for ci, (blocks, Q) in enumerate(zip(components, tables)):
        b = np.array(blocks, dtype=float).reshape(-1, 8, 8)
        if level_shift and ci == 0:
            b[:, 0, 0] -= 1024.0 / float(Q.table[0][0])
        out.append(np.clip(round_half_away(b), -COEFF_LIMIT, COEFF_LIMIT))
    return out


# -- Huffman tables (ITU T.81 Annex K.3) -------------------------------------------------

DC_LUMA_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
DC_LUMA_VALS = tuple(range(12))
DC_CHROMA_BITS = (0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0)
DC_CHROMA_VALS = tuple(range(12))

AC_LUMA_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
AC_LUMA_VALS = bytes.fromhex(
    "01020300041105122131410613516107227114328191a1082342b1c11552d1f0"
    "2433627282090a161718191a25262728292a3435363738393a43444546474849"
    "4a535455565758595a636465666768696a737475767778797a83848586878889"
    "8a92939495969798999aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3c4c5"
    "c6c7c8c9cad2d3d4d5d6d7d8d9dae1e2e3e4e5e6e7e8e9eaf1f2f3f4f5f6f7f8"
    "f9fa"
)
AC_CHROMA_BITS = (0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77)
AC_CHROMA_VALS = bytes.fromhex(
    "000102031104052131061241510761711322328108144291a1b1c109233352f0"
    "156272d10a162434e125f11718191a262728292a35363738393a434445464748"
    "494a535455565758595a636465666768696a737475767778797a828384858687"
    "88898a92939495969798999aa2a3a4a5a6a7a8a9aab2b3b4b5b6b7b8b9bac2c3"
    "c4c5c6c7c8c9cad2d3d4d5d6d7d8d9dae2e3e4e5e6e7e8e9eaf2f3f4f5f6f7f8"
    "f9fa"
)


@dataclass(frozen=True)
class HuffmanTable:
    bits: tuple
    vals: tuple
    codes: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.bits) != 16 or sum(self.bits) != len(self.vals):
            raise ValueError("BITS must have 16 counts summing to len(HUFFVAL)")
        codes = {}
        code = 0
        k = 0
        for length in range(1, 17):
            for _ in range(self.bits[length - 1]):
                codes[self.vals[k]] = (code, length)
                code += 1
                k += 1
            code <<= 1
        object.__setattr__(self, "codes", codes)

    def decoder(self) -> dict:
        return {(length, code): sym for sym, (code, length) in self.codes.items()}


DC_LUMA = HuffmanTable(DC_LUMA_BITS, DC_LUMA_VALS)
DC_CHROMA = HuffmanTable(DC_CHROMA_BITS, DC_CHROMA_VALS)
AC_LUMA = HuffmanTable(AC_LUMA_BITS, tuple(AC_LUMA_VALS))
AC_CHROMA = HuffmanTable(AC_CHROMA_BITS, tuple(AC_CHROMA_VALS))


def _tables_for(ci: int):
    return (DC_LUMA, AC_LUMA) if ci == 0 else (DC_CHROMA, AC_CHROMA)


# -- bit I/O --------------------------------------------------------------------

class BitWriter:
    def __init__(self):
        self.out = bytearray()
        self.acc = 0
        self.nbits = 0

    def write(self, value: int, length: int):
        if length == 0:
            return
        self.acc = (self.acc << length) | (value & ((1 << length) - 1))
        self.nbits += length
        while self.nbits >= 8:
            self.nbits -= 8
            byte = (self.acc >> self.nbits) & 0xFF
            self.out.append(byte)
            if byte == 0xFF:
                self.out.append(0x00)
        self.acc &= (1 << self.nbits) - 1

    def flush(self) -> bytes:
        if self.nbits:
            pad = 8 - self.nbits
            self.write((1 << pad) - 1, pad)
        return bytes(self.out)


class BitReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.acc = 0
        self.nbits = 0

    def _fill(self):
        if self.pos >= len(self.data):
            raise FormatError("scan data ended early")
        byte = self.data[self.pos]
        self.pos += 1
        if byte == 0xFF:
            nxt = self.data[self.pos] if self.pos < len(self.data) else None
            if nxt != 0x00:
                raise FormatError("marker inside scan data")
            self.pos += 1
        self.acc = (self.acc << 8) | byte
        self.nbits += 8

    def read(self, length: int) -> int:
        while self.nbits < length:
            self._fill()
        self.nbits -= length
        v = (self.acc >> self.nbits) & ((1 << length) - 1)
        self.acc &= (1 << self.nbits) - 1
        return v

    def symbol(self, table: dict) -> int:
        code = 0
        for length in range(1, 17):
            code = (code << 1) | self.read(1)
            sym = table.get((length, code))
            if sym is not None:
                return sym
        raise FormatError("invalid Huffman code")


def _category(v: int) -> int:
    return int(abs(v)).bit_length()


def _magnitude_bits(v: int, size: int) -> int:
    return v if v >= 0 else v + (1 << size) - 1


def _extend(bits: int, size: int) -> int:
    if size == 0:
        return 0
    return bits if bits >= 1 << (size - 1) else bits - (1 << size) + 1


# -- entropy coding ------------------------------------------------------------------

def interleave(components) -> list[tuple[int, np.ndarray]]:
    """(component index, 8x8 block) in MCU order (1x1 sampling for every component)."""
    nblocks = len(components[0])
    if any(len(c) != nblocks for c in components):
        raise ValueError("components must have the same number of blocks")
    return [(ci, components[ci][b]) for b in range(nblocks) for ci in range(len(components))]


def entropy_encode(components) -> bytes:
    """Baseline Huffman scan for integer blocks (one (nblocks, 8, 8) array per component)."""
    bw = BitWriter()
    pred = [0] * len(components)
    for ci, block in interleave(components):
        dc_tab, ac_tab = _tables_for(ci)
        zz = [int(v) for v in zigzag(block)]
        if any(abs(v) > COEFF_LIMIT for v in zz):
            raise ValueError("coefficient outside the baseline range")
        diff = zz[0] - pred[ci]
        pred[ci] = zz[0]
        size = _category(diff)
        code, length = dc_tab.codes[size]
        bw.write(code, length)
        bw.write(_magnitude_bits(diff, size), size)
        run = 0
        for v in zz[1:]:
            if v == 0:
                run += 1
                continue
            while run > 15:
                code, length = ac_tab.codes[0xF0]
                bw.write(code, length)
                run -= 16
            size = _category(v)
            code, length = ac_tab.codes[(run << 4) | size]
            bw.write(code, length)
            bw.write(_magnitude_bits(v, size), size)
            run = 0
        if run:
            code, length = ac_tab.codes[0x00]
            bw.write(code, length)
    return bw.flush()


def entropy_decode(scan: bytes, ncomponents: int, nblocks: int) -> list[np.ndarray]:
    """Inverse of :func:`entropy_encode` (used as the lossless round-trip oracle)."""
    br = BitReader(scan)
    decs = [(t[0].decoder(), t[1].decoder()) for t in (_tables_for(c) for c in range(ncomponents))]
    out = [np.zeros((nblocks, 8, 8), dtype=np.int64) for _ in range(ncomponents)]
    pred = [0] * ncomponents
    for b in range(nblocks):
        for ci in range(ncomponents):
            dc_dec, ac_dec = decs[ci]
            zz = [0] * 64
            size = br.symbol(dc_dec)
            pred[ci] += _extend(br.read(size), size)
            zz[0] = pred[ci]
            k = 1
            while k < 64:
                sym = br.symbol(ac_dec)
                run, size = sym >> 4, sym & 15
                if size == 0:
                    if run == 15:
                        k += 16
                        continue
                    break
                k += run
                if k > 63:
                    raise FormatError("AC run past end of block")
                zz[k] = _extend(br.read(size), size)
                k += 1
            out[ci][b] = unzigzag(zz)
    return out


# -- container --------------------------------------------------------------------

def _segment(marker: int, payload: bytes) -> bytes:
    return struct.pack(">HH", marker, len(payload) + 2) + payload


@dataclass(frozen=True)
class JpegWriter:
    """Baseline JFIF with the Annex K tables and no chroma subsampling."""

    quality: int = 75
    components: int = 3

    def __post_init__(self):
        if self.components not in (1, 3):
            raise ValueError("components must be 1 or 3")
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in 1..100")

    @property
    def tables(self) -> list[QuantMatrix]:
        return jpeg_tables(self.quality, self.components)

    def headers(self, width: int, height: int) -> bytes:
        out = bytearray(b"\xff\xd8")
        out += _segment(0xFFE0, b"JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00")
        for tq, Q in enumerate(self.tables[: min(self.components, 2)]):
            flat = np.asarray(Q.table).reshape(64)[list(ZIGZAG)]
            out += _segment(0xFFDB, bytes([tq]) + bytes(int(v) for v in flat))
        sof = struct.pack(">BHHB", 8, height, width, self.components)
        for ci in range(self.components):
            sof += bytes([ci + 1, 0x11, 0 if ci == 0 else 1])
        out += _segment(0xFFC0, sof)
        dht = bytearray()
        for cls_id, tab in ((0x00, DC_LUMA), (0x10, AC_LUMA), (0x01, DC_CHROMA), (0x11, AC_CHROMA)):
            if self.components == 1 and cls_id & 1:
                continue
            dht += bytes([cls_id]) + bytes(tab.bits) + bytes(tab.vals)
        out += _segment(0xFFC4, bytes(dht))
        sos = bytes([self.components])
        for ci in range(self.components):
            sos += bytes([ci + 1, 0x00 if ci == 0 else 0x11])
        sos += b"\x00\x3f\x00"
        out += _segment(0xFFDA, sos)
        return bytes(out)

    def write(self, scan: bytes, width: int, height: int) -> bytes:
        return self.headers(width, height) + scan + b"\xff\xd9"


def write_jpeg(writer: JpegWriter, scan: bytes, width: int, height: int) -> bytes:
    return writer.write(scan, width, height)


def finalize_to_jpeg(components, width: int, height: int, quality: int = 75) -> bytes:
    """Decrypted real blocks to a complete JPEG file (the client half)."""
    writer = JpegWriter(quality, len(components))
    ints = client_finalize(components, writer.tables)
    return writer.write(entropy_encode(ints), width, height)


def plain_jpeg(arr: np.ndarray, quality: int = 75) -> bytes:
    """The all-plaintext pipeline: same transform, float arithmetic, same container."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, None]
    comps = jpeg_forward_twin(a, quality, None)
    return finalize_to_jpeg(comps, a.shape[1], a.shape[0], quality)


# -- run-length pairs for the Fourier decoder -------------------------------------------------

def rle_encode_plain(values, out_len: int | None = None) -> list[tuple[int, int]]:
    """Maximal runs as (value, length)."""
    vals = [int(v) for v in values]
    if not vals:
        raise ValueError("cannot run-length encode an empty sequence")
    if out_len is not None and len(vals) != out_len:
        raise ValueError(f"expected {out_len} values, got {len(vals)}")
    pairs: list[list[int]] = []
    for v in vals:
        if pairs and pairs[-1][0] == v:
            pairs[-1][1] += 1
        else:
            pairs.append([v, 1])
    return [(v, n) for v, n in pairs]


def rle_expand(pairs) -> list[int]:
    out: list[int] = []
    for v, n in pairs:
        out.extend([v] * int(n))
    return out


__all__ = [
    "FormatError",
    "read_ppm",
    "write_ppm",
    "ZIGZAG",
    "UNZIGZAG",
    "zigzag",
    "unzigzag",
    "round_half_away",
    "client_finalize",
    "HuffmanTable",
    "entropy_encode",
    "entropy_decode",
    "interleave",
    "JpegWriter",
    "write_jpeg",
    "finalize_to_jpeg",
    "plain_jpeg",
    "rle_encode_plain",
    "rle_expand",
    "COEFF_LIMIT",
]
