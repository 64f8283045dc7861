"""Image circuits over per-pixel ciphertexts.

Each circuit takes an evaluator (see :mod:`heip.evaluator`) and nested lists of
values, so the same code runs on ciphertexts, on floats (the plaintext twin) and
on exact digit polynomials. Only public weights enter multiplications: resize,
colour transform, DCT and quantization never multiply two ciphertexts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import fv
from .encoding import FractionalEncoder
from .evaluator import HomomorphicEvaluator, PlainEvaluator


@dataclass(frozen=True, eq=False)
class PlainImage:
    width: int
    height: int
    channels: int
    samples: np.ndarray  # uint8, shape (height, width, channels)

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.samples.shape != (self.height, self.width, self.channels):
            raise ValueError(
                f"samples shape {self.samples.shape} does not match "
                f"{self.height}x{self.width}x{self.channels}"
            )

    @classmethod
    def from_array(cls, arr) -> "PlainImage":
        a = np.asarray(arr)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3:
            raise ValueError("expected an (h, w) or (h, w, c) array")
        a = np.clip(np.rint(a), 0, 255).astype(np.uint8)
        return cls(a.shape[1], a.shape[0], a.shape[2], a)

    def __eq__(self, other):
        return isinstance(other, PlainImage) and np.array_equal(self.samples, other.samples)


@dataclass(frozen=True, eq=False)
class EncryptedImage:
    width: int
    height: int
    channels: int
    cells: list  # row-major over (y, x, c)
    params: fv.EncryptionParams
    encoder: FractionalEncoder
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.cells) != self.width * self.height * self.channels:
            raise ValueError("cell count does not match geometry")

    def plane(self, c: int) -> list[list]:
        w, ch = self.width, self.channels
        return [[self.cells[(y * w + x) * ch + c] for x in range(w)] for y in range(self.height)]

    def planes(self) -> list[list[list]]:
        return [self.plane(c) for c in range(self.channels)]

    @classmethod
    def from_planes(cls, planes, params, encoder, meta=None) -> "EncryptedImage":
        h, w = len(planes[0]), len(planes[0][0])
        cells = [planes[c][y][x] for y in range(h) for x in range(w) for c in range(len(planes))]
        return cls(w, h, len(planes), cells, params, encoder, dict(meta or {}))


def image_planes(arr: np.ndarray) -> list[list[list[float]]]:
    """(h, w, c) array to per-channel nested lists of floats (twin input)."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 2:
        a = a[:, :, None]
    return [a[:, :, c].tolist() for c in range(a.shape[2])]


def planes_array(planes) -> np.ndarray:
    return np.stack([np.asarray(p, dtype=float) for p in planes], axis=-1)


def encrypt_image(pk: fv.PublicKey, img: PlainImage, encoder: FractionalEncoder, rng=None) -> EncryptedImage:
    rng = rng if rng is not None else np.random.default_rng()
    cache = {}
    cells = []
    for v in img.samples.reshape(-1).tolist():
        pt = cache.get(v)
        if pt is None:
            pt = cache[v] = encoder.encode(v)
        cells.append(fv.encrypt(pk, pt, rng))
    return EncryptedImage(img.width, img.height, img.channels, cells, pk.params, encoder)


def decrypt_image(sk: fv.SecretKey, eimg: EncryptedImage) -> np.ndarray:
    """Decoded real values, shape (h, w, c)."""
    vals = [eimg.encoder.decode(fv.decrypt(sk, ct)) for ct in eimg.cells]
    return np.asarray(vals, dtype=float).reshape(eimg.height, eimg.width, eimg.channels)


def to_plain_image(values: np.ndarray) -> PlainImage:
    return PlainImage.from_array(values)


# -- interpolation ---------------------------------------------------------------

def lerp_weights(t: float) -> tuple[float, float]:
    return 1.0 - t, t


def cubic_weights(t: float) -> tuple[float, float, float, float]:
    """Row (1, t, t^2, t^3) times the half-scaled Catmull-Rom matrix."""
    t2, t3 = t * t, t * t * t
    return (
        0.5 * (-t + 2 * t2 - t3),
        0.5 * (2 - 5 * t2 + 3 * t3),
        0.5 * (t + 4 * t2 - 3 * t3),
        0.5 * (-t2 + t3),
    )


def lerp(ev, f0, f1, t: float):
    """f0 + t (f1 - f0): one plaintext multiply."""
    if t == 0.0:
        return f0
    return ev.add(f0, ev.mul_const(ev.sub(f1, f0), t))


def cubic(ev, fm1, f0, f1, f2, t: float):
    """Weighted sum of four taps: one plaintext multiply per nonzero weight."""
    ws = cubic_weights(t)
    if ws == (0.0, 1.0, 0.0, 0.0):
        return f0
    return ev.matvec([fm1, f0, f1, f2], [ws])[0]


def lerp_h(ev: HomomorphicEvaluator, c0, c1, t: float):
    return lerp(ev, c0, c1, t)


def cubic_h(ev: HomomorphicEvaluator, cm1, c0, c1, c2, t: float):
    return cubic(ev, cm1, c0, c1, c2, t)


MODES = ("bilinear", "bicubic")


@dataclass(frozen=True)
class ResizeSpec:
    src_width: int
    src_height: int
    dst_width: int
    dst_height: int
    mode: str = "bilinear"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if min(self.src_width, self.src_height, self.dst_width, self.dst_height) < 1:
            raise ValueError("image dimensions must be >= 1")


@lru_cache(maxsize=None)
def axis_taps(src: int, dst: int, mode: str) -> tuple:
    """Per destination index: (clamped source indices, interpolation parameter t).

    Source coordinate s = (d + 0.5) * src/dst - 0.5; taps are clamped to the edge.
    """
    scale = src / dst
    out = []
    for d in range(dst):
        s = (d + 0.5) * scale - 0.5
        i0 = math.floor(s)
        t = s - i0
        offs = (0, 1) if mode == "bilinear" else (-1, 0, 1, 2)
        idx = tuple(min(max(i0 + o, 0), src - 1) for o in offs)
        out.append((idx, t))
    return tuple(out)


def axis_weights(src: int, dst: int, mode: str) -> np.ndarray:
    """Dense (dst, src) weight matrix implied by :func:`axis_taps` (for checks)."""
    m = np.zeros((dst, src))
    for d, (idx, t) in enumerate(axis_taps(src, dst, mode)):
        ws = lerp_weights(t) if mode == "bilinear" else cubic_weights(t)
        for i, w in zip(idx, ws):
            m[d, i] += w
    return m


def _interp(ev, mode, vals, t):
    if mode == "bilinear":
        return lerp(ev, vals[0], vals[1], t)
    return cubic(ev, *vals, t)


def resize_plane(ev, plane: list[list], spec: ResizeSpec) -> list[list]:
    """Horizontal pass over every source row, then a vertical pass."""
    if len(plane) != spec.src_height or len(plane[0]) != spec.src_width:
        raise ValueError("plane geometry does not match the resize spec")
    htaps = axis_taps(spec.src_width, spec.dst_width, spec.mode)
    vtaps = axis_taps(spec.src_height, spec.dst_height, spec.mode)
    rows = [[_interp(ev, spec.mode, [row[i] for i in idx], t) for idx, t in htaps] for row in plane]
    return [
        [_interp(ev, spec.mode, [rows[i][x] for i in idx], t) for x in range(spec.dst_width)]
        for idx, t in vtaps
    ]


def resize_planes(ev, planes, spec: ResizeSpec):
    return [resize_plane(ev, p, spec) for p in planes]


def resize(ev: HomomorphicEvaluator, img: EncryptedImage, spec: ResizeSpec) -> EncryptedImage:
    if (img.width, img.height) != (spec.src_width, spec.src_height):
        raise ValueError("image geometry does not match the resize spec")
    out = resize_planes(ev, img.planes(), spec)
    return EncryptedImage.from_planes(out, img.params, img.encoder, img.meta)


def resize_twin(arr: np.ndarray, spec: ResizeSpec, encoder: FractionalEncoder | None = None) -> np.ndarray:
    """Plaintext twin of :func:`resize`; weights quantized like the encrypted run when given an encoder."""
    return planes_array(resize_planes(PlainEvaluator(encoder), image_planes(arr), spec))


# -- colour transform ----------------------------------------------------------------

YCBCR = (
    (0.299, 0.587, 0.114),
    (-0.168736, -0.331264, 0.5),
    (0.5, -0.418688, -0.081312),
)


def linear_combination(ev, weights, values):
    return ev.matvec(list(values), [list(weights)])[0]


def rgb_to_ycbcr(ev, planes):
    """Verbatim 3x3 matrix, no chroma offset."""
    if len(planes) != 3:
        raise ValueError("colour transform needs 3 channels")
    h, w = len(planes[0]), len(planes[0][0])
    out = [[[None] * w for _ in range(h)] for _ in YCBCR]
    for y in range(h):
        for x in range(w):
            for c, v in enumerate(ev.matvec([p[y][x] for p in planes], YCBCR)):
                out[c][y][x] = v
    return out


def rgb_to_ycbcr_h(ev: HomomorphicEvaluator, img: EncryptedImage) -> EncryptedImage:
    out = rgb_to_ycbcr(ev, img.planes())
    return EncryptedImage.from_planes(out, img.params, img.encoder, img.meta)


# -- DCT and quantization -----------------------------------------------------------------

def _alpha(u: int) -> float:
    return 1 / math.sqrt(2) if u == 0 else 1.0


@lru_cache(maxsize=None)
def dct_basis() -> tuple:
    """C[u][x] = alpha(u)/2 * cos((2x+1) u pi / 16); the 2-D transform is C A C^T."""
    return tuple(
        tuple(0.5 * _alpha(u) * math.cos((2 * x + 1) * u * math.pi / 16) for x in range(8))
        for u in range(8)
    )


def dct_1d(ev, v: list) -> list:
    """8-point DCT with one even/odd butterfly: 32 plaintext multiplies."""
    C = dct_basis()
    s = [ev.add(v[x], v[7 - x]) for x in range(4)]
    d = [ev.sub(v[x], v[7 - x]) for x in range(4)]
    even = ev.matvec(s, [C[u][:4] for u in range(0, 8, 2)])
    odd = ev.matvec(d, [C[u][:4] for u in range(1, 8, 2)])
    return [even[u // 2] if u % 2 == 0 else odd[u // 2] for u in range(8)]


def dct8x8(ev, block: list[list]) -> list[list]:
    """B[u][v] = 1/4 alpha(u) alpha(v) sum_xy A[x][y] cos(..u..) cos(..v..)."""
    if len(block) != 8 or any(len(r) != 8 for r in block):
        raise ValueError("DCT needs a full 8x8 block")
    rows = [dct_1d(ev, list(r)) for r in block]
    cols = [dct_1d(ev, [rows[x][v] for x in range(8)]) for v in range(8)]
    return [[cols[v][u] for v in range(8)] for u in range(8)]


def dct8_h(ev: HomomorphicEvaluator, block):
    return dct8x8(ev, block)


@lru_cache(maxsize=None)
def _direct_rows(qkey: tuple) -> tuple:
    C = dct_basis()
    return tuple(
        tuple(C[u][x] * C[v][y] / qkey[u * 8 + v] for x in range(8) for y in range(8))
        for u in range(8)
        for v in range(8)
    )


def dct_quantize(ev, block, Q: "QuantMatrix"):
    """B_uv / Q_uv directly: one 64-tap public-weight sum per output.

    Same linear map as :func:`quantize_block` after :func:`dct8x8`, but a single
    layer of plaintext multiplies instead of three, which keeps encoded
    coefficients much smaller.
    """
    if len(block) != 8 or any(len(r) != 8 for r in block):
        raise ValueError("DCT needs a full 8x8 block")
    rows = _direct_rows(tuple(int(v) for v in np.asarray(Q.table).reshape(-1)))
    flat = ev.matvec([block[x][y] for x in range(8) for y in range(8)], rows)
    return [flat[u * 8 : u * 8 + 8] for u in range(8)]


def dct8x8_reference(block) -> np.ndarray:
    """Direct quadruple loop of the DCT formula (independent oracle)."""
    A = np.asarray(block, dtype=float)
    out = np.zeros((8, 8))
    for u in range(8):
        for v in range(8):
            acc = 0.0
            for x in range(8):
                for y in range(8):
                    acc += (
                        A[x, y]
                        * math.cos((2 * x + 1) * u * math.pi / 16)
                        * math.cos((2 * y + 1) * v * math.pi / 16)
                    )
            out[u, v] = 0.25 * _alpha(u) * _alpha(v) * acc
    return out


LUMINANCE_BASE = (
    (16, 11, 10, 16, 24, 40, 51, 61),
    (12, 12, 14, 19, 26, 58, 60, 55),
    (14, 13, 16, 24, 40, 57, 69, 56),
    (14, 17, 22, 29, 51, 87, 80, 62),
    (18, 22, 37, 56, 68, 109, 103, 77),
    (24, 35, 55, 64, 81, 104, 113, 92),
    (49, 64, 78, 87, 103, 121, 120, 101),
    (72, 92, 95, 98, 112, 100, 103, 99),
)

CHROMINANCE_BASE = (
    (17, 18, 24, 47, 99, 99, 99, 99),
    (18, 21, 26, 66, 99, 99, 99, 99),
    (24, 26, 56, 99, 99, 99, 99, 99),
    (47, 66, 99, 99, 99, 99, 99, 99),
    (99, 99, 99, 99, 99, 99, 99, 99),
    (99, 99, 99, 99, 99, 99, 99, 99),
    (99, 99, 99, 99, 99, 99, 99, 99),
    (99, 99, 99, 99, 99, 99, 99, 99),
)


@dataclass(frozen=True, eq=False)
class QuantMatrix:
    table: np.ndarray  # 8x8 ints >= 1
    quality: int = 75

    def __post_init__(self):
        tb = np.asarray(self.table)
        if tb.shape != (8, 8) or np.any(tb < 1):
            raise ValueError("quantization table must be 8x8 with entries >= 1")
        if not 1 <= self.quality <= 100:
            raise ValueError("quality must be in 1..100")

    @classmethod
    def scaled(cls, base, quality: int = 75) -> "QuantMatrix":
        """libjpeg quality scaling, entries clamped to 1..255 (baseline)."""
        if not 1 <= quality <= 100:
            raise ValueError("quality must be in 1..100")
        scale = 5000 // quality if quality < 50 else 200 - 2 * quality
        tb = (np.asarray(base, dtype=np.int64) * scale + 50) // 100
        return cls(np.clip(tb, 1, 255), quality)

    @classmethod
    def luminance(cls, quality: int = 75) -> "QuantMatrix":
        return cls.scaled(LUMINANCE_BASE, quality)

    @classmethod
    def chrominance(cls, quality: int = 75) -> "QuantMatrix":
        return cls.scaled(CHROMINANCE_BASE, quality)

    @classmethod
    def ones(cls) -> "QuantMatrix":
        return cls(np.ones((8, 8), dtype=np.int64), 100)

    def __eq__(self, other):
        return isinstance(other, QuantMatrix) and np.array_equal(self.table, other.table)


def quantize_block(ev, block, Q: QuantMatrix):
    """Multiply each coefficient by 1/Q; rounding is left to the key holder."""
    return [[ev.mul_const(block[u][v], 1.0 / int(Q.table[u][v])) for v in range(8)] for u in range(8)]


quantize_h = quantize_block


def pad_plane(plane: list[list], multiple: int = 8) -> list[list]:
    """Edge-replicate to the next multiple (references, no copies of ciphertexts)."""
    h, w = len(plane), len(plane[0])
    H = -(-h // multiple) * multiple
    W = -(-w // multiple) * multiple
    return [[plane[min(y, h - 1)][min(x, w - 1)] for x in range(W)] for y in range(H)]


def plane_blocks(plane: list[list]) -> list[list[list]]:
    """Raster-order 8x8 blocks of an already padded plane."""
    h, w = len(plane), len(plane[0])
    return [
        [row[bx : bx + 8] for row in plane[by : by + 8]]
        for by in range(0, h, 8)
        for bx in range(0, w, 8)
    ]


def jpeg_tables(quality: int, components: int) -> list[QuantMatrix]:
    return [QuantMatrix.luminance(quality)] + [QuantMatrix.chrominance(quality)] * (components - 1)


def jpeg_forward(ev, planes, quality: int = 75, fused: bool = True):
    """Colour transform (3 channels), pad, DCT and quantize. Returns per-component block lists.

    ``fused`` selects :func:`dct_quantize`; otherwise the separable DCT is
    followed by a separate reciprocal multiply.
    """
    comps = rgb_to_ycbcr(ev, planes) if len(planes) == 3 else list(planes)
    out = []
    for plane, Q in zip(comps, jpeg_tables(quality, len(comps))):
        blocks = plane_blocks(pad_plane(plane))
        if fused:
            out.append([dct_quantize(ev, b, Q) for b in blocks])
        else:
            out.append([quantize_block(ev, dct8x8(ev, b), Q) for b in blocks])
    return out


def jpeg_forward_twin(arr: np.ndarray, quality: int = 75, encoder: FractionalEncoder | None = None,
                      fused: bool = True):
    """Plaintext twin of :func:`jpeg_forward`: list of (nblocks, 8, 8) float arrays."""
    res = jpeg_forward(PlainEvaluator(encoder), image_planes(arr), quality, fused)
    return [np.asarray(c, dtype=float) for c in res]


__all__ = [
    "PlainImage",
    "EncryptedImage",
    "ResizeSpec",
    "MODES",
    "QuantMatrix",
    "encrypt_image",
    "decrypt_image",
    "lerp",
    "cubic",
    "lerp_h",
    "cubic_h",
    "lerp_weights",
    "cubic_weights",
    "axis_taps",
    "axis_weights",
    "resize",
    "resize_plane",
    "resize_planes",
    "resize_twin",
    "YCBCR",
    "rgb_to_ycbcr",
    "rgb_to_ycbcr_h",
    "dct_basis",
    "dct_1d",
    "dct8x8",
    "dct8_h",
    "dct8x8_reference",
    "quantize_block",
    "quantize_h",
    "dct_quantize",
    "jpeg_tables",
    "pad_plane",
    "plane_blocks",
    "jpeg_forward",
    "jpeg_forward_twin",
    "image_planes",
    "planes_array",
]
