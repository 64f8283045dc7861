"""Deterministic synthetic test images (no external corpus needed)."""
from __future__ import annotations

import numpy as np


def synthetic_photo(width: int = 48, height: int = 48, channels: int = 1, seed: int = 0) -> np.ndarray:
    """Smooth gradients, a disc, a bar and mild noise; uint8 of shape (h, w, c)."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(float)
    u, v = x / max(width - 1, 1), y / max(height - 1, 1)
    base = 60 + 120 * u * (1 - 0.4 * v) + 40 * np.sin(3.1 * v + 1.7 * u)
    disc = ((x - 0.62 * width) ** 2 + (y - 0.38 * height) ** 2) < (0.2 * min(width, height)) ** 2
    bar = (np.abs(y - 0.75 * height) < 0.06 * height) & (x > 0.15 * width)
    planes = []
    for c in range(channels):
        img = base + 25 * c * (v - 0.5)
        img = np.where(disc, 220 - 50 * c, img)
        img = np.where(bar, 30 + 40 * c, img)
        img = img + rng.normal(0, 4, img.shape)
        planes.append(img)
    return np.clip(np.rint(np.stack(planes, -1)), 0, 255).astype(np.uint8)


def blocky_image(width: int = 16, height: int = 16, seed: int = 0) -> np.ndarray:
    """Rows made of a few long constant runs, the kind of content RLE is good at."""
    rng = np.random.default_rng(seed)
    out = np.zeros((height, width), dtype=np.uint8)
    for r in range(height):
        x = 0
        while x < width:
            run = int(rng.integers(3, max(4, width // 2) + 1))
            out[r, x : x + run] = int(rng.integers(20, 236))
            x += run
    return out
