"""Toy 2-D distributions, Gaussian noise, and CIFAR-10 binary ingestion."""

from dataclasses import dataclass

import numpy as np

TOY_NAMES = ("gauss8", "checkerboard", "swissroll", "twomoons")

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes
CIFAR_PIXELS = 3072


@dataclass
class ToyDataset:
    """A named 2-D distribution; scale sets the support radius."""

    name: str
    scale: float = 4.0

    def __post_init__(self):
        if self.name not in TOY_NAMES:
            raise ValueError(f"unknown dataset {self.name!r}, expected one of: {', '.join(TOY_NAMES)}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")


def _rng_of(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gauss8_centers(scale: float) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(8) / 8.0
    return scale * np.stack([np.cos(ang), np.sin(ang)], axis=1)


def sample_toy(ds: ToyDataset, n: int, seed) -> np.ndarray:
    """n i.i.d. draws from the named distribution; seed may be a Generator.

    GAUSS8: 8 modes evenly on a radius-scale ring, mode std scale/40.
    CHECKERBOARD: uniform over the 8 dark cells of a 4x4 grid on
    [-scale, scale]^2. SWISSROLL: a 1.5-turn spiral reaching radius
    scale, jitter std scale/100. TWOMOONS: two interleaved half circles
    rescaled to fit a radius-1.2*scale disc, jitter std scale/50.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = _rng_of(seed)
    s = ds.scale
    if ds.name == "gauss8":
        centers = gauss8_centers(s)
        which = rng.integers(0, 8, size=n)
        return centers[which] + (s / 40.0) * rng.standard_normal((n, 2))
    if ds.name == "checkerboard":
        cells = np.array([(i, j) for i in range(4) for j in range(4) if (i + j) % 2 == 0])
        which = rng.integers(0, len(cells), size=n)
        u = rng.random((n, 2))
        return -s + (cells[which] + u) * (s / 2.0)
    if ds.name == "swissroll":
        theta = 1.5 * np.pi * (1.0 + 2.0 * rng.random(n))
        r = (theta / (4.5 * np.pi)) * s
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        return pts + (s / 100.0) * rng.standard_normal((n, 2))
    if ds.name == "twomoons":
        upper = rng.random(n) < 0.5
        t = np.pi * rng.random(n)
        pts = np.where(upper[:, None],
                       np.stack([np.cos(t), np.sin(t)], axis=1),
                       np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1))
        pts = (pts - np.array([0.5, 0.25])) * (s / 1.5)
        return pts + (s / 50.0) * rng.standard_normal((n, 2))
    raise ValueError(f"unknown dataset {ds.name!r}")


def sample_noise(n: int, d: int, seed) -> np.ndarray:
    """n x d i.i.d. standard normal draws from a seeded generator."""
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be >= 1, got n={n}, d={d}")
    return _rng_of(seed).standard_normal((n, d))


@dataclass
class ImageDataset:
    """Flattened 32x32x3 images in [-1, 1] with their (unused) labels."""

    n: int
    d: int
    pixels: np.ndarray
    labels: np.ndarray


def load_cifar10_binary(path) -> ImageDataset:
    """Parse the public CIFAR-10 binary layout.

    Each record is 1 label byte then 3072 pixel bytes (channel-planar
    R, G, B; row-major inside each plane). Pixels map to [-1, 1] via
    x / 127.5 - 1. Malformed input raises with the failing byte offset.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) == 0:
        raise ValueError(f"{path}: empty file at byte offset 0")
    n, rem = divmod(len(raw), CIFAR_RECORD_BYTES)
    if rem != 0:
        raise ValueError(
            f"{path}: truncated record at byte offset {n * CIFAR_RECORD_BYTES} "
            f"(file length {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES})"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.nonzero(labels > 9)[0]
    if bad.size:
        raise ValueError(
            f"{path}: label byte {int(labels[bad[0]])} out of range at byte offset "
            f"{int(bad[0]) * CIFAR_RECORD_BYTES}"
        )
    pixels = records[:, 1:].astype(np.float64) / 127.5 - 1.0
    return ImageDataset(n=n, d=CIFAR_PIXELS, pixels=pixels, labels=labels)


def serialize_cifar10(ds: ImageDataset) -> bytes:
    """Inverse of load_cifar10_binary; exact for any loaded dataset."""
    bytes_px = np.rint((ds.pixels + 1.0) * 127.5)
    if np.any(bytes_px < 0) or np.any(bytes_px > 255):
        raise ValueError("pixel values outside [-1, 1] cannot serialize to bytes")
    records = np.empty((ds.n, CIFAR_RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = ds.labels
    records[:, 1:] = bytes_px.astype(np.uint8)
    return records.tobytes()
