"""Signal-domain encoding: pixels, Gabor kernels, IDAC codes and oscillator frequencies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PATCH = 5
PATCH_SIZE = PATCH * PATCH
MAX_CODE = 20
CODE_BITS = 5
CODE_SCALE = 10.0

DEFAULT_ORIENTATIONS = (0.0, 45.0, 90.0, 135.0)
DEFAULT_KS = (math.pi / 4, math.pi / 2)
DEFAULT_SIGMA = 1.5

# Ring oscillator presets per stage count; f0 in GHz, slope in GHz/code.
FREQ_PRESETS = {
    3: (4.0, 0.050),
    5: (2.4, 0.030),
    7: (1.7, 0.021),
}


class EncodingError(ValueError):
    """Raised for out-of-domain inputs to the encoding functions."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image stored as an (height, width) integer array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise EncodingError(f"image must be 2-D, got shape {px.shape}")
        if px.shape[0] < PATCH or px.shape[1] < PATCH:
            raise EncodingError(
                f"image {px.shape[1]}x{px.shape[0]} is smaller than one {PATCH}x{PATCH} fragment")
        if not np.issubdtype(px.dtype, np.integer):
            if not np.all(np.equal(np.mod(px, 1), 0)):
                raise EncodingError("pixels must be integers")
        if px.min() < 0 or px.max() > 255:
            raise EncodingError("pixels must lie in [0, 255]")
        object.__setattr__(self, "pixels", px.astype(np.int64))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class Kernel25:
    """A 5x5 peak-normalized Gabor kernel with the parameters that produced it."""

    values: np.ndarray
    theta_deg: float = 0.0
    k: float = 0.0
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != PATCH_SIZE:
            raise EncodingError(f"kernel needs {PATCH_SIZE} values, got {v.size}")
        if np.any(np.abs(v) > 1.0 + 1e-12):
            raise EncodingError("kernel values must lie in [-1, 1]")
        v = np.clip(v, -1.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def as_grid(self) -> np.ndarray:
        return self.values.reshape(PATCH, PATCH)


@dataclass(frozen=True)
class FreqCalib:
    """Linear IDAC-code to frequency map of one ring-oscillator variant."""

    stages: int = 3
    f0: float = field(default=None)  # GHz at code 0
    slope: float = field(default=None)  # GHz per code

    def __post_init__(self):
        if self.stages not in FREQ_PRESETS:
            raise EncodingError(f"stages must be one of {sorted(FREQ_PRESETS)}, got {self.stages}")
        f0, slope = FREQ_PRESETS[self.stages]
        if self.f0 is None:
            object.__setattr__(self, "f0", f0)
        if self.slope is None:
            object.__setattr__(self, "slope", slope)
        if not self.f0 > 0 or not self.slope > 0:
            raise EncodingError("f0 and slope must be positive")

    @classmethod
    def preset(cls, stages: int) -> "FreqCalib":
        return cls(stages=stages)


def as_patch(x) -> np.ndarray:
    """Return the 25 values of a fragment or kernel as a float vector."""
    if isinstance(x, Kernel25):
        return x.values
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != PATCH_SIZE:
        raise EncodingError(f"expected {PATCH_SIZE} values, got {v.size}")
    return v


def gray_to_signal(g):
    """Map 8-bit gray levels onto [-1, 1] with both endpoints reachable.

    Accepts a scalar or an array; returns the same shape.
    """
    arr = np.asarray(g)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise EncodingError("gray levels must be integers")
    if np.any(arr < 0) or np.any(arr > 255):
        raise EncodingError("gray level outside [0, 255]")
    out = 2.0 * arr.astype(float) / 255.0 - 1.0
    return float(out) if out.ndim == 0 else out


def signal_to_gray(s):
    """Inverse of :func:`gray_to_signal`, rounding to the nearest gray level."""
    arr = np.asarray(s, dtype=float)
    out = np.rint((arr + 1.0) * 255.0 / 2.0).astype(np.int64)
    out = np.clip(out, 0, 255)
    return int(out) if out.ndim == 0 else out


def gabor_kernel(theta_deg: float, k: float, sigma: float) -> Kernel25:
    """Even (cosine) Gabor kernel on the 5x5 grid centred at (2, 2).

    The raw Gaussian-times-cosine values are scaled so the largest
    magnitude is exactly 1.
    """
    if not sigma > 0:
        raise EncodingError(f"sigma must be positive, got {sigma}")
    if k < 0:
        raise EncodingError(f"k must be non-negative, got {k}")
    theta = math.radians(theta_deg % 360.0)
    rows, cols = np.mgrid[0:PATCH, 0:PATCH]
    x = cols - 2.0
    y = rows - 2.0
    envelope = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    carrier = np.cos(k * (x * math.cos(theta) + y * math.sin(theta)))
    raw = envelope * carrier
    peak = np.abs(raw).max()
    return Kernel25(raw.reshape(-1) / peak, theta_deg=float(theta_deg), k=float(k), sigma=float(sigma))


def make_filter_bank(orientations: Sequence[float] = DEFAULT_ORIENTATIONS,
                     ks: Sequence[float] = DEFAULT_KS,
                     sigma: float = DEFAULT_SIGMA) -> list[Kernel25]:
    orientations = list(orientations)
    ks = list(ks)
    if not orientations or not ks:
        raise EncodingError("filter bank needs at least one orientation and one k")
    return [gabor_kernel(t, k, sigma) for t in orientations for k in ks]


def extract_fragment(image: GrayImage, row: int, col: int) -> np.ndarray:
    """Signal values of the 5x5 window whose top-left pixel is (row, col)."""
    if not (0 <= row <= image.height - PATCH and 0 <= col <= image.width - PATCH):
        raise EncodingError(
            f"window at ({row}, {col}) out of bounds for {image.width}x{image.height} image")
    window = image.pixels[row:row + PATCH, col:col + PATCH]
    return gray_to_signal(window).reshape(-1)


def ideal_dot(f, kern) -> float:
    return float(np.dot(as_patch(f), as_patch(kern)))


def encode_differences(f, kern) -> np.ndarray:
    """IDAC codes for the pixel-wise absolute differences, half-up rounded onto 0..20."""
    diff = np.abs(as_patch(f) - as_patch(kern))
    codes = np.floor(CODE_SCALE * diff + 0.5).astype(np.int64)
    return np.clip(codes, 0, MAX_CODE)


def codes_to_frequencies(codes, calib: FreqCalib) -> np.ndarray:
    """Natural frequencies in GHz for each IDAC code."""
    codes = np.asarray(codes)
    if np.any(codes < 0) or np.any(codes >= 2 ** CODE_BITS):
        raise EncodingError("IDAC codes must fit in 5 bits")
    return calib.f0 + calib.slope * codes.astype(float)


def bank_summary(bank: Iterable[Kernel25]) -> str:
    lines = []
    for i, kern in enumerate(bank):
        lines.append(f"{i:3d}  theta={kern.theta_deg:7.2f} deg  k={kern.k:.6f}  "
                     f"sigma={kern.sigma:.3f}  energy={float(kern.values @ kern.values):.4f}")
    return "\n".join(lines)
