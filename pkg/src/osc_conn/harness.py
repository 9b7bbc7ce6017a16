"""Image-level convolution through the oscillator array, map comparison and energy model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .calibration import CaseSet, FitResult, linear_fit
from .dynamics import SimConfig, derive_seed, init_phases, omegas_for, sample_dom
from .encoding import (PATCH, EncodingError, FreqCalib, GrayImage, Kernel25, as_patch,
                       gray_to_signal, signal_to_gray)

SUITE_KERNELS = 6
SUITE_NOISE_SD = 0.45
MODES = ("ideal", "onn")


@dataclass
class FeatureMap:
    values: np.ndarray
    mode: str = "ideal"

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class MapComparison:
    fit: FitResult
    spearman: float
    top1: bool


@dataclass(frozen=True)
class EnergyModel:
    n_osc: int = 26
    p_osc: float = 0.26e-3  # W per oscillator
    p_pd: float = 100e-6  # W, peak detector upper bound
    t_inf: float = 8e-9  # s

    def __post_init__(self):
        if self.n_osc < 0 or self.p_osc < 0 or self.p_pd < 0 or self.t_inf < 0:
            raise ValueError("energy model fields must be non-negative")

    @property
    def delay_ns(self) -> float:
        return self.t_inf * 1e9


def energy_per_inference(model: EnergyModel) -> float:
    """Energy of one inference in pJ."""
    return (model.n_osc * model.p_osc + model.p_pd) * model.t_inf * 1e12


def image_windows(image: GrayImage) -> np.ndarray:
    """All valid 5x5 fragments in signal units, shape (out_h, out_w, 25)."""
    sig = gray_to_signal(image.pixels)
    win = np.lib.stride_tricks.sliding_window_view(sig, (PATCH, PATCH))
    return win.reshape(win.shape[0], win.shape[1], PATCH * PATCH)


def convolve(image: GrayImage, kern, mode: str = "ideal", calib: FreqCalib | None = None,
             config: SimConfig | None = None, coupling_k: float | None = None,
             seeds_per_position: int = 1, backend: str | None = None) -> FeatureMap:
    """Stride-1, valid-padding convolution of ``image`` with a 5x5 kernel.

    In ``onn`` mode every position runs the oscillator array and reports the
    DOM, averaged over ``seeds_per_position`` shots.  Shot seeds derive from
    the global seed and the flat position index.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if image.width < PATCH or image.height < PATCH:
        raise EncodingError("image too small for a 5x5 fragment")
    k = as_patch(kern)
    windows = image_windows(image)
    out_h, out_w = windows.shape[:2]
    flat = windows.reshape(-1, PATCH * PATCH)
    if mode == "ideal":
        return FeatureMap(values=(flat @ k).reshape(out_h, out_w), mode="ideal")

    if calib is None or config is None or coupling_k is None:
        raise ValueError("onn mode needs calib, config and coupling_k")
    if seeds_per_position < 1:
        raise ValueError("seeds_per_position must be >= 1")
    n_pos = flat.shape[0]
    omegas = np.repeat(np.stack([omegas_for(f, k, calib) for f in flat]), seeds_per_position,
                       axis=0)
    phases = np.stack([
        init_phases(derive_seed(derive_seed(config.seed, p), s), config.init_mode,
                    calib.stages, PATCH * PATCH)
        for p in range(n_pos) for s in range(seeds_per_position)])
    dom, _ = sample_dom(phases, omegas, coupling_k, config, backend=backend)
    values = dom.reshape(n_pos, seeds_per_position).mean(axis=1).reshape(out_h, out_w)
    return FeatureMap(values=values, mode="onn")


def nested_loop_convolution(image: GrayImage, kern) -> np.ndarray:
    """Reference convolution with explicit loops, for cross-checking."""
    k = as_patch(kern).reshape(PATCH, PATCH)
    px = image.pixels
    out = np.zeros((image.height - PATCH + 1, image.width - PATCH + 1))
    for r in range(out.shape[0]):
        for c in range(out.shape[1]):
            acc = 0.0
            for i in range(PATCH):
                for j in range(PATCH):
                    acc += (2.0 * px[r + i, c + j] / 255.0 - 1.0) * k[i, j]
            out[r, c] = acc
    return out


def compare_maps(ideal: FeatureMap, onn: FeatureMap) -> MapComparison:
    """OLS fit, Spearman rank correlation and argmax agreement of two maps."""
    if ideal.values.shape != onn.values.shape:
        raise ValueError(f"map shapes differ: {ideal.values.shape} vs {onn.values.shape}")
    x = ideal.values.reshape(-1)
    y = onn.values.reshape(-1)
    if x.size >= 2 and np.ptp(x) > 0:
        fit = linear_fit(x, y)
    else:
        fit = FitResult(0.0, float(y.mean()), 0.0, degenerate=True)
    if np.ptp(x) == 0 or np.ptp(y) == 0 or x.size < 2:
        rho = 0.0
    else:
        rho = float(stats.spearmanr(x, y).statistic)
    top1 = int(np.argmax(x)) == int(np.argmax(y))
    return MapComparison(fit=fit, spearman=rho, top1=top1)


def build_standard_suite(bank, seed: int = 0, noise_sd: float = SUITE_NOISE_SD) -> CaseSet:
    """Eighteen fragment/kernel cases: for six kernels, the kernel itself,
    a 50/50 blend with seeded noise, and the noise alone.

    Noise is Gaussian with ``noise_sd`` clipped to [-1, 1], drawn per kernel
    slot from a seed derived from ``seed``.  Banks smaller than six are
    cycled.
    """
    bank = list(bank)
    if not bank:
        raise ValueError("kernel bank is empty")
    fragments, kernels, labels = [], [], []
    for slot in range(SUITE_KERNELS):
        kern = as_patch(bank[slot % len(bank)])
        rng = np.random.Generator(np.random.PCG64(derive_seed(seed, slot)))
        noise = np.clip(rng.normal(0.0, noise_sd, kern.size), -1.0, 1.0)
        for label, frag in (("match", kern), ("blend", 0.5 * kern + 0.5 * noise),
                            ("noise", noise)):
            fragments.append(frag)
            kernels.append(kern)
            labels.append(f"k{slot}-{label}")
    return CaseSet(fragments=np.array(fragments), kernels=np.array(kernels), labels=labels)


def embedded_kernel_image(kern, seed: int = 0, size: int = 13, noise_sd: float = 0.35,
                          position: tuple[int, int] | None = None) -> tuple[GrayImage, tuple]:
    """Noise image with an exact copy of ``kern`` pasted at ``position``.

    Returns the image and the top-left corner of the embedded patch.
    """
    if size < PATCH:
        raise ValueError("size must admit a 5x5 fragment")
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0xE17BED)))
    sig = np.clip(rng.normal(0.0, noise_sd, (size, size)), -1.0, 1.0)
    if position is None:
        position = ((size - PATCH) // 2, (size - PATCH) // 2)
    r, c = position
    sig[r:r + PATCH, c:c + PATCH] = as_patch(kern).reshape(PATCH, PATCH)
    return GrayImage(signal_to_gray(sig)), position


def kernel_mosaic(bank, seed: int = 0, noise_sd: float = 0.35, cell: int = 8,
                  cols: int = 4) -> tuple[GrayImage, list]:
    """Noise image with one exact copy of every bank kernel, laid out on a grid.

    Kernel ``j`` sits in cell ``(j // cols, j % cols)`` at a one-pixel offset,
    so neighbouring instances never share a 5x5 window.  Returns the image and
    the top-left corner of each instance.
    """
    bank = list(bank)
    if not bank:
        raise ValueError("bank is empty")
    if cell < PATCH + 2:
        raise ValueError(f"cell must be at least {PATCH + 2}")
    rows = -(-len(bank) // cols)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0xE17BED)))
    sig = np.clip(rng.normal(0.0, noise_sd, (rows * cell + 1, min(cols, len(bank)) * cell + 1)),
                  -1.0, 1.0)
    corners = []
    for j, kern in enumerate(bank):
        r, c = 1 + cell * (j // cols), 1 + cell * (j % cols)
        sig[r:r + PATCH, c:c + PATCH] = as_patch(kern).reshape(PATCH, PATCH)
        corners.append((r, c))
    return GrayImage(signal_to_gray(sig)), corners


def standard_test_image(bank, seed: int = 0) -> GrayImage:
    """Mosaic used for end-to-end runs: every bank kernel embedded in noise."""
    return kernel_mosaic(bank, seed=seed)[0]


__all__ = [
    "EnergyModel", "FeatureMap", "Kernel25", "MapComparison", "build_standard_suite",
    "compare_maps", "convolve", "embedded_kernel_image", "energy_per_inference",
    "image_windows", "kernel_mosaic", "nested_loop_convolution", "standard_test_image",
]
