"""Coupling calibration: DOM/dot-product fits, coupling sweeps and locking ranges."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .dynamics import (TWO_PI, ConfigError, SimConfig, _advance, derive_seed, init_phases,
                       omegas_for, sample_dom)
from .encoding import FreqCalib, as_patch


class DegenerateFitError(ValueError):
    pass


class BracketError(RuntimeError):
    def __init__(self, lo: float, hi: float, message: str = ""):
        self.lo = lo
        self.hi = hi
        super().__init__(message or f"no locking transition in bracket [{lo:.6g}, {hi:.6g}]")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r2: float
    degenerate: bool = False


@dataclass
class CaseSet:
    """Fragment/kernel pairs with their ideal dot products."""

    fragments: np.ndarray
    kernels: np.ndarray
    ideal_dots: np.ndarray = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.fragments = np.atleast_2d(np.asarray(self.fragments, dtype=float))
        self.kernels = np.atleast_2d(np.asarray([as_patch(k) for k in self.kernels]))
        if self.fragments.shape != self.kernels.shape or self.fragments.shape[1] != 25:
            raise ConfigError("fragments and kernels must both be (cases, 25)")
        if len(self) < 2:
            raise ConfigError("a case set needs at least 2 cases")
        if self.ideal_dots is None:
            self.ideal_dots = np.einsum("ij,ij->i", self.fragments, self.kernels)
        self.ideal_dots = np.asarray(self.ideal_dots, dtype=float)
        if np.ptp(self.ideal_dots) == 0:
            raise ConfigError("case ideal dot products are all identical")

    def __len__(self) -> int:
        return self.fragments.shape[0]

    def digest(self) -> str:
        import hashlib
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.fragments).tobytes())
        h.update(np.ascontiguousarray(self.kernels).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SweepEntry:
    coupling_k: float
    fit: FitResult
    mean_r_final: float


@dataclass
class SweepResult:
    entries: list
    best_k: float

    @property
    def best(self) -> SweepEntry:
        return next(e for e in self.entries if e.coupling_k == self.best_k)


@dataclass
class CaseDoms:
    """Per-shot DOM and order parameter of a case set; shape (cases, seeds)."""

    dom: np.ndarray
    r_final: np.ndarray
    seeds: np.ndarray

    @property
    def mean_dom(self) -> np.ndarray:
        return self.dom.mean(axis=1)


def linear_fit(xs, ys) -> FitResult:
    """Ordinary least squares of ys on xs with the coefficient of determination."""
    x = np.asarray(xs, dtype=float).reshape(-1)
    y = np.asarray(ys, dtype=float).reshape(-1)
    if x.size != y.size:
        raise ValueError("xs and ys must have the same length")
    if x.size < 2:
        raise DegenerateFitError("need at least 2 points")
    xm = x.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0 or np.ptp(x) == 0:
        raise DegenerateFitError("xs are all equal")
    ym = y.mean()
    dy = y - ym
    syy = float(dy @ dy)
    if syy == 0.0 or np.ptp(y) == 0:
        return FitResult(slope=0.0, intercept=float(ym), r2=0.0, degenerate=True)
    sxy = float(dx @ dy)
    slope = sxy / sxx
    intercept = ym - slope * xm
    # r2 = sxy^2/(sxx*syy) equals 1 - SS_res/SS_tot for OLS and is immune to cancellation
    r2 = sxy * sxy / (sxx * syy)
    return FitResult(slope=float(slope), intercept=float(intercept),
                     r2=float(min(max(r2, 0.0), 1.0)))


def shot_seed(seed: int, case_index: int, shot: int) -> int:
    return derive_seed(derive_seed(seed, case_index), shot)


def simulate_cases(cases: CaseSet, coupling_k: float, calib: FreqCalib, config: SimConfig,
                   seeds_per_case: int, backend: str | None = None) -> CaseDoms:
    """Run every case ``seeds_per_case`` times with derived per-shot seeds."""
    if seeds_per_case < 1:
        raise ConfigError("seeds_per_case must be >= 1")
    n_cases = len(cases)
    omegas = np.empty((n_cases * seeds_per_case, 25))
    phases = np.empty_like(omegas)
    seeds = np.empty((n_cases, seeds_per_case), dtype=np.uint64)
    row = 0
    for i in range(n_cases):
        om = omegas_for(cases.fragments[i], cases.kernels[i], calib)
        for j in range(seeds_per_case):
            s = shot_seed(config.seed, i, j)
            seeds[i, j] = s
            omegas[row] = om
            phases[row] = init_phases(s, config.init_mode, calib.stages, 25)
            row += 1
    dom, r = sample_dom(phases, omegas, coupling_k, config, backend=backend)
    return CaseDoms(dom=dom.reshape(n_cases, seeds_per_case),
                    r_final=r.reshape(n_cases, seeds_per_case), seeds=seeds)


def evaluate_correlation(cases: CaseSet, coupling_k: float, calib: FreqCalib,
                         config: SimConfig, seeds_per_case: int = 16,
                         backend: str | None = None) -> FitResult:
    doms = simulate_cases(cases, coupling_k, calib, config, seeds_per_case, backend)
    return linear_fit(cases.ideal_dots, doms.mean_dom)


def sweep_coupling(cases: CaseSet, k_grid, calib: FreqCalib, config: SimConfig,
                   seeds_per_case: int = 16, backend: str | None = None,
                   progress=None) -> SweepResult:
    """Evaluate the fit at every coupling of ``k_grid`` and pick the best r2.

    Ties go to the smallest coupling.
    """
    grid = [float(k) for k in k_grid]
    if not grid:
        raise ConfigError("coupling grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("coupling grid must be sorted ascending")
    entries = []
    cache = {}
    for k in grid:
        if k not in cache:
            doms = simulate_cases(cases, k, calib, config, seeds_per_case, backend)
            cache[k] = SweepEntry(k, linear_fit(cases.ideal_dots, doms.mean_dom),
                                  float(doms.r_final.mean()))
            if progress is not None:
                progress(cache[k])
        entries.append(cache[k])
    best = entries[0]
    for e in entries[1:]:
        if e.fit.r2 > best.fit.r2:
            best = e
    return SweepResult(entries=entries, best_k=best.coupling_k)


def default_k_grid(k_min: float = 0.01, k_max: float = 100.0, points: int = 17) -> np.ndarray:
    """Log-spaced coupling grid; a single point yields just ``k_min``."""
    if points == 1:
        if k_min < 0:
            raise ConfigError("coupling must be non-negative")
        return np.array([float(k_min)])
    if not (0 < k_min < k_max) or points < 2:
        raise ConfigError("coupling grid needs 0 < k_min < k_max and >= 1 point")
    return np.geomspace(k_min, k_max, points)


# ------------------------------------------------------------------------- locking

def spread_omegas(width: float, n_active: int, center: float) -> np.ndarray:
    """``n_active`` angular frequencies evenly spaced over [center - w/2, center + w/2]."""
    if n_active == 1:
        return np.array([center])
    return center + width * (np.arange(n_active) / (n_active - 1) - 0.5)


def frequency_locked(coupling_k: float, width: float, n_active: int, seeds,
                     base_seed: int = 0, backend: str | None = None,
                     rel_tol: float = 0.01, run_time: float | None = None) -> bool:
    """True when every run ends with all oscillators at one common frequency.

    Runs last ``200/K`` ns; the effective frequencies are the unwrapped phase
    advance over the second half divided by its duration, and the array counts
    as locked when their range is below ``rel_tol * width``.
    """
    if coupling_k <= 0:
        raise ConfigError("coupling_k must be positive")
    if width <= 0:
        return True
    if run_time is None:
        run_time = 200.0 / coupling_k
    # everything scales with 1/K, so the step does too; the beat rate never exceeds 3*max(K, w)
    dt = 0.01 / max(coupling_k, width)
    steps = int(math.ceil(run_time / dt))
    half = steps // 2
    chunk = 10
    # centre keeps every omega positive; dynamics only see differences
    omegas = spread_omegas(width, n_active, width)
    cfg = SimConfig(t_del=0.0, t_int=0.0)
    seeds = list(seeds)
    theta = np.ascontiguousarray(
        [init_phases(derive_seed(base_seed, s), "uniform_random", 3, n_active) for s in seeds])
    omega = np.ascontiguousarray(np.broadcast_to(omegas, theta.shape))
    coupling = np.full(len(seeds), float(coupling_k))
    vpd = np.zeros(len(seeds))
    _advance(theta, omega, coupling, vpd, cfg, 0, half, backend, None, dt=dt)
    advance_sum = np.zeros_like(theta)
    prev = theta.copy()
    done = half
    while done < steps:
        n = min(chunk, steps - done)
        _advance(theta, omega, coupling, vpd, cfg, done, n, backend, None, dt=dt)
        inc = np.mod(theta - prev + math.pi, TWO_PI) - math.pi
        advance_sum += inc
        prev = theta.copy()
        done += n
    # per-chunk increments stay well below pi, so the unwrapping is exact
    eff = advance_sum / ((steps - half) * dt)
    spread = eff.max(axis=1) - eff.min(axis=1)
    return bool(np.all(spread < rel_tol * width))


def locking_threshold(coupling_k: float, n_active: int = 2, config: SimConfig | None = None,
                      seeds: int = 3, iterations: int = 24, backend: str | None = None,
                      bracket: tuple[float, float] | None = None) -> float:
    """Critical uniform frequency spread (rad/ns) below which the array fully locks.

    Bisects on the spread width; ``config`` contributes only its seed.
    """
    if coupling_k <= 0:
        raise ConfigError("coupling_k must be positive")
    if n_active < 2:
        raise ConfigError("locking needs at least 2 oscillators")
    if iterations < 20:
        raise ConfigError("bisection needs at least 20 iterations")
    base_seed = config.seed if config is not None else 0
    shots = range(seeds)

    def locked(w):
        return frequency_locked(coupling_k, w, n_active, shots, base_seed, backend)

    lo, hi = bracket if bracket is not None else (0.25 * coupling_k, 4.0 * coupling_k)
    if not locked(lo) or locked(hi):
        raise BracketError(lo, hi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if locked(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
