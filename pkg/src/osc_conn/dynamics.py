"""Coupled oscillator array dynamics: phases, averager node and gated peak detector.

The array is a mean-field Kuramoto model.  Oscillator ``i`` obeys::

    dtheta_i/dt = omega_i + (K/N) * sum_j sin(theta_j - theta_i)

and the averager node carries ``A * mean(cos(theta))``.  A full-wave
rectifying peak detector is switched on ``t_del`` ns after the trigger and
sampled ``t_int`` ns later; that sample is the degree of match (DOM).

Times are in ns, angular frequencies in rad/ns and voltages in volts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .encoding import (FreqCalib, as_patch, codes_to_frequencies, encode_differences,
                       ideal_dot)

TWO_PI = 2.0 * math.pi
N_TOTAL = 26
N_ACTIVE = 25
INIT_MODES = ("uniform_random", "ic_quantized")
VALID_STAGES = (3, 5, 7)
CAP_CODES = 16
_MASK64 = (1 << 64) - 1
_GRID_TOL = 1e-9


class NumericalError(ArithmeticError):
    """A phase became non-finite during integration."""

    def __init__(self, step: int, message: str | None = None):
        self.step = int(step)
        super().__init__(message or f"non-finite phase at step {step}")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.001
    t_end: float | None = None
    t_del: float = 2.2
    t_int: float = 6.0
    tau_rise: float = 0.5
    tau_leak: float = 20.0
    amplitude: float = 0.5
    seed: int = 0
    init_mode: str = "uniform_random"

    def __post_init__(self):
        if self.t_end is None:
            object.__setattr__(self, "t_end", self.t_del + self.t_int)
        if not (0 < self.dt <= 0.01):
            raise ConfigError(f"dt must be in (0, 0.01] ns, got {self.dt}")
        if self.t_del < 0 or self.t_int < 0:
            raise ConfigError("t_del and t_int must be non-negative")
        if self.t_end < self.t_del + self.t_int - 1e-12:
            raise ConfigError(
                f"t_end={self.t_end} must be >= t_del + t_int = {self.t_del + self.t_int}")
        if not (self.tau_rise > 0 and self.tau_leak > 0 and self.amplitude > 0):
            raise ConfigError("tau_rise, tau_leak and amplitude must be positive")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if not (0 <= int(self.seed) <= _MASK64):
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def sample_time(self) -> float:
        return self.t_del + self.t_int

    @property
    def n_steps(self) -> int:
        return _steps_to(self.t_end, self.dt)

    @property
    def delay_steps(self) -> int:
        """Index of the first step on which the detector is enabled."""
        return _steps_to(self.t_del, self.dt)

    def sample_position(self) -> tuple[int, float]:
        """Grid index just before the sample instant and the fractional remainder."""
        s = self.sample_time / self.dt
        idx = math.floor(s + _GRID_TOL)
        frac = s - idx
        if abs(frac) < _GRID_TOL:
            frac = 0.0
        return idx, frac


def _steps_to(t: float, dt: float) -> int:
    return int(math.ceil(t / dt - _GRID_TOL))


@dataclass
class ArrayState:
    phases: np.ndarray
    omegas: np.ndarray
    coupling_k: float
    t: float = 0.0
    n_total: int = N_TOTAL

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float).reshape(-1)
        self.omegas = np.asarray(self.omegas, dtype=float).reshape(-1)
        if self.phases.shape != self.omegas.shape:
            raise ConfigError("phases and omegas must have the same length")
        if self.n_active < 1 or self.n_active > self.n_total:
            raise ConfigError(f"n_active={self.n_active} must be in [1, {self.n_total}]")
        if self.coupling_k < 0:
            raise ConfigError("coupling_k must be non-negative")
        if np.any(self.omegas <= 0):
            raise ConfigError("all omegas must be positive")

    @property
    def n_active(self) -> int:
        return int(self.phases.size)


@dataclass
class SimTrace:
    times: np.ndarray
    v_avg: np.ndarray
    v_pd: np.ndarray
    r: np.ndarray
    phases: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DomResult:
    dom: float
    sample_time: float
    r_final: float
    ideal_dot: float
    seed: int
    coupling_k: float = 0.0


# --------------------------------------------------------------------------- seeds

def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed from a global seed and an item index (order independent)."""
    return _splitmix64((int(seed) & _MASK64) ^ _splitmix64(int(index) & _MASK64))


def init_phases(seed: int, mode: str = "uniform_random", stages: int = 3,
                n_active: int = N_ACTIVE) -> np.ndarray:
    """Initial phases in [0, 2*pi) from a PCG64 stream seeded with ``seed``.

    ``ic_quantized`` draws each phase from the ``2*stages`` states a ring of
    ``stages`` inverters can be forced into, ``m*pi/stages``.
    """
    if stages not in VALID_STAGES:
        raise ConfigError(f"stages must be one of {VALID_STAGES}, got {stages}")
    if n_active < 1:
        raise ConfigError("n_active must be >= 1")
    rng = np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
    if mode == "uniform_random":
        return rng.uniform(0.0, TWO_PI, n_active)
    if mode == "ic_quantized":
        m = rng.integers(0, 2 * stages, n_active)
        return m * (math.pi / stages)
    raise ConfigError(f"unknown init mode {mode!r}")


# ------------------------------------------------------------------ instantaneous

def kuramoto_rhs(state: ArrayState) -> np.ndarray:
    th = state.phases
    cs = np.cos(th)
    sn = np.sin(th)
    zc = cs.mean()
    zs = sn.mean()
    return state.omegas + state.coupling_k * (zs * cs - zc * sn)


def averager(phases, n_active: int | None = None, amplitude: float = 0.5) -> float:
    phases = np.asarray(phases, dtype=float)
    n = phases.size if n_active is None else n_active
    if n < 1:
        raise ConfigError("n_active must be >= 1")
    return float(amplitude * np.cos(phases).sum() / n)


def order_parameter(phases) -> float:
    phases = np.asarray(phases, dtype=float)
    if phases.size == 0:
        raise ConfigError("order parameter needs at least one phase")
    r = math.sqrt(np.cos(phases).mean() ** 2 + np.sin(phases).mean() ** 2)
    return min(r, 1.0)


def order_parameter_rows(phases: np.ndarray) -> np.ndarray:
    phases = np.atleast_2d(phases)
    r = np.sqrt(np.cos(phases).mean(axis=1) ** 2 + np.sin(phases).mean(axis=1) ** 2)
    return np.minimum(r, 1.0)


def peak_detect_rate(v_avg_t: float, v_pd: float, config: SimConfig) -> float:
    """Detector slope: charges toward |v_avg| through tau_rise, leaks through tau_leak."""
    drive = max(0.0, abs(v_avg_t) - v_pd)
    return drive / config.tau_rise - v_pd / config.tau_leak


def peak_detect(v_avg_t: float, v_pd: float, t: float, config: SimConfig) -> float:
    """Advance the detector by one step ``config.dt`` from time ``t``.

    The averager voltage is held at ``v_avg_t`` across the step.  Before the
    enable delay the detector output is forced to zero.
    """
    if t < 0:
        raise ConfigError("t must be non-negative")
    dt = config.dt
    step = t / dt
    if step + 1.0 <= config.delay_steps + _GRID_TOL:
        return 0.0
    d1 = peak_detect_rate(v_avg_t, v_pd, config)
    d2 = peak_detect_rate(v_avg_t, v_pd + 0.5 * dt * d1, config)
    d3 = peak_detect_rate(v_avg_t, v_pd + 0.5 * dt * d2, config)
    d4 = peak_detect_rate(v_avg_t, v_pd + dt * d3, config)
    return max(0.0, v_pd + dt / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4))


def coupling_from_cap_code(cap_code: int, k_unit: float) -> float:
    """Coupling strength of a programmable capacitor bank setting."""
    if not 0 <= cap_code < CAP_CODES:
        raise ConfigError(f"cap_code must be in [0, {CAP_CODES - 1}]")
    return k_unit * cap_code


# ----------------------------------------------------------------------- integration

def _advance(theta, omega, coupling, vpd, config: SimConfig, step0: int, nsteps: int,
             backend: str | None, threads: int | None, dt: float | None = None):
    advance = _backend.get_advance(backend)
    if threads is None:
        threads = _backend.thread_count()
    if dt is None:
        dt = config.dt
    bad = advance(theta, omega, coupling, vpd, dt, int(step0), int(nsteps),
                  int(config.delay_steps), config.amplitude, config.tau_rise,
                  config.tau_leak, int(threads))
    hit = bad[bad >= 0]
    if hit.size:
        raise NumericalError(int(hit.min()))


def integrate(state: ArrayState, config: SimConfig, record_every: int = 1,
              backend: str | None = None) -> SimTrace:
    """RK4-integrate ``state`` from t=0 to ``config.t_end`` and record a trace.

    Samples are taken every ``record_every`` steps plus the final step.  The
    passed state is advanced in place.
    """
    if record_every < 1:
        raise ConfigError("record_every must be >= 1")
    theta = np.ascontiguousarray(np.mod(state.phases, TWO_PI)[None, :])
    omega = np.ascontiguousarray(state.omegas[None, :])
    coupling = np.array([float(state.coupling_k)])
    vpd = np.zeros(1)
    n_total = config.n_steps
    marks = list(range(0, n_total + 1, record_every))
    if marks[-1] != n_total:
        marks.append(n_total)

    phases_rec = np.empty((len(marks), state.n_active))
    vpd_rec = np.empty(len(marks))
    phases_rec[0] = theta[0]
    vpd_rec[0] = 0.0
    for i in range(1, len(marks)):
        _advance(theta, omega, coupling, vpd, config, marks[i - 1], marks[i] - marks[i - 1],
                 backend, 1)
        phases_rec[i] = theta[0]
        vpd_rec[i] = vpd[0]

    state.phases = theta[0].copy()
    state.t = n_total * config.dt
    n = state.n_active
    v_avg = config.amplitude * np.cos(phases_rec).sum(axis=1) / n
    return SimTrace(times=np.asarray(marks, dtype=float) * config.dt, v_avg=v_avg,
                    v_pd=vpd_rec, r=order_parameter_rows(phases_rec), phases=phases_rec)


def sample_dom(phases0: np.ndarray, omegas: np.ndarray, coupling, config: SimConfig,
               backend: str | None = None, threads: int | None = None):
    """DOM and order parameter at the sample instant for a batch of runs.

    ``phases0`` and ``omegas`` have shape (runs, n_active); ``coupling`` is a
    scalar or one value per run.  Rows are independent, so results do not
    depend on batch composition or thread count.
    """
    theta = np.ascontiguousarray(np.mod(np.atleast_2d(phases0), TWO_PI), dtype=float)
    omega = np.ascontiguousarray(np.atleast_2d(omegas), dtype=float)
    if theta.shape != omega.shape:
        raise ConfigError("phases0 and omegas must share a shape")
    if np.any(omega <= 0):
        raise ConfigError("all omegas must be positive")
    b = theta.shape[0]
    coupling = np.ascontiguousarray(np.broadcast_to(np.asarray(coupling, dtype=float), (b,)))
    if np.any(coupling < 0):
        raise ConfigError("coupling must be non-negative")
    vpd = np.zeros(b)
    idx, frac = config.sample_position()
    _advance(theta, omega, coupling, vpd, config, 0, idx, backend, threads)
    r = order_parameter_rows(theta)
    if frac == 0.0:
        return vpd.copy(), r
    v0, r0 = vpd.copy(), r
    _advance(theta, omega, coupling, vpd, config, idx, 1, backend, threads)
    r1 = order_parameter_rows(theta)
    return v0 + frac * (vpd - v0), r0 + frac * (r1 - r0)


def omegas_for(f, kern, calib: FreqCalib) -> np.ndarray:
    """Angular frequencies (rad/ns) of the 25 active oscillators for a fragment/kernel pair."""
    return TWO_PI * codes_to_frequencies(encode_differences(f, kern), calib)


def run_inference(f, kern, calib: FreqCalib, config: SimConfig, coupling_k: float,
                  seed: int | None = None, backend: str | None = None) -> DomResult:
    """Single inference: encode, simulate and sample the detector."""
    if seed is None:
        seed = config.seed
    omegas = omegas_for(f, kern, calib)
    phases = init_phases(seed, config.init_mode, calib.stages, omegas.size)
    dom, r = sample_dom(phases[None, :], omegas[None, :], coupling_k, config, backend=backend,
                        threads=1)
    return DomResult(dom=float(dom[0]), sample_time=config.sample_time, r_final=float(r[0]),
                     ideal_dot=ideal_dot(as_patch(f), as_patch(kern)), seed=int(seed),
                     coupling_k=float(coupling_k))


def state_for(f, kern, calib: FreqCalib, config: SimConfig, coupling_k: float,
              seed: int | None = None) -> ArrayState:
    if seed is None:
        seed = config.seed
    omegas = omegas_for(f, kern, calib)
    phases = init_phases(seed, config.init_mode, calib.stages, omegas.size)
    return ArrayState(phases=phases, omegas=omegas, coupling_k=coupling_k)
