"""Flat ``key = value`` run configuration with a default for every key."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .calibration import default_k_grid
from .dynamics import ConfigError, SimConfig
from .encoding import FREQ_PRESETS, FreqCalib, make_filter_bank
from .harness import SUITE_NOISE_SD, EnergyModel

# (key, default, description); order is the order of the documented config file
_DOCS = [
    ("stages", 3, "ring oscillator variant: 3, 5 or 7 inverter stages"),
    ("f0", None, "frequency at IDAC code 0 in GHz; empty = stage preset"),
    ("slope", None, "frequency step per IDAC code in GHz; empty = stage preset"),
    ("dt", 0.001, "integration step in ns"),
    ("t_del", 2.2, "peak detector enable delay after trigger, ns"),
    ("t_int", 6.0, "detector integration time before the DOM sample, ns"),
    ("t_end", None, "simulated time in ns; empty = t_del + t_int"),
    ("tau_rise", 0.5, "detector charge time constant, ns"),
    ("tau_leak", 20.0, "detector leak time constant, ns"),
    ("amplitude", 0.5, "oscillator swing at the averager, V"),
    ("init_mode", "uniform_random", "initial phases: uniform_random or ic_quantized"),
    ("seed", 0, "global seed (unsigned 64-bit)"),
    ("orientations", (0.0, 45.0, 90.0, 135.0), "filter bank orientations, degrees"),
    ("ks", (math.pi / 4, math.pi / 2), "filter bank inverse wavelengths, rad/pixel"),
    ("sigma", 1.5, "Gabor envelope width, pixels"),
    ("kernels", None, "kernel bank CSV to load instead of generating one"),
    ("suite_noise_sd", SUITE_NOISE_SD, "std of the seeded noise in the 18-case suite"),
    ("seeds_per_case", 16, "shots averaged per calibration case"),
    ("k_min", 0.01, "smallest coupling of the sweep grid, rad/ns"),
    ("k_max", 100.0, "largest coupling of the sweep grid, rad/ns"),
    ("k_points", 17, "number of log-spaced sweep grid points"),
    ("coupling_k", None, "coupling for infer/convolve; empty = read calibration file"),
    ("calibration", None, "calibration file; empty = <out>/calibration.txt"),
    ("seeds_per_position", 8, "shots averaged per output position in onn convolution"),
    ("n_osc", 26, "oscillators drawing power"),
    ("p_osc", 0.26e-3, "power per oscillator, W"),
    ("p_pd", 100e-6, "peak detector power, W"),
    ("t_inf", 8e-9, "inference time, s"),
]
DEFAULTS = {key: default for key, default, _ in _DOCS}
_INT_KEYS = {"stages", "seed", "seeds_per_case", "k_points", "seeds_per_position", "n_osc"}
_LIST_KEYS = {"orientations", "ks"}
_STR_KEYS = {"init_mode", "kernels", "calibration"}


@dataclass
class RunConfig:
    stages: int = 3
    f0: float | None = None
    slope: float | None = None
    dt: float = 0.001
    t_del: float = 2.2
    t_int: float = 6.0
    t_end: float | None = None
    tau_rise: float = 0.5
    tau_leak: float = 20.0
    amplitude: float = 0.5
    init_mode: str = "uniform_random"
    seed: int = 0
    orientations: tuple = DEFAULTS["orientations"]
    ks: tuple = DEFAULTS["ks"]
    sigma: float = 1.5
    kernels: str | None = None
    suite_noise_sd: float = SUITE_NOISE_SD
    seeds_per_case: int = 16
    k_min: float = 0.01
    k_max: float = 100.0
    k_points: int = 17
    coupling_k: float | None = None
    calibration: str | None = None
    seeds_per_position: int = 8
    n_osc: int = 26
    p_osc: float = 0.26e-3
    p_pd: float = 100e-6
    t_inf: float = 8e-9

    def validate(self) -> "RunConfig":
        """Build every component once so their invariants are checked."""
        self.calib()
        self.sim_config()
        self.energy_model()
        self.k_grid()
        if self.kernels is None:
            make_filter_bank(self.orientations, self.ks, self.sigma)
        if self.seeds_per_case < 1 or self.seeds_per_position < 1:
            raise ConfigError("seed counts must be >= 1")
        if self.suite_noise_sd <= 0:
            raise ConfigError("suite_noise_sd must be positive")
        if self.coupling_k is not None and self.coupling_k < 0:
            raise ConfigError("coupling_k must be non-negative")
        return self

    def calib(self) -> FreqCalib:
        if self.stages not in FREQ_PRESETS:
            raise ConfigError(f"stages must be one of {sorted(FREQ_PRESETS)}")
        return FreqCalib(stages=self.stages, f0=self.f0, slope=self.slope)

    def sim_config(self) -> SimConfig:
        return SimConfig(dt=self.dt, t_end=self.t_end, t_del=self.t_del, t_int=self.t_int,
                         tau_rise=self.tau_rise, tau_leak=self.tau_leak,
                         amplitude=self.amplitude, seed=self.seed, init_mode=self.init_mode)

    def energy_model(self) -> EnergyModel:
        return EnergyModel(n_osc=self.n_osc, p_osc=self.p_osc, p_pd=self.p_pd, t_inf=self.t_inf)

    def k_grid(self):
        return default_k_grid(self.k_min, self.k_max, self.k_points)


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if raw == "" or raw.lower() == "none":
        if DEFAULTS[key] is not None and key not in ("kernels", "calibration"):
            raise ConfigError(f"{key} may not be empty")
        return None
    try:
        if key in _STR_KEYS:
            return raw
        if key in _LIST_KEYS:
            items = [float(t) for t in raw.split(",") if t.strip()]
            if not items:
                raise ConfigError(f"{key} needs at least one value")
            return tuple(items)
        if key in _INT_KEYS:
            return int(raw, 0)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return RunConfig(**values).validate()


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path))


def _fmt_default(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    return str(value)


def default_config_text() -> str:
    """Documented config file listing every key at its default."""
    lines = ["# osc-conn run configuration; empty values fall back to the noted default"]
    for key, default, doc in _DOCS:
        lines.append(f"# {doc}")
        lines.append(f"{key} = {_fmt_default(default)}")
    return "\n".join(lines) + "\n"

