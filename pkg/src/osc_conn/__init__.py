"""Coupled ring-oscillator array simulator for analog convolution inference.

The hot loop (RK4 over batches of mean-field coupled oscillators) runs in a
compiled Cython kernel when it is built, otherwise in a numpy fallback.
``osc_conn.BACKEND`` names the one in use.
"""
from ._backend import BACKEND
from .calibration import (CaseSet, FitResult, SweepResult, evaluate_correlation, linear_fit,
                          locking_threshold, sweep_coupling)
from .dynamics import (ArrayState, DomResult, SimConfig, SimTrace, averager, init_phases,
                       integrate, kuramoto_rhs, order_parameter, peak_detect, run_inference)
from .encoding import (FreqCalib, GrayImage, Kernel25, codes_to_frequencies, encode_differences,
                       extract_fragment, gabor_kernel, gray_to_signal, ideal_dot,
                       make_filter_bank)
from .harness import (EnergyModel, FeatureMap, build_standard_suite, compare_maps, convolve,
                      energy_per_inference)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ArrayState", "CaseSet", "DomResult", "EnergyModel", "FeatureMap", "FitResult",
    "FreqCalib", "GrayImage", "Kernel25", "SimConfig", "SimTrace", "SweepResult", "averager",
    "build_standard_suite", "codes_to_frequencies", "compare_maps", "convolve",
    "encode_differences", "energy_per_inference", "evaluate_correlation", "extract_fragment",
    "gabor_kernel", "gray_to_signal", "ideal_dot", "init_phases", "integrate", "kuramoto_rhs",
    "linear_fit", "locking_threshold", "make_filter_bank", "order_parameter", "peak_detect",
    "run_inference", "sweep_coupling",
]
