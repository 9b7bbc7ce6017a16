"""End-to-end acceptance criteria; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdicts are
repeated in the terminal summary.
"""
import time

import numpy as np
import pytest
from scipy import stats

from osc_conn import io as oio
from osc_conn.calibration import (default_k_grid, locking_threshold, simulate_cases,
                                  spread_omegas)
from osc_conn.cli import main
from osc_conn.config import RunConfig
from osc_conn.dynamics import (TWO_PI, SimConfig, derive_seed, init_phases, integrate,
                               sample_dom, state_for)
from osc_conn.encoding import FreqCalib, GrayImage
from osc_conn.harness import compare_maps, convolve, nested_loop_convolution, standard_test_image

STAGES = (3, 5, 7)


def test_c1_correlation(sweeps, verdict):
    r2 = {st: sweeps[st].best.fit.r2 for st in STAGES}
    ok = max(r2.values()) > 0.89 and min(r2.values()) > 0.85
    detail = " ".join(f"{st}-stage r2={v:.3f} (K={sweeps[st].best_k:.3g})" for st, v in r2.items())
    assert verdict("C1 calibrated DOM vs dot product", ok, detail)


def test_c2_energy_delay(tmp_path, verdict):
    assert main(["--out", str(tmp_path), "report"]) == 0
    lines = (tmp_path / "energy.csv").read_text().splitlines()
    delay, energy = (float(v) for v in lines[2].split(","))
    ok = abs(energy - 55.0) <= 0.02 * 55.0 and delay == 8.0
    assert verdict("C2 energy/delay", ok, f"energy={energy:.4g} pJ delay={delay:g} ns")


def test_c3_timing(suite, k3, verdict, tmp_path):
    cfg = SimConfig()
    calib = FreqCalib.preset(3)
    worst = 0.0
    for i in range(len(suite)):
        trace = integrate(state_for(suite.fragments[i], suite.kernels[i], calib, cfg, k3,
                                    seed=i), cfg, record_every=5)
        worst = max(worst, float(np.max(np.abs(trace.v_pd[trace.times < 2.2]))))
    assert main(["--out", str(tmp_path), "--coupling-k", str(k3), "infer"]) == 0
    cli = oio.read_trace_csv(tmp_path / "trace.csv")
    worst = max(worst, float(np.max(np.abs(cli["v_pd"][cli["t_ns"] < 2.2]))))
    ok = cfg.sample_time == pytest.approx(8.2, abs=1e-12) and worst == 0.0
    assert verdict("C3 timing", ok, f"sample_time={cfg.sample_time:g} ns "
                                    f"max|v_pd| before 2.2 ns={worst:g}")


def test_c4_locking(verdict):
    start = time.perf_counter()
    ratios = {k: locking_threshold(k, 2) / k for k in (0.1, 1.0, 10.0)}
    elapsed = time.perf_counter() - start
    ok = all(abs(r - 1) <= 0.05 for r in ratios.values()) and elapsed < 30
    detail = " ".join(f"K={k:g}: ratio={r:.4f}" for k, r in ratios.items())
    assert verdict("C4 two-oscillator locking", ok, f"{detail} time={elapsed:.1f}s")


def test_c5_tradeoff(sweeps, verdict):
    parts, ok = [], True
    for st in STAGES:
        sw = sweeps[st]
        lo, hi, best = sw.entries[0].fit.r2, sw.entries[-1].fit.r2, sw.best.fit.r2
        ok &= lo <= best - 0.1 and hi <= best - 0.1
        parts.append(f"{st}-stage ends={lo:.3f}/{hi:.3f} best={best:.3f}")
    grid = default_k_grid()
    ok &= np.log10(grid[-1] / grid[0]) >= 3
    assert verdict("C5 coupling trade-off", ok, " ".join(parts))


def test_c6_spread_monotone(k3, verdict):
    calib = FreqCalib.preset(3)
    cfg = SimConfig()
    widths = np.linspace(0, 20 * calib.slope * TWO_PI, 8)
    seeds = [derive_seed(cfg.seed, s) for s in range(32)]
    phases = np.stack([init_phases(s, cfg.init_mode, 3, 25) for s in seeds])
    means = []
    for w in widths:
        omegas = spread_omegas(w, 25, TWO_PI * calib.f0 + w / 2)
        dom, _ = sample_dom(phases, np.tile(omegas, (32, 1)), k3, cfg)
        means.append(dom.mean())
    rho = stats.spearmanr(widths, means).statistic
    assert verdict("C6 DOM vs frequency spread", rho <= -0.9,
                   f"spearman={rho:.3f} mean DOM {means[0]:.3f} -> {means[-1]:.3f}")


def test_c7_numerics(suite, k3, verdict):
    calib = FreqCalib.preset(3)
    coarse = simulate_cases(suite, k3, calib, SimConfig(dt=0.001), 4)
    fine = simulate_cases(suite, k3, calib, SimConfig(dt=0.0005), 4)
    rel = float(np.max(np.abs(fine.dom - coarse.dom) / np.abs(fine.dom)))
    again = simulate_cases(suite, k3, calib, SimConfig(dt=0.001), 4)
    identical = np.array_equal(again.dom, coarse.dom) and np.array_equal(again.r_final,
                                                                          coarse.r_final)
    r_ok = True
    for i in range(len(suite)):
        for k in (0.0, k3, 100.0):
            tr = integrate(state_for(suite.fragments[i], suite.kernels[i], calib, SimConfig(),
                                     k, seed=i), SimConfig(), record_every=20)
            r_ok &= bool(np.all((tr.r >= 0) & (tr.r <= 1)))
    r_ok &= bool(np.all((coarse.r_final >= 0) & (coarse.r_final <= 1)))
    ok = rel < 1e-3 and identical and r_ok
    assert verdict("C7 numerical soundness", ok,
                   f"step-halving max rel dDOM={rel:.2e} bit-identical={identical} "
                   f"r in [0,1]={r_ok}")


def test_c8_convolution(bank, k3, verdict):
    worst = 0.0
    for seed in range(5):
        img = GrayImage(np.random.default_rng(seed).integers(0, 256, (8, 8)))
        for kern in bank:
            diff = convolve(img, kern).values - nested_loop_convolution(img, kern)
            worst = max(worst, float(np.max(np.abs(diff))))
    img = standard_test_image(bank, seed=0)
    calib = FreqCalib.preset(3)
    shots = RunConfig().seeds_per_position
    agree = sum(compare_maps(convolve(img, kern),
                             convolve(img, kern, "onn", calib, SimConfig(), k3, shots)).top1
                for kern in bank)
    ok = worst <= 1e-9 and agree >= 7
    assert verdict("C8 convolution oracle", ok,
                   f"max |ideal - loop|={worst:.1e} top-1 agreement {agree}/8 "
                   f"({shots} shots per position)")
