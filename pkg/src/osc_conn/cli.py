"""Command-line entry point: ``osc-conn {gen-kernels,calibrate,infer,convolve,report}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as oio
from .calibration import simulate_cases, sweep_coupling
from .config import RunConfig, default_config_text, load_config
from .dynamics import integrate, run_inference, state_for
from .encoding import bank_summary, extract_fragment, make_filter_bank
from .harness import (build_standard_suite, compare_maps, convolve, energy_per_inference,
                      standard_test_image)

logger = logging.getLogger("osc_conn")


class CliError(Exception):
    pass


def _bank(cfg: RunConfig):
    if cfg.kernels:
        return oio.read_kernel_csv(cfg.kernels)
    return make_filter_bank(cfg.orientations, cfg.ks, cfg.sigma)


def _calibration_path(cfg: RunConfig, out: Path) -> Path:
    return Path(cfg.calibration) if cfg.calibration else out / "calibration.txt"


def _coupling(cfg: RunConfig, out: Path) -> float:
    if cfg.coupling_k is not None:
        return cfg.coupling_k
    path = _calibration_path(cfg, out)
    try:
        return oio.read_calibration(path)
    except FileNotFoundError:
        raise CliError(f"no calibration at {path}; run 'osc-conn calibrate' first "
                       "or set coupling_k") from None


def cmd_gen_kernels(cfg: RunConfig, out: Path, args) -> int:
    bank = _bank(cfg)
    path = oio.write_kernel_csv(out / "kernels.csv", bank, cfg.seed)
    print(bank_summary(bank))
    print(f"wrote {len(bank)} kernels to {path}")
    return 0


def cmd_calibrate(cfg: RunConfig, out: Path, args) -> int:
    bank = _bank(cfg)
    suite = build_standard_suite(bank, seed=cfg.seed, noise_sd=cfg.suite_noise_sd)
    calib = cfg.calib()
    sim = cfg.sim_config()

    def progress(entry):
        logger.info("K=%.6g r2=%.4f mean_r=%.4f", entry.coupling_k, entry.fit.r2,
                    entry.mean_r_final)

    sweep = sweep_coupling(suite, cfg.k_grid(), calib, sim, cfg.seeds_per_case,
                           progress=progress)
    best = sweep.best
    oio.write_sweep_csv(out / "sweep.csv", sweep, cfg.seed)
    oio.write_calibration(_calibration_path(cfg, out), sweep.best_k, seed=cfg.seed,
                          suite_hash=suite.digest(), stages=calib.stages, r2=best.fit.r2)
    doms = simulate_cases(suite, sweep.best_k, calib, sim, cfg.seeds_per_case)
    rows = [(calib.stages, suite.ideal_dots[i], doms.dom[i, j], doms.seeds[i, j])
            for i in range(len(suite)) for j in range(cfg.seeds_per_case)]
    oio.write_scatter_csv(out / "scatter.csv", rows, cfg.seed)
    print(f"best_k={best.coupling_k:.12g} r2={best.fit.r2:.6f} slope={best.fit.slope:.6g} "
          f"intercept={best.fit.intercept:.6g} stages={calib.stages}")
    return 0


def cmd_infer(cfg: RunConfig, out: Path, args) -> int:
    bank = _bank(cfg)
    if not 0 <= args.kernel_id < len(bank):
        raise CliError(f"kernel id {args.kernel_id} outside bank of {len(bank)}")
    kern = bank[args.kernel_id]
    if args.image is not None:
        image = oio.read_image(args.image)
        fragment = extract_fragment(image, args.row, args.col)
    elif args.fragment_kernel is not None:
        if not 0 <= args.fragment_kernel < len(bank):
            raise CliError(f"fragment kernel id {args.fragment_kernel} outside bank")
        fragment = bank[args.fragment_kernel].values
    else:
        fragment = kern.values
    k = _coupling(cfg, out)
    calib = cfg.calib()
    sim = cfg.sim_config()
    result = run_inference(fragment, kern, calib, sim, k)
    trace = integrate(state_for(fragment, kern, calib, sim, k), sim,
                      record_every=args.record_every)
    oio.write_trace_csv(out / "trace.csv", trace, cfg.seed)
    print(f"dom={result.dom:.9g} sample_time={result.sample_time:.9g} "
          f"r_final={result.r_final:.9g} ideal_dot={result.ideal_dot:.9g}")
    return 0


def cmd_convolve(cfg: RunConfig, out: Path, args) -> int:
    bank = _bank(cfg)
    if args.image is not None:
        image = oio.read_image(args.image)
    else:
        image = standard_test_image(bank, seed=cfg.seed)
        oio.write_pgm(out / "standard_image.pgm", image)
    k = _coupling(cfg, out)
    calib = cfg.calib()
    sim = cfg.sim_config()
    comparisons = []
    scatter = []
    for i, kern in enumerate(bank):
        ideal = convolve(image, kern, "ideal")
        onn = convolve(image, kern, "onn", calib, sim, k, cfg.seeds_per_position)
        oio.write_feature_map_csv(out / f"ideal_{i}.csv", ideal, cfg.seed)
        oio.write_feature_map_csv(out / f"onn_{i}.csv", onn, cfg.seed)
        cmp = compare_maps(ideal, onn)
        comparisons.append((i, cmp))
        scatter.extend((calib.stages, x, y, cfg.seed)
                       for x, y in zip(ideal.values.ravel(), onn.values.ravel()))
        print(f"kernel {i}: r2={cmp.fit.r2:.4f} spearman={cmp.spearman:.4f} "
              f"top1={'yes' if cmp.top1 else 'no'}")
    oio.write_comparison_csv(out / "comparison.csv", comparisons, cfg.seed)
    oio.write_scatter_csv(out / "scatter.csv", scatter, cfg.seed)
    return 0


def cmd_report(cfg: RunConfig, out: Path, args) -> int:
    model = cfg.energy_model()
    energy = energy_per_inference(model)
    oio.write_report(out, seed=cfg.seed, energy=(model.delay_ns, energy))
    print(f"delay_ns={model.delay_ns:.9g} energy_pJ={energy:.9g}")
    return 0


COMMANDS = {
    "gen-kernels": cmd_gen_kernels,
    "calibrate": cmd_calibrate,
    "infer": cmd_infer,
    "convolve": cmd_convolve,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="osc-conn",
                                description="Coupled oscillator array convolution simulator")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--stages", type=int, choices=(3, 5, 7), help="oscillator stage preset")
    p.add_argument("--coupling-k", type=float, help="coupling strength, bypasses calibration")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--print-config", action="store_true",
                   help="print the documented default configuration and exit")
    sub = p.add_subparsers(dest="command")

    sub.add_parser("gen-kernels", help="write the Gabor filter bank CSV")
    sub.add_parser("calibrate", help="sweep the coupling on the 18-case suite")

    inf = sub.add_parser("infer", help="simulate one fragment/kernel inference")
    inf.add_argument("--kernel-id", type=int, default=0)
    src = inf.add_mutually_exclusive_group()
    src.add_argument("--image", help="image to cut the fragment from")
    src.add_argument("--fragment-kernel", type=int,
                     help="use this bank kernel as the fragment")
    inf.add_argument("--row", type=int, default=0)
    inf.add_argument("--col", type=int, default=0)
    inf.add_argument("--record-every", type=int, default=10)

    conv = sub.add_parser("convolve", help="ideal and oscillator feature maps for an image")
    conv.add_argument("image", nargs="?", help="P2/P5 graymap or integer CSV; "
                                               "default: generated standard test image")

    sub.add_parser("report", help="energy and delay per inference")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    if args.print_config:
        sys.stdout.write(default_config_text())
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.stages is not None:
        overrides["stages"] = args.stages
    if args.coupling_k is not None:
        overrides["coupling_k"] = args.coupling_k
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides).validate()
    out = oio.ensure_writable(args.out)
    return COMMANDS[args.command](cfg, out, args)


def main(argv=None) -> int:
    try:
        return run(argv)
    except (CliError, ValueError, OSError, ArithmeticError, RuntimeError) as exc:
        msg = " ".join(str(exc).split())
        print(f"osc-conn: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
