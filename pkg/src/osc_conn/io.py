"""File formats: graymap and CSV images, kernel banks, traces, sweeps, maps and reports.

Every file written here starts with a ``# osc-conn seed=<seed>`` line.
Readers skip ``#`` comment lines.
"""
from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import numpy as np

from .encoding import GrayImage, Kernel25

NUM_FMT = "{:.12g}"
EXACT_FMT = "{:.17g}"


class FormatError(ValueError):
    pass


def _fmt(x, exact: bool = False) -> str:
    return (EXACT_FMT if exact else NUM_FMT).format(float(x))


def header_line(seed: int, **extra) -> str:
    parts = [f"seed={int(seed)}"] + [f"{k}={v}" for k, v in extra.items()]
    return "# osc-conn " + " ".join(parts)


def _write(path, header: str, columns: list[str] | None, rows) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(header + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if columns:
        w.writerow(columns)
    for row in rows:
        w.writerow(row)
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


# ------------------------------------------------------------------------ images

def _pgm_tokens(data: bytes, count: int, start: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    i = start
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i >= len(data):
            raise FormatError("truncated graymap header")
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i


def read_pgm(path) -> GrayImage:
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a P2/P5 graymap")
    (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise FormatError(f"{path}: malformed graymap header") from None
    if maxval != 255:
        raise FormatError(f"{path}: maxval must be 255, got {maxval}")
    n = width * height
    if magic == b"P5":
        raster = data[pos + 1:pos + 1 + n]
        if len(raster) != n:
            raise FormatError(f"{path}: expected {n} pixels, got {len(raster)}")
        px = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    else:
        values, _ = _pgm_tokens(data, n, pos)
        px = np.array([int(v) for v in values]).reshape(height, width)
    return GrayImage(px)


def write_pgm(path, image: GrayImage, binary: bool = True) -> Path:
    path = Path(path)
    head = f"P{5 if binary else 2}\n{image.width} {image.height}\n255\n".encode("ascii")
    if binary:
        body = image.pixels.astype(np.uint8).tobytes()
    else:
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in image.pixels).encode() + b"\n"
    path.write_bytes(head + body)
    return path


def read_csv_image(path) -> GrayImage:
    rows = []
    for ln in _data_lines(Path(path).read_text()):
        try:
            rows.append([int(tok) for tok in ln.split(",")])
        except ValueError:
            raise FormatError(f"{path}: non-integer pixel in {ln!r}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError(f"{path}: rows must be non-empty and equally long")
    return GrayImage(np.array(rows))


def read_image(path) -> GrayImage:
    """Load a P2/P5 graymap or an integer CSV image (detected from content)."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    head = path.read_bytes()[:2]
    if head in (b"P2", b"P5"):
        return read_pgm(path)
    return read_csv_image(path)


# ----------------------------------------------------------------------- kernels

KERNEL_COLUMNS = ["theta_deg", "k", "sigma"] + [f"v{i}" for i in range(25)]


def write_kernel_csv(path, bank, seed: int = 0) -> Path:
    rows = [[_fmt(kn.theta_deg, True), _fmt(kn.k, True), _fmt(kn.sigma, True)]
            + [_fmt(v, True) for v in kn.values] for kn in bank]
    return _write(path, header_line(seed), KERNEL_COLUMNS, rows)


def read_kernel_csv(path) -> list[Kernel25]:
    lines = _data_lines(Path(path).read_text())
    if lines and lines[0].startswith("theta_deg"):
        lines = lines[1:]
    bank = []
    for ln in lines:
        vals = [float(t) for t in ln.split(",")]
        if len(vals) != 28:
            raise FormatError(f"{path}: kernel row needs 28 columns, got {len(vals)}")
        bank.append(Kernel25(np.array(vals[3:]), theta_deg=vals[0], k=vals[1], sigma=vals[2]))
    if not bank:
        raise FormatError(f"{path}: no kernels")
    return bank


# ---------------------------------------------------------------------- outputs

def write_trace_csv(path, trace, seed: int = 0) -> Path:
    rows = ([_fmt(t), _fmt(a), _fmt(p), _fmt(r)]
            for t, a, p, r in zip(trace.times, trace.v_avg, trace.v_pd, trace.r))
    return _write(path, header_line(seed), ["t_ns", "v_avg", "v_pd", "r"], rows)


def read_trace_csv(path) -> dict[str, np.ndarray]:
    lines = _data_lines(Path(path).read_text())
    cols = lines[0].split(",")
    data = np.array([[float(t) for t in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}


def write_sweep_csv(path, sweep, seed: int = 0) -> Path:
    rows = ([_fmt(e.coupling_k), _fmt(e.fit.slope), _fmt(e.fit.intercept), _fmt(e.fit.r2),
             _fmt(e.mean_r_final)] for e in sweep.entries)
    return _write(path, header_line(seed),
                  ["coupling_k", "slope", "intercept", "r2", "mean_r_final"], rows)


def write_feature_map_csv(path, fmap, seed: int = 0) -> Path:
    rows = ([_fmt(v) for v in row] for row in fmap.values)
    return _write(path, header_line(seed, mode=fmap.mode), None, rows)


def read_feature_map_csv(path) -> np.ndarray:
    lines = _data_lines(Path(path).read_text())
    return np.array([[float(t) for t in ln.split(",")] for ln in lines])


SCATTER_COLUMNS = ["stages", "ideal_dot", "dom", "seed"]


def write_scatter_csv(path, rows, seed: int = 0) -> Path:
    """Per-shot DOM against ideal dot product; rows are (stages, ideal_dot, dom, seed)."""
    out = ([str(int(st)), _fmt(x), _fmt(y), str(int(s))] for st, x, y, s in rows)
    return _write(path, header_line(seed), SCATTER_COLUMNS, out)


def write_energy_csv(path, delay_ns: float, energy_pj: float, seed: int = 0) -> Path:
    return _write(path, header_line(seed), ["delay_ns", "energy_pJ"],
                  [[_fmt(delay_ns), _fmt(energy_pj)]])


def write_comparison_csv(path, rows, seed: int = 0) -> Path:
    out = ([str(i), _fmt(c.fit.slope), _fmt(c.fit.intercept), _fmt(c.fit.r2), _fmt(c.spearman),
            str(int(c.top1))] for i, c in rows)
    return _write(path, header_line(seed),
                  ["kernel", "slope", "intercept", "r2", "spearman", "top1"], out)


def write_report(out_dir, *, seed: int = 0, scatter_rows=(), traces=None, energy=None) -> dict:
    """Write the scatter, detector-trace and energy/delay report files.

    ``traces`` maps a name to a trace; ``energy`` is a (delay_ns, energy_pJ) pair.
    Returns the written paths by role.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"scatter": write_scatter_csv(out_dir / "scatter.csv", list(scatter_rows), seed)}
    for name, trace in (traces or {}).items():
        paths[f"trace_{name}"] = write_trace_csv(out_dir / f"trace_{name}.csv", trace, seed)
    if energy is not None:
        paths["energy"] = write_energy_csv(out_dir / "energy.csv", energy[0], energy[1], seed)
    else:
        paths["energy"] = _write(out_dir / "energy.csv", header_line(seed),
                                 ["delay_ns", "energy_pJ"], [])
    return paths


# ------------------------------------------------------------------- calibration

def write_calibration(path, coupling_k: float, *, seed: int, suite_hash: str, stages: int,
                      r2: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = (f"{header_line(seed)}\n# suite_hash={suite_hash}\n# stages={stages}\n"
            f"# r2={_fmt(r2)}\ncoupling_k={_fmt(coupling_k, True)}\n")
    path.write_text(text, encoding="ascii")
    return path


def read_calibration(path) -> float:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path}: calibration file missing; run 'osc-conn calibrate' first")
    for ln in _data_lines(path.read_text()):
        key, _, value = ln.partition("=")
        if key.strip() == "coupling_k":
            return float(value)
    raise FormatError(f"{path}: no coupling_k entry")


def ensure_writable(out_dir) -> Path:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise OSError(f"output directory {out_dir} is not writable")
    return out_dir
