"""CSV, SVG and plain-text outputs."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import PhxmemError  # noqa: E402

# fixed id salt and no timestamp keep SVG output byte-stable across runs
matplotlib.rcParams["svg.hashsalt"] = "phxmem"
_SVG_META = {"Date": None, "Creator": None}

ARRAY_COLUMNS = ["M", "N", "capacity_bits", "P_lsr_dBm", "total_set_energy_uJ", "fsr_feasible"]
CURVE_COLUMNS = ["power_mW", "duration_us", "energy_nJ", "marker"]
TRACE_COLUMNS = ["time_us", "T_min_K", "T_q25_K", "T_median_K", "T_q75_K", "T_max_K"]


class EmptyResultsError(PhxmemError):
    """Refusal to write a report with no rows."""


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(round(v, 10))
    return str(v)


def write_csv(rows, columns, path):
    """Write ``rows`` (mappings) with a header; values are formatted stably."""
    rows = list(rows)
    if not rows:
        raise EmptyResultsError(f"refusing to write {path}: no results")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_array(rows, path):
    """Laser power and total write energy against array capacity."""
    rows = list(rows)
    if not rows:
        raise EmptyResultsError("no array rows to plot")
    cap = [r["capacity_bits"] if r["capacity_bits"] is not None else r["M"] * r["N"] for r in rows]
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.5))
    a.plot(cap, [r["P_lsr_dBm"] for r in rows], "o-")
    a.set_xlabel("array capacity (bits)")
    a.set_ylabel("required laser power (dBm)")
    energies = [r["total_set_energy_uJ"] for r in rows]
    if all(e is not None for e in energies):
        b.plot(cap, energies, "s-", color="C1")
    b.set_xlabel("array capacity (bits)")
    b.set_ylabel("max set energy (uJ)")
    fig.tight_layout()
    return _save(fig, path)


def plot_heatmap(points, metric, path, label):
    """``metric`` over the thickness x width grid of one material."""
    ok = [p for p in points if p.ok]
    if not ok:
        raise EmptyResultsError("no successful points to plot")
    ts = sorted({p.thickness for p in ok})
    ws = sorted({p.width for p in ok})
    Z = np.full((len(ts), len(ws)), np.nan)
    for p in ok:
        Z[ts.index(p.thickness), ws.index(p.width)] = getattr(p, metric)
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(ws, ts, Z, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=label)
    ax.set_xlabel("waveguide width (nm)")
    ax.set_ylabel("PCM thickness (nm)")
    ax.set_title(ok[0].material)
    fig.tight_layout()
    return _save(fig, path)


def plot_power_latency(curves, path):
    """``curves`` maps a label to a list of ``CurvePoint``."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, pts in curves.items():
        good = [c for c in pts if c.ok]
        ax.plot([c.power for c in good], [c.duration for c in good], "o-", label=label)
    ax.set_xlabel("heater power (mW)")
    ax.set_ylabel("set pulse duration (us)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def cell_text_report(design, contrast, insertion_loss, bits, levels) -> str:
    """Human-readable summary of one cell with its per-level fraction table."""
    lines = [
        f"cell: {design.describe()}",
        f"wavelength: {design.wavelength:g} nm",
        f"insertion loss (amorphous): {insertion_loss:.4f} dB/um",
        f"delta_T: {contrast.delta_T:.4f}",
        f"delta_P: {contrast.delta_P:.4f}",
        f"T amorphous / crystalline: {contrast.T_amorphous:.4f} / {contrast.T_crystalline:.4f}",
        f"margin: {design.margin:g}",
        f"bits: {bits}",
    ]
    for flag in contrast.flags:
        lines.append(f"warning: {flag}")
    if levels:
        lines.append("")
        lines.append("level  code  p       T")
        width = max(bits, 1)
        for level, p, T in levels:
            lines.append(f"{level:<6d} {level:0{width}b}  {p:.4f}  {T:.4f}")
    return "\n".join(lines) + "\n"


def emit_report(results, formats, out_dir, stem="report", columns=None, text=None):
    """Write ``results`` (list of mappings) in each requested format.

    ``csv`` writes ``<stem>.csv``; ``text`` writes ``<stem>.txt`` from the
    ``text`` string; ``svg`` is only supported for array rows.
    """
    results = list(results)
    if not results:
        raise EmptyResultsError("refusing to emit a report with no results")
    out = Path(out_dir)
    written = []
    for fmt in formats:
        if fmt == "csv":
            written.append(write_csv(results, columns or list(results[0]), out / f"{stem}.csv"))
        elif fmt == "svg":
            written.append(plot_array(results, out / f"{stem}.svg"))
        elif fmt == "text":
            p = out / f"{stem}.txt"
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text if text is not None else "\n".join(map(str, results)) + "\n", encoding="utf-8")
            written.append(p)
        else:
            raise PhxmemError(f"unknown report format {fmt!r}")
    return written
