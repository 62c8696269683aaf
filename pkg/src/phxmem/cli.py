"""``phxmem`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 physics or solver error,
1 anything else (including I/O failures).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import array as arr
from . import cell as cellmod
from . import dse
from . import materials as mat
from . import report
from . import thermal as th
from .config import RunConfig, explain, parse_config
from .errors import ConfigurationError, PhxmemError
from .modesolver import build_index_map, insertion_loss_db_per_um, solve_fundamental_mode, write_field_csv


def _load(args) -> RunConfig:
    path = getattr(args, "config", None)
    cfg = parse_config(path) if path else RunConfig()
    if getattr(args, "materials", None):
        if not Path(args.materials).exists():
            raise ConfigurationError(f"materials file not found: {args.materials}")
        cfg = cfg.model_copy(update={"materials": args.materials})
    return cfg


def _db(cfg: RunConfig):
    db = cfg.db()
    return None if db is mat.default_db() else db


def cmd_materials(args, out):
    cfg = _load(args)
    db = cfg.db()
    names = [args.name] if args.name else db.names()
    out.write("material,phase,wavelength_nm,n,kappa,absorption_dB_per_um\n")
    for name in names:
        rec = db[name]
        phases = list(rec.tables) if not rec.is_pcm else list(mat.PHASES)
        for phase in phases:
            n = mat.lookup_nk(rec, phase, args.wavelength)
            k = -n.imag
            out.write(f"{name},{phase},{args.wavelength:g},{n.real:.6f},{k:.6g},"
                      f"{mat.absorption_db_per_um(k, args.wavelength):.6g}\n")
        if rec.is_pcm and args.p is not None:
            n = mat.effective_index(rec, args.p, args.wavelength)
            out.write(f"{name},p={args.p:g},{args.wavelength:g},{n.real:.6f},{-n.imag:.6g},"
                      f"{mat.absorption_db_per_um(max(-n.imag, 0.0), args.wavelength):.6g}\n")
    return 0


def _phase_fraction(text):
    text = (text or "a").strip()
    if text in ("a", "amorphous"):
        return 0.0
    if text in ("c", "crystalline"):
        return 1.0
    if text.startswith("p="):
        try:
            return float(text[2:])
        except ValueError:
            pass
    raise ConfigurationError(f"--phase must be a, c or p=<fraction>, got {text!r}")


def cmd_mode(args, out):
    cfg = _load(args)
    if args.explain:
        out.write(explain(cfg))
        return 0
    db = cfg.db()
    xs = cfg.geometry.cross_section()
    wl = args.wl if args.wl is not None else cfg.cell.wavelength
    material = args.material or cfg.cell.material
    pcm = db[material] if xs.pcm_thickness > 0 else None
    imap = build_index_map(xs, wl, _phase_fraction(args.phase), pcm, db)
    mode = solve_fundamental_mode(imap, wl)
    il = insertion_loss_db_per_um(mode, wl)
    out.write(f"n_eff: {mode.n_eff.real:.6f} {mode.n_eff.imag:+.3e}j\n")
    out.write(f"loss: {il:.6g} dB/um\n")
    out.write(f"residual: {mode.residual:.2e}\n")
    if args.field:
        write_field_csv(mode, args.field)
        out.write(f"field: {args.field}\n")
    return 0


def cmd_cell(args, out):
    cfg = _load(args)
    if args.explain:
        out.write(explain(cfg))
        return 0
    db = _db(cfg)
    design = cfg.cell_design()
    model = cellmod.cell_model(design, db)
    c = cellmod.contrast(model)
    cap = cellmod.bit_capacity(c.delta_T, design.margin)
    bits = cap if args.bits is None else args.bits
    levels = cellmod.level_table(model, bits) if bits > 0 and not args.no_levels else []
    text = report.cell_text_report(design, c, model.insertion_loss(), bits, levels)
    out.write(text)
    if args.csv:
        rows = []
        for p in np.linspace(0.0, 1.0, 101):
            T, R, A = model.transmission(float(p))
            rows.append({"p": round(float(p), 10), "T": T, "R": R, "A": A})
        report.write_csv(rows, ["p", "T", "R", "A"], args.csv)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def cmd_thermal(args, out):
    cfg = _load(args)
    if args.explain:
        out.write(explain(cfg))
        return 0
    db = _db(cfg)
    stack = cfg.thermal_stack()
    t = cfg.thermal
    if args.set_curve:
        target = args.target_p if args.target_p is not None else 1.0
        powers = args.powers or [6.0, 7.0, 8.0, 10.0, 12.0, 15.0, 20.0]
        curve = th.power_latency_curve(stack, target, powers, dt=t.dt, max_duration=t.max_duration, db=db)
        rows = [{"power_mW": c.power, "duration_us": c.duration, "energy_nJ": c.energy, "marker": c.marker}
                for c in curve]
        report.write_csv(rows, report.CURVE_COLUMNS, args.set_curve)
        for r in rows:
            d = "-" if r["duration_us"] is None else f"{r['duration_us']:.3f} us"
            out.write(f"{r['power_mW']:g} mW: {d} {r['marker'] or ''}\n")
        return 0
    power = args.power if args.power is not None else t.set_power
    duration = args.duration if args.duration is not None else 1.0
    pulse = th.HeaterPulse(power, duration)
    res = th.simulate_pulse(stack, pulse, dt=t.dt, t_end=args.t_end, db=db)
    model = th.thermal_model(stack, db)
    _, p = th.phase_update(np.zeros(res.pcm_peak.size), res, model.pcm, model.pcm_area)
    out.write(f"pulse: {power:g} mW x {duration:g} us = {pulse.energy:g} nJ\n")
    out.write(f"PCM peak: {res.pcm_peak.max():.1f} K (min over film {res.pcm_peak.min():.1f} K)\n")
    out.write(f"heater peak: {res.heater_peak:.1f} K\n")
    out.write(f"fraction_above_Tg: {res.fraction_above_Tg:.4f}\n")
    out.write(f"fraction_above_Tl: {res.fraction_above_Tl:.4f}\n")
    out.write(f"p after pulse (from amorphous): {p:.4f}\n")
    out.write(f"heater safe: {'yes' if res.heater_safe else 'NO (exceeds melt limit)'}\n")
    if args.trace:
        rows = [dict(zip(report.TRACE_COLUMNS, [tt, *q])) for tt, q in zip(res.times, res.pcm_quantiles)]
        report.write_csv(rows, report.TRACE_COLUMNS, args.trace)
    return 0


def array_rows(cfg: RunConfig, sizes, cell_energy=None, bits=None, db=None):
    rows = []
    cell = None
    if cfg.array.cell_loss is None:
        cell = cfg.cell_design()
    for s in sizes:
        spec = cfg.array_spec(M=s, N=s, cell=cell)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", arr.ReadDisturbWarning)
            budget = arr.laser_power_dbm(spec)
        plan = arr.wavelength_plan(spec, cfg.array.center_wavelength)
        rows.append({
            "M": s,
            "N": s,
            "capacity_bits": None if bits is None else s * s * bits,
            "P_lsr_dBm": budget.P_lsr,
            "total_set_energy_uJ": None if cell_energy is None else arr.max_set_energy(spec, cell_energy),
            "fsr_feasible": plan.feasible,
            "disturb": budget.disturb,
        })
    return rows


def cmd_array(args, out):
    cfg = _load(args)
    if args.explain:
        out.write(explain(cfg))
        return 0
    sizes = args.size or cfg.array.sizes
    bits = args.bits
    if bits is None and cfg.array.cell_loss is None:
        model = cellmod.cell_model(cfg.cell_design(), _db(cfg))
        bits = cellmod.bit_capacity(cellmod.contrast(model).delta_T, cfg.cell.margin)
    energy = args.cell_energy if args.cell_energy is not None else cfg.array.cell_energy
    rows = array_rows(cfg, sizes, energy, bits)
    for r in rows:
        warn = "  (read-disturb risk)" if r["disturb"] else ""
        out.write(f"M=N={r['M']}: P_lsr = {r['P_lsr_dBm']:.2f} dBm{warn}\n")
    target = args.out or str(Path(cfg.output_dir) / "array.csv")
    report.write_csv(rows, report.ARRAY_COLUMNS, target)
    if args.plot:
        report.plot_array(rows, args.plot)
    return 0


def cmd_sweep(args, out):
    cfg = _load(args)
    if args.explain:
        out.write(explain(cfg))
        return 0
    spec = cfg.sweep_spec()
    out_dir = Path(args.out or cfg.output_dir)
    workers = args.workers or cfg.workers
    points = dse.run_sweep(spec, run_dir=out_dir / "run", workers=workers)
    dse.write_points_csv(points, out_dir / "points.csv")
    front = dse.pareto_front(points, spec.objectives)
    dse.write_points_csv(front, out_dir / "pareto.csv")
    chosen = dse.select_design(points, cfg.sweep.rule)
    (out_dir / "selected.txt").write_text(
        f"rule: {cfg.sweep.rule}\n"
        f"material: {chosen.material}\nthickness_nm: {chosen.thickness:g}\nwidth_nm: {chosen.width:g}\n"
        f"length_um: {chosen.length:g}\ninsertion_loss_dB_per_um: {chosen.insertion_loss:.6g}\n"
        f"delta_T: {chosen.delta_T:.6g}\ndelta_P: {chosen.delta_P:.6g}\nbits: {chosen.bits}\n",
        encoding="utf-8",
    )
    if cfg.sweep.heatmaps:
        for m in spec.materials:
            pts = [p for p in points if p.material == m and p.ok]
            if len({p.thickness for p in pts}) > 1 and len({p.width for p in pts}) > 1:
                report.plot_heatmap(pts, "insertion_loss", out_dir / f"{m}_loss.svg", "insertion loss (dB/um)")
                report.plot_heatmap(pts, "delta_T", out_dir / f"{m}_delta_T.svg", "transmission contrast")
    failed = sum(not p.ok for p in points)
    out.write(f"{len(points)} points ({failed} failed), {len(front)} on the Pareto front\n")
    out.write(f"selected: {chosen.material} {chosen.thickness:g} nm x {chosen.width:g} nm, bits={chosen.bits}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phxmem", description="PCM photonic memory design toolkit")
    parser.add_argument("--materials", help="material database file (else $PHXMEM_MATERIALS, else bundled)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, cfg_flags=("--config",)):
        p = sub.add_parser(name, help=help_, description=help_)
        if cfg_flags:
            p.add_argument(*cfg_flags, dest="config", help="run configuration file (YAML or JSON)")
            p.add_argument("--explain", action="store_true", help="print the effective config with default origins")
        p.add_argument("--materials", default=argparse.SUPPRESS, help="material database file")
        p.set_defaults(func=func)
        return p

    p = add("materials", cmd_materials, "list optical constants of the material database")
    p.add_argument("--name", help="only this material")
    p.add_argument("--wavelength", type=float, default=1550.0, help="nm")
    p.add_argument("--p", type=float, help="also print the mixed index at this crystalline fraction")

    p = add("mode", cmd_mode, "solve the fundamental quasi-TE mode of the cross-section",
            cfg_flags=("--geom", "--config"))
    p.add_argument("--material", help="PCM id (default: the configured cell material)")
    p.add_argument("--phase", default="a", help="a, c or p=<fraction>")
    p.add_argument("--wl", type=float, help="wavelength, nm")
    p.add_argument("--dump-field", "--field", dest="field", help="write |E| on the grid as CSV")

    p = add("cell", cmd_cell, "cell contrast, bit capacity and level table",
            cfg_flags=("--design", "--config"))
    p.add_argument("--csv", help="write the T(p) curve as CSV")
    p.add_argument("--bits", type=int, help="bits per cell for the level table (default: capacity)")
    p.add_argument("--no-levels", action="store_true", help="skip the level table")
    p.add_argument("--out", help="also write the text report here")

    p = add("thermal", cmd_thermal, "simulate a heater pulse or a power-latency curve",
            cfg_flags=("--stack", "--config"))
    p.add_argument("--power", type=float, help="mW")
    p.add_argument("--duration", type=float, help="us")
    p.add_argument("--t-end", type=float, help="simulated time, us")
    p.add_argument("--trace", help="write PCM temperature quantiles vs time as CSV")
    p.add_argument("--set-curve", help="write the power-latency CSV here")
    p.add_argument("--target-p", type=float, help="crystalline fraction for --set-curve (default 1)")
    p.add_argument("--powers", type=float, nargs="+", help="powers for --set-curve, mW")

    p = add("array", cmd_array, "laser budget and write energy against array size",
            cfg_flags=("--spec", "--config"))
    p.add_argument("--size", type=int, nargs="+", help="M = N values")
    p.add_argument("--bits", type=int, help="bits per cell (default: cell capacity)")
    p.add_argument("--cell-energy", type=float, help="per-cell max set energy, nJ")
    p.add_argument("--out", help="CSV path (default <output_dir>/array.csv)")
    p.add_argument("--plot", help="SVG path")

    p = add("sweep", cmd_sweep, "design-space sweep with Pareto front and selection",
            cfg_flags=("--spec", "--config"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel workers")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except PhxmemError as exc:
        print(f"phxmem: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"phxmem: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
