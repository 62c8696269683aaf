"""Design-space sweeps, Pareto filtering and design selection.

A sweep evaluates every (material, thickness, width, length) combination
and returns points in that lexicographic order. Evaluations that raise a
physics error are kept as failed points carrying the reason. When a run
directory is given, each finished point is appended to ``points.csv`` and
a rerun with the same inputs skips points already on disk.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import cell as cellmod
from . import thermal as th
from .errors import CapacityError, ConfigurationError, PhxmemError, PhysicsError
from .modesolver import CrossSection

METRICS = ("insertion_loss", "delta_T", "delta_P", "bits", "max_set_energy", "footprint")
DIRECTIONS = ("min", "max")
DEFAULT_OBJECTIVES = (
    ("insertion_loss", "min"),
    ("delta_T", "max"),
    ("delta_P", "max"),
    ("bits", "max"),
    ("footprint", "min"),
)
OPTICAL = "optical"
OPTICAL_THERMAL = "optical+thermal"


def _frange(start, stop, step):
    if not step > 0:
        raise ConfigurationError(f"sweep step must be positive, got {step}")
    if stop < start:
        raise ConfigurationError(f"sweep range is empty ({start} > {stop})")
    n = int(math.floor((stop - start) / step + 1e-9))
    return tuple(round(start + i * step, 9) for i in range(n + 1))


@dataclass(frozen=True)
class SweepSpec:
    materials: tuple[str, ...] = ("GST",)
    thickness: tuple[float, float, float] = (10.0, 50.0, 5.0)  # nm: start, stop, step
    width: tuple[float, float, float] = (400.0, 600.0, 20.0)  # nm
    lengths: tuple[float, ...] = (2.0,)  # um
    wavelength: float = 1550.0
    margin: float = cellmod.DEFAULT_MARGIN
    objectives: tuple[tuple[str, str], ...] = DEFAULT_OBJECTIVES
    depth: str = OPTICAL
    set_power: float = 6.0  # mW, thermal depth only
    grid_pitch: float = 10.0  # nm

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "objectives", tuple((m, d) for m, d in self.objectives))
        if not self.materials or not self.lengths:
            raise ConfigurationError("sweep needs at least one material and one length")
        self.thicknesses, self.widths  # validates ranges
        if self.depth not in (OPTICAL, OPTICAL_THERMAL):
            raise ConfigurationError(f"depth must be {OPTICAL!r} or {OPTICAL_THERMAL!r}")
        check_objectives(self.objectives)
        if any(m == "max_set_energy" for m, _ in self.objectives) and self.depth == OPTICAL:
            raise ConfigurationError("max_set_energy objective needs optical+thermal depth")

    @property
    def thicknesses(self):
        return _frange(*self.thickness)

    @property
    def widths(self):
        return _frange(*self.width)

    def grid(self):
        for m in self.materials:
            for t in self.thicknesses:
                for w in self.widths:
                    for L in self.lengths:
                        yield m, t, w, L

    @property
    def size(self) -> int:
        return len(self.materials) * len(self.thicknesses) * len(self.widths) * len(self.lengths)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class DesignPoint:
    material: str
    thickness: float  # nm
    width: float  # nm
    length: float  # um
    insertion_loss: float = math.nan  # dB/um
    delta_T: float = math.nan
    delta_P: float = math.nan
    bits: int = 0
    footprint: float = math.nan  # um^2
    max_set_energy: float | None = None  # nJ
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def key(self):
        return (self.material, self.thickness, self.width, self.length)

    def metric(self, name):
        return getattr(self, name)


POINT_COLUMNS = [f.name for f in fields(DesignPoint)]


def check_objectives(objectives):
    if not objectives:
        raise ConfigurationError("at least one objective is required")
    for item in objectives:
        if len(item) != 2:
            raise ConfigurationError(f"objective {item!r} must be (metric, direction)")
        metric, direction = item
        if metric not in METRICS:
            raise ConfigurationError(f"unknown metric {metric!r}; known: {', '.join(METRICS)}")
        if direction not in DIRECTIONS:
            raise ConfigurationError(f"objective direction must be 'min' or 'max', got {direction!r}")


def _design(spec: SweepSpec, material, t, w, L):
    xs = CrossSection(wg_width=w, pcm_thickness=t, grid_pitch=min(spec.grid_pitch, t))
    return cellmod.CellDesign(material, xs, L, spec.margin, spec.wavelength)


def evaluate_point(spec: SweepSpec, material, t, w, L) -> DesignPoint:
    point = DesignPoint(material, t, w, L)
    try:
        design = _design(spec, material, t, w, L)
        model = cellmod.CellModel(design)
        c = cellmod.contrast(model)
        point.insertion_loss = model.insertion_loss()
        point.delta_T = c.delta_T
        point.delta_P = c.delta_P
        point.bits = cellmod.bit_capacity(c.delta_T, spec.margin)
        point.footprint = design.footprint
        if spec.depth == OPTICAL_THERMAL and point.bits > 0:
            top = 2**point.bits - 1
            p = cellmod.required_fraction(model, top, point.bits)
            stack = th.ThermalStack(design.cross_section, material)
            point.max_set_energy = th.set_energy(stack, spec.set_power, p).energy
        elif spec.depth == OPTICAL_THERMAL:
            point.max_set_energy = 0.0
    except PhxmemError as exc:
        point.error = f"{type(exc).__name__}: {exc}"
    return point


def _evaluate_args(args):
    return evaluate_point(*args)


def _to_row(p: DesignPoint):
    return {k: ("" if v is None else v) for k, v in asdict(p).items()}


def _from_row(row) -> DesignPoint:
    def num(v):
        return None if v == "" else float(v)

    return DesignPoint(
        material=row["material"],
        thickness=float(row["thickness"]),
        width=float(row["width"]),
        length=float(row["length"]),
        insertion_loss=float(row["insertion_loss"]),
        delta_T=float(row["delta_T"]),
        delta_P=float(row["delta_P"]),
        bits=int(float(row["bits"])),
        footprint=float(row["footprint"]),
        max_set_energy=num(row["max_set_energy"]),
        error=row["error"] or None,
    )


def write_points_csv(points, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=POINT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for p in points:
            writer.writerow(_to_row(p))


def read_points_csv(path) -> list[DesignPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [_from_row(r) for r in csv.DictReader(fh)]


class RunDirectory:
    """Append-only store of evaluated points keyed by an inputs hash."""

    def __init__(self, path, spec: SweepSpec):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.journal = self.path / "journal.csv"
        meta = self.path / "run.json"
        digest = spec.digest()
        if meta.exists():
            old = json.loads(meta.read_text(encoding="utf-8")).get("inputs_hash")
            if old != digest and self.journal.exists():
                # different inputs: stale results must not be reused
                self.journal.unlink()
        meta.write_text(json.dumps({"inputs_hash": digest, "spec": asdict(spec)}, indent=2, sort_keys=True),
                        encoding="utf-8")

    def done(self) -> dict:
        if not self.journal.exists():
            return {}
        return {p.key: p for p in read_points_csv(self.journal)}

    def record(self, point: DesignPoint):
        new = not self.journal.exists()
        with open(self.journal, "a", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=POINT_COLUMNS, lineterminator="\n")
            if new:
                writer.writeheader()
            writer.writerow(_to_row(point))


class SweepError(PhysicsError):
    """Every point of a sweep failed."""


def run_sweep(spec: SweepSpec, run_dir=None, workers: int = 1, progress=None) -> list[DesignPoint]:
    """Evaluate the full grid; output order is the grid order regardless of ``workers``."""
    grid = list(spec.grid())
    store = RunDirectory(run_dir, spec) if run_dir is not None else None
    results = store.done() if store else {}
    todo = [g for g in grid if g not in results]
    args = [(spec, *g) for g in todo]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            evaluated = pool.map(_evaluate_args, args)
            for g, point in zip(todo, evaluated):
                results[g] = point
                if store:
                    store.record(point)
                if progress:
                    progress(point)
    else:
        for g, a in zip(todo, args):
            point = _evaluate_args(a)
            results[g] = point
            if store:
                store.record(point)
            if progress:
                progress(point)
    points = [results[g] for g in grid]
    if not any(p.ok for p in points):
        reasons = sorted({p.error for p in points})
        raise SweepError(f"all {len(points)} sweep points failed: {'; '.join(reasons[:3])}")
    return points


def _value(point, name):
    if isinstance(point, dict):
        return point[name]
    return getattr(point, name)


def pareto_front(points, objectives=DEFAULT_OBJECTIVES):
    """Non-dominated subset of ``points``, in input order.

    ``objectives`` is a sequence of ``(metric, "min" | "max")``. A point is
    dropped when another is no worse in every objective and strictly
    better in at least one. Failed points are ignored.
    """
    check_objectives(objectives)
    points = [p for p in points if not (isinstance(p, DesignPoint) and not p.ok)]
    if not points:
        raise ConfigurationError("pareto_front needs at least one point")
    V = np.array(
        [[(-1.0 if d == "max" else 1.0) * float(_value(p, m)) for m, d in objectives] for p in points]
    )
    keep = []
    for i in range(len(points)):
        no_worse = np.all(V <= V[i], axis=1)
        better = np.any(V < V[i], axis=1)
        if not np.any(no_worse & better):
            keep.append(points[i])
    return keep


_MIN_LOSS = re.compile(r"^min_loss_at_bits\((\d+)\)$")


def select_design(points, rule: str = "max_joint_contrast") -> DesignPoint:
    """Pick one design.

    ``max_joint_contrast`` maximizes ``min(delta_T, delta_P)``;
    ``min_loss_at_bits(n)`` picks the lowest-loss point storing at least
    ``n`` bits. Ties fall to lower loss, then smaller footprint, then the
    grid order, so the result does not depend on input order.
    """
    pool = sorted((p for p in points if p.ok), key=lambda p: p.key)
    if not pool:
        raise ConfigurationError("select_design needs at least one successful point")
    if rule == "max_joint_contrast":
        return min(pool, key=lambda p: (-min(p.delta_T, p.delta_P), p.insertion_loss, p.footprint))
    m = _MIN_LOSS.match(rule.replace(" ", ""))
    if not m:
        raise ConfigurationError(f"unknown selection rule {rule!r}")
    n = int(m.group(1))
    eligible = [p for p in pool if p.bits >= n]
    if not eligible:
        best = max(p.bits for p in pool)
        raise CapacityError(f"no design reaches {n} bits (best: {best})")
    return min(eligible, key=lambda p: (p.insertion_loss, p.footprint))
