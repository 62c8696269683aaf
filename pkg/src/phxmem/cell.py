"""Cell-level figures of merit for a PCM strip on a silicon waveguide.

A cell is a PCM-loaded section of length ``L`` between two bare-waveguide
sections. Its power transmission at crystalline fraction ``p`` is

    T = t_j**2 * a,   t_j = (1 - R_f) * eta,   a = 10**(-IL(p) * L / 10)

where ``R_f = |(n_p - n_b) / (n_p + n_b)|**2`` is the Fresnel facet
reflection between the bare (``n_b``) and loaded (``n_p``) effective
indices, ``eta`` is the power overlap between the two mode profiles, and
``IL`` the loaded-mode loss in dB/um. ``A`` is the power absorbed in the
PCM section (one forward pass plus the facet-reflected return pass), and
``R = 1 - T - A`` collects back-reflection and junction radiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import materials as mat
from .errors import CapacityError, DomainError, PhysicsError
from .modesolver import (
    CrossSection,
    ModeSolution,
    build_index_map,
    insertion_loss_db_per_um,
    solve_fundamental_mode,
)

DEFAULT_MARGIN = 0.015
DEFAULT_LENGTH_UM = 2.0
DEFAULT_WAVELENGTH_NM = 1550.0
CURVE_NODES = 21
BISECTION_TOL = 1e-4


@dataclass(frozen=True)
class CellDesign:
    material: str
    cross_section: CrossSection = field(default_factory=CrossSection)
    length: float = DEFAULT_LENGTH_UM  # um
    margin: float = DEFAULT_MARGIN
    wavelength: float = DEFAULT_WAVELENGTH_NM  # nm

    def __post_init__(self):
        if not self.length >= 0:
            raise DomainError(f"cell length must be >= 0, got {self.length}")
        if not 0 < self.margin < 1:
            raise DomainError(f"margin must lie in (0, 1), got {self.margin}")

    def with_(self, **changes) -> "CellDesign":
        return replace(self, **changes)

    @property
    def footprint(self) -> float:
        """PCM footprint in um^2."""
        return self.length * self.cross_section.pcm_width / 1e3

    def describe(self) -> str:
        xs = self.cross_section
        return f"{self.material} {xs.pcm_thickness:g} nm x {xs.wg_width:g} nm x {self.length:g} um"


@dataclass(frozen=True)
class Transmission:
    T: float
    R: float
    A: float

    def __iter__(self):
        return iter((self.T, self.R, self.A))


@dataclass(frozen=True)
class ContrastResult:
    delta_T: float
    delta_P: float
    T_amorphous: float
    T_crystalline: float
    R_amorphous: float
    R_crystalline: float
    A_amorphous: float
    A_crystalline: float

    @property
    def flags(self) -> list[str]:
        out = []
        if self.delta_T < 0:
            out.append("negative delta_T")
        if self.delta_P < 0:
            out.append("negative delta_P")
        return out


def overlap(a: ModeSolution, b: ModeSolution) -> float:
    """Normalized power overlap of two modes sampled on the same grid."""
    if a.field.shape != b.field.shape:
        raise ValueError("modes must share a grid")
    dA = np.outer(np.diff(a.y_edges), np.diff(a.x_edges))
    cross = np.sum(np.conj(a.field) * b.field * dA)
    na = np.sum(np.abs(a.field) ** 2 * dA)
    nb = np.sum(np.abs(b.field) ** 2 * dA)
    return float(min(abs(cross) ** 2 / (na * nb), 1.0))


def _transmission(n_bare, n_p, eta, loss_db_per_um, length):
    R_f = abs((n_p - n_bare) / (n_p + n_bare)) ** 2
    a = 10.0 ** (-loss_db_per_um * length / 10.0)
    entering = (1.0 - R_f) * eta
    T = entering**2 * a
    A = entering * (1.0 - a) * (1.0 + R_f * a)
    return Transmission(T, 1.0 - T - A, A)


class CellModel:
    """Modal response of one cell as a function of crystalline fraction.

    Endpoints (p = 0, 1) come from exact mode solves. Interior fractions
    use a monotone cubic interpolant through ``nodes`` exact solves, built
    on first use.
    """

    def __init__(self, cell: CellDesign, db: mat.MaterialDB | None = None, nodes: int = CURVE_NODES):
        self.cell = cell
        self.db = db or mat.default_db()
        self.pcm = self.db[cell.material]
        self.nodes = nodes
        xs, wl = cell.cross_section, cell.wavelength
        self.bare = solve_fundamental_mode(build_index_map(xs, wl, 0.0, None, self.db), wl)
        self._solved: dict[float, tuple[ModeSolution, float]] = {}
        self._curve = None

    def _exact(self, p: float):
        if p not in self._solved:
            xs, wl = self.cell.cross_section, self.cell.wavelength
            if xs.pcm_thickness == 0:
                mode = self.bare
            else:
                mode = solve_fundamental_mode(build_index_map(xs, wl, p, self.pcm, self.db), wl)
            self._solved[p] = (mode, overlap(self.bare, mode))
        return self._solved[p]

    def mode(self, p: float) -> ModeSolution:
        return self._exact(float(p))[0]

    def _build_curve(self):
        ps = np.linspace(0.0, 1.0, self.nodes)
        rows = []
        for p in ps:
            mode, eta = self._exact(float(p))
            rows.append((mode.n_eff.real, mode.n_eff.imag, eta))
        self._curve = PchipInterpolator(ps, np.array(rows), axis=0)

    def modal(self, p: float) -> tuple[complex, float]:
        """Loaded-mode ``(n_eff, eta)`` at fraction ``p``."""
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"crystallization fraction must lie in [0, 1], got {p}")
        if p in (0.0, 1.0) or p in self._solved:
            mode, eta = self._exact(p)
            return mode.n_eff, eta
        if self._curve is None:
            self._build_curve()
        re, im, eta = self._curve(p)
        return complex(re, im), float(eta)

    def loss_db_per_um(self, p: float) -> float:
        n_p, _ = self.modal(p)
        kappa = max(-n_p.imag, 0.0)
        return mat.absorption_db_per_um(kappa, self.cell.wavelength)

    def insertion_loss(self) -> float:
        """Amorphous-state loss in dB/um."""
        return insertion_loss_db_per_um(self.mode(0.0), self.cell.wavelength)

    def transmission(self, p: float) -> Transmission:
        n_p, eta = self.modal(p)
        return _transmission(self.bare.n_eff, n_p, eta, self.loss_db_per_um(p), self.cell.length)


@lru_cache(maxsize=128)
def _cached_model(cell: CellDesign):
    return CellModel(cell)


def cell_model(cell: CellDesign | CellModel, db: mat.MaterialDB | None = None) -> CellModel:
    """Model for ``cell``; models on the bundled database are memoized."""
    if isinstance(cell, CellModel):
        return cell
    if db is not None and db is not mat.default_db():
        return CellModel(cell, db)
    return _cached_model(cell)


def _with_context(cell, fn):
    """Run ``fn``; tag any physics error with the cell it came from."""
    try:
        return fn()
    except PhysicsError as exc:
        design = cell.cell if isinstance(cell, CellModel) else cell
        if exc.args:
            exc.args = (f"{exc.args[0]} [cell: {design.describe()}]",) + exc.args[1:]
        raise


def transmission(cell, p: float, db=None) -> Transmission:
    """Return ``(T, R, A)`` for the cell at crystalline fraction ``p``."""
    return _with_context(cell, lambda: cell_model(cell, db).transmission(p))


def contrast(cell, db=None) -> ContrastResult:
    model = _with_context(cell, lambda: cell_model(cell, db))
    a = _with_context(model, lambda: model.transmission(0.0))
    c = _with_context(model, lambda: model.transmission(1.0))
    return ContrastResult(
        delta_T=a.T - c.T,
        delta_P=c.A - a.A,
        T_amorphous=a.T,
        T_crystalline=c.T,
        R_amorphous=a.R,
        R_crystalline=c.R,
        A_amorphous=a.A,
        A_crystalline=c.A,
    )


def levels_for(delta_T: float, margin: float) -> int:
    if margin <= 0:
        raise DomainError(f"margin must be positive, got {margin}")
    if delta_T <= 0:
        return 0
    # guard against quotients like 63.99999999999999 from decimal inputs
    return math.floor(delta_T / margin + 1e-9)


def bit_capacity(delta_T: float, margin: float) -> int:
    """Bits storable when levels are spaced ``margin`` apart in transmission.

    ``levels = floor(delta_T / margin)``; bits is ``floor(log2(levels))`` for
    two or more levels, else 0.
    """
    levels = levels_for(delta_T, margin)
    if levels < 2:
        return 0
    return levels.bit_length() - 1


def required_fraction(cell, level: int, bits: int, db=None, tol: float = BISECTION_TOL) -> float:
    """Smallest fraction ``p`` with ``T(0) - T(p) >= level * margin``.

    A coarse scan finds the first bracket where the drop is reached; the
    bracket is then bisected down to ``tol``. The returned value is the
    upper end of the final bracket, so it always meets the target.
    """
    model = cell_model(cell, db)
    margin = model.cell.margin
    if bits < 0 or not 0 <= level <= 2**bits - 1:
        raise DomainError(f"level {level} is outside 0..{2**bits - 1} for {bits} bits")
    if level == 0:
        return 0.0
    c = contrast(model)
    capacity = bit_capacity(c.delta_T, margin)
    if bits > capacity:
        raise CapacityError(
            f"{model.cell.describe()} stores {capacity} bits at margin {margin}; "
            f"{bits} bits requested (delta_T = {c.delta_T:.4f})"
        )
    T0 = c.T_amorphous
    target = level * margin

    def drop(p):
        return T0 - model.transmission(p).T

    scan = np.linspace(0.0, 1.0, 65)
    lo = hi = None
    for a, b in zip(scan, scan[1:]):
        if drop(b) >= target:
            lo, hi = a, b
            break
    if hi is None:
        raise CapacityError(
            f"transmission drop {target:.4f} for level {level} is not reachable "
            f"(maximum {drop(1.0):.4f})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if drop(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def level_table(cell, bits: int | None = None, db=None) -> list[tuple[int, float, float]]:
    """``(level, p, T)`` for every level of a ``bits``-bit configuration."""
    model = cell_model(cell, db)
    if bits is None:
        bits = bit_capacity(contrast(model).delta_T, model.cell.margin)
    rows = []
    for level in range(2**bits if bits > 0 else 1):
        p = required_fraction(model, level, bits)
        rows.append((level, p, model.transmission(p).T))
    return rows
