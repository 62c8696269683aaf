"""Link budget, write energy and wavelength plan of a ring-addressed PCM array.

Rows are selected by output port ``S_1..S_N``; within a row each of the
``M`` cells sits behind a microring tuned to its own wavelength channel.
All budget arithmetic is in the dB domain: the required laser power is the
photodetector sensitivity (dBm) plus the summed losses (dB) along the
worst-case read path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .cell import CellDesign, cell_model
from .errors import ConfigurationError, DomainError

DEFAULT_PASS_LOSS_DB = 0.1
DEFAULT_DROP_LOSS_DB = 0.1
DEFAULT_PD_SENSITIVITY_DBM = -11.7
DEFAULT_CHANNEL_SPACING_PM = 850.0
DEFAULT_GROUP_INDEX = 4.2
DEFAULT_RING_RADIUS_UM = 5.0
DEFAULT_LASER_CEILING_DBM = 30.0
DEFAULT_DISTURB_CEILING_DBM = 20.0


class ReadDisturbWarning(UserWarning):
    """Read power high enough that it may perturb stored states."""


@dataclass(frozen=True)
class ArraySpec:
    M: int = 1  # columns (cells per row)
    N: int = 1  # rows
    pass_loss: float = DEFAULT_PASS_LOSS_DB
    drop_loss: float = DEFAULT_DROP_LOSS_DB
    pd_sensitivity: float = DEFAULT_PD_SENSITIVITY_DBM
    channel_spacing: float = DEFAULT_CHANNEL_SPACING_PM
    group_index: float = DEFAULT_GROUP_INDEX
    ring_radius: float = DEFAULT_RING_RADIUS_UM
    cell: CellDesign | None = None
    cell_loss: float | None = None  # dB through one amorphous cell; overrides ``cell``
    laser_ceiling: float = DEFAULT_LASER_CEILING_DBM
    disturb_ceiling: float = DEFAULT_DISTURB_CEILING_DBM
    bits_per_cell: int | None = None  # metadata only

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N or self.M < 1 or self.N < 1:
            raise ConfigurationError(f"array size must be positive integers, got M={self.M}, N={self.N}")
        if self.pass_loss < 0 or self.drop_loss < 0:
            raise ConfigurationError("ring pass/drop losses must be >= 0 dB")
        if not self.channel_spacing > 0:
            raise ConfigurationError("channel spacing must be positive")
        if not self.group_index > 0:
            raise ConfigurationError("group index must be positive")
        if self.cell_loss is not None and self.cell_loss < 0:
            raise ConfigurationError("cell loss must be >= 0 dB")

    def with_(self, **changes) -> "ArraySpec":
        return replace(self, **changes)

    @property
    def cells(self) -> int:
        return self.M * self.N

    @property
    def capacity_bits(self) -> int | None:
        if self.bits_per_cell is None:
            return None
        return self.cells * self.bits_per_cell


@dataclass(frozen=True)
class BudgetResult:
    P_lsr: float  # dBm
    breakdown: tuple[tuple[str, float], ...]
    pd_sensitivity: float
    feasible: bool
    disturb: bool

    @property
    def total_loss(self) -> float:
        return sum(v for _, v in self.breakdown)


def amorphous_cell_loss(spec: ArraySpec) -> float:
    """dB lost in the one PCM cell on the read path (amorphous state)."""
    if spec.cell_loss is not None:
        return spec.cell_loss
    if spec.cell is None:
        return 0.0
    model = cell_model(spec.cell)
    return model.insertion_loss() * spec.cell.length


def laser_power_dbm(spec: ArraySpec) -> BudgetResult:
    """Required laser output power for the worst-case read path.

    ``P = S_PD + [(N*M - 1) + (M - 1)] * L_p + 2 * L_d + L_cell``.
    Emits ``ReadDisturbWarning`` above the disturb ceiling.
    """
    n_pass = (spec.N * spec.M - 1) + (spec.M - 1)
    terms = (
        ("ring_pass", n_pass * spec.pass_loss),
        ("ring_drop", 2 * spec.drop_loss),
        ("cell_amorphous", amorphous_cell_loss(spec)),
    )
    P = spec.pd_sensitivity + math.fsum(v for _, v in terms)
    disturb = P > spec.disturb_ceiling
    if disturb:
        warnings.warn(
            f"laser power {P:.2f} dBm exceeds the read-disturb ceiling of {spec.disturb_ceiling:g} dBm",
            ReadDisturbWarning,
            stacklevel=2,
        )
    return BudgetResult(P, terms, spec.pd_sensitivity, P <= spec.laser_ceiling, disturb)


def max_set_energy(spec: ArraySpec, per_cell_energy: float) -> float:
    """Worst-case energy (uJ) to write every cell to its top level; input in nJ."""
    if per_cell_energy < 0:
        raise DomainError(f"per-cell energy must be >= 0, got {per_cell_energy}")
    return spec.cells * per_cell_energy * 1e-3


@dataclass(frozen=True)
class WavelengthPlan:
    channels: tuple[float, ...]  # nm
    fsr: float  # nm
    feasible: bool


def free_spectral_range(wavelength: float, group_index: float, radius: float) -> float:
    """Ring FSR in nm for wavelength in nm and radius in um."""
    if not radius > 0:
        raise DomainError(f"ring radius must be positive, got {radius}")
    return wavelength**2 / (group_index * 2 * math.pi * radius * 1e3)


def wavelength_plan(spec: ArraySpec, center: float = 1550.0) -> WavelengthPlan:
    fsr = free_spectral_range(center, spec.group_index, spec.ring_radius)
    step = spec.channel_spacing * 1e-3
    channels = tuple(center + i * step for i in range(spec.M))
    # one channel per row cannot alias onto a neighbouring resonance
    return WavelengthPlan(channels, fsr, spec.M == 1 or spec.M * step < fsr)


def address(row: int, col: int, spec: ArraySpec, center: float = 1550.0) -> tuple[str, float]:
    """Select port and read wavelength for the cell at ``(row, col)``, 1-based."""
    if not 1 <= row <= spec.N:
        raise DomainError(f"row {row} outside 1..{spec.N}")
    if not 1 <= col <= spec.M:
        raise DomainError(f"column {col} outside 1..{spec.M}")
    return f"S{row}", center + (col - 1) * spec.channel_spacing * 1e-3
