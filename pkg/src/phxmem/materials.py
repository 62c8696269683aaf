"""Optical and thermal material database with effective-medium mixing.

Complex refractive indices use the ``n - i*kappa`` convention paired with
an ``exp(+i*omega*t)`` time dependence, so a field propagating as
``exp(i*(omega*t - beta*z))`` with ``beta = k0*(n - i*kappa)`` decays for
``kappa > 0``. Permittivities are ``eps = (n - i*kappa)**2``.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ConfigurationError, DomainError, RangeError

AMORPHOUS = "amorphous"
CRYSTALLINE = "crystalline"
SINGLE = "single"
PHASES = (AMORPHOUS, CRYSTALLINE)

ENV_VAR = "PHXMEM_MATERIALS"


@dataclass(frozen=True)
class OpticalSample:
    wavelength: float  # nm
    n: float
    kappa: float

    def __post_init__(self):
        if not self.wavelength > 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        if not self.n > 0:
            raise DomainError(f"refractive index must be positive, got {self.n}")
        if self.kappa < 0:
            raise DomainError(f"extinction coefficient must be >= 0, got {self.kappa}")

    @property
    def index(self) -> complex:
        return complex(self.n, -self.kappa)


@dataclass(frozen=True)
class ThermalProps:
    conductivity: Mapping[str, float]  # W/(m K), keyed by phase
    density: float  # kg/m^3
    specific_heat: float  # J/(kg K)

    def k(self, phase: str = AMORPHOUS) -> float:
        if phase in self.conductivity:
            return self.conductivity[phase]
        return self.conductivity[SINGLE]

    @property
    def volumetric_heat_capacity(self) -> float:
        return self.density * self.specific_heat


@dataclass(frozen=True)
class MaterialRecord:
    """One material: per-phase optical tables plus thermal constants.

    Passive materials carry a single table under the ``"single"`` key and
    answer any phase query from it.
    """

    name: str
    tables: Mapping[str, tuple[OpticalSample, ...]]
    thermal: ThermalProps
    T_g: float | None = None  # K
    T_l: float | None = None  # K
    melt_limit: float | None = None  # K, heater materials only
    provenance: str = ""

    def __post_init__(self):
        for phase, rows in self.tables.items():
            if not rows:
                raise ConfigurationError(f"{self.name}: empty {phase} table")
            wls = [r.wavelength for r in rows]
            if any(b <= a for a, b in zip(wls, wls[1:])):
                raise ConfigurationError(
                    f"{self.name}: {phase} table must be strictly ascending in wavelength"
                )
        if self.is_pcm:
            missing = [p for p in PHASES if p not in self.tables]
            if missing:
                raise ConfigurationError(f"{self.name}: missing phase tables {missing}")
            if self.T_g is None or self.T_l is None:
                raise ConfigurationError(f"{self.name}: PCM needs T_g_K and T_l_K")
            if not self.T_l > self.T_g:
                raise ConfigurationError(
                    f"{self.name}: melting temperature {self.T_l} K must exceed "
                    f"crystallization temperature {self.T_g} K"
                )
            for phase in PHASES:
                rows = self.tables[phase]
                if rows[0].wavelength > 1500 or rows[-1].wavelength < 1600:
                    raise ConfigurationError(
                        f"{self.name}: {phase} table must span 1500-1600 nm"
                    )

    @property
    def is_pcm(self) -> bool:
        return AMORPHOUS in self.tables or CRYSTALLINE in self.tables

    def table(self, phase: str) -> tuple[OpticalSample, ...]:
        if phase in self.tables:
            return self.tables[phase]
        if SINGLE in self.tables:
            return self.tables[SINGLE]
        raise DomainError(f"{self.name} has no {phase!r} table")

    def span(self, phase: str) -> tuple[float, float]:
        rows = self.table(phase)
        return rows[0].wavelength, rows[-1].wavelength


def lookup_nk(material: MaterialRecord, phase: str, wavelength: float) -> complex:
    """Return the complex index ``n - i*kappa`` at ``wavelength`` (nm).

    n and kappa are interpolated linearly and independently between the
    bracketing table rows.
    """
    rows = material.table(phase)
    lo, hi = rows[0].wavelength, rows[-1].wavelength
    if not lo <= wavelength <= hi:
        raise RangeError(
            f"{wavelength} nm is outside the {phase} table of {material.name} "
            f"(valid span {lo}-{hi} nm)"
        )
    wls = [r.wavelength for r in rows]
    j = bisect.bisect_left(wls, wavelength)
    if wls[j] == wavelength:
        return rows[j].index
    a, b = rows[j - 1], rows[j]
    t = (wavelength - a.wavelength) / (b.wavelength - a.wavelength)
    n = a.n + t * (b.n - a.n)
    kappa = a.kappa + t * (b.kappa - a.kappa)
    return complex(n, -kappa)


def _clausius_mossotti(eps: complex) -> complex:
    return (eps - 1) / (eps + 2)


def _check_fraction(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise DomainError(f"crystallization fraction must lie in [0, 1], got {p}")
    return p


def effective_index(material: MaterialRecord, p: float, wavelength: float) -> complex:
    """Index of a partially crystallized PCM by Lorentz-Lorenz mixing.

    Solves ``(e-1)/(e+2) = p*(ec-1)/(ec+2) + (1-p)*(ea-1)/(ea+2)`` for the
    effective permittivity ``e`` and returns its square root on the branch
    with positive real part.
    """
    p = _check_fraction(p)
    if p == 0.0:
        return lookup_nk(material, AMORPHOUS, wavelength)
    if p == 1.0:
        return lookup_nk(material, CRYSTALLINE, wavelength)
    eps_a = lookup_nk(material, AMORPHOUS, wavelength) ** 2
    eps_c = lookup_nk(material, CRYSTALLINE, wavelength) ** 2
    f = p * _clausius_mossotti(eps_c) + (1 - p) * _clausius_mossotti(eps_a)
    eps = (1 + 2 * f) / (1 - f)
    n = complex(eps) ** 0.5
    return n if n.real >= 0 else -n


def absorption_db_per_um(kappa: float, wavelength: float) -> float:
    """Power attenuation in dB/um for extinction ``kappa`` at ``wavelength`` nm."""
    if kappa < 0:
        raise DomainError(f"extinction coefficient must be >= 0, got {kappa}")
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength}")
    if kappa == 0:
        return 0.0
    return 40.0 * math.pi * kappa / ((wavelength * 1e-3) * math.log(10.0))


@dataclass(frozen=True)
class MaterialDB:
    records: Mapping[str, MaterialRecord] = field(default_factory=dict)
    path: str | None = None

    def __getitem__(self, name: str) -> MaterialRecord:
        try:
            return self.records[name]
        except KeyError:
            known = ", ".join(sorted(self.records))
            raise ConfigurationError(f"unknown material {name!r} (known: {known})") from None

    def __contains__(self, name: str) -> bool:
        return name in self.records

    def names(self, pcm_only: bool = False) -> list[str]:
        return [n for n, r in self.records.items() if r.is_pcm or not pcm_only]


def _parse_rows(name, phase, rows):
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(OpticalSample(float(row["wl_nm"]), float(row["n"]), float(row["k"])))
        except KeyError as exc:
            raise ConfigurationError(f"{name}.{phase}[{i}]: missing key {exc.args[0]!r}") from None
        except DomainError as exc:
            raise ConfigurationError(f"{name}.{phase}[{i}]: {exc}") from None
    return tuple(out)


def _parse_record(entry) -> MaterialRecord:
    name = entry.get("name")
    if not name:
        raise ConfigurationError("material entry without a name")
    phases = entry.get("phases")
    if not isinstance(phases, dict) or not phases:
        raise ConfigurationError(f"{name}: 'phases' must be a non-empty object")
    tables = {phase: _parse_rows(name, phase, rows) for phase, rows in phases.items()}
    th = entry.get("thermal")
    if not isinstance(th, dict):
        raise ConfigurationError(f"{name}: missing 'thermal' block")
    k = th["k_W_mK"]
    conductivity = dict(k) if isinstance(k, dict) else {SINGLE: float(k)}
    thermal = ThermalProps(conductivity, float(th["rho_kg_m3"]), float(th["cp_J_kgK"]))
    return MaterialRecord(
        name=name,
        tables=tables,
        thermal=thermal,
        T_g=entry.get("T_g_K"),
        T_l=entry.get("T_l_K"),
        melt_limit=entry.get("melt_K"),
        provenance=entry.get("provenance", ""),
    )


def default_materials_path() -> Path:
    return Path(str(resources.files("phxmem") / "data" / "materials.json"))


def load_materials(path: str | os.PathLike | None = None) -> MaterialDB:
    """Load a material database file.

    Resolution order: explicit ``path``, the ``PHXMEM_MATERIALS`` environment
    variable, then the bundled table.
    """
    if path is None:
        path = os.environ.get(ENV_VAR) or default_materials_path()
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"materials file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    entries = doc["materials"] if isinstance(doc, dict) else doc
    records = {}
    for entry in entries:
        rec = _parse_record(entry)
        records[rec.name] = rec
    return MaterialDB(records, str(path))


_DEFAULT_DB: MaterialDB | None = None


def default_db() -> MaterialDB:
    """The bundled database, loaded once per process."""
    global _DEFAULT_DB
    if _DEFAULT_DB is None:
        _DEFAULT_DB = load_materials(default_materials_path())
    return _DEFAULT_DB
