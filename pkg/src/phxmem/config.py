"""Run configuration: strict schema, line-aware errors, default provenance.

Config files are YAML or JSON (JSON is valid YAML). Every section is
optional; omitted values take the documented defaults. Unknown keys are
rejected.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import array as arr
from . import cell as cellmod
from . import dse
from . import materials as mat
from . import thermal as th
from .errors import ConfigurationError
from .modesolver import CrossSection


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GeometryConfig(_Strict):
    wg_width: float = Field(470.0, gt=0, description="waveguide width, nm")
    wg_height: float = Field(220.0, gt=0, description="waveguide height, nm")
    pcm_thickness: float = Field(20.0, ge=0, description="PCM film thickness, nm")
    pcm_width: float | None = Field(None, gt=0, description="PCM width, nm (default: waveguide width)")
    core: str = "Si"
    substrate: str = "SiO2"
    cladding: str = "SiO2"
    window_width: float = Field(4.0, gt=0, description="optical window width, um")
    window_height: float = Field(3.0, gt=0, description="optical window height, um")
    grid_pitch: float = Field(10.0, gt=0, description="finest optical grid cell, nm")

    def cross_section(self) -> CrossSection:
        return CrossSection(
            wg_width=self.wg_width,
            wg_height=self.wg_height,
            pcm_thickness=self.pcm_thickness,
            pcm_width=self.pcm_width,
            core_material=self.core,
            substrate_material=self.substrate,
            cladding_material=self.cladding,
            window_width=self.window_width,
            window_height=self.window_height,
            grid_pitch=self.grid_pitch,
        )


class CellConfig(_Strict):
    material: str = "GST"
    length: float = Field(cellmod.DEFAULT_LENGTH_UM, ge=0, description="PCM length, um")
    margin: float = Field(cellmod.DEFAULT_MARGIN, gt=0, lt=1, description="transmission level spacing")
    wavelength: float = Field(cellmod.DEFAULT_WAVELENGTH_NM, gt=0, description="nm")


class ThermalConfig(_Strict):
    heater_width: float = Field(2.0, gt=0, description="um")
    heater_length: float = Field(2.0, gt=0, description="um")
    heater_thickness: float = Field(110.0, gt=0, description="nm")
    resistivity: float = Field(60.0, gt=0, description="uOhm cm")
    sheet_resistance: float = Field(5.5, gt=0, description="Ohm/sq")
    melt_limit: float = Field(1941.0, gt=300, description="heater melting point, K")
    standoff: float = Field(600.0, gt=0, description="heater height above the waveguide top, nm")
    spreading_length: float = Field(th.HeaterSpec().spreading_length, ge=0, description="um per heater end")
    box_thickness: float = Field(th.ThermalStack.box_thickness, gt=0, description="um")
    top_cladding: float = Field(th.ThermalStack.top_cladding, gt=0, description="um")
    half_width: float = Field(th.ThermalStack.half_width, gt=0, description="um")
    pitch: float = Field(th.ThermalStack.pitch, gt=0, description="finest thermal grid cell, nm")
    dt: float = Field(th.DEFAULT_DT_NS, gt=0, description="time step, ns")
    set_power: float = Field(6.0, gt=0, description="mW")
    max_duration: float = Field(th.DEFAULT_MAX_DURATION_US, gt=0, description="longest set pulse, us")
    reset_power: float = Field(th.RESET_PULSE.power, ge=0, description="mW")
    reset_duration: float = Field(th.RESET_PULSE.duration, ge=0, description="us")

    def heater(self) -> th.HeaterSpec:
        return th.HeaterSpec(
            width=self.heater_width,
            length=self.heater_length,
            thickness=self.heater_thickness,
            resistivity=self.resistivity,
            sheet_resistance=self.sheet_resistance,
            melt_limit=self.melt_limit,
            standoff=self.standoff,
            spreading_length=self.spreading_length,
        )


class ArrayConfig(_Strict):
    M: int = Field(20, ge=1)
    N: int = Field(20, ge=1)
    pass_loss: float = Field(arr.DEFAULT_PASS_LOSS_DB, ge=0, description="dB per ring passed")
    drop_loss: float = Field(arr.DEFAULT_DROP_LOSS_DB, ge=0, description="dB per ring drop")
    pd_sensitivity: float = Field(arr.DEFAULT_PD_SENSITIVITY_DBM, description="dBm")
    channel_spacing: float = Field(arr.DEFAULT_CHANNEL_SPACING_PM, gt=0, description="pm")
    group_index: float = Field(arr.DEFAULT_GROUP_INDEX, gt=0)
    ring_radius: float = Field(arr.DEFAULT_RING_RADIUS_UM, gt=0, description="um")
    cell_loss: float | None = Field(None, ge=0, description="dB through one amorphous cell")
    cell_energy: float | None = Field(None, ge=0, description="per-cell max set energy, nJ")
    laser_ceiling: float = Field(arr.DEFAULT_LASER_CEILING_DBM, description="dBm")
    disturb_ceiling: float = Field(arr.DEFAULT_DISTURB_CEILING_DBM, description="dBm")
    center_wavelength: float = Field(1550.0, gt=0, description="nm")
    sizes: list[int] = Field(default_factory=lambda: [5, 10, 15, 20])

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, v):
        if not v or any(s < 1 for s in v):
            raise ValueError("sizes must be a non-empty list of positive integers")
        return v


class SweepConfig(_Strict):
    materials: list[str] = Field(default_factory=lambda: ["GST"])
    thickness: tuple[float, float, float] = (10.0, 50.0, 5.0)
    width: tuple[float, float, float] = (400.0, 600.0, 20.0)
    lengths: list[float] = Field(default_factory=lambda: [2.0])
    objectives: list[tuple[str, Literal["min", "max"]]] = Field(
        default_factory=lambda: [tuple(o) for o in dse.DEFAULT_OBJECTIVES]
    )
    depth: Literal["optical", "optical+thermal"] = "optical"
    rule: str = "max_joint_contrast"
    heatmaps: bool = True


class RunConfig(_Strict):
    materials: str | None = None
    output_dir: str = "phxmem-out"
    workers: int = Field(1, ge=1)
    seed: int = 0
    geometry: GeometryConfig = GeometryConfig()
    cell: CellConfig = CellConfig()
    thermal: ThermalConfig = ThermalConfig()
    array: ArrayConfig = ArrayConfig()
    sweep: SweepConfig = SweepConfig()

    # builders -----------------------------------------------------------
    def db(self) -> mat.MaterialDB:
        if self.materials is None:
            return mat.load_materials() if os.environ.get(mat.ENV_VAR) else mat.default_db()
        return mat.load_materials(self.materials)

    def cell_design(self) -> cellmod.CellDesign:
        c = self.cell
        return cellmod.CellDesign(c.material, self.geometry.cross_section(), c.length, c.margin, c.wavelength)

    def thermal_stack(self) -> th.ThermalStack:
        t = self.thermal
        return th.ThermalStack(
            self.geometry.cross_section(),
            self.cell.material,
            heater=t.heater(),
            box_thickness=t.box_thickness,
            top_cladding=t.top_cladding,
            half_width=t.half_width,
            pitch=t.pitch,
        )

    def array_spec(self, M=None, N=None, cell=None) -> arr.ArraySpec:
        a = self.array
        return arr.ArraySpec(
            M=M or a.M,
            N=N or a.N,
            pass_loss=a.pass_loss,
            drop_loss=a.drop_loss,
            pd_sensitivity=a.pd_sensitivity,
            channel_spacing=a.channel_spacing,
            group_index=a.group_index,
            ring_radius=a.ring_radius,
            cell=cell,
            cell_loss=a.cell_loss,
            laser_ceiling=a.laser_ceiling,
            disturb_ceiling=a.disturb_ceiling,
        )

    def sweep_spec(self) -> dse.SweepSpec:
        s = self.sweep
        return dse.SweepSpec(
            materials=tuple(s.materials),
            thickness=tuple(s.thickness),
            width=tuple(s.width),
            lengths=tuple(s.lengths),
            wavelength=self.cell.wavelength,
            margin=self.cell.margin,
            objectives=tuple(tuple(o) for o in s.objectives),
            depth=s.depth,
            set_power=self.thermal.set_power,
            grid_pitch=self.geometry.grid_pitch,
        )


# defaults that carry published design values, keyed by dotted path
DEFAULT_ORIGINS = {
    "geometry.wg_width": "published design value (selected GST cell)",
    "geometry.wg_height": "published design value (SOI waveguide)",
    "geometry.pcm_thickness": "published design value (selected GST cell)",
    "cell.length": "published design value (cell length)",
    "cell.margin": "published design value (transmission level spacing)",
    "cell.wavelength": "published design value (operating wavelength)",
    "thermal.heater_width": "published design value (microheater)",
    "thermal.heater_length": "published design value (microheater)",
    "thermal.heater_thickness": "published design value (microheater)",
    "thermal.resistivity": "published design value (Ti/TiN heater)",
    "thermal.sheet_resistance": "published design value (Ti/TiN heater)",
    "thermal.melt_limit": "published design value (Ti/TiN melting point)",
    "thermal.standoff": "published design value (heater standoff)",
    "thermal.set_power": "published design value (set pulse power)",
    "thermal.reset_power": "published design value (reset pulse)",
    "thermal.reset_duration": "published design value (reset pulse)",
    "thermal.spreading_length": "calibrated (set energies near published values)",
    "thermal.box_thickness": "calibrated (set energies near published values)",
    "thermal.top_cladding": "calibrated (set energies near published values)",
    "thermal.half_width": "calibrated (set energies near published values)",
    "array.pass_loss": "published design value (array link budget)",
    "array.drop_loss": "published design value (array link budget)",
    "array.pd_sensitivity": "published design value (array link budget)",
    "array.channel_spacing": "published design value (array wavelength plan)",
}


def _line_of(node, path):
    """1-based line of the deepest node along ``path`` in a composed YAML tree."""
    line = node.start_mark.line + 1 if node is not None else 1
    for part in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(part):
                    line = k.start_mark.line + 1
                    nxt = v
                    break
            if nxt is None:
                return line
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def _expected(model, loc):
    cls = model
    for part in loc:
        fields = getattr(cls, "model_fields", None)
        if not fields or part not in fields:
            return None
        ann = fields[part].annotation
        if isinstance(ann, type) and issubclass(ann, BaseModel):
            cls = ann
        else:
            return getattr(ann, "__name__", str(ann))
    return getattr(cls, "__name__", None)


def _format_errors(exc: ValidationError, tree, source) -> str:
    msgs = []
    for err in exc.errors():
        loc = [p for p in err["loc"] if not (isinstance(p, str) and p.startswith(("function-", "tuple[")))]
        key = ".".join(str(p) for p in loc) or "<root>"
        line = _line_of(tree, loc)
        if err["type"] == "extra_forbidden":
            msgs.append(f"{source}:{line}: unknown key '{key}'")
            continue
        exp = _expected(RunConfig, [p for p in loc if isinstance(p, str)])
        got = err.get("input")
        detail = err["msg"]
        if exp:
            detail = f"expected {exp}, {detail[0].lower()}{detail[1:]}"
        msgs.append(f"{source}:{line}: key '{key}': {detail} (got {got!r})")
    return "; ".join(msgs)


def loads_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    try:
        tree = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else "?"
        raise ConfigurationError(f"{source}:{line}: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{source}:1: top level must be a mapping")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_errors(exc, tree, source)) from None
    if cfg.materials is not None:
        path = Path(cfg.materials)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigurationError(f"{source}:{_line_of(tree, ['materials'])}: materials file not found: {path}")
        cfg = cfg.model_copy(update={"materials": str(path)})
    return cfg


def parse_config(path) -> RunConfig:
    """Read and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text, str(path), path.parent)


def dump_config(cfg: RunConfig) -> str:
    """Effective config as JSON; ``loads_config`` of the output gives ``cfg`` back."""
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=False) + "\n"


def explain(cfg: RunConfig) -> str:
    """Effective config, one ``key = value`` per line, annotating defaults."""
    defaults = RunConfig().model_dump(mode="json")
    values = cfg.model_dump(mode="json")
    lines = []

    def walk(prefix, d, base):
        for k, v in d.items():
            key = f"{prefix}{k}"
            b = base.get(k) if isinstance(base, dict) else None
            if isinstance(v, dict):
                walk(key + ".", v, b or {})
                continue
            note = ""
            if v == b:
                origin = DEFAULT_ORIGINS.get(key)
                note = f"  # default; {origin}" if origin else "  # default"
            lines.append(f"{key} = {json.dumps(v)}{note}")

    walk("", values, defaults)
    return "\n".join(lines) + "\n"
