"""Transient heat conduction in the cell cross-section and PCM phase bookkeeping.

The stack is BOX oxide / silicon strip / PCM film / oxide spacer / Ti-TiN
microheater / oxide overcladding. ``rho*c_p dT/dt = div(k grad T) + Q`` is
discretized by finite volumes on a graded grid and advanced with backward
Euler, which is unconditionally stable and preserves the maximum
principle. The outer boundary is held at ambient. The heater dissipates
``Q = P / (heater area * L_eff)`` while the pulse is on, where ``L_eff`` is
the heater length plus the along-waveguide spreading allowance on both
ends.

Crystallization is threshold based: a PCM pixel whose peak temperature
reaches ``T_l`` ends amorphous; one that peaks inside ``[T_g, T_l)`` ends
crystalline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import materials as mat
from .errors import ConfigurationError, DomainError, SolverError, ThresholdError
from .grid import graded_axis, symmetric_axis
from .modesolver import CrossSection

AMBIENT_K = 300.0
DEFAULT_DT_NS = 5.0
SET_RESOLUTION_NS = 10.0
QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class HeaterSpec:
    width: float = 2.0  # um
    length: float = 2.0  # um
    thickness: float = 110.0  # nm
    resistivity: float = 60.0  # uOhm cm
    sheet_resistance: float = 5.5  # Ohm/sq
    melt_limit: float = 1941.0  # K
    standoff: float = 600.0  # nm above the waveguide top
    spreading_length: float = 3.75  # um added at each heater end
    material: str = "TiTiN"

    def __post_init__(self):
        for name in ("width", "length", "thickness", "resistivity", "sheet_resistance", "standoff"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"HeaterSpec.{name} must be positive")
        if self.spreading_length < 0:
            raise ConfigurationError("HeaterSpec.spreading_length must be >= 0")
        if not self.melt_limit > AMBIENT_K:
            raise ConfigurationError("heater melt limit must exceed ambient")

    @property
    def effective_length(self) -> float:
        return self.length + 2.0 * self.spreading_length

    @property
    def resistance(self) -> float:
        """Heater resistance in Ohm from sheet resistance and aspect ratio."""
        return self.sheet_resistance * self.length / self.width


@dataclass(frozen=True)
class HeaterPulse:
    power: float  # mW
    duration: float  # us

    def __post_init__(self):
        if self.power < 0 or self.duration < 0:
            raise DomainError("pulse power and duration must be non-negative")

    @property
    def energy(self) -> float:
        """Electrical energy in nJ (mW * us)."""
        return self.power * self.duration


RESET_PULSE = HeaterPulse(40.0, 3.5)


@dataclass(frozen=True)
class ThermalStack:
    """Geometry and materials of the thermal cross-section.

    ``box_thickness`` is the buried oxide below the waveguide (its bottom
    face is the substrate heat sink), ``top_cladding`` the oxide above the
    heater and ``half_width`` the lateral extent from the waveguide axis;
    all in um.
    """

    cross_section: CrossSection
    pcm_material: str
    heater: HeaterSpec = field(default_factory=HeaterSpec)
    box_thickness: float = 8.0
    top_cladding: float = 5.0
    half_width: float = 25.0
    pitch: float = 20.0  # nm, finest cell size around the PCM
    pcm_phase: str = mat.AMORPHOUS

    def __post_init__(self):
        if not self.pitch > 0:
            raise ConfigurationError("thermal pitch must be positive")
        if self.half_width * 1e3 <= self.heater.width * 500 or self.box_thickness <= 0 or self.top_cladding <= 0:
            raise ConfigurationError("thermal window must enclose the heater with positive margins")

    def with_(self, **changes) -> "ThermalStack":
        return replace(self, **changes)


@dataclass
class ThermalResult:
    """Outcome of one pulse simulation.

    ``peak`` is the per-pixel maximum temperature over the run;
    ``pcm_quantiles`` has one row per recorded time with the
    ``QUANTILES`` of the PCM pixel temperatures.
    """

    pulse: HeaterPulse
    peak: np.ndarray
    final: np.ndarray
    times: np.ndarray  # us
    pcm_quantiles: np.ndarray
    fraction_above_Tg: float
    fraction_above_Tl: float
    heater_peak: float
    pcm_peak: np.ndarray  # peak temperature of each PCM pixel
    safety_violation: bool
    min_temperature: float

    @property
    def heater_safe(self) -> bool:
        return not self.safety_violation


@dataclass
class SetResult:
    power: float  # mW
    duration: float  # us
    energy: float  # nJ
    p: float


@dataclass
class CurvePoint:
    power: float
    duration: float | None
    energy: float | None
    marker: str | None = None

    @property
    def ok(self) -> bool:
        return self.marker is None


class ThermalModel:
    """Assembled finite-volume system for one stack.

    Fields are stored as ``(ny, nx)`` arrays in kelvin; internally the
    unknown vector is the temperature rise above ambient.
    """

    def __init__(self, stack: ThermalStack, db: mat.MaterialDB | None = None):
        self.stack = stack
        self.db = db or mat.default_db()
        self.pcm = self.db[stack.pcm_material]
        if not self.pcm.is_pcm:
            raise ConfigurationError(f"{stack.pcm_material} is not a phase-change material")
        self._build_grid()
        self._assemble()
        self._lu_cache = {}

    # geometry ------------------------------------------------------------
    def _build_grid(self):
        st, xs, ht = self.stack, self.stack.cross_section, self.stack.heater
        um = 1e-6
        pitch = st.pitch * 1e-3
        w_core = xs.wg_width / 2e3
        w_pcm = xs.pcm_width / 2e3
        w_heat = ht.width / 2
        fine_x = max(w_core, w_pcm) + 0.2
        x_edges = symmetric_axis(sorted({w_core, w_pcm, w_heat, st.half_width}), fine_x, pitch,
                                 growth=1.25, max_cell=0.25)
        y_wg0 = 0.0
        y_wg1 = xs.wg_height / 1e3
        y_pcm1 = y_wg1 + xs.pcm_thickness / 1e3
        y_h0 = y_wg1 + ht.standoff / 1e3
        y_h1 = y_h0 + ht.thickness / 1e3
        bottom = -st.box_thickness
        top = y_h1 + st.top_cladding
        bps = sorted({bottom, y_wg0, y_wg1, y_pcm1, y_h0, y_h1, top})
        y_edges = graded_axis(bps, y_wg0 - 0.1, y_pcm1 + 0.1, pitch, growth=1.25, max_cell=0.25)
        self.x_edges = x_edges * um
        self.y_edges = y_edges * um
        cx = 0.5 * (x_edges[1:] + x_edges[:-1])
        cy = 0.5 * (y_edges[1:] + y_edges[:-1])
        X, Y = np.meshgrid(cx, cy)

        def box(x0, x1, y0, y1):
            return (X >= x0) & (X < x1) & (Y >= y0) & (Y < y1)

        self.core = box(-w_core, w_core, y_wg0, y_wg1)
        self.pcm_mask = box(-w_pcm, w_pcm, y_wg1, y_pcm1) if xs.pcm_thickness > 0 else np.zeros_like(self.core)
        self.heater_mask = box(-w_heat, w_heat, y_h0, y_h1)
        self.dx = np.diff(self.x_edges)
        self.dy = np.diff(self.y_edges)
        self.area = np.outer(self.dy, self.dx)
        self.shape = self.core.shape
        if not self.pcm_mask.any() and xs.pcm_thickness > 0:
            raise ConfigurationError("PCM film is not resolved by the thermal grid")

    def _assemble(self):
        st = self.stack
        clad = self.db[st.cross_section.cladding_material].thermal
        core = self.db[st.cross_section.core_material].thermal
        heater = self.db[st.heater.material].thermal
        k = np.full(self.shape, clad.k())
        C = np.full(self.shape, clad.volumetric_heat_capacity)
        k[self.core] = core.k()
        C[self.core] = core.volumetric_heat_capacity
        k[self.pcm_mask] = self.pcm.thermal.k(st.pcm_phase)
        C[self.pcm_mask] = self.pcm.thermal.volumetric_heat_capacity
        k[self.heater_mask] = heater.k()
        C[self.heater_mask] = heater.volumetric_heat_capacity
        self.k = k
        self.rho_cp = C
        self.K = conductance_matrix(self.x_edges, self.y_edges, k)
        self.capacity = (C * self.area).ravel()  # J/(m K) per unit length
        heater_area = float(self.area[self.heater_mask].sum())
        L_eff = st.heater.effective_length * 1e-6
        # W/m^3 per mW of electrical power
        q_density = 1e-3 / (heater_area * L_eff)
        self.q_unit = (np.where(self.heater_mask, q_density, 0.0) * self.area).ravel()
        self.heater_area = heater_area
        self.pcm_area = self.area[self.pcm_mask]
        self._steady_unit = None

    # solvers -------------------------------------------------------------
    def _lu(self, dt):
        if dt not in self._lu_cache:
            M = (sp.diags(self.capacity / dt) + self.K).tocsc()
            self._lu_cache[dt] = sla.splu(M)
        return self._lu_cache[dt]

    def steady_rise(self, power=1.0):
        """Steady temperature rise (K) for a continuous ``power`` (mW)."""
        if self._steady_unit is None:
            self._steady_unit = sla.spsolve(self.K.tocsc(), self.q_unit).reshape(self.shape)
        return power * self._steady_unit

    def simulate(self, pulse: HeaterPulse, dt_ns=DEFAULT_DT_NS, t_end_us=None, record_every=1) -> ThermalResult:
        if not dt_ns > 0:
            raise DomainError("time step must be positive")
        if t_end_us is None:
            t_end_us = pulse.duration + max(2.0, 0.5 * pulse.duration)
        if t_end_us < pulse.duration - 1e-12:
            raise DomainError("t_end must be at least the pulse duration")
        dt = dt_ns * 1e-9
        n_steps = int(round(t_end_us * 1e3 / dt_ns))
        n_on = int(round(pulse.duration * 1e3 / dt_ns))
        lu = self._lu(dt)
        cdt = self.capacity / dt
        q = pulse.power * self.q_unit
        u = np.zeros(self.capacity.size)
        peak = u.copy()
        low = 0.0
        pcm_flat = self.pcm_mask.ravel()
        times, quants = [0.0], [np.full(len(QUANTILES), AMBIENT_K)]
        for n in range(1, n_steps + 1):
            rhs = cdt * u
            if n <= n_on:
                rhs = rhs + q
            u = lu.solve(rhs)
            np.maximum(peak, u, out=peak)
            low = min(low, float(u.min()))
            if n % record_every == 0 or n == n_steps:
                times.append(n * dt_ns * 1e-3)
                if pcm_flat.any():
                    quants.append(AMBIENT_K + np.quantile(u[pcm_flat], QUANTILES))
                else:
                    quants.append(np.full(len(QUANTILES), AMBIENT_K))
        if not np.all(np.isfinite(u)):
            raise SolverError("temperature field became non-finite")
        peak_field = AMBIENT_K + peak.reshape(self.shape)
        return self._result(pulse, peak_field, AMBIENT_K + u.reshape(self.shape),
                            np.array(times), np.array(quants), AMBIENT_K + low)

    def _result(self, pulse, peak_field, final, times, quants, low):
        pcm_peak = peak_field[self.pcm_mask]
        w = self.pcm_area / self.pcm_area.sum() if self.pcm_area.size else np.array([])
        above_g = float(w[pcm_peak >= self.pcm.T_g].sum()) if w.size else 0.0
        above_l = float(w[pcm_peak >= self.pcm.T_l].sum()) if w.size else 0.0
        heater_peak = float(peak_field[self.heater_mask].max())
        return ThermalResult(
            pulse=pulse,
            peak=peak_field,
            final=final,
            times=times,
            pcm_quantiles=quants,
            fraction_above_Tg=above_g,
            fraction_above_Tl=above_l,
            heater_peak=heater_peak,
            pcm_peak=pcm_peak,
            safety_violation=heater_peak > self.stack.heater.melt_limit,
            min_temperature=low,
        )

    def pcm_weights(self):
        return self.pcm_area / self.pcm_area.sum()


def conductance_matrix(x_edges, y_edges, k, boundary=None):
    """Finite-volume conductance matrix (W/(m K) per unit length).

    Faces between cells use the series (harmonic) conductance of the two
    half cells. ``boundary`` maps ``"left"``, ``"right"``, ``"bottom"``,
    ``"top"`` to ``"fixed"`` (ambient) or ``"adiabatic"``; all sides are
    fixed by default.
    """
    sides = {"left": "fixed", "right": "fixed", "bottom": "fixed", "top": "fixed"}
    if boundary:
        unknown = set(boundary) - set(sides)
        if unknown:
            raise ConfigurationError(f"unknown boundary sides {sorted(unknown)}")
        sides.update(boundary)
    dx = np.diff(x_edges)
    dy = np.diff(y_edges)
    ny, nx = k.shape
    idx = np.arange(nx * ny).reshape(ny, nx)
    diag = np.zeros((ny, nx))
    rows, cols, vals = [], [], []

    # vertical faces between (j, i) and (j, i+1)
    rx = dx[:-1] / (2 * k[:, :-1]) + dx[1:] / (2 * k[:, 1:])
    gx = dy[:, None] / rx
    # horizontal faces between (j, i) and (j+1, i)
    ry = dy[:-1, None] / (2 * k[:-1]) + dy[1:, None] / (2 * k[1:])
    gy = dx[None, :] / ry
    for g, a, b in ((gx, idx[:, :-1], idx[:, 1:]), (gy, idx[:-1], idx[1:])):
        rows += [a.ravel(), b.ravel()]
        cols += [b.ravel(), a.ravel()]
        vals += [-g.ravel(), -g.ravel()]
    diag[:, :-1] += gx
    diag[:, 1:] += gx
    diag[:-1] += gy
    diag[1:] += gy
    if sides["left"] == "fixed":
        diag[:, 0] += dy / (dx[0] / (2 * k[:, 0]))
    if sides["right"] == "fixed":
        diag[:, -1] += dy / (dx[-1] / (2 * k[:, -1]))
    if sides["bottom"] == "fixed":
        diag[0] += dx / (dy[0] / (2 * k[0]))
    if sides["top"] == "fixed":
        diag[-1] += dx / (dy[-1] / (2 * k[-1]))
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    n = nx * ny
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def implicit_heat_steps(K, capacity, source, dt, n_steps, on_steps=None, u0=None):
    """Backward-Euler history of ``C du/dt = -K u + s`` from ``u0``.

    ``source`` is applied for the first ``on_steps`` steps (all by default).
    Returns the array of states, one row per step (excluding ``u0``).
    """
    lu = sla.splu((sp.diags(capacity / dt) + K).tocsc())
    u = np.zeros_like(capacity) if u0 is None else np.array(u0, dtype=float)
    on_steps = n_steps if on_steps is None else on_steps
    out = np.empty((n_steps, u.size))
    for n in range(n_steps):
        rhs = capacity / dt * u
        if n < on_steps:
            rhs = rhs + source
        u = lu.solve(rhs)
        out[n] = u
    return out


@lru_cache(maxsize=16)
def _cached_model(stack: ThermalStack) -> ThermalModel:
    return ThermalModel(stack)


def thermal_model(stack: ThermalStack | ThermalModel, db=None) -> ThermalModel:
    if isinstance(stack, ThermalModel):
        return stack
    if db is not None and db is not mat.default_db():
        return ThermalModel(stack, db)
    return _cached_model(stack)


def simulate_pulse(stack, pulse: HeaterPulse, dt: float = DEFAULT_DT_NS, t_end: float | None = None,
                   db=None, record_every: int = 1) -> ThermalResult:
    """Run one heater pulse; ``dt`` in ns, ``t_end`` in us."""
    return thermal_model(stack, db).simulate(pulse, dt, t_end, record_every)


def phase_update(prev, result: ThermalResult, material: mat.MaterialRecord, weights=None):
    """Apply melt-quench and crystallization thresholds to a PCM fraction map.

    Returns ``(new_map, p)`` with ``p`` the area-weighted mean.
    """
    prev = np.asarray(prev, dtype=float)
    peak = np.asarray(result.pcm_peak if isinstance(result, ThermalResult) else result, dtype=float)
    if prev.shape != peak.shape:
        raise DomainError(f"fraction map shape {prev.shape} does not match PCM pixels {peak.shape}")
    new = prev.copy()
    new[(peak >= material.T_g) & (peak < material.T_l)] = 1.0
    new[peak >= material.T_l] = 0.0
    if weights is None:
        weights = np.full(new.shape, 1.0 / new.size) if new.size else new
    else:
        weights = np.asarray(weights, dtype=float) / np.sum(weights)
    return new, float(np.sum(weights * new))


class StepResponse:
    """Unit-power (1 mW) step response of the PCM and heater pixels.

    The discrete system is linear and time invariant, so a pulse of power
    ``P`` and ``d`` steps produces ``P * (S[n] - S[n - d])`` exactly; one
    simulation therefore answers every power and duration.
    """

    def __init__(self, model: ThermalModel, dt_ns: float, n_steps: int):
        self.model = model
        self.dt_ns = dt_ns
        self.n_steps = n_steps
        pcm = model.pcm_mask.ravel()
        heat = model.heater_mask.ravel()
        dt = dt_ns * 1e-9
        lu = model._lu(dt)
        cdt = model.capacity / dt
        u = np.zeros(model.capacity.size)
        S_pcm = np.zeros((n_steps + 1, int(pcm.sum())))
        S_heat = np.zeros((n_steps + 1, int(heat.sum())))
        for n in range(1, n_steps + 1):
            u = lu.solve(cdt * u + model.q_unit)
            S_pcm[n] = u[pcm]
            S_heat[n] = u[heat]
        self.S_pcm = S_pcm
        self.S_heat = S_heat

    def peak_rise(self, steps_on: int, which="pcm", cooldown_steps: int | None = None):
        """Per-pixel peak rise (K per mW) for a pulse ``steps_on`` long."""
        S = self.S_pcm if which == "pcm" else self.S_heat
        if cooldown_steps is None:
            cooldown_steps = self.n_steps - steps_on
        end = min(self.n_steps, steps_on + cooldown_steps)
        if steps_on > self.n_steps:
            raise DomainError("pulse longer than the stored step response")
        on = S[: steps_on + 1].max(axis=0)
        if end > steps_on:
            tail = S[steps_on + 1 : end + 1] - S[1 : end - steps_on + 1]
            on = np.maximum(on, tail.max(axis=0))
        return on


@lru_cache(maxsize=16)
def _cached_response(stack: ThermalStack, dt_ns: float, n_steps: int) -> StepResponse:
    return StepResponse(thermal_model(stack), dt_ns, n_steps)


DEFAULT_MAX_DURATION_US = 150.0
COOLDOWN_US = 2.0


def step_response(stack, dt_ns=DEFAULT_DT_NS, max_duration_us=DEFAULT_MAX_DURATION_US, db=None) -> StepResponse:
    n_steps = int(round((max_duration_us + COOLDOWN_US) * 1e3 / dt_ns))
    if isinstance(stack, ThermalModel) or (db is not None and db is not mat.default_db()):
        return StepResponse(thermal_model(stack, db), dt_ns, n_steps)
    return _cached_response(stack, float(dt_ns), n_steps)


def _band_fraction(model, peak_K):
    w = model.pcm_weights()
    band = (peak_K >= model.pcm.T_g) & (peak_K < model.pcm.T_l)
    return float(w[band].sum())


def set_energy(stack, power: float, target_p: float, dt: float = DEFAULT_DT_NS,
               resolution: float = SET_RESOLUTION_NS, max_duration: float = DEFAULT_MAX_DURATION_US,
               db=None) -> SetResult:
    """Shortest pulse at ``power`` (mW) crystallizing ``target_p`` of an amorphous cell.

    Bisection on the pulse length down to ``resolution`` ns.

    Raises
    ------
    ThresholdError
        With ``mechanism`` ``"below_Tg"`` when the steady-state PCM
        temperature never reaches T_g, ``"partial_heating"`` when too
        little of the film can reach T_g, ``"melt"`` when melting blocks
        the target, and ``"duration_cap"`` when the target needs longer
        than ``max_duration`` us.
    """
    if not power > 0:
        raise DomainError("set power must be positive")
    if not 0 < target_p <= 1:
        raise DomainError(f"target fraction must lie in (0, 1], got {target_p}")
    model = thermal_model(stack, db)
    pcm = model.pcm
    w = model.pcm_weights()
    ss = AMBIENT_K + model.steady_rise(power)[model.pcm_mask]
    tol = 1e-9
    if ss.max() < pcm.T_g:
        raise ThresholdError(
            f"at {power:g} mW the PCM settles at {ss.max():.1f} K, below T_g = {pcm.T_g:g} K; "
            "the phase transition cannot be triggered at any pulse length",
            mechanism="below_Tg",
        )
    reachable = float(w[ss >= pcm.T_g].sum())
    if reachable + tol < target_p:
        raise ThresholdError(
            f"at {power:g} mW only {reachable:.3f} of the PCM can exceed T_g "
            f"(target {target_p:.3f})",
            mechanism="partial_heating",
        )
    resp = step_response(model if db is not None and db is not mat.default_db() else stack,
                         dt, max_duration, db)

    def fraction(steps):
        return _band_fraction(model, AMBIENT_K + power * resp.peak_rise(steps))

    step_res = max(1, int(round(resolution / dt)))
    hi = int(round(max_duration * 1e3 / dt))
    p_hi = fraction(hi)
    if p_hi + tol < target_p:
        melted = float(w[AMBIENT_K + power * resp.peak_rise(hi) >= pcm.T_l].sum())
        if melted > 0 and reachable - float(w[ss >= pcm.T_l].sum()) + tol < target_p:
            raise ThresholdError(
                f"at {power:g} mW melting of {melted:.3f} of the film blocks reaching p = {target_p:.3f}",
                mechanism="melt",
            )
        raise ThresholdError(
            f"p = {target_p:.3f} not reached within {max_duration:g} us at {power:g} mW "
            f"(reached {p_hi:.3f})",
            mechanism="duration_cap",
        )
    lo = 0
    while hi - lo > step_res:
        mid = (lo + hi) // 2
        if fraction(mid) + tol >= target_p:
            hi = mid
        else:
            lo = mid
    duration = hi * dt * 1e-3
    return SetResult(power=power, duration=duration, energy=power * duration, p=fraction(hi))


def power_latency_curve(stack, target_p: float, powers, dt: float = DEFAULT_DT_NS,
                        max_duration: float = DEFAULT_MAX_DURATION_US, db=None) -> list[CurvePoint]:
    """Set latency and energy for each power; failures become markers."""
    powers = list(powers)
    if any(b < a for a, b in zip(powers, powers[1:])):
        raise DomainError("powers must be sorted ascending")
    out = []
    for P in powers:
        try:
            r = set_energy(stack, P, target_p, dt=dt, max_duration=max_duration, db=db)
            out.append(CurvePoint(P, r.duration, r.energy))
        except ThresholdError as exc:
            out.append(CurvePoint(P, None, None, exc.mechanism))
    return out


@dataclass
class ResetCheck:
    ok: bool
    heater_safe: bool
    p_after: float
    heater_peak: float
    pcm_min_peak: float


def reset_check(stack, pulse: HeaterPulse = RESET_PULSE, initial=None, dt: float = DEFAULT_DT_NS,
                db=None) -> ResetCheck:
    """Whether ``pulse`` melts the whole film without melting the heater.

    ``initial`` is the PCM fraction map before the pulse (fully crystalline
    by default).
    """
    model = thermal_model(stack, db)
    result = model.simulate(pulse, dt)
    prev = np.ones(int(model.pcm_mask.sum())) if initial is None else np.asarray(initial, float)
    new, p = phase_update(prev, result, model.pcm, model.pcm_area)
    ok = bool(result.pcm_peak.size and np.all(result.pcm_peak >= model.pcm.T_l))
    return ResetCheck(
        ok=ok,
        heater_safe=result.heater_peak < stack_heater(model).melt_limit,
        p_after=0.0 if ok else p,
        heater_peak=result.heater_peak,
        pcm_min_peak=float(result.pcm_peak.min()) if result.pcm_peak.size else AMBIENT_K,
    )


def stack_heater(model: ThermalModel) -> HeaterSpec:
    return model.stack.heater


def threshold_power(stack, target_p: float = 1.0, db=None, lo=0.0, hi=100.0, tol=1e-3) -> float:
    """Smallest steady-state power (mW) at which ``target_p`` becomes reachable.

    Uses the linear steady response: a pixel reaches T_g once
    ``P * rise >= T_g - ambient``.
    """
    model = thermal_model(stack, db)
    rise = model.steady_rise(1.0)[model.pcm_mask]
    w = model.pcm_weights()
    need = model.pcm.T_g - AMBIENT_K
    order = np.argsort(-rise)
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, target_p - 1e-12))
    k = min(k, len(order) - 1)
    return float(need / rise[order[k]])
