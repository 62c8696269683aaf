"""Semi-vectorial finite-difference eigenmode solver for PCM-loaded strips.

The quasi-TE (Ex-dominant) mode satisfies

    d/dx[(1/eps) d(eps Ex)/dx] + d2Ex/dy2 + k0^2 eps Ex = beta^2 Ex

which is discretized with a 5-point finite-volume stencil on a graded,
interface-aligned grid. Window edges are perfect electric walls
(Ex = 0) unless a Neumann x-boundary is requested.

Units: geometry in nm on the public surface, um internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from . import materials as mat
from .errors import ConfigurationError, NoGuidedModeError, SolverError
from .grid import centers, graded_axis, symmetric_axis

SHIFT_FACTOR = 0.999
MAX_ITER = 500
ARPACK_TOL = 1e-10
RESIDUAL_LIMIT = 1e-6
FINE_MARGIN_NM = 200.0
WINDOW_MARGIN_UM = 1.0


@dataclass(frozen=True)
class CrossSection:
    """Strip waveguide with a PCM film on top, in an oxide window.

    All lengths in nm except the window (um). ``pcm_width`` defaults to the
    waveguide width.
    """

    wg_width: float = 470.0
    pcm_thickness: float = 20.0
    wg_height: float = 220.0
    pcm_width: float | None = None
    core_material: str = "Si"
    substrate_material: str = "SiO2"
    cladding_material: str = "SiO2"
    window_width: float = 4.0
    window_height: float = 3.0
    grid_pitch: float = 10.0

    def __post_init__(self):
        if self.pcm_width is None:
            object.__setattr__(self, "pcm_width", self.wg_width)
        for name in ("wg_width", "wg_height", "pcm_width", "window_width", "window_height", "grid_pitch"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"CrossSection.{name} must be positive, got {getattr(self, name)}")
        if self.pcm_thickness < 0:
            raise ConfigurationError(f"CrossSection.pcm_thickness must be >= 0, got {self.pcm_thickness}")
        if self.pcm_thickness > 0 and self.grid_pitch > min(self.pcm_thickness, 20.0) + 1e-9:
            raise ConfigurationError(
                f"grid_pitch {self.grid_pitch} nm must not exceed min(pcm_thickness, 20 nm)"
            )
        half_w = max(self.wg_width, self.pcm_width) / 2e3 + WINDOW_MARGIN_UM
        half_h = self.wg_height / 2e3 + self.pcm_thickness / 1e3 + WINDOW_MARGIN_UM
        if self.window_width / 2 < half_w - 1e-12 or self.window_height / 2 < half_h - 1e-12:
            raise ConfigurationError(
                "simulation window must contain the core, the PCM and a 1 um cladding "
                f"margin on each side (need >= {2 * half_w:.3f} x {2 * half_h:.3f} um)"
            )

    def with_(self, **changes) -> "CrossSection":
        return replace(self, **changes)

    # geometry in um, waveguide centered at the origin
    @property
    def core_box(self):
        w, h = self.wg_width / 2e3, self.wg_height / 2e3
        return (-w, w, -h, h)

    @property
    def pcm_box(self):
        w = self.pcm_width / 2e3
        y0 = self.wg_height / 2e3
        return (-w, w, y0, y0 + self.pcm_thickness / 1e3)


@dataclass
class IndexMap:
    """Complex index on a rectilinear grid; ``n[j, i]`` is cell (x_i, y_j)."""

    x_edges: np.ndarray  # um
    y_edges: np.ndarray  # um
    n: np.ndarray  # complex, shape (ny, nx)
    wavelength: float  # nm
    masks: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.n.shape

    @property
    def x(self):
        return centers(self.x_edges)

    @property
    def y(self):
        return centers(self.y_edges)

    def pixel_count(self, region):
        m = self.masks.get(region)
        return 0 if m is None else int(m.sum())

    def cladding_index(self, x_walls: bool = True) -> float:
        """Largest real index on the window boundary.

        With ``x_walls=False`` only the top and bottom rows count (the side
        walls are symmetry planes rather than open boundaries).
        """
        n = self.n.real
        parts = [n[0], n[-1]]
        if x_walls:
            parts += [n[:, 0], n[:, -1]]
        return float(np.concatenate(parts).max())


@dataclass
class ModeSolution:
    n_eff: complex
    field: np.ndarray  # complex Ex, unit Euclidean norm over grid values
    x_edges: np.ndarray
    y_edges: np.ndarray
    wavelength: float
    polarization: str = "TE"
    residual: float = 0.0

    @property
    def magnitude(self):
        return np.abs(self.field)

    @property
    def kappa_eff(self) -> float:
        return -self.n_eff.imag


def _grid_for(xs: CrossSection):
    pitch = xs.grid_pitch / 1e3
    margin = FINE_MARGIN_NM / 1e3
    half_core = xs.wg_width / 2e3
    half_pcm = xs.pcm_width / 2e3
    half_fine = max(half_core, half_pcm) + margin
    x_bps = sorted({half_core, half_pcm, xs.window_width / 2})
    x_edges = symmetric_axis(x_bps, half_fine, pitch)

    _, _, y0, y1 = xs.core_box
    top = y1 + xs.pcm_thickness / 1e3
    H = xs.window_height / 2
    y_bps = [-H, y0, y1, top, H]
    y_edges = graded_axis(y_bps, y0 - margin, top + margin, pitch)
    return x_edges, y_edges


def _inside(cx, cy, box):
    x0, x1, y0, y1 = box
    return (cx >= x0) & (cx < x1) & (cy >= y0) & (cy < y1)


def build_index_map(
    xs: CrossSection,
    wavelength: float,
    p: float = 0.0,
    pcm: mat.MaterialRecord | None = None,
    db: mat.MaterialDB | None = None,
) -> IndexMap:
    """Rasterize ``xs`` at ``wavelength`` with the PCM at crystalline fraction ``p``.

    Each pixel takes the index of the region containing its center. With
    ``pcm_thickness == 0`` (or no PCM material) the map is the bare
    waveguide.
    """
    db = db or mat.default_db()
    x_edges, y_edges = _grid_for(xs)
    cx, cy = np.meshgrid(centers(x_edges), centers(y_edges))

    n_clad = mat.lookup_nk(db[xs.cladding_material], mat.SINGLE, wavelength)
    n_sub = mat.lookup_nk(db[xs.substrate_material], mat.SINGLE, wavelength)
    n_core = mat.lookup_nk(db[xs.core_material], mat.SINGLE, wavelength)

    n = np.where(cy < xs.core_box[2], n_sub, n_clad).astype(complex)
    core = _inside(cx, cy, xs.core_box)
    n[core] = n_core
    masks = {"core": core}
    if xs.pcm_thickness > 0 and pcm is not None:
        pcm_mask = _inside(cx, cy, xs.pcm_box)
        n[pcm_mask] = mat.effective_index(pcm, p, wavelength)
        masks["pcm"] = pcm_mask
    else:
        masks["pcm"] = np.zeros_like(core)
    return IndexMap(x_edges, y_edges, n, wavelength, masks)


def _operator(eps, dx, dy, k0, x_boundary):
    ny, nx = eps.shape
    N = nx * ny
    idx = np.arange(N).reshape(ny, nx)
    rows, cols, vals = [], [], []
    diag = k0**2 * eps.copy()

    # x part: (1/dx_i) [c_e (e_{i+1}E_{i+1} - e_i E_i) - c_w (e_i E_i - e_{i-1}E_{i-1})]
    DX = np.broadcast_to(dx, (ny, nx))
    c_face = 1.0 / (eps[:, :-1] * DX[:, :-1] / 2 + eps[:, 1:] * DX[:, 1:] / 2)
    # east neighbour of cell i
    coef_e = c_face / DX[:, :-1]
    rows.append(idx[:, :-1].ravel()); cols.append(idx[:, 1:].ravel())
    vals.append((coef_e * eps[:, 1:]).ravel())
    diag[:, :-1] -= coef_e * eps[:, :-1]
    # west neighbour of cell i+1
    coef_w = c_face / DX[:, 1:]
    rows.append(idx[:, 1:].ravel()); cols.append(idx[:, :-1].ravel())
    vals.append((coef_w * eps[:, :-1]).ravel())
    diag[:, 1:] -= coef_w * eps[:, 1:]
    if x_boundary == "dirichlet":
        for i in (0, nx - 1):
            diag[:, i] -= (1.0 / (eps[:, i] * dx[i] / 2)) / dx[i] * eps[:, i]
    elif x_boundary != "neumann":
        raise ConfigurationError(f"unknown x boundary {x_boundary!r}")

    # y part: (1/dy_j) [(E_{j+1}-E_j)/h_n - (E_j-E_{j-1})/h_s]
    h = (dy[:-1] + dy[1:]) / 2
    up = (1.0 / (h * dy[:-1]))[:, None] * np.ones((1, nx))
    rows.append(idx[:-1].ravel()); cols.append(idx[1:].ravel()); vals.append(up.ravel())
    diag[:-1] -= up
    down = (1.0 / (h * dy[1:]))[:, None] * np.ones((1, nx))
    rows.append(idx[1:].ravel()); cols.append(idx[:-1].ravel()); vals.append(down.ravel())
    diag[1:] -= down
    for j in (0, ny - 1):
        diag[j, :] -= 1.0 / (dy[j] * dy[j] / 2)

    rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag.ravel())
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    return A


def solve_fundamental_mode(
    index_map: IndexMap,
    wavelength: float | None = None,
    *,
    x_boundary: str = "dirichlet",
    num_modes: int = 1,
) -> ModeSolution:
    """Find the guided quasi-TE mode with the largest real effective index.

    Shift-invert Arnoldi targets ``beta^2`` near ``(0.999 * k0 * max Re n)^2``;
    the shift sits above every guided ``beta^2``, so the eigenvalue nearest
    to it is the fundamental mode and one Ritz pair suffices.

    Raises
    ------
    NoGuidedModeError
        If no eigenvalue lies above the cladding index.
    SolverError
        On non-finite input, ARPACK non-convergence or excessive residual.
    """
    if x_boundary not in ("dirichlet", "neumann"):
        raise ConfigurationError(f"unknown x boundary {x_boundary!r}")
    wl = index_map.wavelength if wavelength is None else wavelength
    n = index_map.n
    if not np.all(np.isfinite(n)):
        raise SolverError("index map contains non-finite values")
    n_clad = index_map.cladding_index(x_walls=x_boundary != "neumann")
    n_max = float(n.real.max())
    if n_max <= n_clad:
        raise NoGuidedModeError(
            f"no pixel exceeds the cladding index {n_clad:.4f}; nothing can guide"
        )
    k0 = 2 * math.pi / (wl * 1e-3)
    eps = n**2
    dx = np.diff(index_map.x_edges)
    dy = np.diff(index_map.y_edges)
    A = _operator(eps, dx, dy, k0, x_boundary)
    sigma = (SHIFT_FACTOR * k0 * n_max) ** 2
    shifted = (A - sigma * sp.identity(A.shape[0], format="csc")).tocsc()
    try:
        lu = sla.splu(shifted, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SolverError(f"shifted operator is singular: {exc}") from None
    op_inv = sla.LinearOperator(A.shape, matvec=lu.solve, dtype=complex)
    # deterministic start vector concentrated on the high-index region
    v0 = (n.real - n_clad + 1e-3).ravel().astype(complex)
    try:
        mu, vecs = sla.eigs(op_inv, k=num_modes, tol=ARPACK_TOL, maxiter=MAX_ITER, v0=v0)
    except sla.ArpackNoConvergence as exc:
        res = None
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            res = _best_residual(A, 1.0 / exc.eigenvalues + sigma, exc.eigenvectors)
        raise SolverError(
            f"shift-invert iteration did not converge in {MAX_ITER} iterations", residual=res
        ) from None
    vals = 1.0 / mu + sigma

    neffs = np.sqrt(vals.astype(complex)) / k0
    neffs = np.where(neffs.real < 0, -neffs, neffs)
    guided = [i for i in np.argsort(-neffs.real) if neffs[i].real > n_clad]
    if not guided:
        raise NoGuidedModeError(
            f"no eigenvalue above the cladding index {n_clad:.4f} "
            f"(best Re n_eff {neffs.real.max():.4f})"
        )
    i = guided[0]
    v = vecs[:, i]
    lam = vals[i]
    residual = float(np.linalg.norm(A @ v - lam * v) / (abs(lam) * np.linalg.norm(v)))
    if residual > RESIDUAL_LIMIT:
        raise SolverError(f"eigenpair residual {residual:.3e} exceeds {RESIDUAL_LIMIT}", residual)
    v = v / np.linalg.norm(v)
    peak = v[np.argmax(np.abs(v))]
    v = v * (abs(peak) / peak)
    return ModeSolution(
        n_eff=complex(neffs[i]),
        field=v.reshape(n.shape),
        x_edges=index_map.x_edges,
        y_edges=index_map.y_edges,
        wavelength=wl,
        residual=residual,
    )


def _best_residual(A, vals, vecs):
    if vals is None or len(vals) == 0:
        return None
    res = [
        np.linalg.norm(A @ vecs[:, i] - vals[i] * vecs[:, i]) / (abs(vals[i]) * np.linalg.norm(vecs[:, i]))
        for i in range(len(vals))
    ]
    return float(min(res))


def insertion_loss_db_per_um(mode: ModeSolution, wavelength: float | None = None) -> float:
    """Modal power loss in dB/um from the imaginary part of ``n_eff``."""
    wl = mode.wavelength if wavelength is None else wavelength
    kappa = mode.kappa_eff
    if kappa < 0:
        if kappa < -1e-9:
            raise SolverError(f"mode shows gain (kappa_eff = {kappa:.3e})")
        kappa = 0.0
    return mat.absorption_db_per_um(kappa, wl)


def solve_cross_section(xs, wavelength, p=0.0, pcm=None, db=None) -> ModeSolution:
    return solve_fundamental_mode(build_index_map(xs, wavelength, p, pcm, db), wavelength)


def write_field_csv(mode: ModeSolution, path) -> None:
    """Write ``x_um,y_um,abs_E`` rows for the normalized field."""
    x = centers(mode.x_edges)
    y = centers(mode.y_edges)
    mag = mode.magnitude
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x_um,y_um,abs_E\n")
        for j, yj in enumerate(y):
            for i, xi in enumerate(x):
                fh.write(f"{xi:.6f},{yj:.6f},{mag[j, i]:.9e}\n")
