import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phxmem.errors import ConfigurationError, NoGuidedModeError, SolverError
from phxmem.grid import graded_axis, symmetric_axis
from phxmem.modesolver import (
    CrossSection,
    IndexMap,
    build_index_map,
    insertion_loss_db_per_um,
    solve_cross_section,
    solve_fundamental_mode,
    write_field_csv,
)

N_SI = 3.47641
N_OX = 1.444024

# fundamental TE slab indices at 1550 nm (Si core in SiO2), root of
# k0 h sqrt(n1^2 - n^2) = 2 atan(sqrt(n^2 - n2^2) / sqrt(n1^2 - n^2)) by mpmath
SLAB_TE = {0.15: 2.53972205435937, 0.22: 2.84819005754417, 0.30: 3.04958048398037}


def slab_map(h, pitch=0.005):
    y = graded_axis([-1.5, -h / 2, h / 2, 1.5], -h / 2 - 0.2, h / 2 + 0.2, pitch)
    x = np.linspace(-0.5, 0.5, 6)
    yc = 0.5 * (y[1:] + y[:-1])
    n = np.where(np.abs(yc) < h / 2, N_SI, N_OX)[:, None] * np.ones((1, 5))
    return IndexMap(x, y, n.astype(complex), 1550.0)


@pytest.mark.parametrize("h", sorted(SLAB_TE))
def test_slab_limit_matches_transcendental_solution(h):
    mode = solve_fundamental_mode(slab_map(h), x_boundary="neumann")
    assert abs(mode.n_eff.real - SLAB_TE[h]) <= 1e-3
    assert abs(mode.n_eff.imag) < 1e-12


def test_slab_error_shrinks_with_pitch():
    coarse = abs(solve_fundamental_mode(slab_map(0.22, 0.01), x_boundary="neumann").n_eff.real - SLAB_TE[0.22])
    fine = abs(solve_fundamental_mode(slab_map(0.22, 0.005), x_boundary="neumann").n_eff.real - SLAB_TE[0.22])
    assert fine < coarse / 3


def test_bare_waveguide_is_lossless():
    xs = CrossSection(pcm_thickness=0.0)
    mode = solve_cross_section(xs, 1550.0)
    assert N_OX < mode.n_eff.real < N_SI
    assert insertion_loss_db_per_um(mode) <= 1e-6


def test_lossless_amorphous_film_reports_no_loss(db):
    xs = CrossSection(pcm_thickness=30.0)
    mode = solve_cross_section(xs, 1550.0, 0.0, db["Sb2Se3"])
    assert insertion_loss_db_per_um(mode) <= 1e-6


def test_gst_film_raises_index_and_loss(db):
    bare = solve_cross_section(CrossSection(pcm_thickness=0.0), 1550.0)
    amor = solve_cross_section(CrossSection(), 1550.0, 0.0, db["GST"])
    crys = solve_cross_section(CrossSection(), 1550.0, 1.0, db["GST"])
    assert bare.n_eff.real < amor.n_eff.real < crys.n_eff.real
    assert 0 < insertion_loss_db_per_um(amor) < insertion_loss_db_per_um(crys)


def test_field_is_normalized_with_real_peak():
    mode = solve_cross_section(CrossSection(pcm_thickness=0.0), 1550.0)
    assert np.linalg.norm(mode.field) == pytest.approx(1.0)
    peak = mode.field.ravel()[np.argmax(np.abs(mode.field))]
    assert abs(peak.imag) < 1e-12 and peak.real > 0
    assert mode.residual < 1e-6


def test_index_map_pixel_rule(db):
    xs = CrossSection()
    imap = build_index_map(xs, 1550.0, 0.0, db["GST"])
    # 20 nm film at 10 nm pitch: two rows across the 470 nm strip
    assert imap.pixel_count("pcm") == 2 * np.count_nonzero(np.abs(imap.x) < 0.235)
    bare = build_index_map(xs, 1550.0, 0.0, None)
    assert bare.shape == imap.shape and bare.pixel_count("pcm") == 0


def test_uniform_cladding_has_no_guided_mode():
    x = np.linspace(-1, 1, 11)
    y = np.linspace(-1, 1, 11)
    imap = IndexMap(x, y, np.full((10, 10), N_OX, dtype=complex), 1550.0)
    with pytest.raises(NoGuidedModeError):
        solve_fundamental_mode(imap)


def test_non_finite_index_rejected():
    imap = slab_map(0.22)
    imap.n[3, 2] = np.nan
    with pytest.raises(SolverError):
        solve_fundamental_mode(imap, x_boundary="neumann")


def test_unknown_boundary_rejected():
    with pytest.raises(ConfigurationError):
        solve_fundamental_mode(slab_map(0.22), x_boundary="periodic")


@pytest.mark.parametrize(
    "kwargs",
    [dict(wg_width=-1), dict(pcm_thickness=-5), dict(grid_pitch=30), dict(window_width=1.0)],
)
def test_cross_section_validation(kwargs):
    with pytest.raises(ConfigurationError):
        CrossSection(**kwargs)


def test_field_csv(tmp_path):
    mode = solve_cross_section(CrossSection(pcm_thickness=0.0), 1550.0)
    path = tmp_path / "f.csv"
    write_field_csv(mode, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x_um", "y_um", "abs_E"]
    assert len(rows) - 1 == mode.field.size


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(0.05, 0.5),
    b=st.floats(0.05, 0.5),
    pitch=st.floats(0.005, 0.03),
    growth=st.floats(1.05, 1.5),
)
def test_graded_axis_hits_interfaces(a, b, pitch, growth):
    bps = [-2.0, -a, b, 2.0]
    edges = graded_axis(bps, -a - 0.1, b + 0.1, pitch, growth)
    d = np.diff(edges)
    assert np.all(d > 0)
    assert edges[0] == -2.0 and edges[-1] == 2.0
    for bp in bps:
        assert np.min(np.abs(edges - bp)) < 1e-9
    inside = (edges[:-1] >= -a - 0.1 - 1e-9) & (edges[1:] <= b + 0.1 + 1e-9)
    assert np.all(d[inside] <= pitch + 1e-9)
    assert d.max() <= 4 * pitch + 1e-9


def test_symmetric_axis_is_mirror_image():
    e = symmetric_axis([0.235, 2.0], 0.435, 0.01)
    assert np.allclose(e, -e[::-1])
