import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phxmem import cell as cellmod
from phxmem.cell import CellDesign, bit_capacity, contrast, levels_for, required_fraction, transmission
from phxmem.errors import CapacityError, DomainError
from phxmem.modesolver import CrossSection

GST = CellDesign("GST")
GSST = CellDesign("GSST", CrossSection(pcm_thickness=40.0))


@pytest.fixture(scope="module")
def gst():
    return cellmod.cell_model(GST)


@pytest.mark.parametrize(
    "dT, margin, levels, bits",
    [(0.96, 0.015, 64, 6), (0.0, 0.015, 0, 0), (0.30, 0.015, 20, 4), (0.029, 0.015, 1, 0), (0.03, 0.015, 2, 1)],
)
def test_bit_capacity_examples(dT, margin, levels, bits):
    assert levels_for(dT, margin) == levels
    assert bit_capacity(dT, margin) == bits


@settings(max_examples=300)
@given(a=st.floats(0, 1), b=st.floats(0, 1), m=st.floats(1e-3, 0.5), n=st.floats(1e-3, 0.5))
def test_bit_capacity_monotone(a, b, m, n):
    lo, hi = sorted((a, b))
    assert bit_capacity(lo, m) <= bit_capacity(hi, m)
    small, big = sorted((m, n))
    assert bit_capacity(a, big) <= bit_capacity(a, small)


def test_energy_bookkeeping(gst):
    for p in np.linspace(0, 1, 21):
        T, R, A = gst.transmission(float(p))
        assert T + R + A == pytest.approx(1.0, abs=1e-9)
        assert 0 <= T <= 1 and 0 <= R <= 1 and 0 <= A <= 1


@pytest.mark.parametrize("design", [GST, GSST], ids=["GST", "GSST"])
def test_transmission_non_increasing(design):
    model = cellmod.cell_model(design)
    T = [model.transmission(float(p)).T for p in np.linspace(0, 1, 101)]
    assert all(b <= a + 1e-12 for a, b in zip(T, T[1:]))


def test_bare_cell_transmits_everything():
    bare = CellDesign("GST", CrossSection(pcm_thickness=0.0))
    T, R, A = transmission(bare, 0.5)
    assert T == pytest.approx(1.0, abs=1e-9)
    c = contrast(bare)
    assert c.delta_T == pytest.approx(0.0, abs=1e-12) and c.delta_P == pytest.approx(0.0, abs=1e-12)


def test_zero_length_cell_only_has_junction_terms(gst):
    short = cellmod.cell_model(GST.with_(length=0.0))
    for p in (0.0, 1.0):
        n_p, eta = short.modal(p)
        n_b = short.bare.n_eff
        R_f = abs((n_p - n_b) / (n_p + n_b)) ** 2
        T, R, A = short.transmission(p)
        assert T == pytest.approx(((1 - R_f) * eta) ** 2, rel=1e-12)
        assert A == pytest.approx(0.0, abs=1e-15)


def test_gst_reference_contrast():
    c = contrast(GST)
    assert c.delta_T >= 0.7 and c.delta_P >= 0.7
    assert not c.flags


def test_gsst_contrast_close_to_gst():
    g, s = contrast(GST), contrast(GSST)
    assert abs(s.delta_T - g.delta_T) <= 0.2 * g.delta_T


def test_sb2se3_contrast_is_mismatch_only():
    c = contrast(CellDesign("Sb2Se3", CrossSection(pcm_thickness=40.0)))
    assert c.delta_P <= 0.01
    assert c.delta_T > 0


def test_interior_fraction_close_to_direct_solve(gst):
    from phxmem.modesolver import build_index_map, solve_fundamental_mode

    for p in (0.33, 0.77):
        direct = solve_fundamental_mode(build_index_map(GST.cross_section, 1550.0, p, gst.pcm), 1550.0)
        interp, _ = gst.modal(p)
        assert abs(interp - direct.n_eff) < 1e-4


def test_level_zero_is_exactly_amorphous():
    assert required_fraction(GST, 0, 2) == 0.0


def test_two_bit_top_level_fraction():
    p = required_fraction(GST, 3, 2)
    assert 0.1 <= p <= 0.3


def test_required_fraction_against_dense_scan(gst):
    grid = np.linspace(0.0, 1.0, 10_001)
    T0 = gst.transmission(0.0).T
    drop = np.array([T0 - gst.transmission(float(p)).T for p in grid])
    prev = 0.0
    for level in range(0, 32):
        p = required_fraction(gst, level, 5)
        target = level * GST.margin
        first = grid[np.argmax(drop >= target)]
        assert abs(p - first) <= 1e-4 + 1e-4
        # the returned fraction always meets its level
        assert T0 - gst.transmission(p).T >= target - 1e-12
        assert p >= prev
        prev = p


def test_too_many_bits_is_capacity_error():
    with pytest.raises(CapacityError, match="bits"):
        required_fraction(GST, 1, 7)


def test_level_out_of_range():
    with pytest.raises(DomainError):
        required_fraction(GST, 4, 2)


def test_invalid_design():
    with pytest.raises(DomainError):
        CellDesign("GST", margin=0.0)
    with pytest.raises(DomainError):
        CellDesign("GST", length=-1.0)
    with pytest.raises(DomainError):
        transmission(GST, 1.5)


def test_footprint_and_description():
    assert GST.footprint == pytest.approx(2.0 * 0.47)
    assert "GST 20 nm x 470 nm x 2 um" == GST.describe()


def test_level_table_spacing():
    rows = cellmod.level_table(GST, 2)
    T0 = rows[0][2]
    for level, p, T in rows:
        assert T <= T0 - level * GST.margin + 1e-12
    assert math.isclose(rows[0][1], 0.0)
