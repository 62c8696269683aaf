import itertools
import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phxmem import array as arr
from phxmem.array import ArraySpec, address, laser_power_dbm, max_set_energy, wavelength_plan
from phxmem.errors import ConfigurationError, DomainError


def quiet(spec):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", arr.ReadDisturbWarning)
        return laser_power_dbm(spec)


def test_single_cell_lossless():
    b = quiet(ArraySpec(1, 1, cell_loss=0.0))
    assert b.P_lsr == pytest.approx(-11.5, abs=1e-12)


def test_twenty_by_twenty_budget():
    gsst = quiet(ArraySpec(20, 20, cell_loss=0.0))
    gst = quiet(ArraySpec(20, 20, cell_loss=0.35))
    assert gsst.P_lsr == pytest.approx(-11.7 + 418 * 0.1 + 0.2, abs=1e-9)
    assert gst.P_lsr - gsst.P_lsr == pytest.approx(0.35, abs=1e-12)


def test_breakdown_sums_to_budget():
    b = quiet(ArraySpec(7, 3, cell_loss=0.2))
    assert b.P_lsr == pytest.approx(b.pd_sensitivity + b.total_loss, abs=1e-9)
    assert [name for name, _ in b.breakdown] == ["ring_pass", "ring_drop", "cell_amorphous"]


def test_disturb_warning_above_ceiling():
    with pytest.warns(arr.ReadDisturbWarning):
        b = laser_power_dbm(ArraySpec(20, 20, cell_loss=0.0))
    assert b.disturb and b.feasible is False
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not laser_power_dbm(ArraySpec(5, 5, cell_loss=0.0)).disturb


@given(M=st.integers(1, 40), N=st.integers(1, 40), Lp=st.floats(0.01, 1.0))
def test_budget_strictly_increasing_in_size(M, N, Lp):
    base = quiet(ArraySpec(M, N, pass_loss=Lp, cell_loss=0.0)).P_lsr
    assert quiet(ArraySpec(M + 1, N, pass_loss=Lp, cell_loss=0.0)).P_lsr > base
    assert quiet(ArraySpec(M, N + 1, pass_loss=Lp, cell_loss=0.0)).P_lsr > base


@given(bits=st.integers(0, 8))
def test_budget_independent_of_bits(bits):
    a = quiet(ArraySpec(10, 10, cell_loss=0.1, bits_per_cell=bits)).P_lsr
    b = quiet(ArraySpec(10, 10, cell_loss=0.1)).P_lsr
    assert a == b


def test_cell_loss_from_cell_model():
    from phxmem.cell import CellDesign, cell_model

    design = CellDesign("GST")
    b = quiet(ArraySpec(1, 1, cell=design))
    expected = cell_model(design).insertion_loss() * design.length
    assert dict(b.breakdown)["cell_amorphous"] == pytest.approx(expected)


def test_max_set_energy():
    assert max_set_energy(ArraySpec(20, 20), 175.0) == pytest.approx(70.0)
    assert max_set_energy(ArraySpec(1, 1), 248.0) == pytest.approx(0.248)
    with pytest.raises(DomainError):
        max_set_energy(ArraySpec(), -1.0)


@given(M=st.integers(1, 30), N=st.integers(1, 30), k=st.integers(1, 5), e=st.floats(0, 1000))
def test_set_energy_exactly_linear(M, N, k, e):
    assert max_set_energy(ArraySpec(M * k, N), e) == pytest.approx(k * max_set_energy(ArraySpec(M, N), e), rel=1e-15)


def test_fsr_hand_value():
    # 1550^2 / (4.2 * 2 * pi * 10^4) = 2402500 / 263893.78 = 9.104042 nm
    plan = wavelength_plan(ArraySpec(10, 1, ring_radius=10.0), 1550.0)
    assert plan.fsr == pytest.approx(9.104042, abs=1e-6)
    assert plan.feasible  # 10 * 0.85 = 8.5 nm < 9.104 nm
    assert not wavelength_plan(ArraySpec(11, 1, ring_radius=10.0)).feasible
    assert len(plan.channels) == 10


def test_fsr_inverse_in_radius():
    a = wavelength_plan(ArraySpec(ring_radius=5.0)).fsr
    b = wavelength_plan(ArraySpec(ring_radius=10.0)).fsr
    assert a / b == pytest.approx(2.0, rel=1e-9)


def test_single_column_always_feasible():
    assert wavelength_plan(ArraySpec(1, 4, ring_radius=200.0)).feasible


def test_address_endpoints_and_bijection():
    spec = ArraySpec(8, 8)
    assert address(1, 1, spec) == ("S1", 1550.0)
    port, wl = address(8, 8, spec)
    assert port == "S8" and wl == pytest.approx(1550.0 + 7 * 0.85)
    seen = {address(r, c, spec) for r, c in itertools.product(range(1, 9), repeat=2)}
    assert len(seen) == 64
    with pytest.raises(DomainError):
        address(0, 1, spec)
    with pytest.raises(DomainError):
        address(1, 9, spec)


@pytest.mark.parametrize("kw", [dict(M=0), dict(N=0), dict(pass_loss=-0.1), dict(channel_spacing=0)])
def test_spec_validation(kw):
    with pytest.raises(ConfigurationError):
        ArraySpec(**kw)


def test_fsr_requires_positive_radius():
    with pytest.raises(DomainError):
        arr.free_spectral_range(1550.0, 4.2, 0.0)
    assert math.isfinite(arr.free_spectral_range(1550.0, 4.2, 1.0))
