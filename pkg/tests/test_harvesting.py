import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rfcharge.errors import InvalidParameterError
from rfcharge.harvesting import (DemandModel, EhParams, activation_probability, buffer_step,
                                 harvested_dc, harvested_dc_slope, read_demand_trace, rf_power,
                                 sample_demand_trace, sample_demands, transmit_power,
                                 write_demand_trace)
from rfcharge.geometry import default_user_ring


def test_rf_power_cases():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert rf_power(a, np.zeros((8, 2))) == 0.0
    w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    w -= a * (a.conj() @ w) / (a.conj() @ a)
    assert rf_power(a, w) < 1e-24
    c = 1.7 - 0.3j
    assert np.isclose(rf_power(a, c * a / np.linalg.norm(a)), abs(c) ** 2 * np.vdot(a, a).real)
    with pytest.raises(InvalidParameterError):
        rf_power(a, np.ones((7, 1)))


def test_transmit_power_cases():
    assert transmit_power(np.zeros((4, 3))) == 0.0
    assert np.isclose(transmit_power(np.eye(4)[:, :1]), 1.0)
    W = np.ones((4, 3)) * np.sqrt(2.0 / (3 * 4))
    assert np.isclose(transmit_power(W), 2.0)


def test_harvester_anchor_points(eh):
    assert harvested_dc(0.0, eh) == 0.0
    assert abs(harvested_dc(0.003, eh) - 0.01) < 1e-8
    assert harvested_dc(1e3, eh) == pytest.approx(0.02, abs=1e-15)
    assert harvested_dc(0.03, eh) >= 0.02 * (1 - 1e-6)
    with pytest.raises(InvalidParameterError):
        harvested_dc(-1e-3, eh)


def test_harvester_monotone_on_grid(eh):
    p = np.linspace(0.0, 0.02, 20001)
    dc = harvested_dc(p, eh)
    assert np.all(np.diff(dc) >= 0)
    assert np.all((dc >= 0) & (dc <= eh.p_sat))


def test_harvester_slope_matches_difference(eh):
    p = np.array([0.001, 0.0025, 0.003, 0.0035, 0.005])
    h = 1e-8
    fd = (harvested_dc(p + h, eh) - harvested_dc(p - h, eh)) / (2 * h)
    assert np.allclose(harvested_dc_slope(p, eh), fd, rtol=1e-5)


def test_bad_params_rejected():
    with pytest.raises(InvalidParameterError):
        EhParams(p_sat=0.0)
    with pytest.raises(InvalidParameterError):
        EhParams(p_idle=0.3)


@pytest.mark.parametrize("b,p_dc,d,expect_b,expect_sat", [
    (0.050, 0.005, 0.010, 0.04499, True),
    (0.005, 0.0, 0.010, 0.005, False),
    (0.199, 0.005, 0.0, 0.2, True),
])
def test_buffer_examples(eh, b, p_dc, d, expect_b, expect_sat):
    b_next, sat = buffer_step(b, p_dc, d, eh)
    assert sat is expect_sat
    assert b_next == pytest.approx(expect_b, abs=1e-15)


def test_harvest_first_counts_this_slot_income(eh):
    _, sat = buffer_step(0.005, 0.010, 0.010, eh)
    assert not sat
    b_next, sat = buffer_step(0.005, 0.010, 0.010, eh, harvest_first=True)
    assert sat and b_next == pytest.approx(0.005 - 1e-5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.2), st.floats(0, 0.02), st.floats(0, 0.05), st.booleans())
def test_buffer_stays_in_box(b, p_dc, d, hf):
    eh = EhParams()
    b_next, sat = buffer_step(b, p_dc, d, eh, hf)
    assert 0.0 <= b_next <= eh.b_max
    if sat and b + p_dc - d - eh.p_idle <= eh.b_max:
        assert b_next - b == pytest.approx(p_dc - d - eh.p_idle, abs=1e-15)


def test_demand_model_validation():
    with pytest.raises(InvalidParameterError):
        DemandModel(theta=1.5)
    with pytest.raises(InvalidParameterError):
        DemandModel(d_max=0.055)
    assert DemandModel().max_bursts == 5


def test_activation_at_epicenter_is_certain():
    assert activation_probability(0.0) == 1.0


def test_demand_support_and_geometric_shape():
    rng = np.random.default_rng(1)
    users = default_user_ring(4)
    tr = sample_demand_trace(rng, users, DemandModel(), 20000)
    units = tr / 0.01
    assert np.allclose(units, np.round(units)) and units.min() >= 0 and units.max() <= 5
    n = np.round(units[units > 0]).astype(int)
    # P(n=1) = 0.5 / (1 - 0.5^5) after truncation
    assert np.mean(n == 1) == pytest.approx(0.5 / (1 - 0.5 ** 5), abs=0.015)


def test_device_at_every_epicenter_always_active():
    class Fixed:
        def uniform(self, lo, hi):
            return np.array([1.0, 1.0])
    rng = np.random.default_rng(2)
    pos = np.array([[1.0, 1.0, 2.0]])
    d = [sample_demands(rng, pos, DemandModel(), Fixed())[0] for _ in range(200)]
    assert min(d) > 0


def test_trace_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    tr = sample_demand_trace(rng, default_user_ring(3), DemandModel(), 50)
    path = tmp_path / "trace.csv"
    write_demand_trace(path, tr)
    assert path.read_text().splitlines()[0] == "slot,device,demand_mW"
    assert np.allclose(read_demand_trace(path), tr, rtol=0, atol=1e-15)
