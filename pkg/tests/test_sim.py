from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhnbif.errors import DivergenceError, HistoryWindowError
from fhnbif.model import Params
from fhnbif.orbit.detect import OrbitSummary, Quiescent, detect_orbit
from fhnbif.sim import HistoryTrajectory, SimConfig, default_step, integrate

from .oracles import ode_reference, rk4_ode_errors

P0 = Params()


def _sine_history(n: int, t_end: float = 2.0) -> HistoryTrajectory:
    t = np.linspace(0.0, t_end, n + 1)
    vals = np.stack([np.sin(t), np.cos(t), np.sin(2 * t), np.cos(3 * t)], axis=1)
    ders = np.stack([np.cos(t), -np.sin(t), 2 * np.cos(2 * t), -3 * np.sin(3 * t)], axis=1)
    return HistoryTrajectory(t, vals, ders)


def _sine_exact(t):
    return np.stack([np.sin(t), np.cos(t), np.sin(2 * t), np.cos(3 * t)], axis=1)


def test_nodes_are_reproduced_exactly():
    tr = _sine_history(20)
    np.testing.assert_array_equal(tr.sample(tr.mesh), tr.values)


def test_hermite_exact_for_cubics():
    t = np.linspace(-1.0, 1.0, 7)
    poly = lambda s: s**3 - 2 * s**2 + 0.5 * s - 1  # noqa: E731
    dpoly = lambda s: 3 * s**2 - 4 * s + 0.5  # noqa: E731
    tr = HistoryTrajectory(t, np.tile(poly(t)[:, None], 4), np.tile(dpoly(t)[:, None], 4))
    s = np.linspace(-1.0, 1.0, 101)
    np.testing.assert_allclose(tr.sample(s)[:, 0], poly(s), atol=1e-14)


def test_interpolation_is_fourth_order():
    s = np.linspace(0.0, 2.0, 997)[1:-1]
    errs = [np.max(np.abs(_sine_history(n).sample(s) - _sine_exact(s))) for n in (10, 20, 40)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 12) & (ratios < 20))


def test_sample_outside_window():
    with pytest.raises(HistoryWindowError):
        _sine_history(10).sample(2.5)


def test_history_validation():
    with pytest.raises(ValueError):
        HistoryTrajectory(np.array([0.0, 0.0]), np.zeros((2, 4)), np.zeros((2, 4)))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(t_end=10.0, t_trans=10.0)
    with pytest.raises(ValueError):
        SimConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        SimConfig(h=0.5).step_for(1.0)
    assert SimConfig(h=0.25).step_for(1.0) == 0.25
    assert default_step(0.04) == pytest.approx(0.005) and default_step(0.0) == 0.01


def test_deterministic():
    p = P0.replace(c=0.2, tau=1.8)
    a = integrate(p, [0.1, 0.0, -0.2, 0.05], SimConfig(t_end=50.0))
    b = integrate(p, [0.1, 0.0, -0.2, 0.05], SimConfig(t_end=50.0))
    np.testing.assert_array_equal(a.values, b.values)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=4, max_size=4), st.floats(0.0, 1.5), st.sampled_from([0.0]) | st.floats(0.05, 3.0))
def test_antipodal_equivariance(x0, c, tau):
    p = P0.replace(c=c, tau=tau)
    a = integrate(p, x0, SimConfig(t_end=10.0))
    b = integrate(p, -np.asarray(x0), SimConfig(t_end=10.0))
    np.testing.assert_array_equal(b.values, -a.values)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4), st.sampled_from([0.0]) | st.floats(0.05, 5.0))
def test_uncoupled_solutions_decay(x0, tau):
    # the second neuron is only weakly damped (rate (a - b2)/2)
    tr = integrate(P0.replace(c=0.0, tau=tau), x0, SimConfig(t_end=1500.0))
    assert np.max(np.abs(tr.values[-1])) < 1e-3


def test_zero_delay_matches_ode_solver():
    p = P0.replace(c=0.7, tau=0.0)
    x0 = [0.4, 0.1, -0.6, 0.0]
    tr = integrate(p, x0, SimConfig(t_end=20.0, h=0.005))
    np.testing.assert_allclose(tr.values[-1], ode_reference(p, x0, 20.0), atol=1e-8)


def test_rk4_order():
    errs = rk4_ode_errors(P0.replace(c=0.5), [0.02, 0.01, 0.005])
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 14) & (ratios < 18))


def test_transient_and_stride():
    tr = integrate(P0.replace(c=0.2, tau=1.0), [0.1] * 4, SimConfig(t_end=10.0, t_trans=4.0, record_stride=10))
    assert tr.t0 == pytest.approx(4.0) and tr.t1 == pytest.approx(10.0)
    np.testing.assert_allclose(np.diff(tr.mesh), 0.1)


def test_restart_from_history_continues_the_run():
    p = P0.replace(c=0.2, tau=1.8)
    full = integrate(p, [0.3, 0.0, -0.1, 0.0], SimConfig(t_end=40.0))
    first = integrate(p, [0.3, 0.0, -0.1, 0.0], SimConfig(t_end=20.0))
    second = integrate(p, first.tail(5.0), SimConfig(t_end=20.0))
    np.testing.assert_allclose(second.values[-1], full.values[-1], atol=1e-12)
    assert second.t1 == pytest.approx(40.0)


def test_short_history_rejected():
    p = P0.replace(c=0.2, tau=1.8)
    tr = integrate(p, [0.1] * 4, SimConfig(t_end=5.0))
    with pytest.raises(HistoryWindowError):
        integrate(p, tr.tail(1.0), SimConfig(t_end=1.0))


def test_oversized_run_rejected_before_allocation():
    with pytest.raises(ValueError):
        integrate(P0.replace(tau=1e-7), [0.1] * 4, SimConfig(t_end=150.0))


def test_divergence_guard():
    with pytest.raises(DivergenceError):
        integrate(P0.replace(tau=0.0), [50.0, 0.0, 0.0, 0.0], SimConfig(t_end=5.0, h=0.1))


def test_small_delay_settles_to_rest():
    p = P0.replace(c=0.2, tau=0.15)
    tr = integrate(p, [0.5, 0.0, -0.5, 0.0], SimConfig(t_end=400.0, t_trans=300.0))
    res = detect_orbit(tr)
    assert isinstance(res, Quiescent) and np.max(np.abs(res.state)) < 1e-4


def test_delay_beyond_first_crossing_oscillates():
    p = P0.replace(c=0.2, tau=1.8)
    tr = integrate(p, [0.1] * 4, SimConfig(t_end=1000.0, t_trans=500.0))
    res = detect_orbit(tr)
    assert isinstance(res, OrbitSummary)
    assert res.period == pytest.approx(7.15, rel=0.05)
