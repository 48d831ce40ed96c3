from __future__ import annotations

import math

import numpy as np
import pytest

from fhnbif.atlas import ParamBox, nontrivial_hopf_curves
from fhnbif.chareq import SyncMode, rightmost_spectrum
from fhnbif.errors import FloquetAccuracyError, TooShortError
from fhnbif.model import Params, RestKind, find_rest_points
from fhnbif.orbit.basin import basin_probe, classify_ic, random_ics
from fhnbif.orbit.bvp import BVPConfig, CycleBVP, cycle_from_hopf, solve_cycle_bvp
from fhnbif.orbit.continuation import CyclePoint
from fhnbif.orbit.detect import OrbitSummary, Quiescent, classify_sync, detect_orbit, phase_shift, sync_class
from fhnbif.orbit.events import CycleEventKind, detect_cycle_bifurcations
from fhnbif.orbit.floquet import floquet_multipliers
from fhnbif.sim import SimConfig, integrate

from .oracles import shooting_period

P0 = Params()


def _settled(p: Params, ic=(0.1, 0.1, 0.1, 0.1), t_end: float = 1000.0):
    return detect_orbit(integrate(p, list(ic), SimConfig(t_end=t_end, t_trans=t_end / 2)))


@pytest.fixture(scope="module")
def orbit_18():
    p = P0.replace(c=0.2, tau=1.8)
    res = _settled(p, t_end=1500.0)
    cyc = solve_cycle_bvp(p, res, BVPConfig(intervals=60))
    return p, res, cyc


@pytest.fixture(scope="module")
def small_unstable_cycle():
    """Cycle born at the nontrivial Hopf curve near tau = 0.12."""
    br = nontrivial_hopf_curves(ParamBox(tau=(0.0, 0.5), c=(0.9, 1.2)), j_max=0, max_step=0.01)[0]
    i = int(np.argmin(np.abs(br.tau - 0.12)))
    p = P0.replace(c=float(br.c[i]), tau=float(br.tau[i]))
    rest = find_rest_points(p)[0]
    return cycle_from_hopf(p, float(br.payload["omega"][i]), at=rest.state, free="c", amplitude=0.1)


def test_periodic_near_second_frequency(orbit_18):
    _, res, _ = orbit_18
    assert isinstance(res, OrbitSummary)
    assert res.period == pytest.approx(2 * math.pi / 0.8785, rel=0.05)
    assert res.period_spread < 1e-3


def test_quiescent_in_stability_window():
    res = _settled(P0.replace(c=0.2, tau=4.0))
    assert isinstance(res, Quiescent) and res.amplitude < 1e-4


def test_anti_phase_spiking_at_c_05():
    res = classify_ic(P0.replace(c=0.5, tau=1.2), [0.1] * 4)
    assert isinstance(res, OrbitSummary) and res.sync is SyncMode.ALMOST_ANTI_PHASE
    assert abs(res.phase_shift - math.pi) < math.pi / 4


def test_synchronized_at_small_delay():
    res = _settled(P0.replace(c=0.5, tau=0.1), ic=(0.1, 0.0, -0.1, 0.05))
    assert res.sync is SyncMode.ALMOST_SYNCHRONIZED


def test_anti_phase_at_c_02_tau_25():
    res = _settled(P0.replace(c=0.2, tau=2.5), ic=(0.1, 0.0, -0.1, 0.05))
    assert res.sync is SyncMode.ALMOST_ANTI_PHASE


def test_identical_waves_have_zero_shift():
    s = np.sin(2 * np.pi * np.arange(256) / 256)
    assert phase_shift(s, s) == 0.0
    prof = np.stack([s, s, s, s], axis=1)
    assert classify_sync(prof) == (0.0, SyncMode.ALMOST_SYNCHRONIZED)


def test_phase_shift_of_lagged_wave():
    n = 512
    t = 2 * np.pi * np.arange(n) / n
    assert phase_shift(np.sin(t), np.sin(t - 2.0)) == pytest.approx(2.0, abs=1e-3)


def test_sync_class_boundaries():
    assert sync_class(0.7) is SyncMode.ALMOST_SYNCHRONIZED
    assert sync_class(2 * math.pi - 0.7) is SyncMode.ALMOST_SYNCHRONIZED
    assert sync_class(math.pi / 2) is SyncMode.OTHER
    assert sync_class(math.pi + 0.7) is SyncMode.ALMOST_ANTI_PHASE


def test_too_short_window_raises():
    tr = integrate(P0.replace(c=0.2, tau=1.8), [0.1] * 4, SimConfig(t_end=600.0, t_trans=540.0))
    with pytest.raises(TooShortError):
        detect_orbit(tr)


def test_bvp_matches_simulation(orbit_18):
    _, res, cyc = orbit_18
    assert cyc.residual <= 1e-8
    assert cyc.period == pytest.approx(res.period, rel=1e-3)
    np.testing.assert_allclose(cyc.amplitude(), res.amplitude, atol=1e-3)


def test_bvp_profile_solves_the_delay_equation(orbit_18):
    p, _, cyc = orbit_18
    from fhnbif.model import rhs_batch

    s = np.linspace(0.0, 1.0, 333, endpoint=False) + 0.0013
    lhs = cyc.derivative(s) / cyc.period
    rhs = rhs_batch(p, cyc(s), cyc(s - p.tau / cyc.period))
    assert np.max(np.abs(lhs - rhs)) < 1e-4


@pytest.mark.parametrize("c", [0.5, 0.7, 1.0])
def test_zero_delay_bvp_matches_shooting(c):
    p = P0.replace(c=c, tau=0.0)
    res = _settled(p, ic=(0.5, 0.0, -0.3, 0.1), t_end=800.0)
    cyc = solve_cycle_bvp(p, res, BVPConfig(intervals=60, refine=True))
    t_shoot, _ = shooting_period(p, res.profile[0], res.period)
    assert abs(cyc.period - t_shoot) <= 1e-6


def test_floquet_stable_orbit(orbit_18):
    p, _, cyc = orbit_18
    mu = floquet_multipliers(p, cyc)
    assert np.min(np.abs(mu - 1.0)) < 1e-2
    summary = cyc.summary(mu)
    assert summary.stability.stable
    rest = np.delete(mu, np.argmin(np.abs(mu - 1.0)))
    assert np.all(np.abs(rest) < 1.0)


def test_floquet_accepts_sampled_orbit(orbit_18):
    p, res, cyc = orbit_18
    mu_s = floquet_multipliers(p, res)
    mu_c = floquet_multipliers(p, cyc)
    assert abs(abs(mu_s[1]) - abs(mu_c[1])) < 1e-2


def test_floquet_accuracy_guard(orbit_18):
    p, _, cyc = orbit_18
    with pytest.raises(FloquetAccuracyError):
        floquet_multipliers(p, cyc, n_cheb=2, h=cyc.period / 3)


def test_subcritical_cycle_is_unstable(small_unstable_cycle):
    cyc = small_unstable_cycle
    p = cyc.params
    assert cyc.residual <= 1e-8
    mu = floquet_multipliers(p, cyc)
    assert cyc.summary(mu).stability.index == 1
    # it coexists with a stable rest point
    rest = find_rest_points(p)[0]
    assert rest.kind is RestKind.NONTRIVIAL_PLUS
    assert rightmost_spectrum(p, rest).rightmost.real < 0


def test_antipodal_image_is_a_distinct_cycle(small_unstable_cycle):
    cyc = small_unstable_cycle
    twin = solve_cycle_bvp(cyc.params, cyc.antipodal(), BVPConfig(adapt=False))
    assert twin.residual <= 1e-8
    assert twin.period == pytest.approx(cyc.period, rel=1e-10)
    np.testing.assert_allclose(twin.mean(), -cyc.mean(), atol=1e-9)
    assert cyc.symmetry_defect() > 0.1


def test_two_attractors_at_c_0325():
    inv = basin_probe(P0.replace(c=0.325, tau=4.7756), [[0.1, 0.3, 0.4, 0.2], [1.0, 0.9, 0.8, 0.7]])
    assert len(inv.periodic) == 2 and inv.per_ic == [0, 1]


def test_periodic_and_rest_in_region_b():
    inv = basin_probe(P0.replace(c=1.0, tau=0.12), [(1.3, 1.5, 1.4, 1.0), (0.05, 0.03, 0.04, 0.2)])
    assert [a.kind for a in inv.attractors] == ["periodic", "rest"]
    assert inv.rest[0].rest.kind in (RestKind.NONTRIVIAL_PLUS, RestKind.NONTRIVIAL_MINUS)


def test_inventory_deterministic():
    p = P0.replace(c=1.0, tau=0.12)
    ics = random_ics(3)
    np.testing.assert_array_equal(ics, random_ics(3))
    a, b = basin_probe(p, ics), basin_probe(p, ics)
    assert a.per_ic == b.per_ic
    assert [x.period for x in a.attractors] == [x.period for x in b.attractors]


# synthetic branches for the event detector


def _point(par: float, s: float, mu=None, amp: float = 1.0, period: float = 10.0, sym: float = 1.0) -> CyclePoint:
    mesh = np.linspace(0.0, 1.0, 5)
    tmp = CycleBVP(P0, mesh, 4, np.zeros((16, 4)), period)
    prof = amp * np.sin(2 * np.pi * tmp.node_times())[:, None] * np.ones(4)
    cyc = CycleBVP(P0, mesh, 4, prof, period, residual=0.0)
    mu = None if mu is None else np.asarray([1.0, *mu], dtype=complex)
    return CyclePoint(cyc, par, s, multipliers=mu, symmetry=sym)


def test_fold_from_turning_point():
    pars = [0.0, 0.5, 0.8, 0.9, 0.8, 0.5]
    pts = [_point(c, i) for i, c in enumerate(pars)]
    ev = detect_cycle_bifurcations(pts)
    assert [e.kind for e in ev] == [CycleEventKind.FOLD]
    assert ev[0].param == pytest.approx(0.9, abs=0.02)


def test_torus_crossing():
    ang = 1.0
    pts = [_point(0.1 * i, i, mu=[r * np.exp(1j * ang), r * np.exp(-1j * ang)]) for i, r in enumerate([0.8, 0.9, 1.1, 1.2])]
    ev = detect_cycle_bifurcations(pts)
    assert [e.kind for e in ev] == [CycleEventKind.TORUS]
    assert ev[0].index == 1 and 0.1 < ev[0].param < 0.2
    assert ev[0].angle == pytest.approx(ang, abs=1e-6)


def test_period_doubling_crossing():
    pts = [_point(0.1 * i, i, mu=[m]) for i, m in enumerate([-0.8, -0.95, -1.05, -1.2])]
    ev = detect_cycle_bifurcations(pts)
    assert ev[0].kind is CycleEventKind.PERIOD_DOUBLING


def test_pitchfork_of_cycles_needs_symmetry_change():
    mus = [0.8, 0.9, 1.1, 1.2]
    syms = [0.0, 0.0, 0.0, 0.0]
    pts = [_point(0.1 * i, i, mu=[m], sym=s) for i, (m, s) in enumerate(zip(mus, syms))]
    ev = detect_cycle_bifurcations(pts)
    assert ev[0].kind is CycleEventKind.PITCHFORK_CYCLE


def test_homoclinic_proxy_and_hopf_end():
    periods = [10.0, 20.0, 100.0, 600.0]
    pts = [_point(1.0 - 0.01 * i, i, period=t) for i, t in enumerate(periods)]
    assert CycleEventKind.HOMOCLINIC_PROXY in [e.kind for e in detect_cycle_bifurcations(pts)]
    amps = [1e-4, 0.2, 0.5, 0.7]
    pts = [_point(0.3 + 0.01 * i, i, amp=a) for i, a in enumerate(amps)]
    ev = [e for e in detect_cycle_bifurcations(pts) if e.kind is CycleEventKind.HOPF_ENDPOINT]
    assert len(ev) == 1 and ev[0].index == 0


def test_empty_and_single_point_branch():
    assert detect_cycle_bifurcations([]) == []
    assert detect_cycle_bifurcations([_point(0.0, 0.0)]) == []
