from __future__ import annotations

import numpy as np
import pytest

from fhnbif.atlas import (
    BranchKind,
    Codim2Kind,
    RegimeLabel,
    classify_regime,
    codim2_points,
    continue_cycle_branch,
    nontrivial_hopf_curves,
    pitchfork_line,
    trivial_hopf_curves,
)
from fhnbif.chareq import char_eval, pitchfork_coupling, rightmost_spectrum
from fhnbif.model import Params, RestKind, find_rest_points
from fhnbif.orbit.basin import ProbeConfig
from fhnbif.orbit.bvp import BVPConfig, solve_cycle_bvp
from fhnbif.orbit.continuation import ContinuationConfig
from fhnbif.orbit.detect import detect_orbit
from fhnbif.sim import SimConfig, integrate

P0 = Params()
STEP = 0.05


@pytest.fixture(scope="module")
def atlas():
    trivial = trivial_hopf_curves(max_step=STEP)
    nontrivial = nontrivial_hopf_curves(max_step=STEP)
    pf = pitchfork_line(max_step=STEP)
    return trivial, nontrivial, pf, codim2_points(trivial + nontrivial + [pf])


def _nearest(branches, tau, c):
    best = None
    for b in branches:
        i = int(np.argmin(np.hypot(b.tau - tau, b.c - c)))
        d = float(np.hypot(b.tau[i] - tau, b.c[i] - c))
        if best is None or d < best[0]:
            best = (d, b, i)
    return best


def test_k2_j0_branch_through_tau0(atlas):
    trivial = atlas[0]
    d, b, i = _nearest(trivial, 1.6209, 0.2)
    assert d <= STEP
    assert b.distance_to(1.63, 0.2) <= 0.01
    assert (b.payload["k"][i], b.payload["j"][i]) == (2, 0)


def test_first_branch_leaves_tau_zero_at_ode_hopf(atlas):
    d, b, _ = _nearest(atlas[0], 0.0, 0.3974)
    assert d <= 1e-3
    assert b.c[np.argmin(b.tau)] == pytest.approx(0.3974, abs=1e-3)


def test_first_branch_meets_pitchfork(atlas):
    d, _, _ = _nearest(atlas[0], 0.5219, 0.6285)
    assert d <= 2e-3


def test_nontrivial_branch_leaves_tau_zero(atlas):
    d, _, _ = _nearest(atlas[1], 0.0, 0.9751)
    assert d <= 2e-3


def test_polyline_spacing_and_residuals(atlas):
    trivial, nontrivial, _, _ = atlas
    for b in trivial + nontrivial:
        step = np.hypot(np.diff(b.tau), np.diff(b.c))
        assert np.all(step <= STEP * (1 + 1e-9)), b.name
        assert np.max(b.payload["residual"]) <= 1e-7, b.name
        assert np.all((b.tau >= 0) & (b.tau <= 9) & (b.c >= 0) & (b.c <= 1.4))


def test_trivial_branch_points_are_roots(atlas):
    for b in atlas[0]:
        for i in range(0, len(b), 25):
            p = P0.replace(c=float(b.c[i]), tau=float(b.tau[i]))
            assert abs(complex(char_eval(p, 1j * b.payload["omega"][i]))) <= 1e-7


def test_nontrivial_branch_points_have_imaginary_pair(atlas):
    for b in atlas[1]:
        for i in range(1, len(b) - 1, 40):
            p = P0.replace(c=float(b.c[i]), tau=float(b.tau[i]))
            rest = find_rest_points(p)[0]
            w = b.payload["omega"][i]
            sp = rightmost_spectrum(p, rest)
            assert np.min(np.abs(sp.eigenvalues - 1j * w)) <= 1e-6


def test_spectral_crossing_agrees_with_closed_form(atlas):
    # brentq on the rightmost real part along tau at fixed c
    from scipy.optimize import brentq

    b = next(b for b in atlas[0] if b.distance_to(1.6209, 0.2) < STEP)
    for c in (0.15, 0.3):
        i = int(np.argmin(np.abs(b.c - c)))
        cs, ts = b.c[i - 1 : i + 2], b.tau[i - 1 : i + 2]
        order = np.argsort(cs)
        tau_b = float(np.interp(c, cs[order], ts[order]))
        f = lambda t: rightmost_spectrum(P0.replace(c=c, tau=t)).rightmost.real  # noqa: E731
        tau_s = brentq(f, tau_b - 0.1, tau_b + 0.1, xtol=1e-7)
        assert abs(tau_s - tau_b) <= 1e-3


def test_pitchfork_line_is_constant(atlas):
    pf = atlas[2]
    assert pf.kind is BranchKind.PITCHFORK
    np.testing.assert_allclose(pf.c, 0.6285, atol=5e-4)
    assert np.ptp(pf.c) == 0.0 and pf.tau[0] == 0.0 and pf.tau[-1] == 9.0


@pytest.mark.parametrize("tau", [0.0, 2.0, 7.5])
def test_pitchfork_line_separates_rest_counts(tau):
    c_p = pitchfork_coupling(P0)
    assert len(find_rest_points(P0.replace(c=c_p - 1e-3, tau=tau))) == 1
    assert len(find_rest_points(P0.replace(c=c_p + 1e-3, tau=tau))) == 3
    lo = char_eval(P0.replace(c=c_p - 1e-3, tau=tau), 0.0)
    hi = char_eval(P0.replace(c=c_p + 1e-3, tau=tau), 0.0)
    assert lo * hi < 0


def test_hopf_pitchfork_listed(atlas):
    hp = [x for x in atlas[3] if x.kind is Codim2Kind.HOPF_PITCHFORK]
    assert any(abs(x.tau - 0.5219) <= 2e-3 and abs(x.c - 0.6285) <= 2e-3 for x in hp)


def test_double_hopf_in_organizing_window(atlas):
    dh = [x for x in atlas[3] if x.kind is Codim2Kind.DOUBLE_HOPF and 3 <= x.tau <= 6 and 0.25 <= x.c <= 0.45]
    assert dh
    for x in dh:
        assert len(x.frequencies) == 2 and abs(x.frequencies[0] - x.frequencies[1]) > 1e-3
        assert max(x.residuals) <= 1e-7
        for w in x.frequencies:
            assert abs(complex(char_eval(P0.replace(c=x.c, tau=x.tau), 1j * w))) <= 1e-7


def test_all_codim2_residuals(atlas):
    for x in atlas[3]:
        assert max(x.residuals) <= 1e-7


def test_crossing_second_nontrivial_branch_destabilises(atlas):
    d, b, i = _nearest(atlas[1], 1.93, 1.03)
    assert d <= STEP
    tau_x = b.tau[i]
    counts = []
    for tau in (tau_x - 0.1, tau_x + 0.1):
        p = P0.replace(c=1.03, tau=float(tau))
        counts.append(rightmost_spectrum(p, find_rest_points(p)[0]).unstable_count)
    assert counts == [0, 2]


@pytest.mark.parametrize("c", [0.2, 1.03])
def test_rest_stability_changes_only_at_branches(atlas, c):
    trivial, nontrivial, pf, _ = atlas
    branches = trivial + nontrivial + [pf]
    taus = np.arange(0.05, 9.0, 0.15)
    idx = []
    for tau in taus:
        p = P0.replace(c=c, tau=float(tau))
        idx.append(tuple(rightmost_spectrum(p, r).unstable_count for r in find_rest_points(p)))
    for k in range(len(taus) - 1):
        if idx[k] != idx[k + 1]:
            mid = 0.5 * (taus[k] + taus[k + 1])
            assert min(b.distance_to(mid, c) for b in branches) <= 0.15


def test_empty_range_gives_seed_only_branch():
    p = P0.replace(c=0.2, tau=1.8)
    res = detect_orbit(integrate(p, [0.1] * 4, SimConfig(t_end=1000.0, t_trans=500.0)))
    seed = solve_cycle_bvp(p, res, BVPConfig())
    br, pts = continue_cycle_branch(seed, "c", (0.2, 0.2))
    assert len(br) == 1 and br.events == [] and len(pts) == 1
    assert br.c[0] == 0.2 and br.kind is BranchKind.CYCLE


def test_short_continuation_in_delay():
    p = P0.replace(c=0.2, tau=1.8)
    res = detect_orbit(integrate(p, [0.1] * 4, SimConfig(t_end=1000.0, t_trans=500.0)))
    seed = solve_cycle_bvp(p, res, BVPConfig())
    br, pts = continue_cycle_branch(seed, "tau", (1.8, 2.0), ContinuationConfig(max_points=40))
    assert br.metadata["end"] == "range" and br.tau[-2] <= 2.0 < br.tau[-1]
    assert all(q.cycle.residual <= 1e-8 for q in pts)
    assert np.all(br.payload["unstable"] == 0)


PROBE = ProbeConfig(chunk=600.0, window=400.0, max_time=3000.0)


def test_regime_region_a():
    label, _ = classify_regime(P0.replace(c=0.7, tau=0.12), probe=PROBE)
    assert label.name.startswith("MonoPeriodic")


def test_regime_region_d():
    label, _ = classify_regime(P0.replace(c=1.1, tau=0.12), probe=PROBE)
    assert label.name == "Quiescent-bistable"


def test_regime_label_names():
    assert RegimeLabel((), 1).name == "Quiescent"
    assert RegimeLabel(("AlmostSynchronized",), 0).name == "MonoPeriodic(AlmostSynchronized)"
    assert RegimeLabel(("a", "b", "c"), 0).name == "TriPeriodic"
    assert RegimeLabel(("a",), 2).name.startswith("MultiStable")


def test_inventory_closed_under_antipodal_map():
    _, inv = classify_regime(P0.replace(c=1.08, tau=3.9), probe=PROBE)
    rests = [a.rest for a in inv.rest]
    for r in rests:
        twin = -r.state
        assert any(np.allclose(q.state, twin, atol=1e-9) for q in rests)
    for a in inv.periodic:
        s = a.summary
        if s.symmetry_defect() < 1e-2:
            continue
        assert any(
            abs(b.summary.period - s.period) < 1e-2 * s.period and np.allclose(b.summary.mean, -s.mean, atol=1e-2)
            for b in inv.periodic
            if b is not a
        )
    assert {r.kind for r in rests} <= {RestKind.NONTRIVIAL_PLUS, RestKind.NONTRIVIAL_MINUS, RestKind.TRIVIAL}
