"""Pseudo-arclength continuation of periodic orbits in ``c`` or ``tau``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from fhnbif.errors import FhnBifError, NonConvergenceError, PeriodCollapseError
from fhnbif.orbit.bvp import (
    FREE_PARAMS,
    BVPConfig,
    CycleBVP,
    _adapted_mesh,
    _on_mesh,
    solve_cycle_bvp,
    stretch_period,
)
from fhnbif.orbit.floquet import floquet_multipliers

__all__ = ["ContinuationConfig", "CyclePoint", "continue_cycles", "push_period"]


@dataclass(frozen=True)
class ContinuationConfig:
    """Step control for :func:`continue_cycles`.

    Steps are measured in a weighted norm: mean-square profile change plus
    relative period change plus parameter change.
    """

    ds: float = 0.02
    ds_min: float = 1e-4
    ds_max: float = 0.1
    max_points: int = 400
    fast_iters: int = 3
    slow_iters: int = 6
    max_failures: int = 3
    t_max: float = 500.0
    min_amplitude: float = 1e-4
    small_seed: float = 0.05
    floquet: bool = True
    n_cheb: int = 16
    bvp: BVPConfig = BVPConfig(maxit=12)
    period_growth: float = 1.3
    # near a homoclinic orbit Newton steps plateau far above round-off
    long_period_step_tol: float = 1e-6


@dataclass
class CyclePoint:
    cycle: CycleBVP
    param: float
    arclength: float
    iterations: int = 0
    multipliers: np.ndarray | None = None
    symmetry: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def period(self) -> float:
        return self.cycle.period

    @property
    def amplitude(self) -> float:
        return float(np.max(self.cycle.amplitude(1024)))


def _vec(cyc: CycleBVP, par: float) -> np.ndarray:
    return np.concatenate([cyc.values.reshape(-1), [cyc.period, par]])


def _weights(cyc: CycleBVP) -> np.ndarray:
    n = cyc.values.size
    return np.concatenate([np.full(n, 4.0 / n), [1.0 / cyc.period**2, 1.0]])


def _wnorm(v: np.ndarray, w: np.ndarray) -> float:
    return math.sqrt(float(np.sum(w * v * v)))


def _annotate(pt: CyclePoint, cfg: ContinuationConfig) -> CyclePoint:
    cyc = pt.cycle
    pt.symmetry = cyc.symmetry_defect(128)
    if cfg.floquet:
        try:
            pt.multipliers = floquet_multipliers(cyc.params, cyc, n_cheb=cfg.n_cheb)
        except FhnBifError as exc:
            pt.meta["floquet_error"] = str(exc)
    return pt


def continue_cycles(
    seed: CycleBVP,
    parameter: str,
    stop: tuple[float, float],
    cfg: ContinuationConfig | None = None,
    direction: int = 1,
    previous: CycleBVP | None = None,
) -> tuple[list[CyclePoint], str]:
    """Trace the branch through ``seed`` until it leaves ``stop = (lo, hi)``.

    ``direction`` picks the initial sense of the parameter (+1 or -1) when
    no ``previous`` point is supplied.  Seeds with amplitude below
    ``cfg.small_seed`` are taken to sit next to a Hopf point and are
    continued away from the rest point, whichever way the parameter goes.  Returns the points and the reason the
    run ended (``"range"``, ``"homoclinic"``, ``"collapse"``, ``"stalled"``,
    ``"max_points"``).
    """
    cfg = cfg or ContinuationConfig()
    if parameter not in FREE_PARAMS:
        raise ValueError(f"parameter must be one of {FREE_PARAMS}")
    lo, hi = stop
    par0 = getattr(seed.params, parameter)
    pts = [_annotate(CyclePoint(seed, par0, 0.0), cfg)]
    if hi <= lo or not lo <= par0 <= hi:
        return pts, "range"

    seed_amp = float(np.max(seed.amplitude(512)))
    fresh = previous is None
    if previous is None and seed_amp < cfg.small_seed:
        # a seed next to a Hopf point: step away from the flat profile, along the amplitude
        flat = replace(seed, values=np.tile(seed.mean(512), (seed.values.shape[0], 1)))
        prev_cyc, cur = flat, seed
        fresh = False
    elif previous is None:
        # second point by a natural step in the parameter
        step = direction * min(cfg.ds, 0.5 * (hi - lo))
        while True:
            try:
                nxt = solve_cycle_bvp(seed.params.replace(**{parameter: par0 + step}), seed, replace(cfg.bvp, adapt=False))
                break
            except NonConvergenceError:
                step *= 0.5
                if abs(step) < cfg.ds_min:
                    return pts, "stalled"
        prev_cyc, cur = seed, nxt
    else:
        prev_cyc, cur = _on_mesh(previous, seed.mesh, seed.degree), seed

    ds = cfg.ds
    failures = 0
    arclen = 0.0
    reason = "max_points"
    while len(pts) < cfg.max_points:
        par_prev = getattr(prev_cyc.params, parameter)
        par_cur = getattr(cur.params, parameter)
        w = _weights(cur)
        diff = _vec(cur, par_cur) - _vec(prev_cyc, par_prev)
        dist = _wnorm(diff, w)
        if len(pts) == 1 and fresh:
            arclen += dist
            pts.append(_annotate(CyclePoint(cur, par_cur, arclen, cur.iterations), cfg))
        if not lo <= par_cur <= hi:
            reason = "range"
            break
        if cur.period > cfg.t_max:
            reason = "homoclinic"
            break
        tangent = diff / dist
        z_pred = _vec(cur, par_cur) + ds * tangent
        n = cur.values.size
        guess = replace(
            cur,
            values=z_pred[:n].reshape(cur.values.shape),
            period=float(z_pred[n]),
            params=cur.params.replace(**{parameter: float(z_pred[n + 1])}),
        )
        try:
            if parameter == "tau" and z_pred[n + 1] < 0.0:
                raise NonConvergenceError("predicted delay is negative")
            new = solve_cycle_bvp(
                guess.params, guess, cfg.bvp, free=parameter, arc=(z_pred, tangent, w), reference=cur
            )
        except PeriodCollapseError:
            reason = "collapse"
            break
        except NonConvergenceError:
            failures += 1
            ds *= 0.5
            if ds < cfg.ds_min or failures > cfg.max_failures + 20:
                reason = "stalled"
                break
            continue
        failures = 0
        par_new = getattr(new.params, parameter)
        step_len = _wnorm(_vec(new, par_new) - _vec(cur, par_cur), w)
        arclen += step_len
        # re-mesh along the branch and carry the previous point along
        mesh = _adapted_mesh(new, new.intervals)
        prev_cyc = _on_mesh(cur, mesh)
        cur = _on_mesh(new, mesh)
        pts.append(_annotate(CyclePoint(cur, par_new, arclen, new.iterations), cfg))
        if np.max(cur.amplitude(512)) < cfg.min_amplitude:
            reason = "collapse"
            break
        if _through_hopf(pts):
            # the step jumped across zero amplitude and came back up the same family
            pts.pop()
            reason = "collapse"
            break
        if new.iterations <= cfg.fast_iters:
            ds = min(ds * 1.3, cfg.ds_max)
        elif new.iterations >= cfg.slow_iters:
            ds = max(ds * 0.7, cfg.ds_min)
        if not lo <= par_new <= hi:
            reason = "range"
            break
        if cur.period > cfg.t_max:
            reason = "homoclinic"
            break
    if reason in ("stalled", "max_points") and _period_blowing_up(pts):
        more, ok = push_period(pts[-1], parameter, cfg)
        pts.extend(more)
        if ok:
            reason = "homoclinic"
    return pts, reason


def _through_hopf(pts: list[CyclePoint], frac: float = 0.25) -> bool:
    if len(pts) < 3:
        return False
    a, b, c = pts[-3:]
    reversed_ = (b.param - a.param) * (c.param - b.param) < 0.0
    amp_max = max(q.amplitude for q in pts)
    return reversed_ and b.amplitude < min(a.amplitude, c.amplitude) and b.amplitude < frac * amp_max


def _period_blowing_up(pts: list[CyclePoint], window: int = 5) -> bool:
    if len(pts) < window + 1:
        return False
    tail = pts[-window - 1 :]
    periods = np.array([q.period for q in tail])
    par_span = max(q.param for q in tail) - min(q.param for q in tail)
    return bool(np.all(np.diff(periods) > 0.0)) and par_span < 1e-5 and periods[-1] > 5.0 * pts[0].period


def push_period(
    start: CyclePoint, parameter: str, cfg: ContinuationConfig | None = None
) -> tuple[list[CyclePoint], bool]:
    """Grow the period geometrically with ``parameter`` free until it exceeds ``t_max``.

    Used once arclength continuation stalls on a branch whose period is
    diverging while the parameter has stopped moving.
    """
    cfg = cfg or ContinuationConfig()
    bvp_cfg = replace(cfg.bvp, step_tol=cfg.long_period_step_tol, maxit=max(cfg.bvp.maxit, 20))
    cur = start.cycle
    arclen = start.arclength
    out: list[CyclePoint] = []
    while cur.period <= cfg.t_max:
        try:
            nxt = solve_cycle_bvp(cur.params, stretch_period(cur, cfg.period_growth), bvp_cfg, free=parameter, fix_period=True)
        except NonConvergenceError:
            return out, False
        arclen += abs(math.log(nxt.period / cur.period))
        cur = nxt
        pt = CyclePoint(cur, getattr(cur.params, parameter), arclen, cur.iterations)
        pt.symmetry = cur.symmetry_defect(128)
        pt.meta["fixed_period"] = True
        out.append(pt)
    return out, True
