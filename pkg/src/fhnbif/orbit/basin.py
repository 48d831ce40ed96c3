"""Attractor inventories from sweeps of constant initial histories."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fhnbif.errors import TooShortError
from fhnbif.model import Params, RestPoint, as_state, find_rest_points
from fhnbif.orbit.detect import DetectConfig, NonPeriodic, OrbitSummary, Quiescent, detect_orbit
from fhnbif.sim import SimConfig, integrate

__all__ = ["ProbeConfig", "Attractor", "Inventory", "basin_probe", "random_ics", "classify_ic"]


@dataclass(frozen=True)
class ProbeConfig:
    """Integration budget per initial condition.

    Each IC is integrated in chunks of ``chunk`` time units; the last
    ``window`` units are classified and integration continues while the
    verdict is still open, up to ``max_time``.
    """

    chunk: float = 1000.0
    window: float = 600.0
    max_time: float = 8000.0
    h: float | None = None
    dedup_tol: float = 1e-2
    rest_tol: float = 1e-3
    detect: DetectConfig = DetectConfig()


@dataclass
class Attractor:
    kind: str
    summary: OrbitSummary | Quiescent | NonPeriodic
    rest: RestPoint | None = None
    ics: list[int] = field(default_factory=list)

    @property
    def period(self) -> float | None:
        return self.summary.period if isinstance(self.summary, OrbitSummary) else None


@dataclass
class Inventory:
    params: Params
    attractors: list[Attractor]
    per_ic: list[int]

    @property
    def periodic(self) -> list[Attractor]:
        return [a for a in self.attractors if a.kind == "periodic"]

    @property
    def rest(self) -> list[Attractor]:
        return [a for a in self.attractors if a.kind == "rest"]

    @property
    def nonperiodic(self) -> list[Attractor]:
        return [a for a in self.attractors if a.kind == "nonperiodic"]


def random_ics(n: int, seed: int = 42, half_width: float = 2.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-half_width, half_width, size=(n, 4))


def classify_ic(p: Params, ic, cfg: ProbeConfig | None = None):
    """Integrate one constant history until its attractor is recognised."""
    cfg = cfg or ProbeConfig()
    sim_cfg = SimConfig(t_end=cfg.chunk, h=cfg.h)
    traj = integrate(p, as_state(ic), sim_cfg)
    elapsed = cfg.chunk
    while True:
        window = traj.tail(min(cfg.window, traj.duration))
        try:
            res = detect_orbit(window, cfg.detect)
        except TooShortError:
            res = None
        settled = isinstance(res, (OrbitSummary, Quiescent)) or (
            isinstance(res, NonPeriodic) and res.reason != "amplitude drifting"
        )
        if settled or elapsed >= cfg.max_time:
            if res is None:
                res = NonPeriodic("too few returns", float("inf"), np.ptp(window.values, axis=0))
            return res
        traj = integrate(p, traj.tail(max(p.tau, 2 * (cfg.h or 0.01))), sim_cfg)
        elapsed += cfg.chunk


def _same_cycle(a: OrbitSummary, b: OrbitSummary, tol: float) -> bool:
    if abs(a.period - b.period) > tol * max(a.period, b.period):
        return False
    scale = float(max(np.max(a.amplitude), np.max(b.amplitude)))
    if np.max(np.abs(a.amplitude - b.amplitude)) > tol * scale:
        return False
    # antipodal twins share period and amplitude but not the mean
    return bool(np.max(np.abs(a.mean - b.mean)) <= tol * scale)


def basin_probe(p: Params, ic_list, cfg: ProbeConfig | None = None) -> Inventory:
    """Distinct attractors reached from a list of constant initial histories.

    Periodic attractors are merged when period and per-variable amplitude
    agree to ``dedup_tol`` (relative) and their means coincide, so that
    antipodal twins of asymmetric cycles stay distinct.  Rest states are
    matched to the solved rest points.
    """
    cfg = cfg or ProbeConfig()
    rests = find_rest_points(p)
    attractors: list[Attractor] = []
    per_ic: list[int] = []
    for i, ic in enumerate(np.atleast_2d(np.asarray(ic_list, dtype=float))):
        res = classify_ic(p, ic, cfg)
        slot = -1
        if isinstance(res, Quiescent):
            near = [r for r in rests if np.max(np.abs(r.state - res.state)) < cfg.rest_tol]
            rest = near[0] if near else None
            for j, a in enumerate(attractors):
                if a.kind == "rest" and (
                    (rest is not None and a.rest is rest)
                    or (rest is None and a.rest is None and np.max(np.abs(a.summary.state - res.state)) < cfg.rest_tol)
                ):
                    slot = j
                    break
            if slot < 0:
                attractors.append(Attractor("rest", res, rest))
                slot = len(attractors) - 1
        elif isinstance(res, OrbitSummary):
            for j, a in enumerate(attractors):
                if a.kind == "periodic" and _same_cycle(a.summary, res, cfg.dedup_tol):
                    slot = j
                    break
            if slot < 0:
                attractors.append(Attractor("periodic", res))
                slot = len(attractors) - 1
        else:
            for j, a in enumerate(attractors):
                if a.kind == "nonperiodic":
                    amp_a, amp_b = a.summary.amplitude, res.amplitude
                    if np.max(np.abs(amp_a - amp_b)) <= cfg.dedup_tol * max(np.max(amp_a), np.max(amp_b)):
                        slot = j
                        break
            if slot < 0:
                attractors.append(Attractor("nonperiodic", res))
                slot = len(attractors) - 1
        attractors[slot].ics.append(i)
        per_ic.append(slot)
    return Inventory(p, attractors, per_ic)
