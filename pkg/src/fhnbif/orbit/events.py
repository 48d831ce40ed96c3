"""Bifurcations of periodic orbits located along a continued branch."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from fhnbif.orbit.continuation import CyclePoint

__all__ = ["CycleEventKind", "CycleEvent", "detect_cycle_bifurcations", "nontrivial_multipliers"]


class CycleEventKind(enum.Enum):
    FOLD = "Fold"
    PITCHFORK_CYCLE = "PitchforkCycle"
    TORUS = "Torus"
    PERIOD_DOUBLING = "PeriodDoubling"
    HOPF_ENDPOINT = "HopfEndpoint"
    HOMOCLINIC_PROXY = "HomoclinicProxy"


@dataclass(frozen=True)
class CycleEvent:
    """A cycle bifurcation between points ``index`` and ``index + 1`` of a branch.

    ``labels`` has more than one entry when the crossing multiplier is too
    close to the real axis to tell the candidates apart.  ``angle`` is the
    argument of the critical multiplier (``None`` for events not tied to one).
    """

    labels: tuple[CycleEventKind, ...]
    param: float
    period: float
    index: int
    angle: float | None = None
    multiplier: complex | None = None

    @property
    def kind(self) -> CycleEventKind:
        return self.labels[0]

    @property
    def ambiguous(self) -> bool:
        return len(self.labels) > 1


def nontrivial_multipliers(mu: np.ndarray) -> np.ndarray:
    """Drop the multiplier closest to 1 (the phase direction)."""
    mu = np.asarray(mu, dtype=complex)
    return np.delete(mu, int(np.argmin(np.abs(mu - 1.0))))


def _turning_points(pts: list[CyclePoint]) -> list[tuple[int, float]]:
    """Parameter extrema along the branch, refined by a quadratic in arclength."""
    par = np.array([q.param for q in pts])
    s = np.array([q.arclength for q in pts])
    out = []
    for i in range(1, len(pts) - 1):
        if any(q.meta.get("fixed_period") for q in pts[i - 1 : i + 2]):
            continue
        d0, d1 = par[i] - par[i - 1], par[i + 1] - par[i]
        noise = 1e-8 * (1.0 + abs(par[i]))
        if d0 * d1 >= 0.0 or min(abs(d0), abs(d1)) < noise:
            continue
        coef = np.polyfit(s[i - 1 : i + 2] - s[i], par[i - 1 : i + 2], 2)
        if coef[0] == 0.0:
            out.append((i, float(par[i])))
            continue
        sv = -coef[1] / (2.0 * coef[0])
        out.append((i, float(np.polyval(coef, sv))))
    return out


def _hopf_end(end: list[CyclePoint], amp_max: float, collapse_amp: float, frac: float) -> float | None:
    """Parameter of a Hopf point at the end ``end[0]`` of a branch, if it ends at one."""
    if len(end) < 2 or not math.isfinite(end[0].period):
        return None
    a0, a1 = end[0].amplitude, end[1].amplitude
    if a0 >= collapse_amp and not (a0 < a1 and a0 < frac * amp_max):
        return None
    q0, q1 = a0 * a0, a1 * a1
    if q1 == q0:
        return end[0].param
    return end[0].param - q0 * (end[1].param - end[0].param) / (q1 - q0)


def _unstable(mu: np.ndarray, tol: float) -> np.ndarray:
    return mu[np.abs(mu) > 1.0 + tol]


def _crossing(mu_a: np.ndarray, mu_b: np.ndarray, tol: float) -> tuple[complex, complex] | None:
    """Pair the multiplier that left (or entered) the unit disc between two points."""
    ua, ub = _unstable(mu_a, tol), _unstable(mu_b, tol)
    if ua.size == ub.size:
        return None
    outside, other = (ub, mu_a) if ub.size > ua.size else (ua, mu_b)
    # the outside multiplier closest to the circle, and its nearest partner
    crit = outside[np.argmin(np.abs(outside))]
    partner = other[np.argmin(np.abs(other - crit))]
    return (partner, crit) if ub.size > ua.size else (crit, partner)


def _classify(mu: complex, symmetric_both: bool, near_turn: bool, sym_changed: bool, angle_tol: float):
    ang = abs(math.atan2(mu.imag, mu.real))
    real = abs(mu.imag) <= 1e-9 * max(abs(mu), 1.0)
    plus = (
        CycleEventKind.FOLD
        if near_turn or not (symmetric_both or sym_changed)
        else CycleEventKind.PITCHFORK_CYCLE
    )
    if real:
        if mu.real > 0.0:
            return (plus,), 0.0
        return (CycleEventKind.PERIOD_DOUBLING,), math.pi
    if ang < angle_tol:
        return (CycleEventKind.TORUS, plus), ang
    if ang > math.pi - angle_tol:
        return (CycleEventKind.TORUS, CycleEventKind.PERIOD_DOUBLING), ang
    return (CycleEventKind.TORUS,), ang


def detect_cycle_bifurcations(
    points: list[CyclePoint],
    t_max: float = 500.0,
    unit_tol: float = 1e-6,
    angle_tol: float = 1e-3,
    sym_tol: float = 1e-4,
    collapse_amp: float = 1e-3,
    hopf_frac: float = 0.25,
) -> list[CycleEvent]:
    """Fold, pitchfork-of-cycles, torus, period-doubling and endpoint events.

    Turning points of the parameter give folds directly.  Changes of the
    number of nontrivial multipliers outside the unit circle locate the
    other crossings, with the parameter found by interpolating ``log|mu|``
    linearly between the bracketing points.  A branch whose period passes
    ``t_max`` at finite amplitude ends in a homoclinic proxy.  An end where
    the amplitude is below ``collapse_amp``, or shrinking and already below
    ``hopf_frac`` of the branch maximum, is a Hopf point; its parameter comes
    from extrapolating the squared amplitude (linear in the parameter near
    the Hopf point) to zero.
    """
    pts = list(points)
    events: list[CycleEvent] = []
    if len(pts) < 2:
        return events
    turns = _turning_points(pts)
    for i, par in turns:
        events.append(CycleEvent((CycleEventKind.FOLD,), par, pts[i].period, i))

    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if a.multipliers is None or b.multipliers is None:
            continue
        pair = _crossing(nontrivial_multipliers(a.multipliers), nontrivial_multipliers(b.multipliers), unit_tol)
        if pair is None:
            continue
        ma, mb = pair
        la, lb = math.log(abs(ma)), math.log(abs(mb))
        w = la / (la - lb) if la != lb else 0.5
        par = a.param + w * (b.param - a.param)
        mu = ma + w * (mb - ma)
        near_turn = any(abs(j - i) <= 1 or abs(j - i - 1) <= 1 for j, _ in turns)
        sym_a, sym_b = a.symmetry < sym_tol, b.symmetry < sym_tol
        labels, ang = _classify(mu, sym_a and sym_b, near_turn, sym_a != sym_b, angle_tol)
        if labels == (CycleEventKind.FOLD,) and near_turn:
            # already reported from the turning point, which is more accurate
            continue
        events.append(CycleEvent(labels, float(par), a.period + w * (b.period - a.period), i, ang, complex(mu)))

    last = pts[-1]
    if last.period > t_max and last.amplitude > collapse_amp:
        k = next(i for i, q in enumerate(pts) if q.period > t_max)
        events.append(CycleEvent((CycleEventKind.HOMOCLINIC_PROXY,), pts[k].param, pts[k].period, k))
    for end in (pts[:3], pts[::-1][:3]):
        hit = _hopf_end(end, max(q.amplitude for q in pts), collapse_amp, hopf_frac)
        if hit is not None:
            idx = 0 if end[0] is pts[0] else len(pts) - 1
            events.append(CycleEvent((CycleEventKind.HOPF_ENDPOINT,), hit, end[0].period, idx))
    events.sort(key=lambda e: e.index)
    return events
