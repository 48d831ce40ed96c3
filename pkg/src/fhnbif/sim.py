"""Method-of-steps integration of the delayed system.

A fixed-step classical Runge-Kutta scheme advances the state while the
delayed argument is read from a cubic Hermite interpolant of the solution
already computed.  Trajectories are returned as :class:`HistoryTrajectory`
objects, which can be sampled anywhere inside their window and fed back in
as initial data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fhnbif import _kernels
from fhnbif.errors import DivergenceError, HistoryWindowError
from fhnbif.model import Params, as_state, rhs_batch

__all__ = ["HistoryTrajectory", "SimConfig", "integrate", "sample", "default_step"]

_BLOWUP = 1e6
_MAX_NODES = 50_000_000


@dataclass(frozen=True)
class HistoryTrajectory:
    """Dense solution segment: node times, values and derivatives.

    Between nodes the solution is the cubic Hermite interpolant of the
    stored values and derivatives.
    """

    mesh: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    def __post_init__(self) -> None:
        mesh = np.asarray(self.mesh, dtype=float)
        if mesh.ndim != 1 or mesh.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if np.any(np.diff(mesh) <= 0):
            raise ValueError("mesh must be strictly increasing")
        if self.values.shape != (mesh.size, 4) or self.derivs.shape != (mesh.size, 4):
            raise ValueError("values and derivs must have shape (len(mesh), 4)")

    @property
    def t0(self) -> float:
        return float(self.mesh[0])

    @property
    def t1(self) -> float:
        return float(self.mesh[-1])

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    def sample(self, t) -> np.ndarray:
        """State(s) at time(s) ``t``; shape ``(4,)`` or ``(len(t), 4)``."""
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        tt = np.atleast_1d(tt)
        slack = 1e-12 * max(1.0, abs(self.t0), abs(self.t1))
        if np.any(tt < self.t0 - slack) or np.any(tt > self.t1 + slack):
            bad = tt[(tt < self.t0 - slack) | (tt > self.t1 + slack)][0]
            raise HistoryWindowError(f"t={bad:.12g} outside window [{self.t0:.12g}, {self.t1:.12g}]")
        i = np.clip(np.searchsorted(self.mesh, tt, side="right") - 1, 0, self.mesh.size - 2)
        ta, tb = self.mesh[i], self.mesh[i + 1]
        dt = (tb - ta)[:, None]
        s = ((tt - ta) / (tb - ta))[:, None]
        s2, s3 = s * s, s * s * s
        out = (
            (2 * s3 - 3 * s2 + 1) * self.values[i]
            + (s3 - 2 * s2 + s) * dt * self.derivs[i]
            + (-2 * s3 + 3 * s2) * self.values[i + 1]
            + (s3 - s2) * dt * self.derivs[i + 1]
        )
        # node times reproduce stored values exactly
        hit = tt == ta
        out[hit] = self.values[i[hit]]
        return out[0] if scalar else out

    def tail(self, length: float) -> "HistoryTrajectory":
        """Segment covering the last ``length`` time units (node aligned)."""
        start = np.searchsorted(self.mesh, self.t1 - length, side="right") - 1
        start = max(0, int(start))
        return HistoryTrajectory(self.mesh[start:], self.values[start:], self.derivs[start:])

    def shifted(self, dt: float) -> "HistoryTrajectory":
        return HistoryTrajectory(self.mesh + dt, self.values, self.derivs)

    def antipodal(self) -> "HistoryTrajectory":
        return HistoryTrajectory(self.mesh, -self.values, -self.derivs)

    @classmethod
    def constant(cls, state, tau: float, h: float) -> "HistoryTrajectory":
        """Constant history on ``[-tau, 0]`` (one step wide when ``tau = 0``)."""
        s = as_state(state)
        n = max(1, math.ceil(tau / h - 1e-9))
        mesh = -h * np.arange(n, -1, -1, dtype=float)
        return cls(mesh, np.tile(s, (n + 1, 1)), np.zeros((n + 1, 4)))


def sample(traj: HistoryTrajectory, t) -> np.ndarray:
    return traj.sample(t)


def default_step(tau: float) -> float:
    return min(tau / 8.0, 0.01) if tau > 0 else 0.01


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``h`` defaults to ``min(tau/8, 0.01)``.  ``t_trans`` is dropped from the
    output, which is then thinned by ``record_stride``.
    """

    t_end: float = 500.0
    h: float | None = None
    t_trans: float = 0.0
    record_stride: int = 1

    def step_for(self, tau: float) -> float:
        h = default_step(tau) if self.h is None else float(self.h)
        if not h > 0:
            raise ValueError("step must be positive")
        if tau > 0 and h > tau / 4.0 * (1 + 1e-12):
            raise ValueError(f"step {h} exceeds tau/4 = {tau / 4}")
        return h

    def __post_init__(self) -> None:
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 <= self.t_trans < self.t_end:
            raise ValueError("need 0 <= t_trans < t_end")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


def _uniform_history(p: Params, initial, h: float) -> tuple[np.ndarray, np.ndarray, float]:
    """History nodes on a uniform mesh ending at the start time."""
    if isinstance(initial, HistoryTrajectory):
        if initial.duration < p.tau - 1e-12:
            raise HistoryWindowError(f"history spans {initial.duration:.6g} < tau = {p.tau:.6g}")
        n = max(1, math.ceil(p.tau / h - 1e-9))
        n = min(n, int(math.floor(initial.duration / h + 1e-9)))
        n = max(n, 1) if initial.duration >= h else 0
        if n == 0:
            raise HistoryWindowError("history shorter than one step")
        times = initial.t1 - h * np.arange(n, -1, -1, dtype=float)
        mesh_step = np.diff(initial.mesh)
        aligned = (
            mesh_step.size >= n
            and np.allclose(mesh_step[-n:], h, rtol=1e-9, atol=0)
        )
        if aligned:
            vals = initial.values[-(n + 1):].copy()
            ders = initial.derivs[-(n + 1):].copy()
        else:
            vals = initial.sample(times)
            ders = np.zeros_like(vals)
            # derivative from the vector field where the delayed state is known
            lag = times - p.tau
            inside = lag >= initial.t0
            if p.tau == 0.0:
                ders = rhs_batch(p, vals, vals)
            elif np.any(inside):
                ders[inside] = rhs_batch(p, vals[inside], initial.sample(lag[inside]))
        return vals, ders, initial.t1
    s = as_state(initial)
    hist = HistoryTrajectory.constant(s, p.tau, h)
    return hist.values.copy(), hist.derivs.copy(), 0.0


def integrate(p: Params, initial, cfg: SimConfig | None = None) -> HistoryTrajectory:
    """Integrate from a constant state or a history segment.

    Output times run from the end of the initial data (``0`` for a constant
    state) to ``t_end`` beyond it, with the transient window removed.
    """
    cfg = cfg or SimConfig()
    h = cfg.step_for(p.tau)
    hist_y, hist_f, t_start = _uniform_history(p, initial, h)
    n0 = hist_y.shape[0] - 1
    nsteps = int(round(cfg.t_end / h))
    if n0 + nsteps > _MAX_NODES:
        raise ValueError(
            f"{n0 + nsteps} steps of size {h:.3g} requested; shorten t_end or use a larger delay"
        )
    Y = np.empty((n0 + nsteps + 1, 4))
    F = np.empty_like(Y)
    Y[: n0 + 1] = hist_y
    F[: n0 + 1] = hist_f
    done, f_start = _kernels.rk4_dde(p.a, p.b1, p.b2, p.c, p.tau, h, Y, F, n0, nsteps, _BLOWUP)
    if done < nsteps:
        raise DivergenceError(
            f"|state| exceeded {_BLOWUP:g} at t={t_start + done * h:.6g} for {p}; reduce the step"
        )
    first = n0 + int(round(cfg.t_trans / h))
    idx = np.arange(first, Y.shape[0], cfg.record_stride)
    if idx[-1] != Y.shape[0] - 1:
        idx = np.append(idx, Y.shape[0] - 1)
    if nsteps > 0:
        F[n0] = f_start
    mesh = t_start + (idx - n0) * h
    return HistoryTrajectory(mesh, Y[idx], F[idx])
