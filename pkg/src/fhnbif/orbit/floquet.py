"""Floquet multipliers of periodic orbits of the delayed system.

The monodromy operator maps a history segment on ``[-tau, 0]`` to the
segment ``[T - tau, T]`` of the solution of the variational equation along
the cycle.  Histories are represented by their values at Chebyshev points,
so the operator becomes a square matrix whose dominant eigenvalues converge
quickly with the number of points.
"""

from __future__ import annotations

import math

import numpy as np

from fhnbif import _kernels
from fhnbif.errors import FloquetAccuracyError
from fhnbif.model import Params
from fhnbif.orbit.bvp import CycleBVP, cycle_from_samples
from fhnbif.orbit.detect import OrbitSummary

__all__ = ["floquet_multipliers", "monodromy_matrix", "TRIVIAL_TOL"]

TRIVIAL_TOL = 5e-2


def _coefficients(p: Params, cyc: CycleBVP, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobian blocks along the cycle: ``J_now(x(t))`` and ``J_del(x(t - tau))``."""
    T = cyc.period
    x = cyc(times / T)
    xd = cyc((times - p.tau) / T)
    n = times.size
    a = np.zeros((n, 4, 4))
    a[:, 0, 0] = p.a - 3.0 * x[:, 0] ** 2
    a[:, 0, 1] = -1.0
    a[:, 1, 0] = 1.0
    a[:, 1, 1] = -p.b1
    a[:, 2, 2] = p.a - 3.0 * x[:, 2] ** 2
    a[:, 2, 3] = -1.0
    a[:, 3, 2] = 1.0
    a[:, 3, 3] = -p.b2
    b = np.zeros((n, 4, 4))
    b[:, 0, 2] = p.c / np.cosh(xd[:, 2]) ** 2
    b[:, 2, 0] = p.c / np.cosh(xd[:, 0]) ** 2
    return a, b


def _stage_times(nsteps: int, h: float) -> np.ndarray:
    m = np.arange(nsteps) * h
    return np.stack([m, m + 0.5 * h, m + h], axis=1).reshape(-1)


def _cheb_points(n: int, tau: float) -> np.ndarray:
    x = np.cos(np.pi * np.arange(n + 1) / n)
    return 0.5 * tau * (x - 1.0)


def _lagrange_eval(nodes: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the Lagrange basis on ``nodes`` at ``t``."""
    n = nodes.size
    w = np.array([1.0 / np.prod(nodes[j] - np.delete(nodes, j)) for j in range(n)])
    vals = np.empty((t.size, n))
    ders = np.empty((t.size, n))
    for r, tt in enumerate(t):
        diff = tt - nodes
        hit = np.nonzero(diff == 0.0)[0]
        if hit.size:
            j0 = hit[0]
            vals[r] = 0.0
            vals[r, j0] = 1.0
            # derivative at a node via the differentiation-matrix formula
            others = np.arange(n) != j0
            dj = np.zeros(n)
            dj[others] = w[others] / (w[j0] * (nodes[j0] - nodes[others]))
            dj[j0] = -dj.sum()
            ders[r] = dj
            continue
        q = w / diff
        s = q.sum()
        vals[r] = q / s
        # d/dt of q_j / sum q
        dq = -w / diff**2
        ders[r] = (dq * s - q * dq.sum()) / (s * s)
    return vals, ders


def _as_cycle(p: Params, cycle) -> CycleBVP:
    if isinstance(cycle, CycleBVP):
        return cycle
    if isinstance(cycle, OrbitSummary):
        return cycle_from_samples(p, cycle.profile, cycle.period, intervals=64)
    raise TypeError("cycle must be a CycleBVP or an OrbitSummary")


def monodromy_matrix(p: Params, cycle, n_cheb: int = 24, h: float | None = None) -> np.ndarray:
    """Discretised monodromy operator (``4x4`` in the undelayed case)."""
    cyc = _as_cycle(p, cycle)
    T = cyc.period
    h_target = h if h is not None else min(0.01, T / 400.0)
    if p.tau == 0.0:
        nsteps = max(1, math.ceil(T / h_target))
        hh = T / nsteps
        a, b = _coefficients(p, cyc, _stage_times(nsteps, hh))
        coef = (a + b).reshape(nsteps, 3, 4, 4)
        return _kernels.rk4_linear_ode(coef, np.eye(4), nsteps, hh)

    n0 = max(1, math.ceil(p.tau / h_target))
    hh = p.tau / n0
    nsteps = math.ceil(T / hh) + 1
    a, b = _coefficients(p, cyc, _stage_times(nsteps, hh))
    a = a.reshape(nsteps, 3, 4, 4)
    b = b.reshape(nsteps, 3, 4, 4)

    theta = _cheb_points(n_cheb, p.tau)
    hist_t = -p.tau + hh * np.arange(n0 + 1)
    hist_t[-1] = 0.0
    pv, pd = _lagrange_eval(theta, hist_t)
    eye = np.eye(4)
    K = 4 * (n_cheb + 1)
    Y = np.empty((n0 + nsteps + 1, 4, K))
    F = np.empty_like(Y)
    for i in range(n0 + 1):
        Y[i] = np.kron(pv[i][None, :], eye)
        F[i] = np.kron(pd[i][None, :], eye)
    _kernels.rk4_linear_dde(a, b, Y, F, n0, nsteps, hh)

    f_right = np.einsum("ij,jk->ik", a[0, 0], Y[n0]) + np.einsum("ij,jk->ik", b[0, 0], Y[0])
    # sample the evolved segment at T + theta
    out = np.empty((K, K))
    tt = T + theta
    for j, t in enumerate(tt):
        if t <= 0.0:
            v, _ = _lagrange_eval(theta, np.array([t]))
            out[4 * j : 4 * j + 4] = np.kron(v, eye)
            continue
        x = (t + p.tau) / hh
        i = min(int(math.floor(x)), n0 + nsteps - 1)
        s = x - i
        fl = f_right if i == n0 else F[i]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        out[4 * j : 4 * j + 4] = h00 * Y[i] + h10 * hh * fl + h01 * Y[i + 1] + h11 * hh * F[i + 1]
    return out


def floquet_multipliers(
    p: Params,
    cycle,
    n_cheb: int = 24,
    h: float | None = None,
    check: bool = True,
) -> np.ndarray:
    """Floquet multipliers sorted by descending modulus.

    Raises :class:`FloquetAccuracyError` when no multiplier lies within
    ``TRIVIAL_TOL`` of 1 (the discretisation is then too coarse).
    """
    mono = monodromy_matrix(p, cycle, n_cheb, h)
    mu = np.linalg.eigvals(mono)
    mu = mu[np.argsort(-np.abs(mu), kind="stable")]
    dev = float(np.min(np.abs(mu - 1.0)))
    if check and dev > TRIVIAL_TOL:
        raise FloquetAccuracyError(f"trivial multiplier off by {dev:.3g}; refine the mesh")
    return mu
