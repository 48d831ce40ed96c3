"""Compiled inner loops (numba)."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def field(a, b1, b2, c, y, yd, out):
    out[0] = -y[0] ** 3 + a * y[0] - y[1] + c * math.tanh(yd[2])
    out[1] = y[0] - b1 * y[1]
    out[2] = -y[2] ** 3 + a * y[2] - y[3] + c * math.tanh(yd[0])
    out[3] = y[2] - b2 * y[3]


@njit(cache=True)
def hermite_uniform(Y, F, h, t_first, t, out, jump=-1, f_right=None):
    """Cubic Hermite value at ``t`` on a uniform mesh starting at ``t_first``.

    If ``jump >= 0`` the derivative at node ``jump`` is one-sided: ``F`` holds
    the left value and ``f_right`` the value used on the interval to its right.
    """
    x = (t - t_first) / h
    i = int(math.floor(x))
    n = Y.shape[0]
    if i >= n - 1:
        i = n - 2
    if i < 0:
        i = 0
    s = x - i
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    if i == jump:
        for k in range(Y.shape[1]):
            out[k] = h00 * Y[i, k] + h10 * h * f_right[k] + h01 * Y[i + 1, k] + h11 * h * F[i + 1, k]
    else:
        for k in range(Y.shape[1]):
            out[k] = h00 * Y[i, k] + h10 * h * F[i, k] + h01 * Y[i + 1, k] + h11 * h * F[i + 1, k]


@njit(cache=True)
def rk4_dde(a, b1, b2, c, tau, h, Y, F, n0, nsteps, bound):
    """Advance ``nsteps`` RK4 steps from node ``n0``.

    ``Y``/``F`` hold node values and derivatives on a uniform mesh whose node
    ``n0`` sits at time 0; nodes ``0..n0`` must already be filled.  Returns
    the number of completed steps (less than ``nsteps`` on blow-up).
    """
    t_first = -n0 * h
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    ys = np.empty(4)
    yd = np.empty(4)
    f0 = np.empty(4)
    for m in range(nsteps):
        i = n0 + m
        t = m * h
        y = Y[i]
        if tau > 0.0:
            hermite_uniform(Y[: i + 1], F[: i + 1], h, t_first, t - tau, yd, n0, f0)
        else:
            yd[:] = y
        field(a, b1, b2, c, y, yd, k1)
        if m == 0:
            f0[:] = k1
        else:
            F[i] = k1
        # midpoint lookups never reach past node i because h <= tau/4
        if tau > 0.0:
            hermite_uniform(Y[: i + 1], F[: i + 1], h, t_first, t + 0.5 * h - tau, yd, n0, f0)
        for k in range(4):
            ys[k] = y[k] + 0.5 * h * k1[k]
        if tau == 0.0:
            yd[:] = ys
        field(a, b1, b2, c, ys, yd, k2)
        for k in range(4):
            ys[k] = y[k] + 0.5 * h * k2[k]
        if tau == 0.0:
            yd[:] = ys
        field(a, b1, b2, c, ys, yd, k3)
        if tau > 0.0:
            hermite_uniform(Y[: i + 1], F[: i + 1], h, t_first, t + h - tau, yd, n0, f0)
        for k in range(4):
            ys[k] = y[k] + h * k3[k]
        if tau == 0.0:
            yd[:] = ys
        field(a, b1, b2, c, ys, yd, k4)
        big = 0.0
        for k in range(4):
            Y[i + 1, k] = y[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            big = max(big, abs(Y[i + 1, k]))
        if not big <= bound:
            return m + 1, f0
    # derivative at the final node
    i = n0 + nsteps
    if tau > 0.0:
        hermite_uniform(Y[: i + 1], F[: i + 1], h, t_first, nsteps * h - tau, yd, n0, f0)
    else:
        yd[:] = Y[i]
    field(a, b1, b2, c, Y[i], yd, k1)
    F[i] = k1
    if nsteps == 0:
        f0[:] = k1
    return nsteps, f0


@njit(cache=True)
def rk4_linear_dde(A, B, Y, F, n0, nsteps, h):
    """RK4 for ``d' = A(t) d + B(t) d(t - tau)`` with matrix-valued states.

    The mesh is aligned so that ``tau = n0 h``: the delayed argument of the
    stages at ``t_m``, ``t_m + h/2``, ``t_m + h`` falls on node ``m``, the
    midpoint of ``[m, m+1]`` and node ``m + 1``.  ``A[m, q]``/``B[m, q]`` hold
    the coefficients at those three stage times (``q = 0, 1, 2``).  ``F[n0]``
    enters as the left derivative of the history and is replaced by the right
    one once the solution reaches ``t = tau``.
    """
    d = Y.shape[1]
    k = Y.shape[2]
    f0 = np.empty((d, k))
    mid = np.empty((d, k))
    ys = np.empty((d, k))
    for m in range(nsteps):
        i = n0 + m
        if m == n0:
            F[n0] = f0
        y = Y[i]
        k1 = A[m, 0] @ y + B[m, 0] @ Y[m]
        if m == 0:
            f0[:] = k1
        else:
            F[i] = k1
        fl = f0 if m == n0 else F[m]
        mid[:] = 0.5 * (Y[m] + Y[m + 1]) + 0.125 * h * (fl - F[m + 1])
        ys[:] = y + 0.5 * h * k1
        k2 = A[m, 1] @ ys + B[m, 1] @ mid
        ys[:] = y + 0.5 * h * k2
        k3 = A[m, 1] @ ys + B[m, 1] @ mid
        ys[:] = y + h * k3
        k4 = A[m, 2] @ ys + B[m, 2] @ Y[m + 1]
        Y[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    i = n0 + nsteps
    F[i] = A[nsteps - 1, 2] @ Y[i] + B[nsteps - 1, 2] @ Y[nsteps]


@njit(cache=True)
def rk4_linear_ode(A, Y0, nsteps, h):
    """RK4 for ``d' = A(t) d``; ``A[m, q]`` as in :func:`rk4_linear_dde`."""
    y = Y0.copy()
    for m in range(nsteps):
        k1 = A[m, 0] @ y
        k2 = A[m, 1] @ (y + 0.5 * h * k1)
        k3 = A[m, 1] @ (y + 0.5 * h * k2)
        k4 = A[m, 2] @ (y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y
