"""Reference computations built without the package's own numerics."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from fhnbif.model import Params


def field(p: Params, x: np.ndarray, xd: np.ndarray) -> np.ndarray:
    """The vector field written out longhand."""
    v1, w1, v2, w2 = x
    return np.array(
        [
            -(v1**3) + p.a * v1 - w1 + p.c * math.tanh(xd[2]),
            v1 - p.b1 * w1,
            -(v2**3) + p.a * v2 - w2 + p.c * math.tanh(xd[0]),
            v2 - p.b2 * w2,
        ]
    )


def char_matrix_oracle(p: Params, lam: complex, at=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """``lam I - J0 - J1 exp(-lam tau)`` assembled entry by entry."""
    v1, _, v2, _ = at
    e = np.exp(-lam * p.tau)
    m = np.zeros((4, 4), dtype=complex)
    m[0] = [lam + 3 * v1 * v1 - p.a, 1.0, -p.c / math.cosh(v2) ** 2 * e, 0.0]
    m[1] = [-1.0, lam + p.b1, 0.0, 0.0]
    m[2] = [-p.c / math.cosh(v1) ** 2 * e, 0.0, lam + 3 * v2 * v2 - p.a, 1.0]
    m[3] = [0.0, 0.0, -1.0, lam + p.b2]
    return m


def char_det_oracle(p: Params, lam: complex, at=(0.0, 0.0, 0.0, 0.0)) -> complex:
    return complex(np.linalg.det(char_matrix_oracle(p, lam, at)))


def quartic_oracle(p: Params) -> np.ndarray:
    """Positive roots of the frequency quartic via the companion matrix."""
    a, b1, b2 = p.a, p.b1, p.b2
    A = b1 + b2 - 2 * a
    B = b1 * b2 - 2 * a * (b1 + b2) + a * a + 2
    C = (a * a + 1) * (b1 + b2) - 2 * a * b1 * b2 - 2 * a
    D = a * a * b1 * b2 - a * (b1 + b2) + 1
    E = p.c**2
    coef = [
        1.0,
        A * A - 2 * B,
        B * B + 2 * D - 2 * A * C - E * E,
        C * C - 2 * B * D - E * E * (b1 * b1 + b2 * b2),
        D * D - E * E * (b1 * b2) ** 2,
    ]
    z = np.roots(coef)
    return np.sort(z[(np.abs(z.imag) < 1e-10) & (z.real > 0)].real)


def ode_reference(p: Params, x0, t_end: float) -> np.ndarray:
    """Undelayed solution at ``t_end`` from a tight DOP853 run."""
    sol = solve_ivp(lambda t, x: field(p, x, x), (0.0, t_end), np.asarray(x0, float), method="DOP853", rtol=1e-13, atol=1e-13)
    return sol.y[:, -1]


def rk4_ode_errors(p: Params, steps, x0=(0.8, -0.2, -0.5, 0.3), t_end: float = 10.0) -> list[float]:
    """Global error of the package integrator at ``t_end`` for each step size (tau = 0)."""
    from fhnbif.sim import SimConfig, integrate

    ref = ode_reference(p.replace(tau=0.0), x0, t_end)
    out = []
    for h in steps:
        traj = integrate(p.replace(tau=0.0), np.asarray(x0, float), SimConfig(t_end=t_end, h=h))
        out.append(float(np.max(np.abs(traj.values[-1] - ref))))
    return out


def shooting_period(p: Params, x0, t_guess: float) -> tuple[float, np.ndarray]:
    """Period of a stable undelayed limit cycle by iterating its return map on ``v1 = x0[0]``."""
    p = p.replace(tau=0.0)
    f = lambda t, x: field(p, x, x)  # noqa: E731
    level = float(x0[0])

    def hit(t, x):
        return x[0] - level

    hit.direction = 1.0
    x = np.asarray(x0, float)
    for _ in range(30):
        sol = solve_ivp(f, (0.0, 2.0 * t_guess), x, method="DOP853", rtol=1e-12, atol=1e-12, events=hit, dense_output=True)
        times = sol.t_events[0]
        times = times[times > 0.2 * t_guess]
        t_ret = float(times[0])
        x_ret = sol.sol(t_ret)
        if np.max(np.abs(x_ret - x)) < 1e-11:
            return t_ret, x_ret
        x, t_guess = x_ret, t_ret
    return t_ret, x_ret
