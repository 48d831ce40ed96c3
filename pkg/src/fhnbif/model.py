"""Two delay-coupled FitzHugh-Nagumo neurons.

State vectors are plain ``numpy`` arrays of shape ``(4,)`` ordered
``(v1, w1, v2, w2)``.  Each neuron is driven by ``c * tanh`` of the *other*
neuron's membrane potential delayed by ``tau``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from fhnbif.errors import RestPointError

__all__ = [
    "Params",
    "RestKind",
    "RestPoint",
    "DEFAULT",
    "as_state",
    "rhs",
    "rhs_batch",
    "jacobian_blocks",
    "find_rest_points",
    "antipode",
]

V1, W1, V2, W2 = range(4)


@dataclass(frozen=True)
class Params:
    """Model constants ``(a, b1, b2, c, tau)`` of one system instance."""

    a: float = 0.55
    b1: float = 1.128
    b2: float = 0.58
    c: float = 0.0
    tau: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a", "b1", "b2"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be strictly positive, got {val!r}")
        if not (self.tau >= 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be >= 0, got {self.tau!r}")
        if not math.isfinite(self.c):
            raise ValueError(f"c must be finite, got {self.c!r}")

    def replace(self, **changes: float) -> "Params":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


DEFAULT = Params()


class RestKind(str, enum.Enum):
    TRIVIAL = "Trivial"
    NONTRIVIAL_PLUS = "NontrivialPlus"
    NONTRIVIAL_MINUS = "NontrivialMinus"


@dataclass(frozen=True)
class RestPoint:
    state: np.ndarray
    kind: RestKind
    residual: float
    meta: dict = field(default_factory=dict, compare=False)


def as_state(x) -> np.ndarray:
    s = np.asarray(x, dtype=float).reshape(-1)
    if s.shape != (4,):
        raise ValueError(f"state must have 4 components, got shape {s.shape}")
    return s


def rhs(p: Params, now, delayed) -> np.ndarray:
    """Vector field given the current and the delayed state."""
    v1, w1, v2, w2 = now
    out = np.empty(4)
    out[V1] = -v1**3 + p.a * v1 - w1 + p.c * math.tanh(delayed[V2])
    out[W1] = v1 - p.b1 * w1
    out[V2] = -v2**3 + p.a * v2 - w2 + p.c * math.tanh(delayed[V1])
    out[W2] = v2 - p.b2 * w2
    return out


def rhs_batch(p: Params, now: np.ndarray, delayed: np.ndarray) -> np.ndarray:
    """Vectorised :func:`rhs` over a leading axis; inputs have shape ``(n, 4)``."""
    v1, w1, v2, w2 = now[..., 0], now[..., 1], now[..., 2], now[..., 3]
    out = np.empty(np.broadcast(now, delayed).shape)
    out[..., V1] = -v1**3 + p.a * v1 - w1 + p.c * np.tanh(delayed[..., V2])
    out[..., W1] = v1 - p.b1 * w1
    out[..., V2] = -v2**3 + p.a * v2 - w2 + p.c * np.tanh(delayed[..., V1])
    out[..., W2] = v2 - p.b2 * w2
    return out


def jacobian_blocks(p: Params, at) -> tuple[np.ndarray, np.ndarray]:
    """Linearisation ``(J_now, J_delayed)`` about a constant state ``at``."""
    v1, _, v2, _ = at
    j_now = np.array(
        [
            [-3.0 * v1 * v1 + p.a, -1.0, 0.0, 0.0],
            [1.0, -p.b1, 0.0, 0.0],
            [0.0, 0.0, -3.0 * v2 * v2 + p.a, -1.0],
            [0.0, 0.0, 1.0, -p.b2],
        ]
    )
    j_del = np.zeros((4, 4))
    j_del[V1, V2] = p.c / math.cosh(v2) ** 2
    j_del[V2, V1] = p.c / math.cosh(v1) ** 2
    return j_now, j_del


def antipode(x: np.ndarray) -> np.ndarray:
    return -np.asarray(x)


# -- rest points -------------------------------------------------------------

_SCAN_HALF_WIDTH = 3.0
_SCAN_INTERVALS = 600
_RESIDUAL_TOL = 1e-10


def _cubic_part(p: Params, v: float, b: float) -> float:
    # rest value of -(v' + w' terms) with w = v/b substituted
    return v**3 - (p.a - 1.0 / b) * v


def _reduced(p: Params, v1: float) -> float:
    """Scalar rest-point equation in ``v1`` divided by ``v1``.

    Returns NaN where ``tanh(v2) = g(v1)/c`` has no real solution.
    """
    if p.c == 0.0:
        return math.nan
    if v1 == 0.0:
        # limit of F(v1)/v1 as v1 -> 0
        return c_sq_minus(p) / p.c
    g = _cubic_part(p, v1, p.b1)
    if abs(g) >= abs(p.c):
        return math.nan
    t = g / p.c
    v2 = math.atanh(t)
    return (-_cubic_part(p, v2, p.b2) + p.c * math.tanh(v1)) / v1


def c_sq_minus(p: Params) -> float:
    """``c^2 - (a - 1/b1)(a - 1/b2)``; its sign decides nontrivial existence."""
    return p.c * p.c - (p.a - 1.0 / p.b1) * (p.a - 1.0 / p.b2)


def _polish(p: Params, x: np.ndarray, maxit: int = 50) -> np.ndarray:
    for _ in range(maxit):
        f = rhs(p, x, x)
        if np.max(np.abs(f)) <= 1e-14:
            break
        j0, j1 = jacobian_blocks(p, x)
        dx = np.linalg.solve(j0 + j1, -f)
        x = x + dx
        if np.max(np.abs(dx)) <= 1e-16 * (1 + np.max(np.abs(x))):
            break
    return x


def find_rest_points(p: Params) -> list[RestPoint]:
    """All rest points, sorted by ``v1`` descending.

    The origin is always present.  Nontrivial points come from a bracketing
    scan of the scalar reduction over ``v1 in (0, 3]`` (the negative half
    follows by the antipodal map), followed by Newton polishing of the full
    four-dimensional system.
    """
    trivial = RestPoint(np.zeros(4), RestKind.TRIVIAL, 0.0)
    margin = c_sq_minus(p)
    if p.c == 0.0 or margin == 0.0:
        meta = {"at_pitchfork": True} if margin == 0.0 and p.c != 0.0 else {}
        if meta:
            warnings.warn("coupling sits exactly at the pitchfork value", stacklevel=2)
        return [RestPoint(np.zeros(4), RestKind.TRIVIAL, 0.0, meta)]

    nodes = np.linspace(0.0, _SCAN_HALF_WIDTH, _SCAN_INTERVALS // 2 + 1)
    vals = np.array([_reduced(p, v) for v in nodes])
    roots = []
    for k in range(len(nodes) - 1):
        f0, f1 = vals[k], vals[k + 1]
        if not (math.isfinite(f0) and math.isfinite(f1)):
            continue
        if f1 == 0.0 and k + 1 < len(nodes) - 1:
            continue  # picked up as left endpoint of the next interval
        if f0 == 0.0 and k > 0:
            roots.append(nodes[k])
        elif f0 * f1 < 0.0:
            roots.append(brentq(lambda v: _reduced(p, v), nodes[k], nodes[k + 1], xtol=1e-15, rtol=1e-15))

    out = [trivial]
    for v1 in roots:
        if v1 <= 0.0:
            continue
        v2 = math.atanh(_cubic_part(p, v1, p.b1) / p.c)
        x = _polish(p, np.array([v1, v1 / p.b1, v2, v2 / p.b2]))
        res = float(np.max(np.abs(rhs(p, x, x))))
        if res > _RESIDUAL_TOL:
            raise RestPointError(f"rest point residual {res:.3e} above {_RESIDUAL_TOL:g} at {p}")
        out.append(RestPoint(x, RestKind.NONTRIVIAL_PLUS, res))
        out.append(RestPoint(-x, RestKind.NONTRIVIAL_MINUS, res))
    out.sort(key=lambda r: -r.state[0])
    return out
