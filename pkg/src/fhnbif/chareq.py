"""Characteristic-equation analysis of rest points.

At a rest point the linearisation factors as

    Delta(lam) = d1(lam) d2(lam) - E (lam + b1)(lam + b2) exp(-2 lam tau)

with ``d_i(lam) = (lam - alpha_i)(lam + b_i) + 1`` and ``alpha_i = a - 3 v_i^2``.
At the origin ``alpha_i = a`` and ``E = c^2``; elsewhere the coupling factor
picks up ``sech^2`` of both membrane potentials.  Everything closed-form in
this module (quartic in ``omega^2``, Hopf delays, Routh-Hurwitz) is written
for that general form so the same code serves every rest point.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from fhnbif.errors import MixedModeError, NoPitchforkError
from fhnbif.model import Params, RestKind, RestPoint, jacobian_blocks

__all__ = [
    "CharCoeffs",
    "CharQuartic",
    "HopfFlavor",
    "HopfPoint",
    "RouthHurwitz",
    "StabilityKind",
    "TrivialStability",
    "SpectrumApprox",
    "SyncMode",
    "char_coeffs",
    "char_eval",
    "char_eval_dlambda",
    "char_det",
    "hopf_quartic",
    "hopf_delays",
    "routh_hurwitz_ok",
    "trivial_stability",
    "unstable_count_from_crossings",
    "pitchfork_coupling",
    "hopf_pitchfork_point",
    "ode_hopf_coupling",
    "rightmost_spectrum",
    "sync_mode_predictor",
    "hopf_eigenvector",
]


# -- coefficients ------------------------------------------------------------


@dataclass(frozen=True)
class CharCoeffs:
    """Polynomial coefficients of the characteristic function.

    ``b1``/``b2`` ride along because the delayed factor and the
    Routh-Hurwitz conditions need them.
    """

    A: float
    B: float
    C: float
    D: float
    E: float
    b1: float
    b2: float


def _alphas(p: Params, at) -> tuple[float, float, float]:
    if at is None:
        return p.a, p.a, p.c * p.c
    v1, v2 = float(at[0]), float(at[2])
    e = (p.c / math.cosh(v1) ** 2) * (p.c / math.cosh(v2) ** 2)
    return p.a - 3.0 * v1 * v1, p.a - 3.0 * v2 * v2, e


def char_coeffs(p: Params, at=None) -> CharCoeffs:
    """Coefficients at the origin (default) or at the rest state ``at``."""
    al1, al2, e = _alphas(p, at)
    b1, b2 = p.b1, p.b2
    s1, s2 = b1 - al1, b2 - al2
    k1, k2 = 1.0 - al1 * b1, 1.0 - al2 * b2
    return CharCoeffs(
        A=s1 + s2,
        B=s1 * s2 + k1 + k2,
        C=s1 * k2 + s2 * k1,
        D=k1 * k2,
        E=e,
        b1=b1,
        b2=b2,
    )


def char_eval(p: Params, lam, at=None):
    """Characteristic function at ``lam`` (scalar or array)."""
    k = char_coeffs(p, at)
    lam = np.asarray(lam, dtype=complex)
    poly = (((lam + k.A) * lam + k.B) * lam + k.C) * lam + k.D
    val = poly - k.E * (lam + k.b1) * (lam + k.b2) * np.exp(-2.0 * lam * p.tau)
    return val[()] if val.ndim == 0 else val


def char_eval_dlambda(p: Params, lam, at=None):
    """Derivative of :func:`char_eval` with respect to ``lam``."""
    k = char_coeffs(p, at)
    lam = np.asarray(lam, dtype=complex)
    dpoly = ((4.0 * lam + 3.0 * k.A) * lam + 2.0 * k.B) * lam + k.C
    g = (lam + k.b1) * (lam + k.b2)
    dg = 2.0 * lam + k.b1 + k.b2
    ex = np.exp(-2.0 * lam * p.tau)
    val = dpoly - k.E * ex * (dg - 2.0 * p.tau * g)
    return val[()] if val.ndim == 0 else val


def char_det(p: Params, lam: complex, at=None) -> complex:
    """``det(lam I - J_now - J_delayed exp(-lam tau))`` evaluated directly."""
    state = np.zeros(4) if at is None else np.asarray(at, dtype=float)
    j0, j1 = jacobian_blocks(p, state)
    m = lam * np.eye(4) - j0 - j1 * np.exp(-lam * p.tau)
    return complex(np.linalg.det(m))


# -- quartic in z = omega^2 -------------------------------------------------


@dataclass(frozen=True)
class CharQuartic:
    """``h(z) = z^4 + P z^3 + Q z^2 + R z + S`` and its critical-point data.

    ``z_candidates`` are the critical points of ``h`` from the depressed
    cubic (Cardano); ``positive_roots`` are the polished positive roots.
    """

    P: float
    Q: float
    R: float
    S: float
    P1: float
    Q1: float
    Delta: float
    z_candidates: tuple[complex, complex, complex]
    positive_roots: tuple[float, ...]
    coeffs: CharCoeffs

    def h(self, z):
        return (((z + self.P) * z + self.Q) * z + self.R) * z + self.S

    def dh(self, z):
        return ((4.0 * z + 3.0 * self.P) * z + 2.0 * self.Q) * z + self.R

    def real_candidates(self) -> list[float]:
        return [z.real for z in self.z_candidates if abs(z.imag) < 1e-9 * (1.0 + abs(z))]

    def condition_flags(self) -> dict[str, bool]:
        """Which of the positive-root conditions (a), (b), (c) hold."""
        z1 = self.z_candidates[0]
        z1_real = abs(z1.imag) < 1e-9 * (1.0 + abs(z1))
        cand = [z for z in self.real_candidates() if z > 0 and self.h(z) <= 0]
        return {
            "a": self.S < 0,
            "b": self.S >= 0 and self.coeffs.D >= 0 and z1_real and z1.real > 0 and self.h(z1.real) <= 0,
            "c": self.S >= 0 and self.coeffs.D < 0 and bool(cand),
        }


def _cardano(p1: float, q1: float) -> tuple[float, tuple[complex, complex, complex]]:
    delta = (q1 / 2.0) ** 2 + (p1 / 3.0) ** 3
    eps = complex(-0.5, math.sqrt(3.0) / 2.0)
    if delta >= 0.0:
        r = math.sqrt(delta)
        u = float(np.cbrt(-q1 / 2.0 + r))
        v = float(np.cbrt(-q1 / 2.0 - r))
    else:
        u = cmath.exp(cmath.log(complex(-q1 / 2.0, math.sqrt(-delta))) / 3.0)
        # pair the second cube root with the first so that u v = -p1/3
        v = -p1 / (3.0 * u)
    ys = (u + v, u * eps + v * eps * eps, u * eps * eps + v * eps)
    return delta, tuple(complex(y) for y in ys)


def _quartic_positive_roots(coef: list[float]) -> list[float]:
    raw = np.roots(coef)
    out: list[float] = []
    for r in raw:
        if abs(r.imag) > 1e-6 * (1.0 + abs(r)):
            continue
        z = r.real
        for _ in range(50):
            hz = np.polyval(coef, z)
            dz = np.polyval(np.polyder(coef), z)
            if dz == 0.0:
                break
            step = hz / dz
            z -= step
            if abs(step) <= 1e-15 * (1.0 + abs(z)):
                break
        if z > 0.0 and all(abs(z - o) > 1e-10 * (1 + z) for o in out):
            out.append(float(z))
    return sorted(out)


def hopf_quartic(p: Params, at=None) -> CharQuartic:
    k = char_coeffs(p, at)
    e2 = k.E * k.E
    P = k.A * k.A - 2.0 * k.B
    Q = k.B * k.B + 2.0 * k.D - 2.0 * k.A * k.C - e2
    R = k.C * k.C - 2.0 * k.B * k.D - e2 * (k.b1**2 + k.b2**2)
    S = k.D * k.D - e2 * (k.b1 * k.b2) ** 2
    p1 = Q / 2.0 - 3.0 * P * P / 16.0
    q1 = P**3 / 32.0 - P * Q / 8.0 + R / 4.0
    delta, ys = _cardano(p1, q1)
    zs = tuple(y - P / 4.0 for y in ys)
    roots = _quartic_positive_roots([1.0, P, Q, R, S])
    return CharQuartic(P, Q, R, S, p1, q1, delta, zs, tuple(roots), k)


# -- Hopf delays -------------------------------------------------------------


class HopfFlavor(str, enum.Enum):
    TRIVIAL_ANALYTIC = "TrivialAnalytic"
    NONTRIVIAL_NUMERIC = "NontrivialNumeric"


@dataclass(frozen=True)
class HopfPoint:
    c: float
    tau: float
    omega: float
    k: int
    j: int
    crossing_sign: int
    flavor: HopfFlavor
    residual: float = 0.0


def _phase_of_crossing(k: CharCoeffs, w: float) -> tuple[float, float]:
    """``(sin 2 tau w, cos 2 tau w)`` at an imaginary root ``i w``.

    Solves the real/imaginary split of the characteristic equation as a
    2x2 linear system in the two trigonometric unknowns.
    """
    x = w**4 - k.B * w * w + k.D
    y = -k.A * w**3 + k.C * w
    gr = k.b1 * k.b2 - w * w
    gi = (k.b1 + k.b2) * w
    den = k.E * (gr * gr + gi * gi)
    sin_v = (x * gi - y * gr) / den
    cos_v = (x * gr + y * gi) / den
    return sin_v, cos_v


def _base_angle(a_star: float, b_star: float) -> float:
    b_star = min(1.0, max(-1.0, b_star))
    if a_star >= 0.0:
        return math.acos(b_star)
    return 2.0 * math.pi - math.acos(b_star)


def hopf_delays(p: Params, j_max: int = 3, at=None) -> list[HopfPoint]:
    """Delays at which ``+-i omega_k`` solve the characteristic equation.

    ``k`` indexes the positive quartic roots in increasing order (1-based),
    ``j`` the ``2 pi`` branch.  Empty when the quartic has no positive root.
    """
    quart = hopf_quartic(p, at)
    if quart.coeffs.E == 0.0:
        return []
    flavor = HopfFlavor.TRIVIAL_ANALYTIC if at is None or not np.any(at) else HopfFlavor.NONTRIVIAL_NUMERIC
    out: list[HopfPoint] = []
    for kk, z in enumerate(quart.positive_roots, start=1):
        w = math.sqrt(z)
        a_star, b_star = _phase_of_crossing(quart.coeffs, w)
        theta = _base_angle(a_star, b_star)
        sign = 1 if quart.dh(z) > 0 else -1
        for j in range(j_max + 1):
            tau = (theta + 2.0 * j * math.pi) / (2.0 * w)
            res = abs(char_eval(p.replace(tau=tau), 1j * w, at))
            out.append(HopfPoint(p.c, tau, w, kk, j, sign, flavor, float(res)))
    out.sort(key=lambda h: h.tau)
    return out


def unstable_count_from_crossings(p: Params, tau: float, j_max: int = 40) -> int:
    """Roots in the right half-plane at ``tau`` by crossing bookkeeping.

    Valid only when the origin is Routh-Hurwitz stable at ``tau = 0``.
    """
    count = 0
    for h in hopf_delays(p, j_max):
        if h.tau < tau:
            count += 2 * h.crossing_sign
    return count


# -- Routh-Hurwitz and classification ----------------------------------------


@dataclass(frozen=True)
class RouthHurwitz:
    ok: bool
    flags: tuple[bool, bool, bool, bool]
    margins: tuple[float, float, float, float]

    def __bool__(self) -> bool:
        return self.ok


def routh_hurwitz_ok(k: CharCoeffs) -> RouthHurwitz:
    """Routh-Hurwitz test of the ``tau = 0`` quartic."""
    bs = k.b1 + k.b2
    c_eff = k.C - k.E * bs
    d_eff = k.D - k.E * k.b1 * k.b2
    m1 = k.A
    m2 = k.A * (k.B - k.E) - c_eff
    m3 = d_eff
    m4 = c_eff * (k.A * (k.B - k.E) - c_eff) - k.A * k.A * d_eff
    margins = (m1, m2, m3, m4)
    flags = tuple(m > 0 for m in margins)
    return RouthHurwitz(all(flags), flags, margins)  # type: ignore[arg-type]


class StabilityKind(str, enum.Enum):
    STABLE_ALL_TAU = "StableAllTau"
    STABLE_UP_TO = "StableUpTo"
    UNSTABLE_AT_TAU_ZERO = "UnstableAtTauZero"


@dataclass(frozen=True)
class TrivialStability:
    kind: StabilityKind
    tau0: float | None = None
    conditions: dict = field(default_factory=dict)
    routh_hurwitz: RouthHurwitz | None = None


def trivial_stability(p: Params) -> TrivialStability:
    k = char_coeffs(p)
    rh = routh_hurwitz_ok(k)
    if not rh:
        return TrivialStability(StabilityKind.UNSTABLE_AT_TAU_ZERO, None, {}, rh)
    quart = hopf_quartic(p)
    flags = quart.condition_flags()
    hopfs = [h for h in hopf_delays(p, 0) if h.j == 0]
    if not quart.positive_roots or not hopfs:
        return TrivialStability(StabilityKind.STABLE_ALL_TAU, None, flags, rh)
    tau0 = min(h.tau for h in hopfs)
    return TrivialStability(StabilityKind.STABLE_UP_TO, tau0, flags, rh)


# -- steady-state bifurcations ------------------------------------------------


def pitchfork_coupling(p: Params) -> float:
    """Coupling at which the origin has a zero eigenvalue (``c > 0``)."""
    num = p.a * p.a * p.b1 * p.b2 + 1.0 - p.a * (p.b1 + p.b2)
    if num < 0.0:
        raise NoPitchforkError(f"zero-eigenvalue numerator {num:.6g} is negative")
    if num == 0.0:
        warnings.warn("degenerate pitchfork: zero coupling", stacklevel=2)
    return math.sqrt(num / (p.b1 * p.b2))


@dataclass(frozen=True)
class HopfPitchfork:
    c: float
    tau: float
    second_derivative: float
    first_derivative: float


def hopf_pitchfork_point(p: Params) -> HopfPitchfork:
    """Pitchfork coupling together with the delay making ``lam = 0`` double."""
    cp = pitchfork_coupling(p)
    k = char_coeffs(p.replace(c=cp))
    e = k.E
    bs, bp = p.b1 + p.b2, p.b1 * p.b2
    tau = (e * bs - k.C) / (2.0 * e * bp)
    d1 = k.C - e * (bs - 2.0 * tau * bp)
    d2 = 2.0 * k.B - e * (2.0 - 4.0 * tau * bs + 4.0 * tau * tau * bp)
    return HopfPitchfork(cp, tau, d2, d1)


def ode_hopf_coupling(p: Params, c_hi: float | None = None) -> float:
    """Smallest coupling where the undelayed origin loses Routh-Hurwitz stability
    through the last Hurwitz determinant (an imaginary pair)."""
    if c_hi is None:
        c_hi = pitchfork_coupling(p)

    def margin(c: float) -> float:
        return routh_hurwitz_ok(char_coeffs(p.replace(c=c, tau=0.0))).margins[3]

    cs = np.linspace(0.0, c_hi, 401)
    vals = [margin(c) for c in cs]
    for i in range(len(cs) - 1):
        if vals[i] > 0 and vals[i + 1] <= 0:
            return brentq(margin, cs[i], cs[i + 1], xtol=1e-14)
    raise ValueError("no Hopf crossing of the undelayed origin below c_hi")


# -- numerical spectrum --------------------------------------------------------


@dataclass
class SpectrumApprox:
    eigenvalues: np.ndarray
    discretization_order: int
    rightmost_residual: float
    multiplicity: np.ndarray
    polished: np.ndarray
    converged: np.ndarray

    @property
    def unstable_count(self) -> int:
        """Verified roots with positive real part, counted with multiplicity.

        Discretisation eigenvalues whose Newton polish failed are spurious
        and do not count.
        """
        return int(self.multiplicity[(self.eigenvalues.real > 0) & self.converged].sum())

    @property
    def rightmost(self) -> complex:
        """Rightmost verified root."""
        return complex(self.eigenvalues[int(np.argmax(self.converged))])


def _cheb(n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    return d, x


def _generator_eigs(j0: np.ndarray, j1: np.ndarray, tau: float, n: int) -> np.ndarray:
    d, _ = _cheb(n)
    d *= 2.0 / tau
    m = np.kron(d, np.eye(4))
    m[:4, :] = 0.0
    m[:4, :4] = j0
    m[:4, -4:] += j1
    return np.linalg.eigvals(m)


def _newton_char(p: Params, at, lam: complex, maxit: int = 40) -> tuple[complex, bool]:
    trivial = at is None or not np.any(at)
    state = np.zeros(4) if at is None else np.asarray(at, dtype=float)
    j0, j1 = jacobian_blocks(p, state)
    for _ in range(maxit):
        if trivial:
            f = complex(char_eval(p, lam))
            df = complex(char_eval_dlambda(p, lam))
            if df == 0:
                return lam, False
            step = f / df
        else:
            ex = np.exp(-lam * p.tau)
            m = lam * np.eye(4) - j0 - j1 * ex
            dm = np.eye(4) + p.tau * j1 * ex
            try:
                tr = np.trace(np.linalg.solve(m, dm))
            except np.linalg.LinAlgError:
                return lam, True
            if tr == 0:
                return lam, False
            step = 1.0 / tr
        lam = lam - step
        if abs(step) <= 1e-13 * (1.0 + abs(lam)):
            return lam, True
    return lam, False


def _char_residual(p: Params, at, lam: complex) -> float:
    if at is None or not np.any(at):
        return abs(complex(char_eval(p, lam)))
    return abs(char_det(p, lam, at))


def _winding_multiplicity(p: Params, at, lam: complex, radius: float = 1e-5, n: int = 64) -> int:
    """Number of characteristic roots inside a small circle around ``lam``."""
    pts = lam + radius * np.exp(2j * math.pi * np.arange(n + 1) / n)
    if at is None or not np.any(at):
        vals = np.array([complex(char_eval(p, z)) for z in pts])
    else:
        vals = np.array([char_det(p, complex(z), at) for z in pts])
    turn = np.sum(np.angle(vals[1:] / vals[:-1]))
    if not math.isfinite(turn):
        return 1
    return max(1, int(round(turn / (2.0 * math.pi))))


def rightmost_spectrum(
    p: Params,
    at: RestPoint | np.ndarray | None = None,
    order: int = 32,
    adaptive: bool = True,
    polish_above: float = -1.0,
    max_order: int = 256,
) -> SpectrumApprox:
    """Rightmost characteristic roots of a rest point.

    Discretises the infinitesimal generator of the linearised delay equation
    by Chebyshev collocation on ``[-tau, 0]`` and Newton-polishes every
    eigenvalue right of ``polish_above`` against the exact characteristic
    function.  The order doubles until the rightmost raw eigenvalue moves by
    less than ``1e-7``.
    """
    if order < 8:
        raise ValueError("discretization order must be >= 8")
    if isinstance(at, RestPoint):
        state = at.state
    elif at is None:
        state = np.zeros(4)
    else:
        state = np.asarray(at, dtype=float)
    j0, j1 = jacobian_blocks(p, state)

    if p.tau == 0.0:
        raw = np.linalg.eigvals(j0 + j1)
        n_used = 0
    else:
        n_used = order
        raw = _generator_eigs(j0, j1, p.tau, n_used)
        if adaptive:
            prev = raw[np.argmax(raw.real)]
            while n_used * 2 <= max_order:
                n_used *= 2
                raw = _generator_eigs(j0, j1, p.tau, n_used)
                cur = raw[np.argmax(raw.real)]
                if abs(cur - prev) < 1e-7:
                    break
                prev = cur

    at_arg = None if not np.any(state) else state
    vals, conv, pol = [], [], []
    for lam in raw:
        if lam.real > polish_above and p.tau > 0.0:
            new, ok = _newton_char(p, at_arg, complex(lam))
            if not cmath.isfinite(new):
                new, ok = complex(lam), False
            vals.append(new)
            conv.append(ok and abs(new - lam) < 1e-2 * (1.0 + abs(lam)))
            pol.append(True)
        else:
            vals.append(complex(lam))
            conv.append(True)
            pol.append(p.tau == 0.0)
    vals_arr = np.array(vals)
    conv_arr = np.array(conv)
    pol_arr = np.array(pol)
    order_idx = np.lexsort((-vals_arr.imag, -vals_arr.real))
    vals_arr, conv_arr, pol_arr = vals_arr[order_idx], conv_arr[order_idx], pol_arr[order_idx]

    merged, mult, mconv, mpol = [], [], [], []
    for lam, ok, pp in zip(vals_arr, conv_arr, pol_arr):
        for i, other in enumerate(merged):
            if abs(lam - other) < 1e-6:
                mult[i] += 1
                mconv[i] = mconv[i] or ok
                break
        else:
            merged.append(lam)
            mult.append(1)
            mconv.append(bool(ok))
            mpol.append(bool(pp))
    # several raw eigenvalues can polish onto one simple root; count zeros instead
    for i, lam in enumerate(merged):
        if mult[i] > 1:
            mult[i] = _winding_multiplicity(p, at_arg, complex(lam)) if p.tau > 0.0 else mult[i]
    eig = np.array(merged)
    lead = int(np.argmax(mconv))
    res = _char_residual(p, at_arg, complex(eig[lead]))
    return SpectrumApprox(eig, n_used, res, np.array(mult), np.array(mpol), np.array(mconv))


# -- eigenvector phase -------------------------------------------------------


class SyncMode(str, enum.Enum):
    ALMOST_SYNCHRONIZED = "AlmostSynchronized"
    ALMOST_ANTI_PHASE = "AlmostAntiPhase"
    OTHER = "Other"


def hopf_eigenvector(p: Params, omega: float, at=None) -> np.ndarray:
    """Right null vector of the characteristic matrix at ``i omega``.

    Normalised so that the ``w1`` component equals 1 (origin) or by the
    largest component (general rest point).
    """
    lam = 1j * omega
    if at is None or not np.any(at):
        u2 = 1.0 + 0j
        u1 = u2 * (p.b1 + lam)
        u3 = u2 * np.exp(lam * p.tau) * (1.0 - (p.a - lam) * (p.b1 + lam)) / p.c
        u4 = u3 / (p.b2 + lam)
        return np.array([u1, u2, u3, u4])
    j0, j1 = jacobian_blocks(p, np.asarray(at, dtype=float))
    m = lam * np.eye(4) - j0 - j1 * np.exp(-lam * p.tau)
    _, _, vh = np.linalg.svd(m)
    v = vh[-1].conj()
    return v / v[np.argmax(np.abs(v))]


def sync_mode_predictor(p: Params, omega: float, tau: float | None = None) -> SyncMode:
    """Synchrony class of the oscillation born at the Hopf point ``(tau, omega)``.

    Compares the phases of the two membrane-potential components of the
    critical eigenvector.  Phase gaps inside ``(pi/4, 3pi/4)`` are ambiguous
    and raise :class:`MixedModeError`.
    """
    if tau is not None:
        p = p.replace(tau=tau)
    u = hopf_eigenvector(p, omega)
    gap = abs(math.remainder(cmath.phase(u[2]) - cmath.phase(u[0]), 2.0 * math.pi))
    if gap < math.pi / 4.0:
        return SyncMode.ALMOST_SYNCHRONIZED
    if gap > 3.0 * math.pi / 4.0:
        return SyncMode.ALMOST_ANTI_PHASE
    raise MixedModeError(f"eigenvector phase gap {gap:.4f} rad is ambiguous")
