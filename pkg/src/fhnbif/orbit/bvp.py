"""Periodic orbits by piecewise-polynomial collocation.

The period is scaled out, ``y(s) = x(s T)`` for ``s in [0, 1)``, so a cycle
solves

    y'(s) = T f(y(s), y((s - tau/T) mod 1))

together with an integral phase condition.  The profile is continuous and
piecewise polynomial of a fixed degree on a periodic mesh; the equation is
imposed at Gauss-Legendre points of every interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from fhnbif.chareq import hopf_eigenvector
from fhnbif.errors import NonConvergenceError, PeriodCollapseError
from fhnbif.model import Params, rhs_batch
from fhnbif.orbit.detect import OrbitSummary, classify_sync, cycle_symmetry_defect

__all__ = ["CycleBVP", "BVPConfig", "solve_cycle_bvp", "cycle_from_hopf", "cycle_from_samples"]

FREE_PARAMS = ("c", "tau")


def _lagrange_matrix(m: int) -> np.ndarray:
    """Monomial coefficients of the Lagrange basis on ``k/m``: ``L_k = sum C[j,k] x^j``."""
    xi = np.arange(m + 1) / m
    return np.linalg.inv(np.vander(xi, increasing=True))


def _basis(coef: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = coef.shape[0] - 1
    pw = np.vander(x, m + 1, increasing=True)
    dpw = np.zeros_like(pw)
    dpw[:, 1:] = pw[:, :-1] * np.arange(1, m + 1)
    return pw @ coef, dpw @ coef


@dataclass(frozen=True)
class CycleBVP:
    """A converged (or candidate) periodic solution in collocation form.

    ``values[i*degree + k]`` is the profile at ``mesh[i] + k/degree`` of the
    way through interval ``i``; the node at ``s = 1`` is the node at ``s = 0``.
    """

    params: Params
    mesh: np.ndarray
    degree: int
    values: np.ndarray
    period: float
    residual: float = math.inf
    phase_anchor: float = 0.0
    iterations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def intervals(self) -> int:
        return self.mesh.size - 1

    def node_times(self) -> np.ndarray:
        m = self.degree
        loc = np.arange(m) / m
        return (self.mesh[:-1, None] + loc[None, :] * np.diff(self.mesh)[:, None]).reshape(-1)

    def _locate(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = np.mod(s, 1.0)
        i = np.clip(np.searchsorted(self.mesh, s, side="right") - 1, 0, self.intervals - 1)
        dx = self.mesh[i + 1] - self.mesh[i]
        return i, (s - self.mesh[i]) / dx, dx

    def _node_idx(self, i: np.ndarray) -> np.ndarray:
        n = self.values.shape[0]
        return (i[:, None] * self.degree + np.arange(self.degree + 1)[None, :]) % n

    def __call__(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        i, x, _ = self._locate(s)
        lv, _ = _basis(_lagrange_matrix(self.degree), x)
        return np.einsum("nk,nkd->nd", lv, self.values[self._node_idx(i)])

    def derivative(self, s) -> np.ndarray:
        """``dy/ds`` (multiply by ``1/T`` for the time derivative)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        i, x, dx = self._locate(s)
        _, ld = _basis(_lagrange_matrix(self.degree), x)
        return np.einsum("nk,nkd->nd", ld / dx[:, None], self.values[self._node_idx(i)])

    def samples(self, n: int = 512) -> np.ndarray:
        return self(np.arange(n) / n)

    def amplitude(self, n: int = 4096) -> np.ndarray:
        return np.ptp(self.samples(n), axis=0)

    def mean(self, n: int = 4096) -> np.ndarray:
        return self.samples(n).mean(axis=0)

    def symmetry_defect(self, n: int = 256) -> float:
        return cycle_symmetry_defect(self.samples(n))

    def antipodal(self) -> "CycleBVP":
        return replace(self, values=-self.values)

    def summary(self, floquet=None) -> OrbitSummary:
        prof = self.samples(512)
        shift, sync = classify_sync(prof)
        out = OrbitSummary(
            period=self.period,
            amplitude=self.amplitude(),
            phase_shift=shift,
            sync=sync,
            mean=prof.mean(axis=0),
            profile=prof,
        )
        return out if floquet is None else out.with_floquet(floquet)


@dataclass(frozen=True)
class BVPConfig:
    intervals: int = 40
    degree: int = 4
    tol: float = 1e-8
    step_tol: float = 1e-9
    maxit: int = 30
    adapt: bool = True
    refine: bool = False
    refine_tol: float = 1e-7
    max_intervals: int = 320
    min_period: float = 1e-3


class _Disc:
    """Collocation structures for one mesh."""

    def __init__(self, mesh: np.ndarray, degree: int):
        self.mesh = mesh
        self.m = degree
        self.M = mesh.size - 1
        self.nn = self.M * degree
        self.coef = _lagrange_matrix(degree)
        g, w = np.polynomial.legendre.leggauss(degree)
        g = 0.5 * (g + 1.0)
        w = 0.5 * w
        dx = np.diff(mesh)
        self.sc = (mesh[:-1, None] + g[None, :] * dx[:, None]).reshape(-1)
        self.wc = (w[None, :] * dx[:, None]).reshape(-1)
        lv, ld = _basis(self.coef, g)
        iv = np.repeat(np.arange(self.M), degree)
        self.idx_now = (iv[:, None] * degree + np.arange(degree + 1)[None, :]) % self.nn
        self.l_now = np.tile(lv, (self.M, 1))
        self.d_now = np.tile(ld, (self.M, 1)) / dx[iv][:, None]

    def delayed(self, lag: float):
        sd = np.mod(self.sc - lag, 1.0)
        i = np.clip(np.searchsorted(self.mesh, sd, side="right") - 1, 0, self.M - 1)
        dx = self.mesh[i + 1] - self.mesh[i]
        lv, ld = _basis(self.coef, (sd - self.mesh[i]) / dx)
        idx = (i[:, None] * self.m + np.arange(self.m + 1)[None, :]) % self.nn
        return idx, lv, ld / dx[:, None]


def _field_parts(p: Params, y: np.ndarray, yd: np.ndarray):
    f = rhs_batch(p, y, yd)
    n = y.shape[0]
    j0 = np.zeros((n, 4, 4))
    j0[:, 0, 0] = p.a - 3.0 * y[:, 0] ** 2
    j0[:, 0, 1] = -1.0
    j0[:, 1, 0] = 1.0
    j0[:, 1, 1] = -p.b1
    j0[:, 2, 2] = p.a - 3.0 * y[:, 2] ** 2
    j0[:, 2, 3] = -1.0
    j0[:, 3, 2] = 1.0
    j0[:, 3, 3] = -p.b2
    j1 = np.zeros((n, 4, 4))
    j1[:, 0, 2] = p.c / np.cosh(yd[:, 2]) ** 2
    j1[:, 2, 0] = p.c / np.cosh(yd[:, 0]) ** 2
    dfdc = np.zeros((n, 4))
    dfdc[:, 0] = np.tanh(yd[:, 2])
    dfdc[:, 2] = np.tanh(yd[:, 0])
    return f, j0, j1, dfdc


def _system(disc: _Disc, p: Params, Y: np.ndarray, T: float, ref_d: np.ndarray, free: str | None):
    """Residual and Jacobian of collocation plus phase condition.

    Unknown order: ``Y`` (flattened), ``T``, then the free parameter if any.
    """
    nc = disc.sc.size
    lag = p.tau / T
    idx_d, l_d, d_d = disc.delayed(lag)
    Yn = Y[disc.idx_now]
    Yd = Y[idx_d]
    y = np.einsum("ck,ckd->cd", disc.l_now, Yn)
    dy = np.einsum("ck,ckd->cd", disc.d_now, Yn)
    yd = np.einsum("ck,ckd->cd", l_d, Yd)
    yd_s = np.einsum("ck,ckd->cd", d_d, Yd)
    f, j0, j1, dfdc = _field_parts(p, y, yd)
    res = (dy - T * f).reshape(-1)

    nfree = 0 if free is None else 1
    ncol = disc.nn * 4 + 1 + nfree
    J = np.zeros((nc, 4, disc.nn, 4))
    rows = np.arange(nc)
    eye = np.eye(4)
    for k in range(disc.m + 1):
        blk = disc.d_now[:, k, None, None] * eye - T * j0 * disc.l_now[:, k, None, None]
        J[rows, :, disc.idx_now[:, k], :] += blk
    for k in range(disc.m + 1):
        J[rows, :, idx_d[:, k], :] += -T * j1 * l_d[:, k, None, None]
    jac = np.zeros((nc * 4 + 1, ncol))
    jac[: nc * 4, : disc.nn * 4] = J.reshape(nc * 4, disc.nn * 4)
    j1yd = np.einsum("cij,cj->ci", j1, yd_s)
    jac[: nc * 4, disc.nn * 4] = (-f - lag * j1yd).reshape(-1)
    if free == "tau":
        jac[: nc * 4, -1] = j1yd.reshape(-1)
    elif free == "c":
        jac[: nc * 4, -1] = (-T * dfdc).reshape(-1)

    # integral phase condition against the reference derivative
    phase = float(np.sum(disc.wc[:, None] * y * ref_d))
    prow = np.zeros((disc.nn, 4))
    np.add.at(prow, disc.idx_now, (disc.wc[:, None] * disc.l_now)[:, :, None] * ref_d[:, None, :])
    jac[nc * 4, : disc.nn * 4] = prow.reshape(-1)
    return np.concatenate([res, [phase]]), jac


def _newton(
    disc: _Disc,
    p: Params,
    Y: np.ndarray,
    T: float,
    ref_d: np.ndarray,
    cfg: BVPConfig,
    free: str | None = None,
    arc: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
    fix_period: bool = False,
):
    """Newton iteration; ``arc = (z_pred, tangent, weights)`` adds the
    pseudo-arclength row ``sum(w * t * (z - z_pred)) = 0``.  With
    ``fix_period`` the period is held and the free parameter closes the
    system instead."""
    par = None if free is None else getattr(p, free)
    last_step = math.inf
    nY = Y.size
    for it in range(1, cfg.maxit + 1):
        pp = p if free is None else p.replace(**{free: par})
        r, jac = _system(disc, pp, Y, T, ref_d, free)
        z = np.concatenate([Y.reshape(-1), [T]] + ([] if free is None else [[par]]))
        if fix_period:
            jac[:, nY] = 0.0
            jac = np.vstack([jac, np.eye(1, jac.shape[1], nY)])
            r = np.concatenate([r, [0.0]])
        if arc is not None:
            zp, tv, wv = arc
            r = np.concatenate([r, [np.sum(wv * tv * (z - zp))]])
            jac = np.vstack([jac, (wv * tv)[None, :]])
        rn = float(np.max(np.abs(r)))
        if rn <= cfg.tol and last_step <= cfg.step_tol:
            return Y, T, pp, rn, it
        try:
            dz = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(f"singular collocation Jacobian: {exc}") from exc
        # cap wild first steps
        scale = max(1.0, float(np.max(np.abs(dz[:-1 - (free is not None)]))) / 0.5)
        dz /= scale
        z = z + dz
        Y = z[: Y.size].reshape(Y.shape)
        T = float(z[Y.size])
        if free is not None:
            par = float(z[Y.size + 1])
            if free == "tau" and par < 0.0:
                raise NonConvergenceError("delay went negative during Newton iteration")
        if not math.isfinite(T) or T < cfg.min_period:
            raise PeriodCollapseError(f"period collapsed to {T:.3g}")
        last_step = float(np.max(np.abs(dz)))
        if rn <= cfg.tol and last_step <= cfg.step_tol:
            pp = p if free is None else p.replace(**{free: par})
            r2, _ = _system(disc, pp, Y, T, ref_d, free)
            return Y, T, pp, float(np.max(np.abs(r2))), it
    raise NonConvergenceError(f"collocation Newton stalled (residual {rn:.3e}, step {last_step:.3e})")


def _adapted_mesh(cyc: CycleBVP, M: int) -> np.ndarray:
    """Equidistribute ``|y^(m)|^(1/(m+1))`` over ``M`` intervals."""
    m = cyc.degree
    old = cyc.mesh
    dx = np.diff(old)
    vals = np.vstack([cyc.values, cyc.values[:1]])
    dens = np.empty(old.size - 1)
    for i in range(old.size - 1):
        seg = vals[i * m : i * m + m + 1]
        der = np.max(np.abs(np.diff(seg, n=m, axis=0))) / (dx[i] / m) ** m
        dens[i] = der ** (1.0 / (m + 1))
    dens = 0.5 * (dens + 0.5 * (np.roll(dens, 1) + np.roll(dens, -1)))
    dens = np.maximum(dens, 0.05 * max(float(dens.mean()), 1e-12))
    cum = np.concatenate([[0.0], np.cumsum(dens * dx)])
    targets = np.linspace(0.0, cum[-1], M + 1)
    new = np.interp(targets, cum, old)
    new[0], new[-1] = 0.0, 1.0
    return new


def _on_mesh(cyc: CycleBVP, mesh: np.ndarray, degree: int | None = None) -> CycleBVP:
    degree = degree or cyc.degree
    tmp = CycleBVP(cyc.params, mesh, degree, np.zeros(((mesh.size - 1) * degree, 4)), cyc.period)
    vals = cyc(tmp.node_times())
    return replace(cyc, mesh=mesh, degree=degree, values=vals)


def cycle_from_samples(p: Params, profile: np.ndarray, period: float, intervals: int = 40, degree: int = 4) -> CycleBVP:
    """Collocation form of an evenly sampled one-period profile (FFT interpolation)."""
    prof = np.asarray(profile, dtype=float)
    n = prof.shape[0]
    spec = np.fft.rfft(prof, axis=0)
    mesh = np.linspace(0.0, 1.0, intervals + 1)
    tmp = CycleBVP(p, mesh, degree, np.zeros((intervals * degree, 4)), period)
    s = tmp.node_times()
    k = np.arange(spec.shape[0])
    basis = np.exp(2j * np.pi * np.outer(s, k))
    wts = np.full(k.size, 2.0)
    wts[0] = 1.0
    if n % 2 == 0:
        wts[-1] = 1.0
    vals = (basis * wts) @ spec / n
    return replace(tmp, values=vals.real)


def _solve_on(disc_mesh, p, cyc, ref, cfg, free=None, arc=None, fix_period=False):
    disc = _Disc(disc_mesh, cyc.degree)
    ref_d = ref.derivative(disc.sc)
    Y, T, pp, res, it = _newton(disc, p, cyc.values.copy(), cyc.period, ref_d, cfg, free, arc, fix_period)
    phase = float(np.sum(disc.wc[:, None] * ref(disc.sc) * ref_d))
    return CycleBVP(pp, disc_mesh, cyc.degree, Y, T, res, phase, it)


def solve_cycle_bvp(
    p: Params,
    guess: CycleBVP | OrbitSummary,
    cfg: BVPConfig | None = None,
    *,
    free: str | None = None,
    arc=None,
    reference: CycleBVP | None = None,
    fix_period: bool = False,
) -> CycleBVP:
    """Newton-solve the periodic boundary-value problem from ``guess``.

    ``guess`` may be a simulated :class:`OrbitSummary` or a previous
    :class:`CycleBVP`.  With ``free`` set to ``"c"`` or ``"tau"`` the
    parameter is an unknown and ``arc`` must supply the pseudo-arclength
    constraint ``(z_pred, tangent, weights)`` in the flattened unknown order
    ``(values, T, parameter)``.

    Raises :class:`NonConvergenceError` when Newton fails and
    :class:`PeriodCollapseError` when the period drops below
    ``cfg.min_period``.  ``fix_period=True`` with a free parameter holds the
    period of ``guess`` and solves for the parameter instead (no ``arc``
    needed); this is how very long periods near a homoclinic orbit are
    reached.
    """
    cfg = cfg or BVPConfig()
    if free is not None and free not in FREE_PARAMS:
        raise ValueError(f"free parameter must be one of {FREE_PARAMS}")
    if free is not None and arc is None and not fix_period:
        raise ValueError("a free parameter needs an arclength constraint or a fixed period")
    if fix_period and free is None:
        raise ValueError("fixing the period requires a free parameter")
    if isinstance(guess, OrbitSummary):
        cyc = cycle_from_samples(p, guess.profile, guess.period, cfg.intervals, cfg.degree)
    else:
        cyc = replace(guess, params=p)
    ref = reference if reference is not None else cyc

    out = _solve_on(cyc.mesh, p, cyc, ref, cfg, free, arc, fix_period)
    if cfg.adapt and (free is None or fix_period):
        new_mesh = _adapted_mesh(out, out.intervals)
        out = _solve_on(new_mesh, out.params, _on_mesh(out, new_mesh), ref, cfg, free, None, fix_period)
    if cfg.refine and free is None:
        while out.intervals * 2 <= cfg.max_intervals:
            fine_mesh = _adapted_mesh(out, out.intervals * 2)
            finer = _solve_on(fine_mesh, out.params, _on_mesh(out, fine_mesh), ref, cfg)
            done = abs(finer.period - out.period) < cfg.refine_tol * max(1.0, out.period)
            out = finer
            if done:
                break
    return out


def cycle_from_hopf(
    p: Params,
    omega: float,
    at: np.ndarray | None = None,
    free: str = "tau",
    amplitude: float = 1e-2,
    cfg: BVPConfig | None = None,
) -> CycleBVP:
    """Small cycle near a Hopf point of the rest point ``at``.

    ``p`` must sit on the Hopf point (``+-i omega`` on the imaginary axis).
    One pseudo-arclength step of size ``amplitude`` is taken from the rest
    point along the critical eigenmode with ``free`` as the extra unknown.
    """
    cfg = cfg or BVPConfig()
    x0 = np.zeros(4) if at is None else np.asarray(at, dtype=float)
    u = hopf_eigenvector(p, omega, at)
    u = u / np.linalg.norm(u)
    M, m = cfg.intervals, cfg.degree
    mesh = np.linspace(0.0, 1.0, M + 1)
    base = CycleBVP(p, mesh, m, np.tile(x0, (M * m, 1)), 2.0 * math.pi / omega)
    s = base.node_times()
    mode = np.real(u[None, :] * np.exp(2j * math.pi * s)[:, None])
    mode /= math.sqrt(np.mean(np.sum(mode * mode, axis=1)))
    ref = replace(base, values=x0 + mode)
    guess = replace(base, values=x0 + amplitude * mode)
    par = getattr(p, free)
    z_pred = np.concatenate([guess.values.reshape(-1), [base.period, par]])
    tangent = np.concatenate([mode.reshape(-1), [0.0, 0.0]])
    weights = np.concatenate([np.full(mode.size, 1.0 / (M * m)), [0.0, 0.0]])
    return solve_cycle_bvp(p, guess, replace(cfg, adapt=False), free=free, arc=(z_pred, tangent, weights), reference=ref)


def stretch_period(cyc: CycleBVP, factor: float, n: int = 4096) -> CycleBVP:
    """Guess for the same orbit with period ``factor * T``.

    The extra time is spent at the slowest points of the orbit (the passages
    near a saddle), so fast excursions keep their physical duration.
    """
    s = np.arange(n) / n
    speed = np.linalg.norm(cyc.derivative(s), axis=1)
    slow = speed < 2.0 * speed.min() + 1e-300
    nxt, prv = np.roll(speed, -1), np.roll(speed, 1)
    mins = np.nonzero(slow & (speed <= prv) & (speed <= nxt))[0]
    T = cyc.period
    extra = (factor - 1.0) * T
    t_ins = np.sort(mins) / n * T
    add = extra / t_ins.size
    T_new = T + extra

    t_new = cyc.node_times() * T_new
    t_old = t_new.copy()
    for k, ti in enumerate(t_ins):
        start = ti + k * add
        t_old = np.where(t_new >= start + add, t_old - add, np.where(t_new > start, t_old - (t_new - start), t_old))
    return replace(cyc, values=cyc(t_old / T), period=T_new)
