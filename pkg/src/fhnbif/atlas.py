"""Bifurcation diagrams in the ``(tau, c)`` plane.

Hopf curves of a rest point are traced in the crossing frequency ``omega``
rather than in ``c``.  On a Hopf curve the modulus condition
``|d1 d2| = E |g|`` of the characteristic function at ``i omega`` does not
involve the delay, so it fixes ``c`` as a function of ``omega`` (explicitly
at the origin, by a one-dimensional root find at the nontrivial points);
the phase condition then gives every delay on the curve,
``tau_j = (theta + 2 pi j) / (2 omega)``.  Following ``omega`` threads the
curves through folds in ``c`` without relabelling.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar, root

from fhnbif.chareq import (
    char_coeffs,
    char_eval,
    hopf_pitchfork_point,
    hopf_quartic,
    pitchfork_coupling,
    rightmost_spectrum,
)
from fhnbif.model import DEFAULT, Params, RestKind, _polish, find_rest_points
from fhnbif.orbit.basin import Inventory, ProbeConfig, basin_probe, random_ics
from fhnbif.orbit.bvp import CycleBVP, solve_cycle_bvp
from fhnbif.orbit.continuation import ContinuationConfig, CyclePoint, continue_cycles
from fhnbif.orbit.events import CycleEvent, CycleEventKind, _turning_points, detect_cycle_bifurcations

__all__ = [
    "ParamBox",
    "BranchKind",
    "Branch",
    "Codim2Kind",
    "Codim2Point",
    "trivial_hopf_curves",
    "nontrivial_hopf_curves",
    "pitchfork_line",
    "codim2_points",
    "continue_cycle_branch",
    "fold_cycle_curve",
    "ICProtocol",
    "REFERENCE_ICS",
    "RegimeLabel",
    "RegimeGrid",
    "classify_regime",
    "regime_grid",
]


@dataclass(frozen=True)
class ParamBox:
    tau: tuple[float, float] = (0.0, 9.0)
    c: tuple[float, float] = (0.0, 1.4)

    def contains(self, tau, c) -> np.ndarray:
        tau, c = np.asarray(tau), np.asarray(c)
        return (tau >= self.tau[0]) & (tau <= self.tau[1]) & (c >= self.c[0]) & (c <= self.c[1])

    @property
    def scale(self) -> tuple[float, float]:
        return self.tau[1] - self.tau[0], self.c[1] - self.c[0]


DEFAULT_BOX = ParamBox()


class BranchKind(str, enum.Enum):
    HOPF_TRIVIAL = "HopfTrivial"
    HOPF_NONTRIVIAL = "HopfNontrivial"
    PITCHFORK = "Pitchfork"
    PITCHFORK_CYCLE = "PitchforkCycle"
    FOLD_CYCLE = "FoldCycle"
    TORUS = "Torus"
    HOMOCLINIC_PROXY = "HomoclinicProxy"
    CYCLE = "Cycle"


@dataclass
class Branch:
    """A polyline in the ``(tau, c)`` plane with per-point payload columns."""

    kind: BranchKind
    tau: np.ndarray
    c: np.ndarray
    payload: dict[str, np.ndarray] = field(default_factory=dict)
    label: tuple[int, int] | None = None
    metadata: dict = field(default_factory=dict)
    events: list[CycleEvent] = field(default_factory=list)
    source: object = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.tau.size)

    @property
    def name(self) -> str:
        if self.label is None:
            return self.kind.value
        return f"{self.kind.value}(k={self.label[0]},j={self.label[1]})"

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.tau, self.c])

    def columns(self) -> tuple[list[str], np.ndarray]:
        """Header and table for CSV output."""
        keys = sorted(self.payload)
        data = np.column_stack([self.tau, self.c] + [np.asarray(self.payload[k], dtype=float) for k in keys])
        return ["tau", "c", *keys], data

    def distance_to(self, tau: float, c: float) -> float:
        """Euclidean distance from ``(tau, c)`` to the polyline."""
        pts = self.points
        q = np.array([tau, c])
        if len(pts) == 1:
            return float(np.linalg.norm(pts[0] - q))
        a, b = pts[:-1], pts[1:]
        ab = b - a
        den = np.sum(ab * ab, axis=1)
        t = np.clip(np.sum((q - a) * ab, axis=1) / np.where(den > 0, den, 1.0), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return float(np.min(np.linalg.norm(proj - q, axis=1)))


class Codim2Kind(str, enum.Enum):
    DOUBLE_HOPF = "DoubleHopf"
    HOPF_PITCHFORK = "HopfPitchfork"


@dataclass(frozen=True)
class Codim2Point:
    kind: Codim2Kind
    tau: float
    c: float
    frequencies: tuple[float, ...]
    residuals: tuple[float, ...]
    branches: tuple[str, ...] = ()


# -- Hopf curves ---------------------------------------------------------------


class _RestFamily:
    """The origin or the ``v1 > 0`` nontrivial rest point, as a function of ``c``."""

    def __init__(self, base: Params, nontrivial: bool, c_hi: float, n_table: int = 400):
        self.base = base
        self.nontrivial = nontrivial
        self.c_p = pitchfork_coupling(base)
        self.c_lo = self.c_p if nontrivial else 0.0
        self.c_hi = c_hi
        if nontrivial:
            # rest states grow like sqrt(c - c_P); tabulate on a quadratic grid
            s = np.linspace(0.0, 1.0, n_table + 1)[1:]
            self.c_tab = self.c_p + (c_hi - self.c_p) * s * s
            self.x_tab = np.array([self._solve(c) for c in self.c_tab])
            # bracketing table including c_P itself, where the pair merges with the origin
            self._gc = np.concatenate([[self.c_p], self.c_tab])
            self._gx = np.vstack([np.zeros(4), self.x_tab])

    def _solve(self, c: float) -> np.ndarray:
        for r in find_rest_points(self.base.replace(c=c)):
            if r.kind is RestKind.NONTRIVIAL_PLUS:
                return r.state
        raise ValueError(f"no nontrivial rest point at c={c}")

    def state(self, c: float) -> np.ndarray | None:
        if not self.nontrivial:
            return None
        if c <= self.c_p:
            return np.zeros(4)
        guess = np.array([np.interp(c, self.c_tab, self.x_tab[:, i]) for i in range(4)])
        if c < self.c_tab[0]:
            guess = self.x_tab[0] * math.sqrt((c - self.c_p) / (self.c_tab[0] - self.c_p))
        return _polish(self.base.replace(c=c), guess)

    def _parts(self, c: float, w: float) -> tuple[complex, complex, float]:
        k = char_coeffs(self.base.replace(c=c), self.state(c))
        dd = complex(w**4 - k.B * w * w + k.D, -k.A * w**3 + k.C * w)
        g = complex(k.b1 * k.b2 - w * w, (k.b1 + k.b2) * w)
        return dd, g, k.E

    def gap(self, c: float, w: float) -> float:
        dd, g, e = self._parts(c, w)
        return abs(dd) - e * abs(g)

    def couplings(self, w: float) -> list[float]:
        """All ``c`` on Hopf curves at frequency ``w``, largest first."""
        if not self.nontrivial:
            dd, g, _ = self._parts(1.0, w)
            c = math.sqrt(abs(dd) / abs(g))
            return [c] if c <= self.c_hi else []
        vals = self._table_gap(w)
        gc = self._gc
        f = lambda c: self.gap(c, w)  # noqa: E731
        idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        roots = [brentq(f, gc[i], gc[i + 1], xtol=1e-15, rtol=1e-15) for i in idx]
        # a root pair inside one table cell (near a fold in w) leaves no sign change
        # there; look for it at same-signed extrema of the tabulated gap
        mid = vals[1:-1]
        ext = np.nonzero(
            ((vals[:-2] - mid) * (vals[2:] - mid) > 0) & (np.sign(vals[:-2]) == np.sign(mid)) & (np.sign(vals[2:]) == np.sign(mid))
        )[0] + 1
        for i in ext:
            sgn = math.copysign(1.0, vals[i])
            m = minimize_scalar(lambda c: sgn * f(c), bounds=(gc[i - 1], gc[i + 1]), method="bounded", options={"xatol": 1e-14})
            if sgn * m.fun >= 0.0:
                continue
            for a, b in ((gc[i - 1], m.x), (m.x, gc[i + 1])):
                if sgn * f(a) > 0.0 and sgn * f(b) > 0.0:
                    continue
                if f(a) * f(b) < 0.0:
                    roots.append(brentq(f, a, b, xtol=1e-15, rtol=1e-15))
        return sorted(roots, reverse=True)

    def coupling(self, w: float, sheet: int = 0) -> float:
        """``c`` on sheet ``sheet`` (0 = largest root) at frequency ``w``; NaN when absent.

        A Hopf curve that folds in ``w`` is covered by two sheets meeting at
        the fold.
        """
        roots = self.couplings(w)
        return roots[sheet] if sheet < len(roots) else math.nan

    def _table_gap(self, w: float) -> np.ndarray:
        p = self.base
        v1, v2 = self._gx[:, 0], self._gx[:, 2]
        al1, al2 = p.a - 3 * v1**2, p.a - 3 * v2**2
        lam = 1j * w
        d1 = (lam - al1) * (lam + p.b1) + 1.0
        d2 = (lam - al2) * (lam + p.b2) + 1.0
        e = self._gc**2 / (np.cosh(v1) ** 2 * np.cosh(v2) ** 2)
        g = abs((lam + p.b1) * (lam + p.b2))
        return np.abs(d1 * d2) - e * g

    def phase(self, c: float, w: float) -> float:
        """``2 omega tau`` modulo ``2 pi`` at the crossing."""
        dd, g, _ = self._parts(c, w)
        return math.atan2(-(dd / g).imag, (dd / g).real) % (2.0 * math.pi)

    def params(self, c: float, tau: float = 0.0) -> Params:
        return self.base.replace(c=c, tau=tau)


@dataclass
class _HopfCurve:
    """One frequency-parametrised Hopf curve of a rest family (all ``j``)."""

    fam: _RestFamily
    w: np.ndarray
    c: np.ndarray
    theta: np.ndarray  # unwrapped
    sheet: int = 0

    def tau(self, j: int) -> np.ndarray:
        return (self.theta + 2.0 * math.pi * j) / (2.0 * self.w)

    def theta_at(self, w: float) -> float:
        """Unwrapped phase at ``w`` (continuous with the sampled curve)."""
        c = self.fam.coupling(w, self.sheet)
        raw = self.fam.phase(c, w)
        ref = float(np.interp(w, self.w, self.theta))
        return raw + 2.0 * math.pi * round((ref - raw) / (2.0 * math.pi))

    def point(self, w: float, j: int) -> tuple[float, float]:
        c = self.fam.coupling(w, self.sheet) if w > 0.0 else math.nan
        if not math.isfinite(c):
            return math.nan, math.nan
        return (self.theta_at(w) + 2.0 * math.pi * j) / (2.0 * w), c


def _sample_curve(fam: _RestFamily, box: ParamBox, max_step: float, w_hi: float, n0: int, j_range) -> list[_HopfCurve]:
    w0 = np.linspace(1e-5, w_hi, n0)
    roots = [fam.couplings(w) for w in w0]
    curves = []
    for sheet in range(max(len(r) for r in roots)):
        c0 = np.array([r[sheet] if sheet < len(r) else math.nan for r in roots])
        ok = np.isfinite(c0) & (c0 >= box.c[0])
        curves += [_sample_run(fam, box, max_step, w0, seg, sheet, j_range) for seg in _runs(ok)]
    return curves


def _sample_run(fam: _RestFamily, box: ParamBox, max_step: float, w0, seg, sheet: int, j_range) -> "_HopfCurve":
    n0 = w0.size
    w = list(w0[seg])
    # extend the run to the existence boundary by bisection
    lo, hi = seg[0], seg[-1]
    if lo > 0:
        w.insert(0, _edge(fam, w0[lo - 1], w0[lo], box, sheet))
    if hi < n0 - 1:
        w.append(_edge(fam, w0[hi + 1], w0[hi], box, sheet))
    w = np.array(w)
    for sweep in range(31):
        c = np.array([fam.coupling(x, sheet) for x in w])
        th = np.unwrap([fam.phase(cc, x) for cc, x in zip(c, w)])
        bad = np.abs(np.diff(th)) > 0.2
        for j in j_range(th, w):
            t = (th + 2.0 * math.pi * j) / (2.0 * w)
            inside = box.contains(t, c)
            step = np.hypot(np.diff(t), np.diff(c))
            bad |= (inside[:-1] | inside[1:]) & (step > max_step)
        if not bad.any() or sweep == 30:
            break
        mids = 0.5 * (w[:-1] + w[1:])[bad]
        w = np.sort(np.concatenate([w, mids]))
    return _HopfCurve(fam, w, c, th, sheet)


def _edge(fam: _RestFamily, w_out: float, w_in: float, box: ParamBox, sheet: int = 0) -> float:
    """Frequency where the curve leaves the admissible ``c`` range."""
    for _ in range(60):
        mid = 0.5 * (w_out + w_in)
        c = fam.coupling(mid, sheet)
        if math.isfinite(c) and c >= box.c[0]:
            w_in = mid
        else:
            w_out = mid
    return w_in


def _runs(mask: np.ndarray) -> list[np.ndarray]:
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    cuts = np.nonzero(np.diff(idx) > 1)[0] + 1
    return np.split(idx, cuts)


def _labels(fam: _RestFamily, c: float, w: float, tau: float) -> tuple[int, int, int, float]:
    """Standard ``(k, j)`` labels, crossing sign and residual of one Hopf point."""
    p = fam.params(c, tau)
    at = fam.state(c)
    quart = hopf_quartic(p, at)
    roots = np.array(quart.positive_roots)
    z = w * w
    if roots.size:
        k = int(np.argmin(np.abs(roots - z))) + 1
        sign = 1 if quart.dh(roots[k - 1]) > 0 else -1
    else:
        k, sign = 1, 0
    j = int(math.floor(2.0 * w * tau / (2.0 * math.pi) + 1e-9))
    res = float(abs(char_eval(p, 1j * w, at)))
    return k, j, sign, res


def _hopf_branches(fam: _RestFamily, box: ParamBox, j_max: int, max_step: float, kind: BranchKind) -> list[Branch]:
    w_hi = 8.0
    two_pi = 2.0 * math.pi

    def j_range(th, w):
        lo = math.ceil(-np.max(th) / two_pi)
        hi = math.floor(np.max(2.0 * w * box.tau[1] - th) / two_pi)
        return range(max(lo, -j_max - 1), min(hi, j_max + 1) + 1)

    branches: list[Branch] = []
    hp = hopf_pitchfork_point(fam.base)
    for curve in _sample_curve(fam, box, max_step, w_hi, 400, j_range):
        for j in j_range(curve.theta, curve.w):
            t = curve.tau(j)
            inside = box.contains(t, curve.c)
            for seg in _runs(inside):
                ws = list(curve.w[seg])
                ts = list(t[seg])
                cs = list(curve.c[seg])
                # exact exits through tau = 0
                i0, i1 = seg[0], seg[-1]
                for end, nb in ((i0, i0 - 1), (i1, i1 + 1)):
                    if 0 <= nb < t.size and t[nb] < box.tau[0] <= t[end] and box.tau[0] == 0.0:
                        wz = brentq(lambda x: curve.theta_at(x) + two_pi * j, curve.w[nb], curve.w[end], xtol=1e-15)
                        cz = fam.coupling(wz, curve.sheet)
                        if box.contains(0.0, cz):
                            if end == i0:
                                ws.insert(0, wz), ts.insert(0, 0.0), cs.insert(0, cz)
                            else:
                                ws.append(wz), ts.append(0.0), cs.append(cz)
                # the zero-frequency end of the j = 0 curve is the Hopf-pitchfork point
                at_origin = i0 == 0 and curve.w[0] < 1e-3 and j == 0
                if at_origin and box.contains(hp.tau, hp.c):
                    ws.insert(0, 0.0), ts.insert(0, hp.tau), cs.insert(0, hp.c)
                if len(ws) < 2:
                    continue
                ws_a, ts_a, cs_a = np.array(ws), np.array(ts), np.array(cs)
                lab = [_labels(fam, c, w, tt) if w > 0 else (1, 0, 0, 0.0) for c, w, tt in zip(cs_a, ws_a, ts_a)]
                k_arr = np.array([x[0] for x in lab])
                j_arr = np.array([x[1] for x in lab])
                mid = len(lab) // 2
                branches.append(
                    Branch(
                        kind,
                        ts_a,
                        cs_a,
                        {
                            "omega": ws_a,
                            "k": k_arr,
                            "j": j_arr,
                            "crossing_sign": np.array([x[2] for x in lab]),
                            "residual": np.array([x[3] for x in lab]),
                        },
                        label=(int(k_arr[mid]), int(j_arr[mid])),
                        metadata={"rest": "nontrivial" if fam.nontrivial else "trivial", "curve_j": j},
                        source=(curve, j),
                    )
                )
    branches.sort(key=lambda b: (b.label, float(b.tau[0])))
    return branches


def trivial_hopf_curves(
    box: ParamBox = DEFAULT_BOX, k_max: int = 2, j_max: int = 3, p: Params = DEFAULT, max_step: float = 0.05
) -> list[Branch]:
    """Hopf curves of the origin inside ``box``.

    Each returned branch is one connected piece of a curve with fixed phase
    index; its ``label`` holds the standard ``(k, j)`` at its midpoint and
    the payload holds them per point, since ``k`` swaps at folds in ``c``.
    Branches whose labels exceed ``k_max`` or ``j_max`` everywhere are
    dropped.
    """
    fam = _RestFamily(p, nontrivial=False, c_hi=box.c[1])
    out = _hopf_branches(fam, box, j_max, max_step, BranchKind.HOPF_TRIVIAL)
    return [b for b in out if np.any((b.payload["k"] <= k_max) & (b.payload["j"] <= j_max))]


def nontrivial_hopf_curves(
    box: ParamBox = DEFAULT_BOX, j_max: int = 3, p: Params = DEFAULT, max_step: float = 0.05
) -> list[Branch]:
    """Hopf curves of the nontrivial rest points (both share them by symmetry)."""
    c_p = pitchfork_coupling(p)
    if box.c[1] <= c_p:
        return []
    fam = _RestFamily(p, nontrivial=True, c_hi=box.c[1])
    sub = replace(box, c=(max(box.c[0], c_p), box.c[1]))
    return _hopf_branches(fam, sub, j_max, max_step, BranchKind.HOPF_NONTRIVIAL)


def pitchfork_line(box: ParamBox = DEFAULT_BOX, p: Params = DEFAULT, max_step: float = 0.05) -> Branch:
    """The delay-independent line ``c = c_P``."""
    c_p = pitchfork_coupling(p)
    n = max(2, math.ceil((box.tau[1] - box.tau[0]) / max_step) + 1)
    tau = np.linspace(box.tau[0], box.tau[1], n)
    return Branch(BranchKind.PITCHFORK, tau, np.full(n, c_p), {}, metadata={"inside": bool(box.c[0] <= c_p <= box.c[1])})


# -- codimension-two points --------------------------------------------------


def _segment_crossings(a: np.ndarray, b: np.ndarray, scale: tuple[float, float]) -> list[tuple[int, int]]:
    """Index pairs of crossing segments of two polylines."""
    s = np.array([1.0 / max(scale[0], 1e-300), 1.0 / max(scale[1], 1e-300)])
    a, b = a * s, b * s
    p0, p1 = a[:-1], a[1:]
    q0, q1 = b[:-1], b[1:]
    out = []
    # bounding-box prefilter
    for i in range(len(p0)):
        lo = np.minimum(p0[i], p1[i])
        hi = np.maximum(p0[i], p1[i])
        cand = np.nonzero(
            (np.maximum(q0[:, 0], q1[:, 0]) >= lo[0])
            & (np.minimum(q0[:, 0], q1[:, 0]) <= hi[0])
            & (np.maximum(q0[:, 1], q1[:, 1]) >= lo[1])
            & (np.minimum(q0[:, 1], q1[:, 1]) <= hi[1])
        )[0]
        for jj in cand:
            r = p1[i] - p0[i]
            q = q1[jj] - q0[jj]
            den = r[0] * q[1] - r[1] * q[0]
            if den == 0.0:
                continue
            d = q0[jj] - p0[i]
            t = (d[0] * q[1] - d[1] * q[0]) / den
            u = (d[0] * r[1] - d[1] * r[0]) / den
            if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
                out.append((i, int(jj)))
    return out


def _refine_double_hopf(b1: Branch, b2: Branch, i: int, k: int) -> Codim2Point | None:
    curve1, j1 = b1.source
    curve2, j2 = b2.source
    w1 = 0.5 * (b1.payload["omega"][i] + b1.payload["omega"][i + 1])
    w2 = 0.5 * (b2.payload["omega"][k] + b2.payload["omega"][k + 1])
    if w1 <= 0 or w2 <= 0 or abs(w1 - w2) < 1e-6:
        return None

    def f(x):
        t1, c1 = curve1.point(x[0], j1)
        t2, c2 = curve2.point(x[1], j2)
        return [t1 - t2, c1 - c2]

    sol = root(f, [w1, w2], method="hybr", options={"xtol": 1e-13})
    # hybr reports stalls at round-off as failures; judge by the residual
    if not np.all(np.isfinite(sol.fun)) or np.max(np.abs(sol.fun)) > 1e-10:
        return None
    w1, w2 = sol.x
    tau, c = curve1.point(w1, j1)
    fam = curve1.fam
    p = fam.params(c, tau)
    at = fam.state(c)
    res = (float(abs(char_eval(p, 1j * w1, at))), float(abs(char_eval(p, 1j * w2, at))))
    return Codim2Point(Codim2Kind.DOUBLE_HOPF, float(tau), float(c), (float(w1), float(w2)), res, (b1.name, b2.name))


def _hopf_pitchfork_points(hopf: Branch, pf: Branch) -> list[Codim2Point]:
    """Points of a Hopf branch on the pitchfork line (zero eigenvalue plus imaginary pair)."""
    curve, j = hopf.source
    fam = curve.fam
    c_p = float(pf.c[0])
    out = []
    w = hopf.payload["omega"]
    if w[0] == 0.0 and abs(hopf.c[0] - c_p) < 1e-9:
        hp = hopf_pitchfork_point(fam.base)
        p = fam.params(hp.c, hp.tau)
        res = (float(abs(char_eval(p, 0.0))), float(abs(hp.first_derivative)))
        out.append(Codim2Point(Codim2Kind.HOPF_PITCHFORK, hp.tau, hp.c, (0.0,), res, (hopf.name, pf.name)))
    d = hopf.c - c_p
    for i in np.nonzero((d[:-1] * d[1:] < 0.0) & (w[:-1] > 0.0))[0]:
        wz = brentq(lambda x: fam.coupling(x, curve.sheet) - c_p if math.isfinite(fam.coupling(x, curve.sheet)) else -c_p, w[i], w[i + 1], xtol=1e-15)
        tau, c = curve.point(wz, j)
        p = fam.params(c, tau)
        res = (float(abs(char_eval(p, 0.0, fam.state(c)))), float(abs(char_eval(p, 1j * wz, fam.state(c)))))
        out.append(Codim2Point(Codim2Kind.HOPF_PITCHFORK, float(tau), float(c), (float(wz),), res, (hopf.name, pf.name)))
    return out


def codim2_points(branches: list[Branch], box: ParamBox = DEFAULT_BOX) -> list[Codim2Point]:
    """Double-Hopf and Hopf-pitchfork points among the given branches.

    Crossings of polylines are located segment by segment and refined by a
    Newton solve of the joint conditions (two imaginary pairs, or a zero
    root together with an imaginary pair).
    """
    hopf = [b for b in branches if b.kind in (BranchKind.HOPF_TRIVIAL, BranchKind.HOPF_NONTRIVIAL) and b.source]
    pfs = [b for b in branches if b.kind is BranchKind.PITCHFORK]
    out: list[Codim2Point] = []
    for pf in pfs:
        for b in hopf:
            out.extend(_hopf_pitchfork_points(b, pf))
    for n1, b1 in enumerate(hopf):
        for b2 in hopf[n1:]:
            if b1.kind is not b2.kind:
                continue
            for i, k in _segment_crossings(b1.points, b2.points, box.scale):
                if b1 is b2 and abs(i - k) <= 1:
                    continue
                pt = _refine_double_hopf(b1, b2, i, k)
                if pt is not None and box.contains(pt.tau, pt.c):
                    out.append(pt)
    # merge duplicates found from neighbouring segments
    uniq: list[Codim2Point] = []
    for pt in out:
        if not any(q.kind is pt.kind and abs(q.tau - pt.tau) < 1e-6 and abs(q.c - pt.c) < 1e-6 for q in uniq):
            uniq.append(pt)
    uniq.sort(key=lambda q: (q.kind.value, q.c, q.tau))
    return uniq


# -- cycle branches ------------------------------------------------------------


def _refine_fold(pts: list[CyclePoint], i: int, parameter: str, stop, cfg: ContinuationConfig) -> float | None:
    """Re-trace the stretch around a turning point with a small step."""
    if i < 2:
        return None
    span = pts[i + 1].arclength - pts[i - 1].arclength
    ds = max(span / 12.0, cfg.ds_min)
    fine = replace(cfg, ds=ds, ds_max=ds, ds_min=min(cfg.ds_min, ds), max_points=30, floquet=False)
    local, _ = continue_cycles(pts[i - 1].cycle, parameter, stop, fine, previous=pts[i - 2].cycle)
    turns = _turning_points(local)
    return turns[0][1] if turns else None


def continue_cycle_branch(
    seed: CycleBVP,
    parameter: str,
    stop: tuple[float, float],
    cfg: ContinuationConfig | None = None,
    direction: int = 1,
    refine_folds: bool = True,
) -> tuple[Branch, list[CyclePoint]]:
    """Continue a cycle in ``parameter`` and annotate its bifurcations.

    Returns the branch polyline (with period, amplitude, unstable multiplier
    count and symmetry defect as payload, and the detected events) together
    with the archive of converged cycles.
    """
    cfg = cfg or ContinuationConfig()
    pts, reason = continue_cycles(seed, parameter, stop, cfg, direction=direction)
    events = detect_cycle_bifurcations(pts, t_max=cfg.t_max) if len(pts) > 1 and stop[1] > stop[0] else []
    if refine_folds:
        sharp = []
        for ev in events:
            if ev.labels == (CycleEventKind.FOLD,) and 2 <= ev.index < len(pts) - 1:
                par = _refine_fold(pts, ev.index, parameter, stop, cfg)
                if par is not None:
                    ev = replace(ev, param=par)
            sharp.append(ev)
        events = sharp
    tau = np.array([q.cycle.params.tau for q in pts])
    c = np.array([q.cycle.params.c for q in pts])
    index = np.array(
        [
            np.sum(np.abs(np.delete(q.multipliers, np.argmin(np.abs(q.multipliers - 1.0)))) > 1.0 + 1e-6)
            if q.multipliers is not None
            else -1
            for q in pts
        ]
    )
    branch = Branch(
        BranchKind.CYCLE,
        tau,
        c,
        {
            "period": np.array([q.period for q in pts]),
            "amplitude": np.array([q.amplitude for q in pts]),
            "unstable": index,
            "symmetry": np.array([q.symmetry for q in pts]),
        },
        metadata={"parameter": parameter, "end": reason},
        events=events,
    )
    return branch, pts


def fold_cycle_curve(
    seed: CycleBVP,
    taus,
    window: float = 0.03,
    cfg: ContinuationConfig | None = None,
) -> Branch:
    """Track a fold of cycles in ``(tau, c)``.

    ``seed`` is a cycle on the branch a little below the fold (in ``c``) at
    the first delay.  At each delay the seed is re-converged, continued in
    ``c`` across the turning point, and the refined fold recorded; the cycle
    just before the fold seeds the next delay.
    """
    cfg = cfg or ContinuationConfig(floquet=False)
    cfg = replace(cfg, floquet=False)
    cur = seed
    tt, cc, per = [], [], []
    for tau in taus:
        p = cur.params.replace(tau=float(tau))
        try:
            cur = solve_cycle_bvp(p, cur, cfg.bvp)
        except Exception as exc:  # noqa: BLE001 - record where tracking stopped
            warnings.warn(f"fold tracking stopped at tau={tau}: {exc}", stacklevel=2)
            break
        c0 = p.c
        pts, _ = continue_cycles(cur, "c", (c0 - window, c0 + window), replace(cfg, max_points=60), direction=1)
        turns = _turning_points(pts)
        if not turns:
            warnings.warn(f"no fold within {window} of c={c0} at tau={tau}", stacklevel=2)
            break
        i, par = turns[0]
        par = _refine_fold(pts, i, "c", (c0 - window, c0 + window), cfg) or par
        tt.append(float(tau))
        cc.append(par)
        per.append(pts[i].period)
        back = max(0, i - 2)
        cur = pts[back].cycle
    return Branch(BranchKind.FOLD_CYCLE, np.array(tt), np.array(cc), {"period": np.array(per)})


# -- regime classification ---------------------------------------------------

REFERENCE_ICS = np.array(
    [
        [1.3, 1.5, 1.4, 1.0],
        [0.05, 0.03, 0.04, 0.2],
        [0.1, 0.3, 0.4, 0.2],
        [1.0, 0.9, 0.8, 0.7],
    ]
)


def _structured_ics() -> np.ndarray:
    """In-phase histories with a strong recovery variable.

    Synchronised cycles coexisting with anti-phase ones can have basins too
    thin for uniform random sampling to hit; these in-phase starts land in
    them.
    """
    rows = []
    for w in (1.0, 2.0):
        rows.append([0.0, w, 0.0, 0.5 * w])
    for v in (0.5, -0.5):
        for w in (2.0, 2.5):
            rows.append([v, w, v, w])
    return np.array(rows)


@dataclass(frozen=True)
class ICProtocol:
    """Constant initial histories used to inventory attractors.

    With ``antipodes`` set, every history is paired with its antipodal
    image so that inventories respect the symmetry of the system.
    """

    reference: bool = True
    n_random: int = 32
    seed: int = 42
    half_width: float = 2.0
    structured: bool = True
    antipodes: bool = True

    def ics(self) -> np.ndarray:
        parts = []
        if self.reference:
            parts.append(REFERENCE_ICS)
        if self.structured:
            parts.append(_structured_ics())
        if self.n_random:
            parts.append(random_ics(self.n_random, self.seed, self.half_width))
        ics = np.vstack(parts) if parts else np.zeros((0, 4))
        if self.antipodes:
            ics = np.vstack([ics, -ics])
        return ics


@dataclass(frozen=True)
class RegimeLabel:
    """Attractor census of one parameter point."""

    periodic: tuple[str, ...]
    stable_rests: int
    nonperiodic: int = 0

    @property
    def n_attractors(self) -> int:
        return len(self.periodic) + self.stable_rests + self.nonperiodic

    @property
    def name(self) -> str:
        parts = [f"P:{s}" for s in self.periodic] + (["R:%d" % self.stable_rests] if self.stable_rests else [])
        parts += ["Q:%d" % self.nonperiodic] if self.nonperiodic else []
        if not self.periodic and not self.nonperiodic:
            if self.stable_rests == 1:
                return "Quiescent"
            if self.stable_rests == 2:
                return "Quiescent-bistable"
            return f"Quiescent({self.stable_rests})"
        if self.n_attractors == 1 and self.periodic:
            return f"MonoPeriodic({self.periodic[0]})"
        if len(self.periodic) == 3 and self.n_attractors == 3:
            return "TriPeriodic"
        if self.n_attractors == 2:
            return "BiStable(" + ",".join(parts) + ")"
        return "MultiStable(" + ",".join(parts) + ")"


def classify_regime(p: Params, protocol: ICProtocol | None = None, probe: ProbeConfig | None = None) -> tuple[RegimeLabel, Inventory]:
    """Label one parameter point from rest-point spectra and an IC sweep."""
    protocol = protocol or ICProtocol()
    inv = basin_probe(p, protocol.ics(), probe)
    stable = sum(1 for r in find_rest_points(p) if rightmost_spectrum(p, r).unstable_count == 0)
    syncs = tuple(sorted(a.summary.sync.value for a in inv.periodic))
    return RegimeLabel(syncs, stable, len(inv.nonperiodic)), inv


@dataclass
class RegimeGrid:
    taus: np.ndarray
    cs: np.ndarray
    labels: list[list[RegimeLabel]]

    def names(self) -> np.ndarray:
        return np.array([[lab.name for lab in row] for row in self.labels], dtype=object)

    def rows(self) -> list[tuple[float, float, str]]:
        return [(float(t), float(c), self.labels[i][j].name) for i, c in enumerate(self.cs) for j, t in enumerate(self.taus)]


def _cell(args):
    p, protocol, probe = args
    return classify_regime(p, protocol, probe)[0]


def regime_grid(
    box: ParamBox = DEFAULT_BOX,
    resolution: tuple[int, int] = (10, 8),
    protocol: ICProtocol | None = None,
    probe: ProbeConfig | None = None,
    p: Params = DEFAULT,
    workers: int = 1,
) -> RegimeGrid:
    """Regime labels on a ``resolution = (n_tau, n_c)`` grid of cell centres.

    Cells are independent; with ``workers > 1`` they run in separate
    processes and are reassembled in cell order.
    """
    n_t, n_c = resolution
    dt = (box.tau[1] - box.tau[0]) / n_t
    dc = (box.c[1] - box.c[0]) / n_c
    taus = box.tau[0] + dt * (np.arange(n_t) + 0.5)
    cs = box.c[0] + dc * (np.arange(n_c) + 0.5)
    jobs = [(p.replace(c=float(c), tau=float(t)), protocol, probe) for c in cs for t in taus]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            flat = list(ex.map(_cell, jobs))
    else:
        flat = [_cell(j) for j in jobs]
    labels = [flat[i * n_t : (i + 1) * n_t] for i in range(n_c)]
    return RegimeGrid(taus, cs, labels)
