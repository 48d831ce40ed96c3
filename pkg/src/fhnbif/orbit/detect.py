"""Post-hoc classification of simulated trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from fhnbif.chareq import SyncMode
from fhnbif.errors import TooShortError
from fhnbif.sim import HistoryTrajectory

__all__ = [
    "Stability",
    "OrbitSummary",
    "Quiescent",
    "NonPeriodic",
    "DetectConfig",
    "detect_orbit",
    "classify_sync",
    "phase_shift",
    "section_crossings",
]


@dataclass(frozen=True)
class Stability:
    """Number of Floquet multipliers outside the unit circle (``None``: unknown)."""

    index: int | None = None

    @property
    def stable(self) -> bool:
        return self.index == 0

    @property
    def label(self) -> str:
        if self.index is None:
            return "Unknown"
        return "Stable" if self.index == 0 else f"Unstable({self.index})"


@dataclass(frozen=True)
class OrbitSummary:
    """A periodic solution measured over one period.

    ``profile`` holds ``n`` equally spaced samples over one period starting at
    an upward crossing of the Poincare section; ``phase_shift`` is the lag of
    ``v2`` behind ``v1`` as an angle in ``[0, 2 pi)``.
    """

    period: float
    amplitude: np.ndarray
    phase_shift: float
    sync: SyncMode
    mean: np.ndarray
    profile: np.ndarray
    period_spread: float = 0.0
    crossings_per_period: int = 1
    floquet: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    stability: Stability = Stability()

    @property
    def periodic(self) -> bool:
        return True

    def with_floquet(self, multipliers: np.ndarray, unit_tol: float = 1e-2) -> "OrbitSummary":
        mu = np.asarray(multipliers, dtype=complex)
        mu = mu[np.argsort(-np.abs(mu))]
        trivial = int(np.argmin(np.abs(mu - 1.0)))
        rest = np.delete(mu, trivial)
        index = int(np.sum(np.abs(rest) > 1.0 + unit_tol))
        return replace(self, floquet=mu, stability=Stability(index))

    def symmetry_defect(self) -> float:
        """Distance between the cycle and its antipodal image, minimised over phase."""
        return cycle_symmetry_defect(self.profile)


@dataclass(frozen=True)
class Quiescent:
    state: np.ndarray
    amplitude: float

    @property
    def periodic(self) -> bool:
        return False


@dataclass(frozen=True)
class NonPeriodic:
    reason: str
    period_spread: float
    amplitude: np.ndarray

    @property
    def periodic(self) -> bool:
        return False


@dataclass(frozen=True)
class DetectConfig:
    t_trans: float = 0.0
    quiet_amp: float = 1e-4
    spread_tol: float = 1e-3
    drift_tol: float = 1e-3
    min_periods: int = 20
    max_crossings: int = 6
    n_profile: int = 512


def cycle_symmetry_defect(profile: np.ndarray) -> float:
    """``min_shift max|y(s) + y(s + shift)|`` over the sampled period."""
    y = np.asarray(profile)
    n = y.shape[0]
    scale = max(float(np.max(np.ptp(y, axis=0))), 1e-300)
    best = math.inf
    for k in range(n):
        best = min(best, float(np.max(np.abs(y + np.roll(y, -k, axis=0)))))
    return best / scale


def section_crossings(traj: HistoryTrajectory, level: float, comp: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Upward crossings of ``x[comp] = level``: refined times and states."""
    x = traj.values[:, comp] - level
    idx = np.nonzero((x[:-1] < 0.0) & (x[1:] >= 0.0))[0]
    if idx.size == 0:
        return np.zeros(0), np.zeros((0, 4))
    t0, t1 = traj.mesh[idx], traj.mesh[idx + 1]
    dt = t1 - t0
    y0, y1 = x[idx], x[idx + 1]
    d0, d1 = traj.derivs[idx, comp] * dt, traj.derivs[idx + 1, comp] * dt
    s = y0 / (y0 - y1)
    # Newton on the Hermite cubic of each bracketing interval
    for _ in range(8):
        s2, s3 = s * s, s * s * s
        f = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1
        df = (6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * d0 + (-6 * s2 + 6 * s) * y1 + (3 * s2 - 2 * s) * d1
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(df != 0.0, f / df, 0.0)
        s = np.clip(s - step, 0.0, 1.0)
    times = t0 + s * dt
    return times, traj.sample(times)


def phase_shift(v1: np.ndarray, v2: np.ndarray) -> float:
    """Lag of ``v2`` behind ``v1`` over one sampled period, in ``[0, 2 pi)``.

    Circular cross-correlation via FFT; the peak is refined by a parabola
    through its neighbours.
    """
    a = np.asarray(v1, dtype=float) - np.mean(v1)
    b = np.asarray(v2, dtype=float) - np.mean(v2)
    n = a.size
    r = np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n)
    k = int(np.argmax(r))
    rm, r0, rp = r[(k - 1) % n], r[k], r[(k + 1) % n]
    den = rm - 2.0 * r0 + rp
    frac = 0.5 * (rm - rp) / den if den != 0.0 else 0.0
    if abs(frac) < 1e-9:
        # FFT round-off; keep an exact peak exact (and away from the 2 pi wrap)
        frac = 0.0
    return float(((k + frac) / n * 2.0 * math.pi) % (2.0 * math.pi))


def sync_class(shift: float) -> SyncMode:
    d = abs(math.remainder(shift, 2.0 * math.pi))
    if d < math.pi / 4.0:
        return SyncMode.ALMOST_SYNCHRONIZED
    if d > 3.0 * math.pi / 4.0:
        return SyncMode.ALMOST_ANTI_PHASE
    return SyncMode.OTHER


def classify_sync(profile: np.ndarray) -> tuple[float, SyncMode]:
    """Phase shift and synchrony class of a one-period ``(n, 4)`` profile."""
    prof = np.asarray(profile)
    shift = phase_shift(prof[:, 0], prof[:, 2])
    return shift, sync_class(shift)


def _window(traj: HistoryTrajectory, t_trans: float) -> HistoryTrajectory:
    if t_trans <= 0.0:
        return traj
    return traj.tail(traj.t1 - (traj.t0 + t_trans))


def detect_orbit(traj: HistoryTrajectory, cfg: DetectConfig | None = None):
    """Classify the long-time behaviour recorded in ``traj``.

    Returns :class:`Quiescent`, :class:`NonPeriodic` or :class:`OrbitSummary`.
    Raises :class:`TooShortError` when the window holds fewer than
    ``cfg.min_periods`` periods.
    """
    cfg = cfg or DetectConfig()
    w = _window(traj, cfg.t_trans)
    vals = w.values
    amp_all = np.ptp(vals, axis=0)
    if max(amp_all[0], amp_all[2]) < cfg.quiet_amp:
        return Quiescent(vals[-1].copy(), float(max(amp_all[0], amp_all[2])))

    half = w.mesh.size // 2
    amp_a = np.ptp(vals[:half], axis=0)
    amp_b = np.ptp(vals[half:], axis=0)
    scale = float(np.max(amp_b))
    drift = float(np.max(np.abs(amp_a - amp_b))) / max(scale, 1e-300)

    comp = 0 if amp_all[0] >= amp_all[2] else 2
    level = float(np.mean(vals[:, comp]))
    tc, xc = section_crossings(w, level, comp)
    if tc.size < 3:
        if drift > cfg.drift_tol or scale < 10 * cfg.quiet_amp:
            return NonPeriodic("amplitude drifting", math.inf, amp_b)
        raise TooShortError(f"only {tc.size} section crossings in a window of {w.duration:.4g}")

    chosen = None
    for k in range(1, cfg.max_crossings + 1):
        if tc.size < k + 2:
            break
        per = tc[k:] - tc[:-k]
        med = float(np.median(per))
        spread = float((per.max() - per.min()) / med)
        mismatch = float(np.max(np.abs(xc[k:] - xc[:-k]))) / max(scale, 1e-300)
        if spread < cfg.spread_tol and mismatch < 10 * cfg.spread_tol:
            chosen = (k, med, spread)
            break
    if drift > cfg.drift_tol:
        return NonPeriodic("amplitude drifting", math.inf if chosen is None else chosen[2], amp_b)
    if chosen is None:
        per = np.diff(tc)
        return NonPeriodic("return times spread", float(np.ptp(per) / np.median(per)), amp_b)
    k, period, spread = chosen
    n_periods = (tc.size - 1) / k
    if n_periods < cfg.min_periods:
        raise TooShortError(f"{n_periods:.1f} periods in window, need {cfg.min_periods}")

    t_end = tc[-1]
    t_beg = tc[-1 - k]
    period = t_end - t_beg if abs((t_end - t_beg) - period) < cfg.spread_tol * period else period
    s = np.arange(cfg.n_profile) / cfg.n_profile
    profile = w.sample(t_end - period + s * period)
    fine = w.sample(t_end - period + np.linspace(0.0, period, 8 * cfg.n_profile))
    shift, sync = classify_sync(profile)
    return OrbitSummary(
        period=float(period),
        amplitude=np.ptp(fine, axis=0),
        phase_shift=shift,
        sync=sync,
        mean=profile.mean(axis=0),
        profile=profile,
        period_spread=spread,
        crossings_per_period=k,
    )
