"""Action-based diagnostics for oscillator trajectories.

Phase coordinates with unit masses: the Lagrangian of a configuration is
``sum_i theta_dot_i**2 / 2 - V`` with the Kuramoto potential
``V = -sum_{i<j} Xbar_ij cos(theta_j - theta_i)``, ``Xbar`` the symmetrized
coupling. For identical frequencies the Kuramoto flow descends ``V``.
All time integrals use the trapezoid rule and all derivatives central
differences, so the series stay second-order accurate.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .graph import Network
from .kuramoto import order_parameter_series

__all__ = [
    "TrajectoryRecord",
    "RegimeReport",
    "QoppaFit",
    "FitUndefinedError",
    "lagrangian",
    "lagrangian_series",
    "accumulate_action",
    "signaling_action",
    "firing_rate",
    "signaling_action_from_events",
    "signaling_frequency",
    "attenuation_action",
    "intensity_ratio",
    "action_derivative",
    "classify_regime",
    "frequency_shifts",
    "fit_qoppa",
    "wavelength_shift",
    "config_trajectory",
    "build_record",
]

REGIMES = ("underdamped", "critically-damped", "steady-state", "chaotic/unsettled")


class FitUndefinedError(ValueError):
    pass


def _sym(coupling: np.ndarray) -> np.ndarray:
    return 0.5 * (coupling + coupling.T)


def lagrangian(theta, theta_dot, net: Network) -> float:
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    if theta.shape != (net.n,) or theta_dot.shape != (net.n,):
        raise ValueError(f"theta and theta_dot must both have length n={net.n}")
    kinetic = 0.5 * float(np.dot(theta_dot, theta_dot))
    bonds = float(_kernels.potential(np.ascontiguousarray(theta[None, :]), _sym(net.coupling))[0])
    return kinetic + bonds


def lagrangian_series(thetas, theta_dots, net, segments=None) -> np.ndarray:
    """Lagrangian per recorded step.

    ``segments`` (``(first_index, network)`` pairs, as produced by a perturbed
    run) switches the coupling at the given sample indices.
    """
    thetas = np.ascontiguousarray(np.atleast_2d(thetas), dtype=float)
    theta_dots = np.atleast_2d(np.asarray(theta_dots, dtype=float))
    if thetas.shape != theta_dots.shape:
        raise ValueError("thetas and theta_dots must have the same shape")
    if segments is None:
        segments = [(0, net)]
    kinetic = 0.5 * np.einsum("ij,ij->i", theta_dots, theta_dots)
    bonds = np.empty(thetas.shape[0])
    bounds = [first for first, _ in segments[1:]] + [thetas.shape[0]]
    for (first, seg_net), stop in zip(segments, bounds):
        if stop > first:
            bonds[first:stop] = _kernels.potential(thetas[first:stop], _sym(seg_net.coupling))
    return kinetic + bonds


def _check_times(times, length) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.shape != (length,):
        raise ValueError(f"times must have length {length}")
    if length > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    return times


def _cumtrapz(values, times) -> np.ndarray:
    out = np.zeros(values.shape[0])
    if values.shape[0] > 1:
        out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


def accumulate_action(lagrangian_series, times) -> np.ndarray:
    """Cumulative ``S(t) = int_{t_0}^{t} L dt`` with ``S(t_0) = 0``."""
    values = np.asarray(lagrangian_series, dtype=float)
    return _cumtrapz(values, _check_times(times, values.shape[0]))


def signaling_action(p_send_series, times) -> np.ndarray:
    """Cumulative signalling action ``int P_send dt``."""
    values = np.asarray(p_send_series, dtype=float)
    return _cumtrapz(values, _check_times(times, values.shape[0]))


def firing_rate(event_times, times, window: float) -> np.ndarray:
    """Centred sliding-window rate estimate of an event stream.

    The window is clipped to the sampled span and the count divided by the
    clipped width, so the estimate stays unbiased near the ends.
    """
    if not window > 0:
        raise ValueError("window must be > 0")
    times = np.asarray(times, dtype=float)
    ev = np.sort(np.asarray(event_times, dtype=float))
    lo = np.maximum(times - 0.5 * window, times[0])
    hi = np.minimum(times + 0.5 * window, times[-1])
    counts = np.searchsorted(ev, hi, side="right") - np.searchsorted(ev, lo, side="left")
    width = hi - lo
    return np.where(width > 0, counts / np.where(width > 0, width, 1.0), 0.0)


def signaling_action_from_events(events, times, window: Optional[float] = None,
                                 mean_period: Optional[float] = None,
                                 include_suppressed: bool = False) -> np.ndarray:
    """Signalling action of a pulse-event log, using the windowed firing rate
    as ``P_send(t)``. The window defaults to ten mean periods."""
    if window is None:
        if mean_period is None:
            raise ValueError("give either window or mean_period")
        window = 10.0 * mean_period
    times = np.asarray(times, dtype=float)
    stamps = [e.t for e in events if include_suppressed or not e.suppressed]
    if not stamps:
        return np.zeros(times.shape[0])
    return signaling_action(firing_rate(stamps, times, window), times)


def signaling_frequency(s_f):
    """``exp(S_f)`` of a real signalling action."""
    return np.exp(s_f)


def attenuation_action(gamma, t):
    """Signalling action of an exponentially attenuated signal, ``-gamma t``."""
    gamma = np.asarray(gamma, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(gamma < 0) or np.any(t < 0):
        raise ValueError("gamma and t must be >= 0")
    out = -gamma * t
    return float(out) if out.ndim == 0 else out


def intensity_ratio(gamma, t):
    """``I(t)/I_0 = exp(-gamma t)``."""
    return np.exp(attenuation_action(gamma, t))


def action_derivative(action_series, times) -> np.ndarray:
    """``dS/dt`` by central differences, second-order one-sided at the ends."""
    s = np.asarray(action_series, dtype=float)
    if s.shape[0] < 3:
        raise ValueError("action derivative needs at least 3 samples")
    # differencing about the first sample keeps a constant series exactly zero
    return np.gradient(s - s[0], _check_times(times, s.shape[0]), edge_order=2)


@dataclass
class RegimeReport:
    regime: str
    settle_time: Optional[float]
    zero_crossings: int
    envelope_rate: float
    asymptote: float
    extrema_times: list

    def to_dict(self) -> dict:
        return asdict(self)


def _local_maxima(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 3:
        return np.zeros(0, dtype=int)
    return np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1


def classify_regime(ds_dt_series, times, tol: float = 0.02, settle_fraction: float = 0.2,
                    tail_fraction: float = 0.1, noise_fraction: float = 0.01) -> RegimeReport:
    """Classify the settling of an action-derivative series.

    The asymptote is the mean of the last ``tail_fraction`` of samples and
    the settling band is ``tol`` relative to it (relative to the peak
    deviation when the asymptote is zero). A series is settled when it stays
    inside the band over the final ``settle_fraction``. Crossings of the
    asymptote are counted over the whole series, ignoring excursions smaller
    than ``noise_fraction`` of the band, so ringing that happens inside the
    band still counts as oscillation.
    """
    x = np.asarray(ds_dt_series, dtype=float)
    times = _check_times(times, x.shape[0])
    m = x.shape[0]
    if m < 10:
        raise ValueError("classify_regime needs at least 10 samples")
    tail = max(1, int(math.ceil(tail_fraction * m)))
    asym = float(np.mean(x[-tail:]))
    dev = x - asym
    scale = abs(asym)
    if scale <= 1e-12 * max(float(np.max(np.abs(x))), 1e-300):
        scale = float(np.max(np.abs(dev)))
    band = tol * scale
    floor = noise_fraction * band
    outside = np.flatnonzero(np.abs(dev) > band)
    settle_idx = 0 if outside.size == 0 else int(outside[-1]) + 1

    d = np.diff(x)
    turning = np.flatnonzero(np.sign(d[1:]) * np.sign(d[:-1]) < 0) + 1
    extrema = [float(times[k]) for k in turning if abs(dev[k]) > floor]

    significant = np.where(np.abs(dev) > floor, dev, 0.0)
    crossings = _crossings(significant)
    if settle_idx >= m:
        return RegimeReport("chaotic/unsettled", None, crossings, 0.0, asym, extrema)

    settle_time = float(times[settle_idx])
    rate = _envelope_rate(np.abs(significant), times)
    settled = settle_idx <= m - int(math.ceil(settle_fraction * m))
    if not settled:
        regime = "chaotic/unsettled"
    elif crossings >= 2 and rate > 0:
        regime = "underdamped"
    elif settle_idx == 0:
        regime = "steady-state"
    elif crossings <= 1:
        regime = "critically-damped"
    else:
        regime = "steady-state"
    return RegimeReport(regime, settle_time, crossings, rate, asym, extrema)


def _crossings(dev: np.ndarray) -> int:
    s = np.sign(dev)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _envelope_rate(absdev: np.ndarray, times: np.ndarray) -> float:
    """Exponential decay rate of the deviation envelope after its largest excursion."""
    start = int(np.argmax(absdev))
    absdev, times = absdev[start:], times[start:]
    peaks = np.concatenate([[0], _local_maxima(absdev)]) if absdev.size else np.zeros(0, int)
    if peaks.size >= 2:
        t, y = times[peaks], absdev[peaks]
    else:
        t, y = times, absdev
    keep = y > 0
    t, y = t[keep], y[keep]
    if t.size < 2 or np.ptp(t) == 0:
        return 0.0
    slope = np.polyfit(t, np.log(y), 1)[0]
    return float(-slope)


def frequency_shifts(theta_dots, omega) -> np.ndarray:
    """``delta_omega_i(t) = theta_dot_i(t) - omega_i``; ``omega`` may be a
    vector or a per-step matrix."""
    theta_dots = np.asarray(theta_dots, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if omega.shape[-1] != theta_dots.shape[-1]:
        raise ValueError("omega and theta_dots disagree on the node count")
    return theta_dots - omega


@dataclass
class QoppaFit:
    qoppa: float
    r_squared: float
    window: tuple

    def to_dict(self) -> dict:
        return {"qoppa": self.qoppa, "r_squared": self.r_squared, "window": list(self.window)}


def fit_qoppa(delta_omega, ds_dt, times=None, window=None) -> QoppaFit:
    """Zero-intercept least squares of the frequency-shift aggregate on ``dS/dt``.

    A 2-D ``delta_omega`` (steps x nodes) is reduced to its RMS over nodes;
    a 1-D series is used as given.
    """
    y = np.asarray(delta_omega, dtype=float)
    if y.ndim == 2:
        y = np.sqrt(np.mean(y ** 2, axis=1))
    x = np.asarray(ds_dt, dtype=float)
    if x.shape != y.shape:
        raise ValueError("frequency-shift aggregate and dS/dt must align")
    times = np.arange(x.shape[0], dtype=float) if times is None else np.asarray(times, dtype=float)
    if window is None:
        window = (float(times[0]), float(times[-1]))
    lo, hi = window
    if lo > hi or hi < times[0] or lo > times[-1]:
        raise ValueError(f"window {window} lies outside the run [{times[0]}, {times[-1]}]")
    sel = (times >= lo) & (times <= hi)
    x, y = x[sel], y[sel]
    sxx = float(np.dot(x, x))
    if x.size == 0 or sxx == 0.0:
        raise FitUndefinedError("dS/dt is identically zero on the window; qoppa is undefined")
    q = float(np.dot(x, y)) / sxx
    resid = y - q * x
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_res == 0.0:
        r2 = 1.0
    elif ss_tot == 0.0:
        r2 = 0.0
    else:
        r2 = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return QoppaFit(q, r2, (float(lo), float(hi)))


def wavelength_shift(ds_dt, qoppa: float = 1.0):
    """Dimensionless wavelength-shift proxy ``-(1/2pi) / (qoppa dS/dt)``."""
    denom = qoppa * np.asarray(ds_dt, dtype=float)
    if np.any(denom == 0) or not np.all(np.isfinite(denom)):
        raise ZeroDivisionError("qoppa * dS/dt is zero; the wavelength shift is singular there")
    out = (-1.0 / (2.0 * math.pi)) / denom
    return float(out) if out.ndim == 0 else out


def config_trajectory(thetas, colors) -> np.ndarray:
    """Project phase configurations onto their top two principal axes.

    Each row of ``thetas`` is embedded as ``(cos theta, sin theta)`` (length
    2n) and projected on the two leading principal axes of the run itself.
    Returns an ``(steps, 3)`` array of ``x, y, color``. Axis signs are fixed
    so the largest loading of each axis is positive.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    colors = np.asarray(colors, dtype=float)
    if thetas.shape[0] < 2:
        raise ValueError("a configuration trajectory needs at least 2 steps")
    if colors.shape != (thetas.shape[0],):
        raise ValueError("need one colour value per step")
    emb = np.hstack([np.cos(thetas), np.sin(thetas)])
    centered = emb - emb.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axes = vt[:2]
    if axes.shape[0] < 2:
        axes = np.vstack([axes, np.zeros((2 - axes.shape[0], emb.shape[1]))])
    for k in range(2):
        idx = int(np.argmax(np.abs(axes[k])))
        if axes[k, idx] < 0:
            axes[k] = -axes[k]
    xy = centered @ axes.T
    return np.column_stack([xy, colors])


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    thetas: np.ndarray
    theta_dots: np.ndarray
    r_series: np.ndarray
    psi_series: np.ndarray
    lagrangian_series: np.ndarray
    action_series: np.ndarray
    action_derivative_series: np.ndarray
    freq_shift_series: np.ndarray

    @property
    def n(self) -> int:
        return self.thetas.shape[1]


def build_record(times, thetas, theta_dots, net: Network, omegas=None,
                 segments=None) -> TrajectoryRecord:
    """Derive every diagnostic series of a recorded Kuramoto trajectory."""
    times = np.asarray(times, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    theta_dots = np.asarray(theta_dots, dtype=float)
    r, psi = order_parameter_series(thetas)
    L = lagrangian_series(thetas, theta_dots, net, segments)
    S = accumulate_action(L, times)
    dS = action_derivative(S, times)
    omega = net.omega if omegas is None else omegas
    return TrajectoryRecord(times, thetas, theta_dots, r, psi, L, S, dS,
                            frequency_shifts(theta_dots, omega))


def record_from_run(run) -> TrajectoryRecord:
    return build_record(run.times, run.thetas, run.theta_dots, run.segments[0][1],
                        run.omegas, run.segments)
