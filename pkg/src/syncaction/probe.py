"""Classical weak-measurement analogs.

Three minimally disturbing probes of a synchronising network:

* kernel-smoothed observables ``M(t) = int_{t0}^{t} K(t, s) O(s) ds``
  (the integral starts at the first sample, so for exponential kernels the
  truncation error is ``exp(-gamma (t - t0))``-small);
* pre/post-selected ensemble averages, the classical counterpart of a weak
  value;
* an extra listening oscillator attached with a small coupling ``epsilon``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .graph import Network

__all__ = [
    "KernelSpec",
    "ProbeConfig",
    "ConditionedAverage",
    "EmptySelectionError",
    "InsufficientDataError",
    "kernel_observable",
    "conditioned_average",
    "attach_probe",
    "probe_estimate",
]


class EmptySelectionError(ValueError):
    """No trajectory passed both selections; the conditioned mean is undefined."""


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Memory kernel ``K(t, s)`` as a function of the lag ``t - s``.

    ``exponential``: ``exp(-gamma lag)``; ``box``: 1 for ``0 <= lag <= width``;
    ``custom``: linear interpolation of ``table = (lags, values)``, zero past
    the last lag. ``unit-area`` normalisation rescales the kernel to unit
    integral.
    """

    kind: str = "exponential"
    gamma: float = 1.0
    width: float = 1.0
    table: Optional[tuple] = None
    normalization: str = "none"

    def __post_init__(self):
        if self.kind == "exponential" and not self.gamma > 0:
            raise ValueError("exponential kernel needs gamma > 0")
        if self.kind == "box" and not self.width > 0:
            raise ValueError("box kernel needs width > 0")
        if self.kind == "custom":
            if self.table is None:
                raise ValueError("custom kernel needs a (lags, values) table")
            lags, values = (np.asarray(a, dtype=float) for a in self.table)
            if lags.shape != values.shape or lags.ndim != 1 or lags.size < 2:
                raise ValueError("custom kernel table needs matching 1-D lags and values")
            if np.any(np.diff(lags) <= 0) or lags[0] < 0:
                raise ValueError("custom kernel lags must be increasing and >= 0")
            if np.any(values < 0):
                raise ValueError("custom kernel values must be nonnegative")
        if self.kind not in ("exponential", "box", "custom"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.normalization not in ("none", "unit-area"):
            raise ValueError("normalization must be 'none' or 'unit-area'")


def _cumtrapz(values, times):
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times)[:, None], axis=0)
    return out


def kernel_observable(observable_series, times, kernel: KernelSpec) -> np.ndarray:
    """Kernel-smoothed observable by the trapezoid rule; 2-D input is
    smoothed column by column."""
    obs = np.asarray(observable_series, dtype=float)
    times = np.asarray(times, dtype=float)
    squeeze = obs.ndim == 1
    obs2 = obs[:, None] if squeeze else obs
    if obs2.shape[0] != times.shape[0]:
        raise ValueError("observable and times must align")
    if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    if kernel.kind == "exponential":
        out = np.column_stack([
            _kernels.exp_smooth(np.ascontiguousarray(obs2[:, c]), times, float(kernel.gamma))
            for c in range(obs2.shape[1])
        ]) if obs2.shape[1] else np.zeros_like(obs2)
        if kernel.normalization == "unit-area":
            out = out * kernel.gamma
    elif kernel.kind == "box":
        cum = _cumtrapz(obs2, times)
        shifted = times - kernel.width
        back = np.column_stack([
            np.interp(shifted, times, cum[:, c], left=0.0) for c in range(obs2.shape[1])
        ])
        out = cum - back
        if kernel.normalization == "unit-area":
            out = out / kernel.width
    else:
        lags, values = (np.asarray(a, dtype=float) for a in kernel.table)
        out = np.zeros_like(obs2)
        for k in range(1, times.shape[0]):
            w = np.interp(times[k] - times[: k + 1], lags, values, left=0.0, right=0.0)
            integrand = w[:, None] * obs2[: k + 1]
            out[k] = np.sum(0.5 * (integrand[1:] + integrand[:-1])
                            * np.diff(times[: k + 1])[:, None], axis=0)
        if kernel.normalization == "unit-area":
            area = float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(lags)))
            if area == 0:
                raise ValueError("custom kernel has zero area; cannot normalise")
            out = out / area
    return out[:, 0] if squeeze else out


@dataclass
class ConditionedAverage:
    mean: np.ndarray
    count: int
    total: int
    stderr: np.ndarray

    def to_dict(self) -> dict:
        return {"count": self.count, "total": self.total,
                "acceptance": self.count / self.total if self.total else 0.0}


def conditioned_average(
    ensemble: Sequence,
    pre_select: Optional[Callable] = None,
    post_select: Optional[Callable] = None,
    observable: Optional[Callable] = None,
    pre_window: int = 1,
    post_window: int = 1,
) -> ConditionedAverage:
    """Mean of ``observable`` over trajectories passing both selections.

    ``pre_select`` sees the first ``pre_window`` samples of a trajectory and
    ``post_select`` the last ``post_window``; a missing predicate accepts
    everything. The observable defaults to the trajectory itself.
    """
    if len(ensemble) == 0:
        raise ValueError("ensemble is empty")
    chosen = []
    for traj in ensemble:
        arr = np.asarray(traj)
        if pre_select is not None and not pre_select(arr[:pre_window]):
            continue
        if post_select is not None and not post_select(arr[-post_window:]):
            continue
        chosen.append(np.asarray(observable(arr) if observable else arr, dtype=float))
    if not chosen:
        raise EmptySelectionError(
            f"none of {len(ensemble)} trajectories passed the pre/post selection")
    stack = np.stack(chosen)
    mean = stack.mean(axis=0)
    if len(chosen) > 1:
        stderr = stack.std(axis=0, ddof=1) / np.sqrt(len(chosen))
    else:
        stderr = np.full_like(mean, np.nan)
    return ConditionedAverage(mean, len(chosen), len(ensemble), stderr)


@dataclass(frozen=True)
class ProbeConfig:
    """Listening oscillator attached with strength ``epsilon``.

    ``mode="ideal"`` couples one way (the network never feels the probe);
    ``mode="back-action"`` couples both ways with the same ``epsilon``.
    """

    epsilon: float = 1e-3
    omega_probe: float = 0.0
    attach_to: Union[str, Sequence[int]] = "all"
    mode: str = "ideal"

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.mode not in ("ideal", "back-action"):
            raise ValueError("mode must be 'ideal' or 'back-action'")


def attach_probe(net: Network, config: ProbeConfig) -> Network:
    """Return an ``n + 1`` node network whose last node is the probe."""
    n = net.n
    if isinstance(config.attach_to, str):
        if config.attach_to != "all":
            raise ValueError("attach_to must be 'all' or a list of node indices")
        nodes = np.arange(n)
    else:
        nodes = np.asarray(list(config.attach_to), dtype=int)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= n):
            raise IndexError("probe attached to a node outside the network")
    coupling = np.zeros((n + 1, n + 1))
    coupling[:n, :n] = net.coupling
    coupling[n, nodes] = config.epsilon
    if config.mode == "back-action":
        coupling[nodes, n] = config.epsilon
    omega = np.append(net.omega, config.omega_probe)
    positions = None
    if net.positions is not None:
        positions = np.vstack([net.positions, net.positions.mean(axis=0)])
    labels = None if net.labels is None else net.labels + ("probe",)
    return Network(omega=omega, coupling=coupling, positions=positions, labels=labels)


def probe_estimate(times, probe_theta_dot, omega_probe: float, min_periods: float = 5.0) -> float:
    """Time-averaged probe frequency over the window (trapezoid rule).

    The average is taken about the first sample, so a probe that never
    deviates returns its first sample exactly.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(probe_theta_dot, dtype=float)
    if times.shape != x.shape or times.size < 2:
        raise InsufficientDataError("need at least two aligned samples")
    span = float(times[-1] - times[0])
    if omega_probe != 0:
        needed = min_periods * 2.0 * np.pi / abs(omega_probe)
        if span < needed:
            raise InsufficientDataError(
                f"window of {span:g} time units is shorter than {min_periods:g} probe periods "
                f"({needed:g})")
    x0 = x[0]
    dev = x - x0
    return float(x0 + np.sum(0.5 * (dev[1:] + dev[:-1]) * np.diff(times)) / span)
