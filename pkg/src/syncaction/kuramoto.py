"""Kuramoto phase dynamics, the order parameter and graph effective couplings."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .graph import Network, PerturbationSpec, apply_perturbation

__all__ = [
    "PhaseState",
    "OrderParameter",
    "NumericBlowupError",
    "KuramotoRun",
    "kuramoto_derivative",
    "integrate_step",
    "simulate",
    "order_parameter",
    "order_parameter_series",
    "effective_coupling",
    "path_sum_coupling",
    "amplitude_ratio",
]

TWO_PI = 2.0 * math.pi
_METHODS = {"euler": _kernels.EULER, "rk4": _kernels.RK4}


def _wrap(x):
    # tiny negative angles round up to exactly 2pi under mod
    w = np.mod(x, TWO_PI)
    return np.where(w >= TWO_PI, 0.0, w)


class NumericBlowupError(FloatingPointError):
    pass


@dataclass
class PhaseState:
    """Unwrapped phases ``theta`` at time ``t``."""

    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.theta = np.array(self.theta, dtype=float).reshape(-1)

    @property
    def wrapped(self) -> np.ndarray:
        return _wrap(self.theta)

    def copy(self) -> "PhaseState":
        return PhaseState(self.theta.copy(), self.t)


class OrderParameter(NamedTuple):
    r: float
    psi: float


def _theta_of(state) -> np.ndarray:
    if isinstance(state, PhaseState):
        return state.theta
    return np.asarray(state, dtype=float)


def _check_dims(theta, net):
    if theta.shape[0] != net.n:
        raise ValueError(f"phase vector has length {theta.shape[0]}, network has n={net.n}")


def kuramoto_derivative(state, net: Network) -> np.ndarray:
    """``dtheta_i/dt = omega_i + sum_j X_ij sin(theta_j - theta_i)`` (no 1/N factor)."""
    theta = _theta_of(state)
    _check_dims(theta, net)
    return _kernels.rhs(np.ascontiguousarray(theta), net.omega, net.coupling)


def _method_code(method: str) -> int:
    try:
        return _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown integrator {method!r}; use 'euler' or 'rk4'") from None


def integrate_step(state: PhaseState, net: Network, dt: float, method: str = "rk4") -> PhaseState:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    _check_dims(state.theta, net)
    thetas, _ = _kernels.integrate(np.ascontiguousarray(state.theta), net.omega, net.coupling,
                                   float(dt), 1, _method_code(method), 1)
    theta = thetas[-1]
    if not np.all(np.isfinite(theta)):
        raise NumericBlowupError(
            f"non-finite phase after step at t={state.t + dt:g}; reduce dt (currently {dt:g})")
    return PhaseState(theta, state.t + dt)


@dataclass
class KuramotoRun:
    """Recorded trajectory of a (possibly perturbed) Kuramoto run.

    ``segments`` lists ``(first_index, network)`` pairs: samples from
    ``first_index`` on were produced under ``network``. ``applied`` holds
    ``(spec, applied_time)`` for every perturbation that fired.
    """

    times: np.ndarray
    thetas: np.ndarray
    theta_dots: np.ndarray
    omegas: np.ndarray
    segments: list = field(default_factory=list)
    applied: list = field(default_factory=list)

    @property
    def final_state(self) -> PhaseState:
        return PhaseState(self.thetas[-1].copy(), float(self.times[-1]))

    @property
    def network(self) -> Network:
        return self.segments[-1][1]

    def network_at(self, index: int) -> Network:
        current = self.segments[0][1]
        for first, net in self.segments:
            if first <= index:
                current = net
        return current


def simulate(
    net: Network,
    state,
    dt: float,
    t_max: float,
    method: str = "rk4",
    record_every: int = 1,
    perturbations: Sequence[PerturbationSpec] = (),
) -> KuramotoRun:
    """Integrate from ``state`` until ``t_max`` with a fixed step.

    Perturbations fire at the first recorded step at or after ``at_time``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not isinstance(state, PhaseState):
        state = PhaseState(state)
    _check_dims(state.theta, net)
    record_every = int(record_every)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    code = _method_code(method)
    t0 = float(state.t)
    total = int(round((t_max - t0) / dt))
    if total < 0:
        raise ValueError("t_max is before the state's time")
    total -= total % record_every

    # perturbation step indices, snapped up to the recording grid
    schedule = []
    for spec in sorted(perturbations, key=lambda s: s.at_time):
        step = max(0, math.ceil((spec.at_time - t0) / dt - 1e-9))
        step = -(-step // record_every) * record_every
        if step <= total:
            schedule.append((step, spec))

    theta_blocks, dot_blocks, omega_blocks = [], [], []
    segments = [(0, net)]
    applied = []
    theta = np.ascontiguousarray(state.theta, dtype=float)
    current = net
    step = 0
    nrec = 0
    bounds = [s for s, _ in schedule] + [total]
    pending = list(schedule)
    for bound in bounds:
        nsteps = bound - step
        if nsteps > 0 or nrec == 0:
            thetas, dots = _kernels.integrate(theta, current.omega, current.coupling,
                                              float(dt), nsteps, code, record_every)
            if not np.all(np.isfinite(thetas)):
                bad = int(np.argmax(~np.all(np.isfinite(thetas), axis=1)))
                t_bad = t0 + (step + bad * record_every) * dt
                raise NumericBlowupError(
                    f"non-finite phases at t={t_bad:g}; reduce dt (currently {dt:g})")
            if nrec > 0:
                thetas, dots = thetas[1:], dots[1:]
            theta_blocks.append(thetas)
            dot_blocks.append(dots)
            omega_blocks.append(np.broadcast_to(current.omega, thetas.shape))
            nrec += thetas.shape[0]
            theta = np.ascontiguousarray(theta_blocks[-1][-1]) if thetas.shape[0] else theta
            step = bound
        while pending and pending[0][0] == bound:
            _, spec = pending.pop(0)
            current, _ = apply_perturbation(current, None, spec)
            applied.append((spec, t0 + bound * dt))
            segments.append((nrec, current))

    times = t0 + dt * record_every * np.arange(nrec)
    return KuramotoRun(
        times=times,
        thetas=np.concatenate(theta_blocks),
        theta_dots=np.concatenate(dot_blocks),
        omegas=np.concatenate(omega_blocks).copy(),
        segments=segments,
        applied=applied,
    )


def order_parameter(state) -> OrderParameter:
    """Mean phasor ``r e^{i psi} = mean_j e^{i theta_j}`` with ``psi`` in [0, 2pi)."""
    theta = _theta_of(state)
    if theta.shape[0] < 1:
        raise ValueError("order parameter needs at least one phase")
    z = np.mean(np.exp(1j * theta))
    r = min(abs(z), 1.0)
    psi = float(_wrap(math.atan2(z.imag, z.real)))
    return OrderParameter(float(r), psi)


def order_parameter_series(thetas: np.ndarray):
    """Vectorised order parameter over the rows of ``thetas``; returns ``(r, psi)``."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    z = np.mean(np.exp(1j * thetas), axis=1)
    return np.minimum(np.abs(z), 1.0), _wrap(np.angle(z))


def effective_coupling(net: Network, i: int, j: Optional[int] = None,
                       contributions: Optional[np.ndarray] = None,
                       theta: Optional[np.ndarray] = None) -> float:
    """Neighbour-weighted sum ``sum_{k in N(i)} X_ik C_k``.

    Without explicit ``contributions`` the profile ``C_k = sin(theta_k - theta_j)``
    is used, which needs ``j`` and ``theta``.
    """
    n = net.n
    if not 0 <= i < n:
        raise IndexError(f"node {i} out of range for n={n}")
    if contributions is None:
        if j is None or theta is None:
            raise ValueError("default contributions need both j and theta")
        if not 0 <= j < n:
            raise IndexError(f"node {j} out of range for n={n}")
        theta = np.asarray(theta, dtype=float)
        contributions = np.sin(theta - theta[j])
    c = np.asarray(contributions, dtype=float)
    if c.shape != (n,):
        raise ValueError(f"contributions must have length {n}")
    nbrs = net.neighbors(i)
    return float(np.dot(net.coupling[i, nbrs], c[nbrs]))


def path_sum_coupling(net: Network, a: int, b: int, max_len: int = 4,
                      phase_factor: Optional[Callable[[list], float]] = None) -> float:
    """Sum over simple paths ``a -> b`` of at most ``max_len`` hops of the
    product of edge couplings.

    A hop ``u -> v`` carries weight ``X[v, u]`` (``v`` listens to ``u``).
    ``phase_factor``, if given, is called with each path's node list and
    multiplies that path's weight.
    """
    n = net.n
    for node in (a, b):
        if not 0 <= node < n:
            raise IndexError(f"node {node} out of range for n={n}")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if a == b:
        warnings.warn("path_sum_coupling with a == b: the empty path is excluded, returning 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    if phase_factor is not None:
        return _kernels.path_sum_python(net.coupling, a, b, max_len, phase_factor)
    return float(_kernels.path_sum(net.coupling, int(a), int(b), int(max_len)))


def amplitude_ratio(net: Network, thetas: np.ndarray, a: int, b: int,
                    strength: Optional[float] = None) -> float:
    """Oscillation amplitude of node ``a`` over collective coupling strength.

    The amplitude is the RMS of ``sin(theta_a)`` about its window mean; the
    collective strength is the mean node strength of ``net`` unless
    ``strength`` overrides it. ``b`` is validated but only enters through
    the shared window.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[0] == 0:
        raise ValueError("trajectory window is empty")
    n = thetas.shape[1]
    for node in (a, b):
        if not 0 <= node < n:
            raise IndexError(f"node {node} out of range for n={n}")
    s = np.sin(thetas[:, a])
    s = s - s[0]  # a constant series stays exactly zero
    amp = float(np.sqrt(np.mean((s - s.mean()) ** 2)))
    B = float(np.mean(net.strengths())) if strength is None else float(strength)
    if B == 0.0:
        raise ZeroDivisionError("collective coupling strength is zero; ratio undefined")
    return amp / B
