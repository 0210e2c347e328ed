"""Event-driven pulse-coupled oscillators on the unit circle.

Each oscillator ramps its circle phase linearly at rate ``1/T_i``. On reaching
the threshold it fires (with probability ``p_send``) and resets to zero; every
listener of the firing node jumps by the phase-response curve. Jumps that
land a node on the threshold make it fire in the same cascade.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .graph import Network

__all__ = [
    "CircleState",
    "PulseParams",
    "PulseEvent",
    "PulseRun",
    "PulseSimulator",
    "advance_phases",
    "crossing_times",
    "phase_response",
    "fire_and_propagate",
    "run_pulse_sim",
    "inter_fire_intervals",
    "circle_gap",
    "write_event_log",
    "read_event_log",
]

TWO_PI = 2.0 * math.pi


@dataclass
class CircleState:
    phi: np.ndarray
    period: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.phi = np.array(self.phi, dtype=float).reshape(-1)
        period = np.array(self.period, dtype=float).reshape(-1)
        if period.shape[0] == 1 and self.phi.shape[0] > 1:
            period = np.full(self.phi.shape[0], period[0])
        if period.shape != self.phi.shape:
            raise ValueError("phi and period must have the same length")
        if np.any(period <= 0) or not np.all(np.isfinite(period)):
            raise ValueError("periods must be finite and > 0")
        self.period = period

    def copy(self) -> "CircleState":
        return CircleState(self.phi.copy(), self.period.copy(), self.t)

    @classmethod
    def random(cls, n: int, period=1.0, seed: int = 0) -> "CircleState":
        rng = np.random.default_rng(seed)
        return cls(rng.random(n), period)


ResponseCurve = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class PulseParams:
    """Firing and response parameters.

    ``response`` names a built-in curve (``"reversed-sine"``, the default, or
    ``"sine"``) or is a callable ``f(phi, X, alpha) -> delta``. Receivers
    whose jump leaves them within ``absorb_tol`` of the threshold are set
    onto it and fire in the same cascade.
    """

    p_send: float = 1.0
    alpha: float = 0.5
    threshold: float = 1.0
    response: Union[str, ResponseCurve] = "reversed-sine"
    absorb_tol: float = 1e-9

    def __post_init__(self):
        if not 0.0 <= self.p_send <= 1.0:
            raise ValueError(f"p_send must be in [0, 1], got {self.p_send}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if not self.absorb_tol >= 0:
            raise ValueError("absorb_tol must be >= 0")
        if isinstance(self.response, str) and self.response not in _CURVES:
            raise ValueError(f"unknown response curve {self.response!r}; "
                             f"choose from {sorted(_CURVES)}")


def _sine(phi, x, alpha):
    return alpha * x * np.sin(TWO_PI * phi)


def _reversed_sine(phi, x, alpha):
    return -alpha * x * np.sin(TWO_PI * phi)


_CURVES = {"sine": _sine, "reversed-sine": _reversed_sine}


def phase_response(phi, X, alpha, threshold: float = 1.0, curve="reversed-sine"):
    """Phase jump of a receiver at circle phase ``phi`` hit with coupling ``X``.

    ``"sine"`` jumps forward on the first half of the cycle and backward on
    the second (``alpha X sin 2 pi phi``); ``"reversed-sine"`` is its mirror,
    pushing nodes that are about to fire forward and delaying those that
    just fired. The result is clamped so ``phi + delta`` stays in
    ``[0, threshold]``.
    """
    fn = _CURVES[curve] if isinstance(curve, str) else curve
    phi_arr = np.asarray(phi, dtype=float)
    raw = fn(phi_arr / threshold, np.asarray(X, dtype=float), alpha) * threshold
    delta = np.clip(phi_arr + raw, 0.0, threshold) - phi_arr
    return float(delta) if delta.ndim == 0 else delta


def advance_phases(state: CircleState, dt: float) -> CircleState:
    """Free linear ramp ``phi += dt / T``; no wrapping."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return state.copy()
    return CircleState(state.phi + dt / state.period, state.period.copy(), state.t + dt)


def crossing_times(state: CircleState, threshold: float = 1.0) -> np.ndarray:
    """Interpolated threshold-crossing time per node (NaN if not crossed)."""
    over = state.phi >= threshold
    out = np.full(state.phi.shape, np.nan)
    out[over] = state.t - (state.phi[over] - threshold) * state.period[over]
    return out


@dataclass
class PulseEvent:
    t: float
    source: int
    suppressed: bool
    deltas: dict = field(default_factory=dict)
    cascade: int = 0

    @property
    def n_receivers(self) -> int:
        return len(self.deltas)


def _listeners(coupling: np.ndarray, src: int) -> np.ndarray:
    col = coupling[:, src]
    idx = np.flatnonzero(col > 0)
    return idx[idx != src]


def fire_and_propagate(state: CircleState, net: Network, params: PulseParams,
                       rng: np.random.Generator, cascade: int = 0):
    """Process every threshold crossing of ``state`` as one cascade.

    Returns the new state and the events in processing order. Each node is
    processed at most once per call and each processed crossing consumes
    exactly one uniform draw from ``rng``.
    """
    thr = params.threshold
    phi = state.phi.copy()
    cross_t = crossing_times(state, thr)
    initial = np.flatnonzero(phi >= thr)
    if initial.size == 0:
        raise ValueError("fire_and_propagate needs at least one phase at threshold")
    order = sorted(initial.tolist(), key=lambda k: (cross_t[k], k))
    queue = [(float(cross_t[k]), k) for k in order]
    processed = np.zeros(phi.shape[0], dtype=bool)
    events = []
    curve = params.response
    pos = 0
    while pos < len(queue):
        t_fire, src = queue[pos]
        pos += 1
        if processed[src]:
            continue
        processed[src] = True
        fired = rng.random() < params.p_send
        phi[src] = 0.0
        if not fired:
            events.append(PulseEvent(t_fire, int(src), True, {}, cascade))
            continue
        listeners = _listeners(net.coupling, src)
        deltas = {}
        pushed = []
        if listeners.size:
            jumps = phase_response(phi[listeners], net.coupling[listeners, src],
                                   params.alpha, thr, curve)
            jumps = np.atleast_1d(jumps)
            for j, d in zip(listeners.tolist(), jumps.tolist()):
                new = phi[j] + d
                if new >= thr - params.absorb_tol * thr:
                    new = thr
                deltas[j] = new - phi[j]
                phi[j] = new
                if new >= thr and not processed[j]:
                    pushed.append(j)
        events.append(PulseEvent(t_fire, int(src), False, deltas, cascade))
        queue.extend((state.t, j) for j in sorted(pushed))
    return CircleState(phi, state.period.copy(), state.t), events


@dataclass
class PulseRun:
    events: list
    state: CircleState
    sync_time: Optional[float]
    cascade_times: list = field(default_factory=list)
    cascade_phases: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.events, self.state, self.sync_time))


class PulseSimulator:
    """Hybrid event loop: jumps straight to the next analytic crossing.

    The simulator can be advanced piecewise with :meth:`run_until`, so a
    caller may alter the network between calls. All randomness comes from
    one Philox (counter-based) stream seeded by ``seed``.
    """

    def __init__(self, net: Network, params: PulseParams, init: CircleState, seed: int = 0,
                 record_phases: bool = False):
        if init.phi.shape[0] != net.n:
            raise ValueError(f"state has {init.phi.shape[0]} phases, network has n={net.n}")
        if np.any(init.phi < 0) or np.any(init.phi >= params.threshold):
            raise ValueError("initial phases must lie in [0, threshold)")
        self.net = net
        self.params = params
        self.state = init.copy()
        self.rng = np.random.Generator(np.random.Philox(seed))
        self.events: list = []
        self.sync_time: Optional[float] = None
        self.record_phases = record_phases
        self.cascade_times: list = []
        self.cascade_phases: list = []
        self._cascade = 0

    def run_until(self, t_end: float) -> None:
        thr = self.params.threshold
        tol = self.params.absorb_tol
        st = self.state
        n = st.phi.shape[0]
        while True:
            remaining = (thr - st.phi) * st.period
            dt = float(np.min(remaining))
            if st.t + dt > t_end:
                if t_end > st.t:
                    st.phi = st.phi + (t_end - st.t) / st.period
                    st.t = t_end
                break
            arrive = remaining - dt <= tol * st.period
            st.phi = st.phi + dt / st.period
            st.t = st.t + dt
            st.phi[arrive] = thr
            st.phi = np.minimum(st.phi, thr)
            new_state, evs = fire_and_propagate(st, self.net, self.params, self.rng,
                                                self._cascade)
            self._cascade += 1
            st = self.state = new_state
            self.events.extend(evs)
            if self.sync_time is None:
                fired = {e.source for e in evs if not e.suppressed}
                if len(fired) == n:
                    self.sync_time = st.t
            if self.record_phases:
                self.cascade_times.append(st.t)
                self.cascade_phases.append(st.phi.copy())
        self.state = st

    def result(self) -> PulseRun:
        return PulseRun(list(self.events), self.state.copy(), self.sync_time,
                        list(self.cascade_times), list(self.cascade_phases))


def run_pulse_sim(net: Network, params: PulseParams, init: CircleState, t_max: float,
                  seed: int = 0, record_phases: bool = False) -> PulseRun:
    """Simulate until ``t_max``; ``sync_time`` is the first time every node
    fires within a single cascade (``None`` if that never happens)."""
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    sim = PulseSimulator(net, params, init, seed, record_phases)
    sim.run_until(t_max)
    return sim.result()


def inter_fire_intervals(events, node: int, include_suppressed: bool = False) -> np.ndarray:
    """Measured periods of ``node``: gaps between its successive firings."""
    stamps = [e.t for e in events if e.source == node and (include_suppressed or not e.suppressed)]
    return np.diff(np.asarray(stamps, dtype=float))


def circle_gap(phi: np.ndarray) -> float:
    """Circular distance between the first two phases (in cycles)."""
    d = abs(float(phi[0]) - float(phi[1])) % 1.0
    return min(d, 1.0 - d)


# ------------------------------------------------------------------ export

EVENT_LOG_SCHEMA_VERSION = 1


def write_event_log(events, csv_path, deltas_path=None) -> None:
    """CSV ``t,source,suppressed,n_receivers`` plus a JSON sidecar of deltas."""
    csv_path = Path(csv_path)
    deltas_path = Path(deltas_path) if deltas_path else csv_path.with_suffix(".deltas.json")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "source", "suppressed", "n_receivers"])
    for e in events:
        w.writerow([repr(float(e.t)), e.source, int(e.suppressed), e.n_receivers])
    csv_path.write_text(buf.getvalue())
    payload = {
        "schema_version": EVENT_LOG_SCHEMA_VERSION,
        "events": [
            {"index": k, "cascade": e.cascade,
             "deltas": {str(j): float(d) for j, d in sorted(e.deltas.items())}}
            for k, e in enumerate(events)
        ],
    }
    deltas_path.write_text(json.dumps(payload) + "\n")


def read_event_log(csv_path, deltas_path=None) -> list:
    csv_path = Path(csv_path)
    deltas_path = Path(deltas_path) if deltas_path else csv_path.with_suffix(".deltas.json")
    with csv_path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    extra = json.loads(deltas_path.read_text())["events"] if deltas_path.exists() else []
    events = []
    for k, row in enumerate(rows):
        info = extra[k] if k < len(extra) else {"deltas": {}, "cascade": 0}
        deltas = {int(j): d for j, d in info["deltas"].items()}
        if len(deltas) != int(row["n_receivers"]):
            raise ValueError(f"{csv_path}: event {k} receiver count disagrees with sidecar")
        events.append(PulseEvent(float(row["t"]), int(row["source"]), bool(int(row["suppressed"])),
                                 deltas, int(info["cascade"])))
    return events
