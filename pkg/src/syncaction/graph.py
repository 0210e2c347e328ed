"""Weighted oscillator networks: construction, persistence and perturbation."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "Network",
    "AttenuationParams",
    "PerturbationSpec",
    "NetworkFormatError",
    "build_topology",
    "coupling_from_distance",
    "coupling_from_distance_matrix",
    "graph_distance_matrix",
    "apply_perturbation",
    "load_network",
    "save_network",
    "load_edge_list",
]


class NetworkFormatError(ValueError):
    """A network file or array violates the schema or the network invariants."""


@dataclass(frozen=True, eq=False)
class Network:
    """Directed weighted oscillator network.

    ``coupling[i, j]`` is the strength with which node ``i`` feels node ``j``
    (row ``i`` holds the incoming couplings of ``i``).
    """

    omega: np.ndarray
    coupling: np.ndarray
    positions: Optional[np.ndarray] = None
    labels: Optional[tuple] = None

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).reshape(-1)
        coupling = np.array(self.coupling, dtype=float)
        n = omega.shape[0]
        if coupling.shape != (n, n):
            raise NetworkFormatError(
                f"coupling must be {n}x{n} to match omega, got shape {coupling.shape}")
        if not np.all(np.isfinite(omega)):
            raise NetworkFormatError("omega contains NaN or Inf")
        if not np.all(np.isfinite(coupling)):
            raise NetworkFormatError("coupling contains NaN or Inf")
        if np.any(coupling < 0):
            i, j = np.argwhere(coupling < 0)[0]
            raise NetworkFormatError(
                f"invariant violated: coupling[{i}][{j}] = {coupling[i, j]!r} is negative")
        if np.any(np.diag(coupling) != 0):
            i = int(np.flatnonzero(np.diag(coupling) != 0)[0])
            raise NetworkFormatError(f"invariant violated: coupling[{i}][{i}] must be 0")
        positions = self.positions
        if positions is not None:
            positions = np.array(positions, dtype=float)
            if positions.ndim == 1:
                positions = positions[:, None]
            if positions.shape[0] != n:
                raise NetworkFormatError(
                    f"positions has {positions.shape[0]} rows, expected {n}")
            if not np.all(np.isfinite(positions)):
                raise NetworkFormatError("positions contains NaN or Inf")
            positions.setflags(write=False)
        labels = self.labels
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != n:
                raise NetworkFormatError(f"labels has {len(labels)} entries, expected {n}")
        omega.setflags(write=False)
        coupling.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.coupling, self.coupling.T))

    def strengths(self) -> np.ndarray:
        """Incoming node strengths (row sums of the coupling matrix)."""
        return self.coupling.sum(axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.coupling[i] > 0)

    def replace(self, **changes) -> "Network":
        return dataclasses.replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if (self.positions is None) != (other.positions is None):
            return False
        return (
            np.array_equal(self.omega, other.omega)
            and np.array_equal(self.coupling, other.coupling)
            and (self.positions is None or np.array_equal(self.positions, other.positions))
            and self.labels == other.labels
        )

    __hash__ = None


@dataclass(frozen=True)
class AttenuationParams:
    """Distance attenuation ``beta0 * exp(-gamma * r**m)``."""

    beta0: float = 1.0
    gamma: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ValueError(f"beta0 must be > 0, got {self.beta0}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.m > 0:
            raise ValueError(f"m must be > 0, got {self.m}")


PERTURBATION_KINDS = ("frequency-shift", "edge-rescale", "edge-remove", "node-silence")


@dataclass(frozen=True)
class PerturbationSpec:
    """A scheduled change to the network.

    ``kind`` selects which of the remaining fields are used:
    frequency-shift(node, delta_omega), edge-rescale(i, j, factor),
    edge-remove(i, j), node-silence(node).
    """

    at_time: float
    kind: str
    node: Optional[int] = None
    i: Optional[int] = None
    j: Optional[int] = None
    delta_omega: float = 0.0
    factor: float = 1.0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}; "
                             f"expected one of {PERTURBATION_KINDS}")
        if not self.at_time >= 0:
            raise ValueError(f"at_time must be >= 0, got {self.at_time}")
        if self.kind in ("frequency-shift", "node-silence") and self.node is None:
            raise ValueError(f"{self.kind} needs a node")
        if self.kind in ("edge-rescale", "edge-remove") and (self.i is None or self.j is None):
            raise ValueError(f"{self.kind} needs both i and j")
        if self.kind == "edge-rescale" and not self.factor >= 0:
            raise ValueError("edge-rescale factor must be >= 0")

    def to_dict(self) -> dict:
        d = {"at_time": self.at_time, "kind": self.kind}
        if self.kind in ("frequency-shift", "node-silence"):
            d["node"] = self.node
        else:
            d["i"], d["j"] = self.i, self.j
        if self.kind == "frequency-shift":
            d["delta_omega"] = self.delta_omega
        if self.kind == "edge-rescale":
            d["factor"] = self.factor
        return d


# ------------------------------------------------------------------ builders


def _omega_tuple(spec):
    if spec is None:
        return ("normal", 0.0, 1.0)
    if isinstance(spec, (int, float)):
        return ("constant", float(spec))
    if isinstance(spec, dict):
        kind = spec.get("dist", "normal")
        if kind == "constant":
            return ("constant", float(spec.get("value", 0.0)))
        if kind == "uniform":
            return ("uniform", float(spec.get("lo", -1.0)), float(spec.get("hi", 1.0)))
        if kind == "normal":
            return ("normal", float(spec.get("mean", 0.0)), float(spec.get("sd", 1.0)))
        raise ValueError(f"unknown omega distribution {kind!r}")
    return tuple(spec)


def _draw_omega(rng: np.random.Generator, n: int, spec) -> np.ndarray:
    kind, *args = _omega_tuple(spec)
    if kind == "constant":
        return np.full(n, float(args[0]) if args else 0.0)
    if kind == "uniform":
        lo, hi = args
        if hi < lo:
            raise ValueError("uniform omega needs lo <= hi")
        return rng.uniform(lo, hi, n)
    if kind == "normal":
        mean, sd = args
        if sd < 0:
            raise ValueError("normal omega needs sd >= 0")
        return rng.normal(mean, sd, n)
    raise ValueError(f"unknown omega distribution {kind!r}")


def build_topology(
    kind: str,
    n: int,
    uniform_coupling: float = 1.0,
    omega_spec=None,
    seed: int = 0,
    *,
    k: int = 1,
    p: float = 0.5,
    coupling: Optional[np.ndarray] = None,
    mean_field: bool = False,
) -> Network:
    """Build a network with uniform edge weight ``uniform_coupling``.

    ``kind`` is one of ``complete``, ``ring`` (``k`` neighbours each side),
    ``erdos-renyi`` (edge probability ``p``) or ``custom`` (adjacency given
    by ``coupling``, scaled by ``uniform_coupling``). ``omega_spec`` is a
    scalar, ``("constant", c)``, ``("uniform", lo, hi)``,
    ``("normal", mean, sd)`` or the equivalent dict; the default is a
    standard normal. With ``mean_field`` every weight is divided by ``n``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if uniform_coupling < 0:
        raise ValueError("uniform_coupling must be >= 0")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    if kind == "complete":
        adj[:] = 1.0
    elif kind == "ring":
        if not 0 <= k < n:
            raise ValueError(f"ring degree k must satisfy 0 <= k < n, got k={k}, n={n}")
        idx = np.arange(n)
        for off in range(1, k + 1):
            adj[idx, (idx + off) % n] = 1.0
            adj[idx, (idx - off) % n] = 1.0
    elif kind in ("erdos-renyi", "erdos_renyi", "er"):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"erdos-renyi probability p must be in [0, 1], got {p}")
        upper = np.triu(rng.random((n, n)) < p, 1)
        adj = (upper | upper.T).astype(float)
    elif kind == "custom":
        if coupling is None:
            raise ValueError("custom topology needs a coupling matrix")
        adj = np.array(coupling, dtype=float)
        if adj.shape != (n, n):
            raise ValueError(f"custom coupling must be {n}x{n}")
    else:
        raise ValueError(f"unknown topology kind {kind!r}")
    np.fill_diagonal(adj, 0.0)
    weight = uniform_coupling / n if mean_field else uniform_coupling
    omega = _draw_omega(rng, n, omega_spec)
    return Network(omega=omega, coupling=adj * weight)


def coupling_from_distance_matrix(dist: np.ndarray, params: AttenuationParams,
                                  cutoff: Optional[float] = None) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if cutoff is not None and not cutoff > 0:
        raise ValueError("cutoff must be > 0")
    with np.errstate(over="ignore"):
        x = params.beta0 * np.exp(-params.gamma * np.power(dist, params.m))
    if cutoff is not None:
        x[dist > cutoff] = 0.0
    # unreachable pairs (infinite graph distance) decay to zero
    x[~np.isfinite(dist)] = 0.0
    np.fill_diagonal(x, 0.0)
    return x


def coupling_from_distance(positions: np.ndarray, params: AttenuationParams,
                           cutoff: Optional[float] = None) -> np.ndarray:
    """Couplings ``beta0 * exp(-gamma * r_ij**m)`` from Euclidean node distances."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    delta = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", delta, delta))
    return coupling_from_distance_matrix(dist, params, cutoff)


def graph_distance_matrix(adjacency: np.ndarray) -> np.ndarray:
    """Hop-count distances over the nonzero pattern of ``adjacency``."""
    from scipy.sparse.csgraph import shortest_path

    pattern = (np.asarray(adjacency) > 0).astype(float)
    return shortest_path(pattern, method="D", unweighted=True, directed=True)


# ------------------------------------------------------------- perturbation


def _check_node(node, n):
    if node is None or not 0 <= int(node) < n:
        raise IndexError(f"node index {node} out of range for n={n}")
    return int(node)


def apply_perturbation(net: Network, state, spec: PerturbationSpec):
    """Return perturbed copies ``(network, state)``; the inputs are not modified.

    ``state`` is passed through untouched (phases carry over across a
    perturbation) but is copied so callers may mutate the result freely.
    """
    n = net.n
    omega = net.omega.copy()
    coupling = net.coupling.copy()
    if spec.kind == "frequency-shift":
        node = _check_node(spec.node, n)
        omega[node] += spec.delta_omega
    elif spec.kind == "node-silence":
        node = _check_node(spec.node, n)
        coupling[node, :] = 0.0
        coupling[:, node] = 0.0
    else:
        i = _check_node(spec.i, n)
        j = _check_node(spec.j, n)
        if spec.kind == "edge-rescale":
            coupling[i, j] *= spec.factor
        else:
            symmetric = net.is_symmetric
            coupling[i, j] = 0.0
            if symmetric:
                coupling[j, i] = 0.0
    new_state = state.copy() if hasattr(state, "copy") else state
    return net.replace(omega=omega, coupling=coupling), new_state


# ---------------------------------------------------------------- persistence


def _finite_list(value, where):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NetworkFormatError(f"field {where!r}: NaN/Inf entries are not allowed")
    return arr


def network_to_dict(net: Network) -> dict:
    d = {"n": net.n, "omega": net.omega.tolist(), "coupling": net.coupling.tolist()}
    if net.positions is not None:
        d["positions"] = net.positions.tolist()
    if net.labels is not None:
        d["labels"] = list(net.labels)
    return d


def network_from_dict(data: dict, source: str = "<dict>") -> Network:
    if not isinstance(data, dict):
        raise NetworkFormatError(f"{source}: top level must be a JSON object")
    for key in ("n", "omega", "coupling"):
        if key not in data:
            raise NetworkFormatError(f"{source}: missing required field {key!r}")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise NetworkFormatError(f"{source}: field 'n' must be a positive integer")
    try:
        omega = _finite_list(data["omega"], "omega")
        coupling = _finite_list(data["coupling"], "coupling")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NetworkFormatError):
            raise NetworkFormatError(f"{source}: {exc}") from None
        raise NetworkFormatError(f"{source}: non-numeric array field ({exc})") from None
    if omega.shape != (n,):
        raise NetworkFormatError(f"{source}: field 'omega' must have length n={n}")
    if coupling.shape != (n, n):
        raise NetworkFormatError(f"{source}: field 'coupling' must be {n}x{n}")
    positions = data.get("positions")
    if positions is not None:
        positions = _finite_list(positions, "positions")
    try:
        return Network(omega=omega, coupling=coupling, positions=positions,
                       labels=data.get("labels"))
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"{source}: {exc}") from None


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net)) + "\n")


def load_network(path) -> Network:
    """Load a network from the JSON schema, or from an edge list (``i j X_ij``
    lines) when the file does not end in ``.json``."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() != ".json":
        return load_edge_list(path)

    def reject_constant(name):
        raise NetworkFormatError(f"{path}: {name} is not allowed in network files")

    try:
        data = json.loads(text, parse_constant=reject_constant)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return network_from_dict(data, str(path))


def load_edge_list(path, omega_path=None) -> Network:
    """Whitespace-delimited ``i j X_ij`` lines with a sidecar ``.omega`` file.

    The node count is inferred from the largest index and the omega file
    length; ``#`` starts a comment.
    """
    path = Path(path)
    omega_path = Path(omega_path) if omega_path else path.with_suffix(".omega")
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise NetworkFormatError(f"{path}: line {lineno}: expected 'i j X_ij', got {raw!r}")
        try:
            i, j, x = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise NetworkFormatError(f"{path}: line {lineno}: cannot parse {raw!r}") from None
        if i < 0 or j < 0:
            raise NetworkFormatError(f"{path}: line {lineno}: negative node index")
        if not math.isfinite(x):
            raise NetworkFormatError(f"{path}: line {lineno}: NaN/Inf weight")
        edges.append((lineno, i, j, x))
    if not omega_path.exists():
        raise NetworkFormatError(f"{path}: sidecar omega file {omega_path} not found")
    omega = []
    for lineno, raw in enumerate(omega_path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            value = float(line)
        except ValueError:
            raise NetworkFormatError(f"{omega_path}: line {lineno}: cannot parse {raw!r}") from None
        if not math.isfinite(value):
            raise NetworkFormatError(f"{omega_path}: line {lineno}: NaN/Inf frequency")
        omega.append(value)
    n = len(omega)
    coupling = np.zeros((n, n))
    for lineno, i, j, x in edges:
        if i >= n or j >= n:
            raise NetworkFormatError(
                f"{path}: line {lineno}: node index beyond the {n} frequencies in {omega_path.name}")
        if x < 0:
            raise NetworkFormatError(f"{path}: line {lineno}: invariant violated, negative X_ij")
        coupling[i, j] = x
    try:
        return Network(omega=np.array(omega), coupling=coupling)
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"{path}: {exc}") from None


def save_edge_list(net: Network, path) -> None:
    path = Path(path)
    rows = [f"{i} {j} {float(net.coupling[i, j])!r}" for i, j in zip(*np.nonzero(net.coupling))]
    path.write_text("\n".join(rows) + ("\n" if rows else ""))
    path.with_suffix(".omega").write_text("".join(f"{w!r}\n" for w in net.omega.tolist()))
