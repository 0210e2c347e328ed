"""Experiment configuration: YAML loading and structural validation."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .graph import PERTURBATION_KINDS, PerturbationSpec
from .probe import ProbeConfig
from .pulse import PulseParams

SCHEMA_VERSION = 1

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "model": "kuramoto",
    "topology": {
        "kind": "complete",
        "n": 50,
        "coupling": 4.0,
        "mean_field": None,
        "k": 1,
        "p": 0.5,
        "path": None,
        "omega": {"dist": "normal", "mean": 0.0, "sd": 1.0},
        "dim": 2,
        "size": 1.0,
        "attenuation": {"beta0": 1.0, "gamma": 1.0, "m": 1.0},
        "cutoff": None,
        "metric": "euclidean",
        "radius": 0.3,
    },
    "dynamics": {"dt": 0.01, "t_max": 50.0, "integrator": "rk4", "record_every": 1},
    "pulse": {
        "p_send": 1.0,
        "alpha": 0.5,
        "threshold": 1.0,
        "period": 1.0,
        "response": "reversed-sine",
        "absorb_tol": 1e-9,
        "rate_window": None,
        "rate_samples": 1000,
    },
    "seeds": [0],
    "perturbations": [],
    "probe": None,
    "analysis": {
        "regime": True,
        "regime_tol": 0.02,
        "qoppa": {"window": None},
        "trajectory_embed": True,
    },
    "outputs": {"dir": "runs/out", "workers": 1},
}

TOPOLOGY_KINDS = ("complete", "ring", "erdos-renyi", "custom", "distance")


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


@dataclass
class ExperimentConfig:
    raw: dict
    source: Optional[Path] = None
    perturbations: list = field(default_factory=list)

    @property
    def model(self) -> str:
        return self.raw["model"]

    @property
    def topology(self) -> dict:
        return self.raw["topology"]

    @property
    def dynamics(self) -> dict:
        return self.raw["dynamics"]

    @property
    def seeds(self) -> list:
        return list(self.raw["seeds"])

    @property
    def analysis(self) -> dict:
        return self.raw["analysis"]

    @property
    def outputs(self) -> dict:
        return self.raw["outputs"]

    def mean_field(self) -> bool:
        mf = self.topology.get("mean_field")
        return self.topology["kind"] == "complete" if mf is None else bool(mf)

    def pulse_params(self) -> PulseParams:
        p = self.raw["pulse"]
        return PulseParams(p_send=float(p["p_send"]), alpha=float(p["alpha"]),
                           threshold=float(p["threshold"]), response=p["response"],
                           absorb_tol=float(p["absorb_tol"]))

    def probe_config(self) -> Optional[ProbeConfig]:
        p = self.raw.get("probe")
        if not p:
            return None
        return ProbeConfig(epsilon=float(p.get("epsilon", 1e-3)),
                           omega_probe=float(p.get("omega_probe", 0.0)),
                           attach_to=p.get("attach_to", "all"),
                           mode=p.get("mode", "ideal"))


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError([f"config is not valid YAML{where}: {exc}"]) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(["config top level must be a mapping"])
    return data


def check_config(data: dict, base_dir: Optional[Path] = None) -> list:
    """Return a list of violations (empty when the config is valid)."""
    v = []
    unknown = set(data) - set(DEFAULTS)
    for key in sorted(unknown):
        v.append(f"{key}: unknown top-level key")
    cfg = _merge(DEFAULTS, {k: data[k] for k in data if k in DEFAULTS})

    if cfg["schema_version"] != SCHEMA_VERSION:
        v.append(f"schema_version must be {SCHEMA_VERSION}")
    if cfg["model"] not in ("kuramoto", "pulse"):
        v.append("model must be one of 'kuramoto', 'pulse'")

    topo = cfg["topology"]
    kind = topo.get("kind")
    if kind not in TOPOLOGY_KINDS:
        v.append(f"topology.kind must be one of {', '.join(TOPOLOGY_KINDS)}")
    n = topo.get("n")
    if kind != "custom" and (not _int(n) or n < 1):
        v.append("topology.n must be an integer >= 1")
    if not _num(topo.get("coupling")) or topo["coupling"] < 0:
        v.append("topology.coupling must be a number >= 0")
    if kind == "ring":
        k = topo.get("k")
        if not _int(k) or k < 0 or (_int(n) and k >= n):
            v.append("topology.k must be an integer with 0 <= k < n")
    if kind == "erdos-renyi":
        p = topo.get("p")
        if not _num(p) or not 0.0 <= p <= 1.0:
            v.append("topology.p must be a probability in [0, 1]")
    if kind == "custom":
        path = topo.get("path")
        if not path:
            v.append("topology.path is required for custom topologies")
        else:
            full = Path(path) if base_dir is None or Path(path).is_absolute() else base_dir / path
            if not full.exists():
                v.append(f"topology.path: file {path} does not exist")
    if kind == "distance":
        att = topo.get("attenuation") or {}
        if not _num(att.get("beta0")) or att["beta0"] <= 0:
            v.append("topology.attenuation.beta0 must be > 0")
        if not _num(att.get("gamma")) or att["gamma"] < 0:
            v.append("topology.attenuation.gamma must be >= 0")
        if not _num(att.get("m")) or att["m"] <= 0:
            v.append("topology.attenuation.m must be > 0")
        if topo.get("cutoff") is not None and (not _num(topo["cutoff"]) or topo["cutoff"] <= 0):
            v.append("topology.cutoff must be > 0 when given")
        if topo.get("metric") not in ("euclidean", "graph"):
            v.append("topology.metric must be 'euclidean' or 'graph'")
        if not _int(topo.get("dim")) or topo["dim"] < 1:
            v.append("topology.dim must be an integer >= 1")
    om = topo.get("omega")
    if _num(om):
        pass
    elif isinstance(om, dict):
        dist = om.get("dist", "normal")
        if dist == "uniform":
            if not (_num(om.get("lo", -1.0)) and _num(om.get("hi", 1.0))) \
                    or om.get("hi", 1.0) < om.get("lo", -1.0):
                v.append("topology.omega: uniform needs numeric lo <= hi")
        elif dist == "normal":
            if not _num(om.get("sd", 1.0)) or om.get("sd", 1.0) < 0:
                v.append("topology.omega.sd must be >= 0")
        elif dist == "constant":
            if not _num(om.get("value", 0.0)):
                v.append("topology.omega.value must be a number")
        else:
            v.append("topology.omega.dist must be one of constant, uniform, normal")
    else:
        v.append("topology.omega must be a number or a distribution mapping")

    dyn = cfg["dynamics"]
    if not _num(dyn.get("t_max")) or dyn["t_max"] <= 0:
        v.append("dynamics.t_max must be > 0")
    if cfg["model"] == "kuramoto":
        if not _num(dyn.get("dt")) or dyn["dt"] <= 0:
            v.append("dynamics.dt must be > 0")
        if dyn.get("integrator") not in ("euler", "rk4"):
            v.append("dynamics.integrator must be 'euler' or 'rk4'")
        if not _int(dyn.get("record_every")) or dyn["record_every"] < 1:
            v.append("dynamics.record_every must be an integer >= 1")

    if cfg["model"] == "pulse":
        pp = cfg["pulse"]
        if not _num(pp.get("p_send")) or not 0.0 <= pp["p_send"] <= 1.0:
            v.append("pulse.p_send must be a probability in [0, 1]")
        if not _num(pp.get("alpha")) or pp["alpha"] < 0:
            v.append("pulse.alpha must be >= 0")
        if not _num(pp.get("threshold")) or pp["threshold"] <= 0:
            v.append("pulse.threshold must be > 0")
        if not _num(pp.get("period")) or pp["period"] <= 0:
            v.append("pulse.period must be > 0")
        if pp.get("response") not in ("sine", "reversed-sine"):
            v.append("pulse.response must be 'sine' or 'reversed-sine'")
        if not _num(pp.get("absorb_tol")) or pp["absorb_tol"] < 0:
            v.append("pulse.absorb_tol must be >= 0")
        if pp.get("rate_window") is not None and (not _num(pp["rate_window"]) or pp["rate_window"] <= 0):
            v.append("pulse.rate_window must be > 0 when given")

    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds:
        v.append("seeds must be a nonempty list of integers")
    elif not all(_int(s) and s >= 0 for s in seeds):
        v.append("seeds must be nonnegative integers")
    elif len(set(seeds)) != len(seeds):
        v.append("seeds must be unique")

    perts = cfg["perturbations"]
    if not isinstance(perts, list):
        v.append("perturbations must be a list")
    else:
        for idx, p in enumerate(perts):
            where = f"perturbations[{idx}]"
            if not isinstance(p, dict):
                v.append(f"{where} must be a mapping")
                continue
            if p.get("kind") not in PERTURBATION_KINDS:
                v.append(f"{where}.kind must be one of {', '.join(PERTURBATION_KINDS)}")
                continue
            if not _num(p.get("at_time")) or p["at_time"] < 0:
                v.append(f"{where}.at_time must be >= 0")
            fields = ("node",) if p["kind"] in ("frequency-shift", "node-silence") else ("i", "j")
            for f in fields:
                val = p.get(f)
                if not _int(val) or val < 0 or (_int(n) and kind != "custom" and val >= n):
                    v.append(f"{where}.{f} must be a node index in [0, n)")
            if p["kind"] == "frequency-shift" and not _num(p.get("delta_omega")):
                v.append(f"{where}.delta_omega must be a number")
            if p["kind"] == "edge-rescale" and (not _num(p.get("factor")) or p["factor"] < 0):
                v.append(f"{where}.factor must be >= 0")

    probe = cfg.get("probe")
    if probe is not None:
        if cfg["model"] != "kuramoto":
            v.append("probe is only supported for model: kuramoto")
        elif not isinstance(probe, dict):
            v.append("probe must be a mapping")
        else:
            if not _num(probe.get("epsilon", 1e-3)) or probe.get("epsilon", 1e-3) < 0:
                v.append("probe.epsilon must be >= 0")
            if probe.get("mode", "ideal") not in ("ideal", "back-action"):
                v.append("probe.mode must be 'ideal' or 'back-action'")
            if not _num(probe.get("omega_probe", 0.0)):
                v.append("probe.omega_probe must be a number")
            att = probe.get("attach_to", "all")
            if att != "all" and not (isinstance(att, list) and all(_int(a) and a >= 0 for a in att)):
                v.append("probe.attach_to must be 'all' or a list of node indices")

    an = cfg["analysis"]
    if not _num(an.get("regime_tol")) or an["regime_tol"] <= 0:
        v.append("analysis.regime_tol must be > 0")
    q = an.get("qoppa")
    if q not in (None, False, True) and not isinstance(q, dict):
        v.append("analysis.qoppa must be false or a mapping with an optional window")
    elif isinstance(q, dict) and q.get("window") is not None:
        w = q["window"]
        if not (isinstance(w, list) and len(w) == 2 and all(_num(x) for x in w) and w[0] <= w[1]):
            v.append("analysis.qoppa.window must be [t_start, t_end] with t_start <= t_end")

    out = cfg["outputs"]
    if not isinstance(out.get("dir"), str) or not out["dir"]:
        v.append("outputs.dir must be a nonempty path")
    if not _int(out.get("workers")) or out["workers"] < 1:
        v.append("outputs.workers must be an integer >= 1")
    return v


def validate_config(path) -> list:
    """Validate a config file without running it; returns the violations."""
    path = Path(path)
    try:
        data = read_config_file(path)
    except ConfigError as exc:
        return exc.violations
    except OSError as exc:
        return [f"cannot read config: {exc}"]
    return check_config(data, path.parent)


def load_config(path_or_dict, base_dir: Optional[Path] = None) -> ExperimentConfig:
    if isinstance(path_or_dict, dict):
        data, source = path_or_dict, None
    else:
        source = Path(path_or_dict)
        data = read_config_file(source)
        base_dir = source.parent
    violations = check_config(data, base_dir)
    if violations:
        raise ConfigError(violations)
    raw = _merge(DEFAULTS, data)
    if raw["topology"].get("path") and base_dir is not None:
        p = Path(raw["topology"]["path"])
        if not p.is_absolute():
            raw["topology"]["path"] = str(base_dir / p)
    perts = [
        PerturbationSpec(at_time=float(p["at_time"]), kind=p["kind"], node=p.get("node"),
                         i=p.get("i"), j=p.get("j"),
                         delta_omega=float(p.get("delta_omega", 0.0)),
                         factor=float(p.get("factor", 1.0)))
        for p in raw["perturbations"]
    ]
    return ExperimentConfig(raw=raw, source=source, perturbations=perts)
