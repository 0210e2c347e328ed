"""Seeded experiment campaigns: build, simulate, analyse, write."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .action import (FitUndefinedError, build_record, classify_regime, config_trajectory,
                     fit_qoppa, signaling_action_from_events)
from .config import SCHEMA_VERSION, ExperimentConfig, load_config
from .graph import (AttenuationParams, Network, _draw_omega, apply_perturbation,
                    build_topology, coupling_from_distance, coupling_from_distance_matrix,
                    graph_distance_matrix, load_network, save_network)
from .kuramoto import PhaseState, order_parameter, simulate
from .probe import InsufficientDataError, attach_probe, probe_estimate
from .pulse import CircleState, PulseSimulator, write_event_log
from .records import write_csv, write_json, write_record

OUTPUT_ROOT_ENV = "SYNCACTION_OUTPUT_ROOT"
WORKERS_ENV = "SYNCACTION_WORKERS"


class OutputError(OSError):
    pass


@dataclass
class ExitReport:
    output_dir: Path
    seeds: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "seeds": self.seeds}


def _phase_rng(seed: int) -> np.random.Generator:
    # independent of the topology stream, which uses default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])


def build_network(cfg: ExperimentConfig, seed: int) -> Network:
    topo = cfg.topology
    kind = topo["kind"]
    mf = cfg.mean_field()
    if kind == "custom":
        net = load_network(topo["path"])
        if mf:
            net = net.replace(coupling=net.coupling / net.n)
        return net
    n = int(topo["n"])
    if kind == "distance":
        rng = np.random.default_rng(seed)
        pos = rng.uniform(0.0, float(topo["size"]), (n, int(topo["dim"])))
        att = AttenuationParams(**{k: float(v) for k, v in topo["attenuation"].items()})
        if topo["metric"] == "euclidean":
            X = coupling_from_distance(pos, att, topo["cutoff"])
        else:
            delta = pos[:, None, :] - pos[None, :, :]
            adj = np.sqrt((delta ** 2).sum(-1)) <= float(topo["radius"])
            np.fill_diagonal(adj, False)
            X = coupling_from_distance_matrix(graph_distance_matrix(adj), att, topo["cutoff"])
        if mf:
            X = X / n
        return Network(omega=_draw_omega(rng, n, topo["omega"]), coupling=X, positions=pos)
    return build_topology(kind, n, float(topo["coupling"]), topo["omega"], seed,
                          k=int(topo["k"]), p=float(topo["p"]), mean_field=mf)


def _annotations(specs, applied) -> list:
    times = {id(s): t for s, t in applied}
    return [dict(s.to_dict(), applied_at=times.get(id(s))) for s in specs]


def _sub_network(net: Network, n: int) -> Network:
    if net.n == n:
        return net
    pos = None if net.positions is None else net.positions[:n]
    return Network(omega=net.omega[:n], coupling=net.coupling[:n, :n], positions=pos)


def _run_kuramoto(cfg: ExperimentConfig, seed: int, out: Path) -> dict:
    net = build_network(cfg, seed)
    n = net.n
    for s in cfg.perturbations:
        for idx in (s.node, s.i, s.j):
            if idx is not None and idx >= n:
                raise IndexError(f"perturbation node {idx} out of range for n={n}")
    theta0 = _phase_rng(seed).uniform(0.0, 2.0 * math.pi, n)
    pc = cfg.probe_config()
    sim_net = net
    if pc is not None:
        sim_net = attach_probe(net, pc)
        theta0 = np.append(theta0, 0.0)
    dyn = cfg.dynamics
    run = simulate(sim_net, PhaseState(theta0), float(dyn["dt"]), float(dyn["t_max"]),
                   dyn["integrator"], int(dyn["record_every"]), cfg.perturbations)
    segments = [(i, _sub_network(s, n)) for i, s in run.segments]
    record = build_record(run.times, run.thetas[:, :n], run.theta_dots[:, :n],
                          segments[0][1], run.omegas[:, :n], segments)
    files = write_record(record, out)
    save_network(net, out / "network.json")
    files["network"] = "network.json"

    an = cfg.analysis
    entry: dict = {}
    if an["regime"]:
        try:
            rep = classify_regime(record.action_derivative_series, record.times,
                                  tol=float(an["regime_tol"]))
            payload = dict(rep.to_dict(), schema_version=SCHEMA_VERSION)
            entry["regime"] = rep.regime
        except ValueError as exc:
            payload = {"schema_version": SCHEMA_VERSION, "error": str(exc)}
            entry["regime"] = None
        write_json(out / "regime.json", payload)
        files["regime"] = "regime.json"
    if an["qoppa"] not in (None, False):
        window = an["qoppa"].get("window") if isinstance(an["qoppa"], dict) else None
        try:
            fit = fit_qoppa(record.freq_shift_series, record.action_derivative_series,
                            record.times, tuple(window) if window else None)
            payload = dict(fit.to_dict(), schema_version=SCHEMA_VERSION)
        except (FitUndefinedError, ValueError) as exc:
            payload = {"schema_version": SCHEMA_VERSION, "error": str(exc)}
        write_json(out / "qoppa.json", payload)
        files["qoppa"] = "qoppa.json"
    if an["trajectory_embed"]:
        pts = config_trajectory(record.thetas, record.action_derivative_series)
        write_csv(out / "embedding.csv", ["t", "x", "y", "color"],
                  [record.times, pts[:, 0], pts[:, 1], pts[:, 2]])
        files["embedding"] = "embedding.csv"
    if pc is not None:
        write_csv(out / "probe.csv", ["t", "theta_probe", "theta_dot_probe"],
                  [run.times, run.thetas[:, n], run.theta_dots[:, n]])
        files["probe"] = "probe.csv"
        try:
            entry["probe_estimate"] = probe_estimate(run.times, run.theta_dots[:, n],
                                                     pc.omega_probe)
        except InsufficientDataError as exc:
            entry["probe_estimate"] = None
            entry["probe_error"] = str(exc)

    tail = max(1, int(math.ceil(0.2 * record.r_series.shape[0])))
    entry.update(
        n=n,
        final_r=float(record.r_series[-1]),
        mean_r_final_20pct=float(record.r_series[-tail:].mean()),
        sync_time=None,
        perturbations=_annotations(cfg.perturbations, run.applied),
    )
    return {"files": files, **entry}


def _run_pulse(cfg: ExperimentConfig, seed: int, out: Path) -> dict:
    net = build_network(cfg, seed)
    n = net.n
    params = cfg.pulse_params()
    pcfg = cfg.raw["pulse"]
    period = float(pcfg["period"])
    phi0 = _phase_rng(seed).uniform(0.0, params.threshold, n)
    sim = PulseSimulator(net, params, CircleState(phi0, period), seed=seed)
    applied = []
    for spec in sorted(cfg.perturbations, key=lambda s: s.at_time):
        if spec.at_time > float(cfg.dynamics["t_max"]):
            continue
        sim.run_until(spec.at_time)
        new_net, _ = apply_perturbation(sim.net, None, spec)
        if spec.kind == "frequency-shift":
            st = sim.state
            freq = 2.0 * math.pi / st.period[spec.node] + spec.delta_omega
            if not freq > 0:
                raise ValueError(f"frequency shift leaves node {spec.node} with frequency <= 0")
            st.period = st.period.copy()
            st.period[spec.node] = 2.0 * math.pi / freq
        sim.net = new_net
        applied.append((spec, float(sim.state.t)))
    sim.run_until(float(cfg.dynamics["t_max"]))
    res = sim.result()

    files = {"events": "events.csv", "deltas": "events.deltas.json",
             "phases": "phases.csv", "signaling": "signaling.csv", "network": "network.json"}
    write_event_log(res.events, out / "events.csv", out / "events.deltas.json")
    phi = res.state.phi / params.threshold
    write_csv(out / "phases.csv", ["node", "phi"], [np.arange(n), phi])
    times = np.linspace(0.0, float(cfg.dynamics["t_max"]), int(pcfg["rate_samples"]))
    s_f = signaling_action_from_events(res.events, times, pcfg["rate_window"],
                                       mean_period=float(np.mean(res.state.period)))
    write_csv(out / "signaling.csv", ["t", "S_f", "exp_S_f"], [times, s_f, np.exp(s_f)])
    save_network(net, out / "network.json")
    return {
        "files": files,
        "n": n,
        "final_r": float(order_parameter(2.0 * math.pi * phi).r),
        "sync_time": res.sync_time,
        "n_events": len(res.events),
        "n_suppressed": sum(e.suppressed for e in res.events),
        "regime": None,
        "perturbations": _annotations(cfg.perturbations, applied),
    }


def run_seed(raw: dict, seed: int, out_dir: str) -> dict:
    """One seed's pipeline (a top-level function so it pickles for workers)."""
    cfg = load_config(raw)
    out = Path(out_dir) / f"seed_{seed}"
    out.mkdir(parents=True, exist_ok=True)
    entry = _run_pulse(cfg, seed, out) if cfg.model == "pulse" else _run_kuramoto(cfg, seed, out)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "model": cfg.model,
        "seed": seed,
        "n": entry["n"],
        "analysis": {k: (v if not isinstance(v, dict) else True)
                     for k, v in cfg.analysis.items()},
        "files": entry["files"],
    }
    write_json(out / "record.json", manifest)
    entry["files"] = dict(entry["files"], manifest="record.json")
    entry["files"] = {k: f"seed_{seed}/{v}" for k, v in sorted(entry["files"].items())}
    return {"seed": seed, "dir": f"seed_{seed}", **entry}


def resolve_output(cfg: ExperimentConfig) -> tuple:
    out = os.environ.get(OUTPUT_ROOT_ENV) or cfg.outputs["dir"]
    workers = cfg.outputs["workers"]
    env_w = os.environ.get(WORKERS_ENV)
    if env_w:
        try:
            workers = int(env_w)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env_w!r}") from None
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return Path(out), workers


def _ensure_writable(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {out} is not writable: {exc}") from None


def run_experiment(config, output_dir=None, workers: Optional[int] = None) -> ExitReport:
    """Run every seed of ``config`` (a path, dict or ExperimentConfig).

    Writes one ``seed_<seed>/`` directory per seed and ``summary.json`` at
    the root; the summary carries no timestamps, so reruns are byte-identical.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    out, nworkers = resolve_output(cfg)
    if output_dir is not None:
        out = Path(output_dir)
    if workers is not None:
        nworkers = workers
    _ensure_writable(out)
    raw = cfg.raw
    seeds = cfg.seeds
    if nworkers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(nworkers, len(seeds))) as pool:
            entries = list(pool.map(run_seed, [raw] * len(seeds), seeds,
                                    [str(out)] * len(seeds)))
    else:
        entries = [run_seed(raw, s, str(out)) for s in seeds]
    report = ExitReport(out, entries)
    summary = dict(report.to_dict(), model=cfg.model)
    write_json(out / "summary.json", summary)
    return report
