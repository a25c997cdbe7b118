"""Seeded orchestration of learners and baselines, with trace output.

Every mode writes RFC-4180 CSV traces (LF line endings, '.' decimal) and
one JSON summary per invocation.  Runs are fully deterministic functions
of (config, seed).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .baselines import centralized_spd, independent_avi, solve_lp_exact
from .config import RunConfig, estimate_constants, resolve_hyperparams
from .diagnostics import DiagRow, RunTrace, TraceRecorder
from .errors import NonUnichainError
from .mdp import Policy, TabularMdp, average_reward, start_state_gain
from .meta import MetaConfig, run_meta
from .network import check_window_connectivity
from .rmapd import run_rmapd

log = logging.getLogger("marlp")


def _ensure_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_summary(outdir: Path, summary: dict) -> Path:
    path = outdir / "summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _maybe_lp(mdp: TabularMdp, limit: int):
    """Exact LP solution when the instance is small enough, else None."""
    if mdp.num_states * mdp.joint_actions > limit:
        log.info("LP diagnostics disabled: %d variables exceed the limit %d",
                 mdp.num_states * mdp.joint_actions, limit)
        return None
    return solve_lp_exact(mdp)


def _policy_gain(mdp: TabularMdp, table: np.ndarray):
    try:
        return average_reward(mdp, Policy(table))
    except NonUnichainError:
        return None


def _make_recorder(mdp: TabularMdp, cfg: RunConfig, hyper, lp) -> TraceRecorder:
    recorder = TraceRecorder(mdp, cfg.output.stride, hyper.horizon, lp,
                             hyper.t_mix)
    recorder.trace.header = {
        "config": cfg.raw,
        "resolved": asdict(hyper),
        "lambda_star_scaled": None if lp is None else lp.lambda_star,
    }
    return recorder


def _iavi_gain(mdp: TabularMdp, iavi, start: int):
    """Deterministic product policies can be start-dependent multichain;
    evaluate from the configured start state."""
    try:
        return start_state_gain(mdp, iavi.policy, start)
    except NonUnichainError:
        return None


def _final_block(mdp: TabularMdp, result) -> dict:
    lam = _policy_gain(mdp, result.policy)
    lam_avg = _policy_gain(mdp, result.policy_avg)
    return {
        "avg_reward_scaled": lam,
        "avg_reward_raw": None if lam is None else lam * mdp.reward_scale,
        "policy_avg_reward_scaled": lam_avg,
        "avg_consensus_value": result.avg_consensus_value,
        "avg_consensus_occupancy": result.avg_consensus_occupancy,
        "iterations": result.iterations,
    }


def _base_summary(cfg: RunConfig, mode: str, mdp: TabularMdp) -> dict:
    return {
        "mode": mode,
        "seed": cfg.seed,
        "config": cfg.raw,
        "environment": {
            "states": mdp.num_states,
            "joint_actions": mdp.joint_actions,
            "agents": mdp.num_agents,
            "reward_scale": mdp.reward_scale,
        },
    }


def _lp_block(mdp: TabularMdp, lp) -> dict:
    if lp is None:
        return {"available": False}
    return {
        "available": True,
        "lambda_star_scaled": lp.lambda_star,
        "lambda_star_raw": lp.lambda_star * mdp.reward_scale,
        "status": lp.status,
    }


def _iavi_trace(mdp: TabularMdp, lam, horizon: int, stride: int) -> RunTrace:
    """Constant-policy trace on the shared iteration grid.

    The independent learner is model-based and one-shot; its curve is the
    gain of its fixed product policy, so comparison plots line up.
    """
    trace = RunTrace()
    points = sorted(set(list(range(stride, horizon + 1, stride)) + [horizon]))
    for t in points:
        row = DiagRow(iteration=t)
        if lam is not None:
            row.avg_reward_scaled = lam
            row.avg_reward_raw = lam * mdp.reward_scale
        trace.rows.append(row)
    return trace


def _connectivity_note(cfg: RunConfig, schedule) -> bool:
    horizon = max(cfg.network.b_window, 64)
    connected = check_window_connectivity(schedule, cfg.network.b_window, horizon)
    if not connected:
        log.warning("network: no connected union over windows of length B=%d; "
                    "continuing anyway", cfg.network.b_window)
    return connected


def run_mode(cfg: RunConfig) -> dict:
    """`run` subcommand: execute the configured algorithm, write trace + summary."""
    mdp = cfg.environment.build(cfg.seed)
    outdir = _ensure_dir(Path(cfg.output.directory))
    name = cfg.algorithm.name
    summary = _base_summary(cfg, "run", mdp)
    summary["algorithm"] = name

    if name == "lp":
        lp = solve_lp_exact(mdp)
        summary["lp"] = _lp_block(mdp, lp)
        _write_summary(outdir, summary)
        return summary

    lp = _maybe_lp(mdp, cfg.output.lp_diagnostics_limit)
    summary["lp"] = _lp_block(mdp, lp)

    if name == "iavi":
        iavi = independent_avi(mdp)
        lam = _iavi_gain(mdp, iavi, cfg.meta.start_state)
        horizon = cfg.algorithm.horizon or cfg.output.stride
        trace = _iavi_trace(mdp, lam, horizon, cfg.output.stride)
        trace.write_csv(outdir / "trace_iavi.csv")
        summary["final"] = {
            "avg_reward_scaled": lam,
            "avg_reward_raw": None if lam is None else lam * mdp.reward_scale,
            "local_gains": list(iavi.local_gains),
        }
        _write_summary(outdir, summary)
        return summary

    hyper, notes = resolve_hyperparams(mdp, cfg.algorithm, cfg.seed)
    summary["resolved"] = asdict(hyper)
    summary["notes"] = notes
    log.info("resolved hyperparameters: %s", summary["resolved"])

    if name == "meta":
        return _meta_common(cfg, mdp, lp, hyper, summary, outdir)

    if name == "cspd":
        recorder = _make_recorder(mdp, cfg, hyper, lp)
        result = centralized_spd(mdp, hyper, cfg.seed, (recorder,))
        trace_name = "trace_cspd.csv"
    else:
        schedule = cfg.network.build(mdp.num_agents, cfg.seed)
        summary["window_connected"] = _connectivity_note(cfg, schedule)
        recorder = _make_recorder(mdp, cfg, hyper, lp)
        result = run_rmapd(mdp, schedule, hyper, cfg.seed, (recorder,),
                           execution=cfg.algorithm.execution,
                           start_state=cfg.meta.start_state)
        trace_name = "trace_rmapd.csv"

    recorder.trace.write_csv(outdir / trace_name)
    summary["final"] = _final_block(mdp, result)
    _write_summary(outdir, summary)
    return summary


def compare_mode(cfg: RunConfig) -> dict:
    """`compare`: decentralized + centralized + independent learners + LP,
    same MDP and seed family, one trace per learner."""
    mdp = cfg.environment.build(cfg.seed)
    outdir = _ensure_dir(Path(cfg.output.directory))
    lp = solve_lp_exact(mdp) if (mdp.num_states * mdp.joint_actions
                                 <= cfg.output.lp_diagnostics_limit) else None
    hyper, notes = resolve_hyperparams(mdp, cfg.algorithm, cfg.seed)
    schedule = cfg.network.build(mdp.num_agents, cfg.seed)

    summary = _base_summary(cfg, "compare", mdp)
    summary["resolved"] = asdict(hyper)
    summary["notes"] = notes
    summary["lp"] = _lp_block(mdp, lp)
    summary["window_connected"] = _connectivity_note(cfg, schedule)
    learners = {}

    recorder = _make_recorder(mdp, cfg, hyper, lp)
    result = run_rmapd(mdp, schedule, hyper, cfg.seed, (recorder,))
    recorder.trace.write_csv(outdir / "trace_rmapd.csv")
    learners["rmapd"] = _final_block(mdp, result)

    recorder = _make_recorder(mdp, cfg, hyper, lp)
    result = centralized_spd(mdp, hyper, cfg.seed, (recorder,))
    recorder.trace.write_csv(outdir / "trace_cspd.csv")
    learners["cspd"] = _final_block(mdp, result)

    iavi = independent_avi(mdp)
    lam = _iavi_gain(mdp, iavi, cfg.meta.start_state)
    trace = _iavi_trace(mdp, lam, hyper.horizon, cfg.output.stride)
    trace.write_csv(outdir / "trace_iavi.csv")
    learners["iavi"] = {
        "avg_reward_scaled": lam,
        "avg_reward_raw": None if lam is None else lam * mdp.reward_scale,
        "local_gains": list(iavi.local_gains),
    }

    summary["learners"] = learners
    _write_summary(outdir, summary)
    return summary


def _meta_common(cfg: RunConfig, mdp, lp, hyper, summary, outdir) -> dict:
    schedule = cfg.network.build(mdp.num_agents, cfg.seed)
    summary["window_connected"] = _connectivity_note(cfg, schedule)
    meta_cfg = MetaConfig(cfg.meta.epsilon, cfg.meta.delta, hyper,
                          k=cfg.meta.k, l=cfg.meta.l, c_l=cfg.meta.c_l,
                          c_t=cfg.meta.c_t, start_state=cfg.meta.start_state)
    recorders = {}

    def factory(k: int) -> tuple:
        recorder = _make_recorder(mdp, cfg, hyper, lp)
        recorders[k] = recorder
        return (recorder,)

    result = run_meta(mdp, schedule, meta_cfg, cfg.seed,
                      observer_factory=factory, b_window=cfg.network.b_window)
    for k, recorder in recorders.items():
        recorder.trace.write_csv(outdir / f"trace_trial{k}.csv")

    lam = _policy_gain(mdp, result.policy)
    summary["meta"] = {
        "K": result.k,
        "L": result.l,
        "k_star": result.k_star,
        "trials": [
            {"index": tr.index, "seed": tr.seed, "y_bar": tr.y_bar,
             "horizon": tr.horizon}
            for tr in result.trials
        ],
        "selected_reward_scaled": lam,
        "selected_reward_raw": None if lam is None else lam * mdp.reward_scale,
        "reference_sample_counts": result.reference_counts,
    }
    _write_summary(outdir, summary)
    return summary


def meta_mode(cfg: RunConfig) -> dict:
    """`meta` subcommand regardless of the configured algorithm name."""
    mdp = cfg.environment.build(cfg.seed)
    outdir = _ensure_dir(Path(cfg.output.directory))
    lp = _maybe_lp(mdp, cfg.output.lp_diagnostics_limit)
    hyper, notes = resolve_hyperparams(mdp, cfg.algorithm, cfg.seed)
    summary = _base_summary(cfg, "meta", mdp)
    summary["algorithm"] = "meta"
    summary["resolved"] = asdict(hyper)
    summary["notes"] = notes
    summary["lp"] = _lp_block(mdp, lp)
    return _meta_common(cfg, mdp, lp, hyper, summary, outdir)


def estimate_mode(cfg: RunConfig) -> dict:
    """`estimate`: report mixing-time and stationarity constants."""
    mdp = cfg.environment.build(cfg.seed)
    outdir = _ensure_dir(Path(cfg.output.directory))
    est = estimate_constants(mdp, cfg.seed)
    summary = _base_summary(cfg, "estimate", mdp)
    summary["estimates"] = {
        "t_mix": est["t_mix"],
        "tau": est["tau"],
        "tau_rounded_up": None if est["tau"] is None else math.ceil(est["tau"]),
        "mixing_times": est["mixing_times"],
        "num_policies": est["num_policies"],
    }
    path = outdir / "estimate.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    log.info("estimates: t_mix=%s tau=%s", est["t_mix"], est["tau"])
    return summary
