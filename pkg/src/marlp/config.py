"""Run configuration: a strict YAML key-value tree.

Unknown keys, duplicate keys, type mismatches, and out-of-range values
are all load errors that name the offending key path.  Absent keys are
filled from documented defaults; ``t_mix`` and ``tau`` default to values
estimated from sampled policies (see ``estimate_constants``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .mdp import (GridWorldSpec, Policy, TabularMdp, build_grid_world,
                  mixing_time, random_unichain_mdp, tau_bound)
from .network import GraphSchedule
from .rmapd import ALPHA_RULES, HyperParams, default_hyperparams
from .rng import Stream, Xoshiro256StarStar, derive_seed

ALGORITHMS = ("rmapd", "cspd", "iavi", "lp", "meta")

# the paper-style two-cell layout, generalized to n agents: the top-left
# cell favors agent 0, the bottom-right cell favors the others
def _default_reward_cells(side: int, agents: int) -> list:
    first = [8.0] + [5.0] * (agents - 1)
    second = [5.0] + [10.0] * (agents - 1)
    return [{"cell": [0, 0], "rewards": first},
            {"cell": [side - 1, side - 1], "rewards": second}]


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys."""


def _strict_mapping(loader, node, deep=False):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            raise ConfigError(f"duplicate key {key!r} in config")
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _strict_mapping)


def _require_mapping(value, path):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _check_keys(section: dict, allowed: tuple, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def _get_int(section, key, path, default=None, minimum=None):
    value = section.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _get_float(section, key, path, default=None, minimum=None,
               maximum=None, strict_min=None):
    value = section.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(f"{path}.{key}: must be > {strict_min}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}.{key}: must be <= {maximum}")
    return value


def _get_str(section, key, path, default=None, choices=None):
    value = section.get(key, default)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"{path}.{key}: expected a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}.{key}: must be one of {choices}")
    return value


@dataclass
class EnvironmentConfig:
    kind: str
    side: int = 0
    agents: int = 1
    reward_cells: list = field(default_factory=list)
    reward_scale: float = 10.0
    states: int = 0
    actions_per_agent: list = field(default_factory=list)
    floor: float = 1e-3

    def build(self, seed: int) -> TabularMdp:
        if self.kind == "grid":
            cells = tuple(((rc["cell"][0], rc["cell"][1]), tuple(rc["rewards"]))
                          for rc in self.reward_cells)
            spec = GridWorldSpec(self.side, self.agents, cells, self.reward_scale)
            return build_grid_world(spec)
        rng = Xoshiro256StarStar(derive_seed(seed, Stream.ENVIRONMENT))
        return random_unichain_mdp(self.states, self.actions_per_agent, rng,
                                   self.floor)


@dataclass
class NetworkConfig:
    model: str
    p: float = 0.3
    b_window: int = 1
    edge_sets: list = field(default_factory=list)
    seed: Optional[int] = None  # explicit graph seed; run seed otherwise

    def build(self, num_nodes: int, seed: int) -> GraphSchedule:
        if self.model == "complete":
            return GraphSchedule.complete(num_nodes)
        if self.model == "ring":
            return GraphSchedule.ring(num_nodes)
        if self.model == "periodic":
            sets = [[(int(i), int(j)) for i, j in edges] for edges in self.edge_sets]
            return GraphSchedule.periodic(sets, num_nodes)
        graph_seed = self.seed if self.seed is not None else \
            derive_seed(seed, Stream.GRAPH)
        return GraphSchedule.erdos_renyi(num_nodes, self.p, graph_seed)


@dataclass
class AlgorithmConfig:
    name: str
    t_mix: Optional[float] = None
    tau: Optional[float] = None
    horizon: Optional[int] = None
    beta: Optional[float] = None
    alpha: Optional[float] = None
    shift: Optional[float] = None
    alpha_rule: str = "analysis"
    execution: str = "generative"


@dataclass
class MetaSection:
    epsilon: float = 0.1
    delta: float = 0.1
    k: Optional[int] = None
    l: Optional[int] = None
    c_l: float = 1.0
    c_t: Optional[float] = None
    start_state: int = 0


@dataclass
class OutputConfig:
    directory: str = "out"
    stride: int = 100
    lp_diagnostics_limit: int = 2000


@dataclass
class RunConfig:
    seed: int
    environment: EnvironmentConfig
    network: NetworkConfig
    algorithm: AlgorithmConfig
    meta: MetaSection
    output: OutputConfig
    raw: dict = field(default_factory=dict)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document."""
    try:
        data = yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    data = _require_mapping(data, "config")
    _check_keys(data, ("seed", "environment", "network", "algorithm",
                       "meta", "output"), "config")

    seed = _get_int(data, "seed", "config", default=0, minimum=0)

    env_raw = _require_mapping(data.get("environment"), "environment")
    kind = _get_str(env_raw, "kind", "environment", default="grid",
                    choices=("grid", "random"))
    if kind == "grid":
        _check_keys(env_raw, ("kind", "side", "agents", "reward_cells",
                              "reward_scale"), "environment")
        side = _get_int(env_raw, "side", "environment", default=2, minimum=2)
        agents = _get_int(env_raw, "agents", "environment", default=2, minimum=1)
        cells = env_raw.get("reward_cells")
        if cells is None:
            cells = _default_reward_cells(side, agents)
        if not isinstance(cells, list) or not cells:
            raise ConfigError("environment.reward_cells: expected a nonempty list")
        for k, rc in enumerate(cells):
            path = f"environment.reward_cells[{k}]"
            rc = _require_mapping(rc, path)
            _check_keys(rc, ("cell", "rewards"), path)
            cell = rc.get("cell")
            if (not isinstance(cell, list) or len(cell) != 2
                    or not all(isinstance(x, int) for x in cell)):
                raise ConfigError(f"{path}.cell: expected [row, col]")
            rewards = rc.get("rewards")
            if (not isinstance(rewards, list) or len(rewards) != agents
                    or not all(isinstance(x, (int, float)) for x in rewards)):
                raise ConfigError(f"{path}.rewards: expected {agents} numbers")
        scale = _get_float(env_raw, "reward_scale", "environment",
                           default=10.0, strict_min=0.0)
        environment = EnvironmentConfig("grid", side=side, agents=agents,
                                        reward_cells=cells, reward_scale=scale)
    else:
        _check_keys(env_raw, ("kind", "states", "actions_per_agent", "floor"),
                    "environment")
        states = _get_int(env_raw, "states", "environment", default=4, minimum=2)
        actions = env_raw.get("actions_per_agent", [2])
        if (not isinstance(actions, list) or not actions
                or not all(isinstance(x, int) and x >= 1 for x in actions)):
            raise ConfigError("environment.actions_per_agent: expected positive integers")
        floor = _get_float(env_raw, "floor", "environment", default=1e-3,
                           strict_min=0.0)
        environment = EnvironmentConfig("random", states=states,
                                        actions_per_agent=actions, floor=floor,
                                        agents=len(actions), reward_scale=1.0)

    net_raw = _require_mapping(data.get("network"), "network")
    _check_keys(net_raw, ("model", "p", "B", "edge_sets", "seed"), "network")
    model = _get_str(net_raw, "model", "network", default="complete",
                     choices=("complete", "ring", "periodic", "erdos_renyi"))
    p = _get_float(net_raw, "p", "network", default=0.3, minimum=0.0, maximum=1.0)
    b_window = _get_int(net_raw, "B", "network", default=1, minimum=1)
    edge_sets = net_raw.get("edge_sets", [])
    if model == "periodic":
        if not isinstance(edge_sets, list) or not edge_sets:
            raise ConfigError("network.edge_sets: periodic model needs edge sets")
    network = NetworkConfig(model, p=p, b_window=b_window, edge_sets=edge_sets,
                            seed=_get_int(net_raw, "seed", "network", minimum=0))

    alg_raw = _require_mapping(data.get("algorithm"), "algorithm")
    _check_keys(alg_raw, ("name", "t_mix", "tau", "T", "beta", "alpha", "M",
                          "alpha_rule", "execution"), "algorithm")
    algorithm = AlgorithmConfig(
        name=_get_str(alg_raw, "name", "algorithm", default="rmapd",
                      choices=ALGORITHMS),
        t_mix=_get_float(alg_raw, "t_mix", "algorithm", minimum=1.0),
        tau=_get_float(alg_raw, "tau", "algorithm", minimum=1.0),
        horizon=_get_int(alg_raw, "T", "algorithm", minimum=1),
        beta=_get_float(alg_raw, "beta", "algorithm", strict_min=0.0),
        alpha=_get_float(alg_raw, "alpha", "algorithm", minimum=0.0),
        shift=_get_float(alg_raw, "M", "algorithm"),
        alpha_rule=_get_str(alg_raw, "alpha_rule", "algorithm",
                            default="analysis", choices=ALPHA_RULES),
        execution=_get_str(alg_raw, "execution", "algorithm",
                           default="generative",
                           choices=("generative", "on_policy")),
    )
    if algorithm.tau is not None and algorithm.tau < 1.0:
        raise ConfigError("algorithm.tau: tau must be >= 1")

    meta_raw = _require_mapping(data.get("meta"), "meta")
    _check_keys(meta_raw, ("epsilon", "delta", "K", "L", "c_L", "c_T",
                           "start_state"), "meta")
    meta = MetaSection(
        epsilon=_get_float(meta_raw, "epsilon", "meta", default=0.1,
                           strict_min=0.0),
        delta=_get_float(meta_raw, "delta", "meta", default=0.1,
                         strict_min=0.0, maximum=1.0 - 1e-12),
        k=_get_int(meta_raw, "K", "meta", minimum=1),
        l=_get_int(meta_raw, "L", "meta", minimum=1),
        c_l=_get_float(meta_raw, "c_L", "meta", default=1.0, strict_min=0.0),
        c_t=_get_float(meta_raw, "c_T", "meta", strict_min=0.0),
        start_state=_get_int(meta_raw, "start_state", "meta", default=0,
                             minimum=0),
    )

    out_raw = _require_mapping(data.get("output"), "output")
    _check_keys(out_raw, ("dir", "stride", "lp_diagnostics_limit"), "output")
    output = OutputConfig(
        directory=_get_str(out_raw, "dir", "output", default="out"),
        stride=_get_int(out_raw, "stride", "output", default=100, minimum=1),
        lp_diagnostics_limit=_get_int(out_raw, "lp_diagnostics_limit", "output",
                                      default=2000, minimum=0),
    )

    return RunConfig(seed, environment, network, algorithm, meta, output,
                     raw=data)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def sample_policies(mdp: TabularMdp, count: int, seed: int) -> list:
    """Uniform policy plus ``count`` random stochastic policies (Dirichlet rows)."""
    S, A = mdp.num_states, mdp.joint_actions
    policies = [Policy.uniform(S, A)]
    rng = Xoshiro256StarStar(derive_seed(seed, Stream.POLICY))
    for _ in range(count):
        table = np.empty((S, A))
        for s in range(S):
            g = -np.log(1.0 - rng.uniforms(A))
            table[s] = g / g.sum()
        policies.append(Policy(table))
    return policies


def estimate_constants(mdp: TabularMdp, seed: int, num_policies: int = 8,
                       max_t: int = 10_000) -> dict:
    """Estimate t_mix and tau over sampled stochastic policies.

    Both constants are algorithm inputs; this helper reports the max
    mixing time and the tight stationarity constant over the sampled set.
    """
    policies = sample_policies(mdp, num_policies, seed)
    mix_values = []
    for policy in policies:
        t = mixing_time(mdp, policy, max_t=max_t)
        mix_values.append(t)
    finite = [t for t in mix_values if t is not None]
    tau = tau_bound(mdp, policies)
    return {
        "mixing_times": mix_values,
        "t_mix": max(finite) if finite else None,
        "tau": tau,
        "num_policies": len(policies),
    }


def resolve_hyperparams(mdp: TabularMdp, algorithm: AlgorithmConfig,
                        seed: int) -> tuple:
    """Fill in t_mix/tau (estimating if needed) and the step-size defaults.

    Returns (HyperParams, notes) where notes records what was estimated.
    """
    notes = {}
    t_mix, tau = algorithm.t_mix, algorithm.tau
    if t_mix is None or tau is None:
        est = estimate_constants(mdp, seed)
        if t_mix is None:
            if est["t_mix"] is None:
                raise ConfigError(
                    "algorithm.t_mix: could not estimate (chain mixes too "
                    "slowly); set it explicitly")
            t_mix = float(est["t_mix"])
            notes["t_mix_estimated"] = t_mix
        if tau is None:
            if est["tau"] is None:
                raise ConfigError(
                    "algorithm.tau: could not estimate (zero stationary "
                    "mass); set it explicitly")
            tau = float(math.ceil(est["tau"]))
            notes["tau_estimated"] = tau
    hyper = default_hyperparams(
        mdp.num_states, mdp.joint_actions, t_mix, tau,
        horizon=algorithm.horizon, shift=algorithm.shift,
        dual_step=algorithm.beta, primal_step=algorithm.alpha,
        alpha_rule=algorithm.alpha_rule)
    return hyper, notes
