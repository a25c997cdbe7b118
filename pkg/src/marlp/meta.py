"""Best-of-K selection: independent training trials, rollout evaluation,
argmax pick.

Boosts the single-run 2/3 success probability to 1 - delta by running
K = ceil(log(delta/2) / log(1/3)) independent trials and keeping the one
whose rollout estimate is best.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import ParameterError
from .mdp import TabularMdp
from .network import GraphSchedule, check_weight_matrix
from .rmapd import HyperParams, default_hyperparams, run_rmapd
from .rng import Stream, Xoshiro256StarStar, derive_seed


def default_k(delta: float) -> int:
    """Trial count K = ceil(log(delta/2) / log(1/3))."""
    if not (0.0 < delta < 1.0):
        raise ParameterError("delta must lie in (0, 1)")
    return max(1, math.ceil(math.log(delta / 2.0) / math.log(1.0 / 3.0)))


def default_l(epsilon: float, delta: float, k: int, t_mix: float,
              c_l: float = 1.0) -> int:
    """Evaluation horizon L = ceil(c_l (t_mix / eps^2) log(4K/delta)).

    The constant c_l is explicit because only the order of L is pinned
    down by the analysis.
    """
    if epsilon <= 0 or not (0.0 < delta < 1.0) or k < 1 or t_mix < 1:
        raise ParameterError("need epsilon > 0, delta in (0,1), K >= 1, t_mix >= 1")
    if c_l <= 0:
        raise ParameterError("c_L must be positive (L must be >= 1)")
    return max(1, math.ceil(c_l * (t_mix / epsilon ** 2) * math.log(4.0 * k / delta)))


def approximate_value_evaluation(mdp: TabularMdp, policy_table: np.ndarray,
                                 steps: int, rng: Xoshiro256StarStar,
                                 start_state: int = 0) -> float:
    """Mean team reward along one ``steps``-long trajectory under the policy."""
    if steps < 1:
        raise ParameterError("evaluation needs at least one step")
    cum_pi = np.cumsum(np.asarray(policy_table), axis=1)
    cum_p = mdp.cumulative_transitions
    rewards = mdp.global_rewards
    s = start_state
    total = 0.0
    for _ in range(steps):
        a = rng.categorical(cum_pi[s])
        total += rewards[s, a]
        s = rng.categorical(cum_p[a, s])
    return total / steps


def reference_sample_counts(mdp: TabularMdp, epsilon: float, t_mix: float,
                            tau: float, eta: float, B: int, n: int) -> dict:
    """Sample-complexity reference values implied by the convergence bound.

    T ~ tau^2 (4 t_mix + 1)^2 E0 |S||A| D(Gamma, rho) / eps^2 scaled by
    sqrt(n) (theorem form) or n (proof form); E0 is bounded by
    log(|S||A|) + 2.  Reported for context, never enforced.
    """
    gamma = (1.0 - eta / (4.0 * n * n)) ** -2
    rho = (1.0 - eta / (4.0 * n * n)) ** (1.0 / B)
    d_net = (1.0 + gamma) / (1.0 - rho)
    sa = mdp.num_states * mdp.joint_actions
    e0 = math.log(sa) + 2.0
    base = tau ** 2 * (4.0 * t_mix + 1.0) ** 2 * e0 * sa * d_net / epsilon ** 2
    return {
        "sqrt_n_scaling": base * math.sqrt(n),
        "n_scaling": base * n,
        "gamma": gamma,
        "rho": rho,
        "network_factor": d_net,
    }


@dataclass
class MetaConfig:
    """Accuracy/confidence targets plus the base training configuration.

    K defaults from delta, L from (epsilon, delta, K, t_mix, c_l).  When
    c_t is set, each trial's horizon is c_t times the sqrt(n)-scaling
    reference count at precision epsilon/3 (capped below by 1); otherwise
    the base hyperparameters' horizon is used unchanged.
    """

    epsilon: float
    delta: float
    hyper: HyperParams
    k: Optional[int] = None
    l: Optional[int] = None
    c_l: float = 1.0
    c_t: Optional[float] = None
    start_state: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ParameterError("epsilon must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ParameterError("delta must lie in (0, 1)")
        if self.k is not None and self.k < 1:
            raise ParameterError("K must be >= 1")
        if self.l is not None and self.l < 1:
            raise ParameterError("L must be >= 1")

    def resolved_k(self) -> int:
        return self.k if self.k is not None else default_k(self.delta)

    def resolved_l(self) -> int:
        if self.l is not None:
            return self.l
        return default_l(self.epsilon, self.delta, self.resolved_k(),
                         self.hyper.t_mix, self.c_l)


@dataclass
class TrialReport:
    index: int
    seed: int
    y_bar: float
    horizon: int


@dataclass
class MetaResult:
    policy: np.ndarray
    k_star: int
    trials: List[TrialReport]
    k: int
    l: int
    reference_counts: dict = field(default_factory=dict)


def run_meta(mdp: TabularMdp, schedule: GraphSchedule, config: MetaConfig,
             seed: int,
             evaluator: Optional[Callable] = None,
             b_window: int = 1,
             observer_factory: Optional[Callable] = None) -> MetaResult:
    """K independent trials, each evaluated by rollout; best estimate wins.

    Trial k trains with seed derive_seed(seed, Stream.TRIAL, k) and is
    evaluated with the stream derive_seed(seed, Stream.EVALUATION, k), so
    trials depend only on (seed, k) and can run in any order.  Ties keep
    the lowest trial index.  ``evaluator`` can replace the rollout
    estimator (used by tests to inject fixed scores).
    """
    K = config.resolved_k()
    L = config.resolved_l()
    eta = check_weight_matrix(schedule.weights_at(0)) if schedule.is_static \
        else 1.0 / schedule.num_nodes
    refs = reference_sample_counts(mdp, config.epsilon / 3.0, config.hyper.t_mix,
                                   config.hyper.tau, max(eta, 1e-12), b_window,
                                   schedule.num_nodes)
    hyper = config.hyper
    if config.c_t is not None:
        horizon = max(1, math.ceil(config.c_t * refs["sqrt_n_scaling"]))
        hyper = default_hyperparams(mdp.num_states, mdp.joint_actions,
                                    hyper.t_mix, hyper.tau, horizon=horizon,
                                    alpha_rule=hyper.alpha_rule)

    trials = []
    policies = []
    for k in range(K):
        trial_seed = derive_seed(seed, Stream.TRIAL, k)
        observers = observer_factory(k) if observer_factory is not None else ()
        result = run_rmapd(mdp, schedule, hyper, trial_seed, observers)
        if evaluator is not None:
            y = float(evaluator(mdp, result.policy, k))
        else:
            eval_rng = Xoshiro256StarStar(derive_seed(seed, Stream.EVALUATION, k))
            y = approximate_value_evaluation(mdp, result.policy, L, eval_rng,
                                             config.start_state)
        trials.append(TrialReport(k, trial_seed, y, hyper.horizon))
        policies.append(result.policy)

    k_star = max(range(K), key=lambda k: (trials[k].y_bar, -k))
    return MetaResult(policies[k_star], k_star, trials, K, L, refs)
