"""Decentralized stochastic primal-dual learner over a gossip network.

Each agent keeps an occupancy-measure estimate (updated by multiplicative
weights with a KL projection onto the restricted simplex) and a
differential-value estimate (updated by projected gradient descent).  One
iteration is: average with neighbors, draw one (s, a, s') sample from the
averaged occupancy, then apply both stochastic updates.  Per-agent random
streams are derived from the run seed, so a serial sweep and a parallel
per-agent execution produce identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .geometry import _marginal_scale_factors, restricted_lower_bound
from .mdp import TabularMdp
from .network import GraphSchedule
from .rng import Stream, Xoshiro256StarStar, derive_seed

# |exponent| beyond this would over/underflow exp(); dual updates are clamped
_EXP_CLAMP = 700.0

# iterate cells never drop below this, so a rare huge multiplicative spike
# (possible under sub-default shift overrides, where the dual update can be
# positive) cannot flush other cells to exact zero and strand a state with
# unrecoverable zero marginal; 240 orders of magnitude below any tolerance
_ITERATE_FLOOR = 1e-250

ALPHA_RULES = ("analysis", "algorithm1")


@dataclass(frozen=True)
class HyperParams:
    """Step sizes and horizon for the primal-dual iteration.

    horizon      : iteration count T.
    shift        : reward shift M keeping the dual update nonpositive.
    dual_step    : beta, scales the occupancy (mirror) update.
    primal_step  : alpha, scales the value update.
    t_mix, tau   : mixing-time and stationarity constants; both are run
                   inputs (see the estimate helper), not measured online.
    """

    horizon: int
    shift: float
    dual_step: float
    primal_step: float
    t_mix: float
    tau: float
    alpha_rule: str = "analysis"

    def __post_init__(self):
        if self.horizon < 1:
            raise ParameterError("horizon must be >= 1")
        if self.dual_step < 0 or self.primal_step < 0:
            raise ParameterError("step sizes must be nonnegative")
        if self.t_mix < 1 or self.tau < 1:
            raise ParameterError("t_mix and tau must be >= 1")
        if self.alpha_rule not in ALPHA_RULES:
            raise ParameterError(f"alpha_rule must be one of {ALPHA_RULES}")


def default_hyperparams(num_states: int, num_actions: int, t_mix: float, tau: float,
                        horizon: Optional[int] = None,
                        shift: Optional[float] = None,
                        dual_step: Optional[float] = None,
                        primal_step: Optional[float] = None,
                        alpha_rule: str = "analysis") -> HyperParams:
    """Resolve defaults; any explicitly passed value wins verbatim.

    T = (tau t_mix)^2 |S||A|,  M = 4 t_mix + 1,
    beta = (1/t_mix) sqrt(log(|S||A|) / (2 |S||A| T)).  alpha is coupled to
    beta as |S| t_mix^2 beta ("analysis" rule) or set independently as
    |S| t_mix sqrt(log(|S||A|) / (2 |A| T)) ("algorithm1" rule).
    """
    if num_states < 1 or num_actions < 1:
        raise ParameterError("state and action counts must be positive")
    if t_mix < 1 or tau < 1:
        raise ParameterError("t_mix and tau must be >= 1")
    sa = num_states * num_actions
    T = int(horizon) if horizon is not None else int(math.ceil((tau * t_mix) ** 2 * sa))
    if T < 1:
        raise ParameterError("horizon must be >= 1")
    M = float(shift) if shift is not None else 4.0 * t_mix + 1.0
    log_sa = math.log(max(sa, 2))
    beta = (dual_step if dual_step is not None
            else (1.0 / t_mix) * math.sqrt(log_sa / (2.0 * sa * T)))
    if primal_step is not None:
        alpha = primal_step
    elif alpha_rule == "analysis":
        alpha = num_states * t_mix ** 2 * beta
    else:
        alpha = num_states * t_mix * math.sqrt(log_sa / (2.0 * num_actions * T))
    return HyperParams(T, M, float(beta), float(alpha), float(t_mix), float(tau),
                       alpha_rule)


@dataclass
class TeamState:
    """Stacked per-agent estimates; row i belongs to agent i.

    mu, v hold the current iterates; mu_tilde, v_tilde the post-consensus
    buffers of the latest iteration.  Occupancies are stored flat, (n, S*A).
    """

    mu: np.ndarray
    v: np.ndarray
    mu_tilde: np.ndarray
    v_tilde: np.ndarray
    rngs: list
    num_states: int
    num_actions: int


def init_team(mdp: TabularMdp, seed: int) -> TeamState:
    """Uniform occupancy and zero value estimates for every agent.

    Agent i draws from the stream derive_seed(seed, Stream.AGENT, i).
    """
    n, S, A = mdp.num_agents, mdp.num_states, mdp.joint_actions
    mu = np.full((n, S * A), 1.0 / (S * A))
    v = np.zeros((n, S))
    rngs = [Xoshiro256StarStar(derive_seed(seed, Stream.AGENT, i)) for i in range(n)]
    return TeamState(mu, v, mu.copy(), v.copy(), rngs, S, A)


def consensus_round(mu_stack: np.ndarray, v_stack: np.ndarray,
                    weights: np.ndarray) -> tuple:
    """Neighbor averaging: row i of the result mixes only rows j with w_ij > 0."""
    n = weights.shape[0]
    if mu_stack.shape[0] != n or v_stack.shape[0] != n:
        raise ParameterError("state stacks and weight matrix disagree on agent count")
    return weights @ mu_stack, weights @ v_stack


@dataclass(frozen=True)
class Sample:
    """One generative draw: (s, a) from the averaged occupancy, then s' ~ P."""

    state: int
    action: int
    next_state: int
    reward: float
    probability: float  # averaged-occupancy mass of the drawn cell
    index: int          # flat cell index s * |A| + a


def draw_sample(mu_tilde: np.ndarray, mdp: TabularMdp, agent: int,
                rng: Xoshiro256StarStar) -> Sample:
    """Sample (s, a) proportional to ``mu_tilde`` and s' from the model.

    Consumes exactly two uniforms per call so streams stay aligned between
    serial and parallel execution.  The reward returned is the local one.
    """
    flat = np.asarray(mu_tilde).reshape(-1)
    cum = np.cumsum(flat)
    idx = rng.categorical(cum)
    s, a = divmod(idx, mdp.joint_actions)
    s2 = rng.categorical(mdp.cumulative_transitions[a, s])
    return Sample(s, a, s2, float(mdp.local_rewards[agent, s, a]), float(flat[idx]), idx)


def dual_gradient(mu_tilde: np.ndarray, v: np.ndarray, sample: Sample,
                  hyper: HyperParams) -> float:
    """Nonzero entry of the occupancy update at the sampled (s, a) cell.

    beta * (v(s') - v(s) + r - M) / mu_tilde(s, a); all other entries are
    zero.  With |v|_inf <= 2 t_mix, r in [0, 1] and M = 4 t_mix + 1 the
    value is always <= 0.
    """
    if sample.probability <= 0.0:
        raise ParameterError("sampled a cell with zero averaged occupancy")
    v = np.asarray(v)
    return float(hyper.dual_step
                 * (v[sample.next_state] - v[sample.state] + sample.reward - hyper.shift)
                 / sample.probability)


def primal_gradient(mu: np.ndarray, mu_tilde: np.ndarray, sample: Sample,
                    hyper: HyperParams) -> tuple:
    """Value update (state, next_state, magnitude), at most two nonzeros.

    magnitude = (mu(s,a) / mu_tilde(s,a)) * alpha, added at s and
    subtracted at s'; a self-loop sample contributes nothing.
    """
    if sample.probability <= 0.0:
        raise ParameterError("sampled a cell with zero averaged occupancy")
    own = float(np.asarray(mu).reshape(-1)[sample.index])
    magnitude = 0.0 if sample.next_state == sample.state else \
        hyper.primal_step * own / sample.probability
    return sample.state, sample.next_state, magnitude


def rmapd_iteration(team: TeamState, mdp: TabularMdp, weights: np.ndarray,
                    hyper: HyperParams) -> TeamState:
    """One synchronous iteration, in place.

    Order: consensus snapshot; per-agent sample; occupancy update
    (multiplicative weights, renormalize, KL-project onto the restricted
    set); value update (gradient step from the consensus buffer, clip to
    the value box).  Consensus reads a frozen snapshot, so the per-agent
    updates commute.
    """
    n = team.mu.shape[0]
    S, A = team.num_states, team.num_actions
    mu_tilde, v_tilde = consensus_round(team.mu, team.v, weights)

    new_mu = mu_tilde.copy()
    new_v = v_tilde.copy()
    cum = np.cumsum(mu_tilde, axis=1)
    ct = mdp.cumulative_transitions
    rewards = mdp.local_rewards
    beta, alpha, M = hyper.dual_step, hyper.primal_step, hyper.shift
    for i in range(n):
        rng = team.rngs[i]
        u = rng.uniform() * cum[i, -1]
        idx = min(int(np.searchsorted(cum[i], u, side="right")), S * A - 1)
        s, a = divmod(idx, A)
        u2 = rng.uniform() * ct[a, s, -1]
        s2 = min(int(np.searchsorted(ct[a, s], u2, side="right")), S - 1)
        prob = mu_tilde[i, idx]
        delta = beta * (team.v[i, s2] - team.v[i, s] + rewards[i, s, a] - M) / prob
        new_mu[i, idx] *= math.exp(min(max(delta, -_EXP_CLAMP), _EXP_CLAMP))
        if s2 != s:
            g = alpha * team.mu[i, idx] / prob
            new_v[i, s] += g
            new_v[i, s2] -= g

    _finish_updates(team, mdp, hyper, mu_tilde, v_tilde, new_mu, new_v)
    return team


def _finish_updates(team, mdp, hyper, mu_tilde, v_tilde, new_mu, new_v):
    n, S, A = team.mu.shape[0], team.num_states, team.num_actions
    # floor after normalizing: a huge spike cell in the normalizer would
    # otherwise push the other cells straight back below rescue range
    new_mu /= new_mu.sum(axis=1, keepdims=True)
    np.maximum(new_mu, _ITERATE_FLOOR, out=new_mu)
    c = restricted_lower_bound(hyper.tau, S)
    factors = _marginal_scale_factors(new_mu.reshape(n, S, A).sum(axis=2), c)
    new_mu = (new_mu.reshape(n, S, A) * factors[:, :, None]).reshape(n, S * A)

    radius = 2.0 * hyper.t_mix
    np.clip(new_v, -radius, radius, out=new_v)

    team.mu_tilde, team.v_tilde = mu_tilde, v_tilde
    team.mu, team.v = new_mu, new_v


def on_policy_iteration(team: TeamState, mdp: TabularMdp, weights: np.ndarray,
                        hyper: HyperParams, state: int,
                        env_rng: Xoshiro256StarStar) -> tuple:
    """Optional execution mode: one shared trajectory instead of the
    generative sampler.

    Every agent observes the system state, draws its own action from its
    local policy (the state's conditional of its averaged occupancy), and
    the joint action drives one environment step shared by the team.  The
    same update directions are applied with the importance weights
    disabled (no division by the averaged occupancy mass, unit own/average
    ratio).  Returns (team, next state).  Off by default; the generative
    sampler is the mode matching the estimators' stated distributions.
    """
    n = team.mu.shape[0]
    S, A = team.num_states, team.num_actions
    mu_tilde, v_tilde = consensus_round(team.mu, team.v, weights)

    sizes = mdp.per_agent_actions
    locals_a = []
    for i in range(n):
        conditional = mu_tilde[i].reshape(S, A)[state]
        marginal = conditional.reshape(sizes).sum(
            axis=tuple(ax for ax in range(n) if ax != i)) if n > 1 \
            else conditional
        locals_a.append(team.rngs[i].categorical(np.cumsum(marginal)))
    action = 0
    for a_i, size in zip(locals_a, sizes):
        action = action * size + a_i
    s2 = env_rng.categorical(mdp.cumulative_transitions[action, state])

    new_mu = mu_tilde.copy()
    new_v = v_tilde.copy()
    beta, alpha, M = hyper.dual_step, hyper.primal_step, hyper.shift
    idx = state * A + action
    for i in range(n):
        delta = beta * (team.v[i, s2] - team.v[i, state]
                        + mdp.local_rewards[i, state, action] - M)
        new_mu[i, idx] *= math.exp(min(max(delta, -_EXP_CLAMP), _EXP_CLAMP))
        if s2 != state:
            new_v[i, state] += alpha
            new_v[i, s2] -= alpha

    _finish_updates(team, mdp, hyper, mu_tilde, v_tilde, new_mu, new_v)
    return team, s2


class IterationView:
    """Read-only snapshot handed to observers after each iteration.

    Exposes the per-agent estimates, their network averages, the running
    time-averaged occupancy, and the current consensus errors.  Observers
    must not mutate the arrays.
    """

    __slots__ = ("iteration", "team", "mu_bar", "v_bar", "_occ_sum", "_pol_sum")

    def __init__(self, iteration, team, mu_bar, v_bar, occ_sum, pol_sum):
        self.iteration = iteration
        self.team = team
        self.mu_bar = mu_bar
        self.v_bar = v_bar
        self._occ_sum = occ_sum
        self._pol_sum = pol_sum

    @property
    def occupancy_avg(self) -> np.ndarray:
        """(S, A) time average of the network-average occupancy so far."""
        S, A = self.team.num_states, self.team.num_actions
        return (self._occ_sum / self.iteration).reshape(S, A)

    @property
    def policy_avg(self) -> np.ndarray:
        """(S, A) time average of the per-iteration extracted policies."""
        return self._pol_sum / self.iteration

    def consensus_errors(self) -> tuple:
        cv = float(np.linalg.norm(self.team.v - self.v_bar))
        cmu = float(np.abs(self.team.mu - self.mu_bar).sum() / self.team.mu.shape[0])
        return cv, cmu


@dataclass
class RunResult:
    """Output of a training run.

    policy is extracted from the time-averaged occupancy (the primary
    output); policy_avg is the average of the per-iteration extracted
    policies.  Both average the post-update iterates t = 1..T.
    """

    occupancy_avg: np.ndarray
    policy: np.ndarray
    policy_avg: np.ndarray
    avg_consensus_value: float
    avg_consensus_occupancy: float
    hyper: HyperParams
    seed: int
    iterations: int


def run_rmapd(mdp: TabularMdp, schedule: GraphSchedule, hyper: HyperParams,
              seed: int, observers: tuple = (),
              execution: str = "generative", start_state: int = 0) -> RunResult:
    """Run the full decentralized primal-dual loop for ``hyper.horizon`` steps.

    ``execution`` selects the generative sampler (default, matching the
    estimators' stated sampling distributions) or the shared-trajectory
    "on_policy" mode with importance weights disabled.
    """
    if mdp.num_agents != schedule.num_nodes:
        raise ParameterError(
            f"{mdp.num_agents} agents but {schedule.num_nodes} network nodes")
    if hyper.horizon < 1:
        raise ParameterError("horizon must be >= 1")
    if execution not in ("generative", "on_policy"):
        raise ParameterError(f"unknown execution mode {execution!r}")

    team = init_team(mdp, seed)
    n, S, A = mdp.num_agents, mdp.num_states, mdp.joint_actions
    static_W = schedule.weights_at(0) if schedule.is_static else None
    env_rng = Xoshiro256StarStar(derive_seed(seed, Stream.EXECUTION))
    state = start_state

    occ_sum = np.zeros(S * A)
    pol_sum = np.zeros((S, A))
    cv_sum = 0.0
    cmu_sum = 0.0
    for t in range(hyper.horizon):
        W = static_W if static_W is not None else schedule.weights_at(t)
        if execution == "generative":
            rmapd_iteration(team, mdp, W, hyper)
        else:
            _, state = on_policy_iteration(team, mdp, W, hyper, state, env_rng)

        mu_bar = team.mu.mean(axis=0)
        v_bar = team.v.mean(axis=0)
        occ_sum += mu_bar
        table = mu_bar.reshape(S, A)
        pol_sum += table / table.sum(axis=1, keepdims=True)
        cv_sum += float(np.linalg.norm(team.v - v_bar))
        cmu_sum += float(np.abs(team.mu - mu_bar).sum() / n)

        if observers:
            view = IterationView(t + 1, team, mu_bar, v_bar, occ_sum, pol_sum)
            for observer in observers:
                observer(view)

    T = hyper.horizon
    occupancy_avg = (occ_sum / T).reshape(S, A)
    policy = occupancy_avg / occupancy_avg.sum(axis=1, keepdims=True)
    return RunResult(occupancy_avg, policy, pol_sum / T,
                     cv_sum / T, cmu_sum / T, hyper, seed, T)
