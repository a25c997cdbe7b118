"""Exact solvers and comparison learners.

Ground truth comes from three independent routes: the occupancy-measure
linear program (dense simplex), relative value iteration on the
average-reward Bellman equation, and brute-force enumeration of
deterministic policies.  The comparison learners are the centralized
stochastic primal-dual method and independent approximate value
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SolverError
from .mdp import (Policy, TabularMdp, aggregate_rewards,
                  enumerate_deterministic_policies, policy_transition_matrix,
                  stationary_distribution)
from .network import GraphSchedule
from .rmapd import HyperParams, RunResult, run_rmapd
from .simplex import solve_linear_program

BRUTE_FORCE_LIMIT = 10 ** 6


@dataclass
class LpSolution:
    """Optimal occupancy mu, gain lambda, differential value v, and the
    stationary distribution xi implied by mu's state marginals."""

    mu: np.ndarray
    lambda_star: float
    v: np.ndarray
    xi: np.ndarray
    status: str


def _flow_constraints(mdp: TabularMdp) -> tuple:
    """Equality system of the occupancy LP: flow balance plus normalization."""
    S, A = mdp.num_states, mdp.joint_actions
    rows = np.zeros((S + 1, S * A))
    eye = np.eye(S)
    for a in range(A):
        cols = np.arange(S) * A + a
        rows[:S, cols] = eye - mdp.transitions[a].T
    rows[S, :] = 1.0
    b = np.zeros(S + 1)
    b[S] = 1.0
    return rows, b


def solve_lp_exact(mdp: TabularMdp) -> LpSolution:
    """Maximize sum mu(s,a) r(s,a) over stationary occupancy measures.

    The value vector and gain are recovered from the duals of the flow
    and normalization constraints; v is normalized so v . xi = 0.  When
    the duals are degenerate (complementary slackness fails to verify),
    v falls back to relative value iteration while mu and lambda keep the
    simplex answer.
    """
    S, A = mdp.num_states, mdp.joint_actions
    A_eq, b = _flow_constraints(mdp)
    c = mdp.global_rewards.reshape(-1)
    result = solve_linear_program(c, A_eq, b, maximize=True)
    mu = result.x.reshape(S, A)
    lam = result.objective
    xi = mu.sum(axis=1)

    v = result.duals[:S].copy()
    lam_dual = float(result.duals[S])
    v -= float(v @ xi)

    status = "optimal"
    slack = lam_dual + v[:, None] - np.einsum("ast,t->sa", mdp.transitions, v) \
        - mdp.global_rewards
    if (abs(lam_dual - lam) > 1e-7
            or slack.min() < -1e-7
            or np.abs(mu * slack).max() > 1e-7):
        lam_b, v = solve_bellman(mdp)
        del lam_b  # simplex gain is kept; only the value vector is replaced
        status = "bellman_value_fallback"
    return LpSolution(mu, lam, v, xi, status)


def brute_force_optimal(mdp: TabularMdp) -> tuple:
    """Exhaustive search over deterministic joint policies.

    Returns (best gain, best Policy); ties keep the lexicographically
    first policy.  Refuses when |A|^|S| exceeds the enumeration guard.
    """
    S, A = mdp.num_states, mdp.joint_actions
    if A ** S > BRUTE_FORCE_LIMIT:
        raise ParameterError(
            f"brute force would enumerate {A}^{S} policies; over the limit")
    rows = np.arange(S)
    best_lambda, best_acts = -np.inf, None
    for acts in enumerate_deterministic_policies(S, A):
        acts_arr = np.asarray(acts)
        transition = mdp.transitions[acts_arr, rows, :]
        xi = stationary_distribution(transition)
        lam = float(xi @ mdp.global_rewards[rows, acts_arr])
        if lam > best_lambda:
            best_lambda, best_acts = lam, acts
    return best_lambda, Policy.deterministic(best_acts, A)


def relative_value_iteration(transitions: np.ndarray, rewards: np.ndarray,
                             tol: float = 1e-10, max_iter: int = 200_000) -> tuple:
    """Average-reward value iteration with reference-state normalization.

    Iterates h <- max_a [r_a + P_a h] - offset, offset = value at state 0,
    until the pre-normalization increment has span below ``tol``.  Returns
    (gain, h, greedy deterministic actions); ties pick the lowest action.
    """
    S = transitions.shape[1]
    h = np.zeros(S)
    for _ in range(max_iter):
        q = rewards + (transitions @ h).T
        th = q.max(axis=1)
        diff = th - h
        offset = float(th[0])
        h = th - offset
        if float(diff.max() - diff.min()) < tol:
            return offset, h, q.argmax(axis=1)
    raise SolverError("relative value iteration did not converge "
                      "(periodic or multichain dynamics?)")


def solve_bellman(mdp: TabularMdp, tol: float = 1e-10,
                  max_iter: int = 200_000) -> tuple:
    """Gain and differential value of the optimal policy, v normalized so
    v . xi* = 0 under the greedy policy's stationary distribution."""
    lam, h, greedy = relative_value_iteration(
        mdp.transitions, mdp.global_rewards, tol, max_iter)
    policy = Policy.deterministic(greedy, mdp.joint_actions)
    xi = stationary_distribution(policy_transition_matrix(mdp, policy))
    return lam, h - float(h @ xi)


def centralized_spd(mdp: TabularMdp, hyper: HyperParams, seed: int,
                    observers: tuple = ()) -> RunResult:
    """Single-controller stochastic primal-dual on the team-average reward.

    Definitionally the decentralized learner with one node and identity
    mixing, so traces coincide bit for bit with that reduction.
    """
    return run_rmapd(aggregate_rewards(mdp), GraphSchedule.complete(1),
                     hyper, seed, observers)


@dataclass
class IaviResult:
    """Independent approximate value iteration output."""

    factors: tuple        # per-agent one-hot tables (S, |A_i|)
    policy: Policy        # product joint policy
    local_gains: tuple    # per-agent gain of its own induced problem


def independent_avi(mdp: TabularMdp, tol: float = 1e-10,
                    max_iter: int = 200_000) -> IaviResult:
    """Each agent optimizes its local reward, modeling the other agents as
    uniform random, and the greedy local policies are combined as a product.

    The induced single-agent model for agent i marginalizes the joint
    transitions and the agent's local reward over uniform actions of the
    others.
    """
    S = mdp.num_states
    sizes = mdp.per_agent_actions
    n = mdp.num_agents
    factors = []
    gains = []
    for i in range(n):
        other_axes = tuple(ax for ax in range(n) if ax != i)
        p_cube = mdp.transitions.reshape(sizes + (S, S))
        p_i = p_cube.mean(axis=other_axes) if other_axes else p_cube
        r_cube = mdp.local_rewards[i].reshape((S,) + sizes)
        reward_axes = tuple(ax + 1 for ax in other_axes)
        r_i = r_cube.mean(axis=reward_axes) if reward_axes else r_cube
        lam_i, _, greedy = relative_value_iteration(p_i, r_i, tol, max_iter)
        one_hot = np.zeros((S, sizes[i]))
        one_hot[np.arange(S), greedy] = 1.0
        factors.append(one_hot)
        gains.append(lam_i)

    joint = factors[0]
    for f in factors[1:]:
        joint = (joint[:, :, None] * f[:, None, :]).reshape(S, -1)
    policy = Policy(joint, factors=tuple(factors))
    return IaviResult(tuple(factors), policy, tuple(gains))
