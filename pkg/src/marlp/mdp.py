"""Tabular multi-agent MDPs and exact policy evaluation.

States and joint actions are flat indices.  A joint action packs the
per-agent actions with agent 0 most significant; the grid-world state
packs the agents' cell indices the same way.  Rewards are stored scaled
into [0, 1]; ``reward_scale`` converts back to the raw magnitudes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, NonUnichainError, ParameterError
from .rng import Xoshiro256StarStar

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10

# grid-world actions, in index order
GRID_ACTIONS = ("up", "right", "down", "left")


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TabularMdp:
    """Finite multi-agent MDP.

    transitions   : (A, S, S) row-stochastic tensor, P[a][s][s'].
    local_rewards : (n, S, A) per-agent rewards in [0, 1].
    per_agent_actions : sizes |A_i|; their product is A.
    reward_scale  : factor mapping stored rewards back to raw units.
    """

    transitions: np.ndarray
    local_rewards: np.ndarray
    per_agent_actions: tuple
    reward_scale: float = 1.0

    def __post_init__(self):
        P = np.ascontiguousarray(np.asarray(self.transitions, dtype=np.float64))
        R = np.ascontiguousarray(np.asarray(self.local_rewards, dtype=np.float64))
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise ConfigError(f"transitions must be (A, S, S), got {P.shape}")
        A, S, _ = P.shape
        if R.ndim != 3 or R.shape[1:] != (S, A):
            raise ConfigError(f"local_rewards must be (n, {S}, {A}), got {R.shape}")
        if math.prod(self.per_agent_actions) != A:
            raise ConfigError("per_agent_actions product does not match joint action count")
        if np.any(P < 0):
            raise ConfigError("transition probabilities must be nonnegative")
        row_err = np.abs(P.sum(axis=2) - 1.0).max()
        if row_err > ROW_SUM_TOL:
            raise ConfigError(f"transition rows must sum to 1 (max error {row_err:.3e})")
        if np.any(R < 0) or np.any(R > 1):
            raise ConfigError("local rewards must lie in [0, 1]")
        object.__setattr__(self, "transitions", _freeze(P))
        object.__setattr__(self, "local_rewards", _freeze(R))
        object.__setattr__(self, "per_agent_actions", tuple(int(k) for k in self.per_agent_actions))
        # derived quantities shared by all evaluators
        object.__setattr__(self, "_global_rewards", _freeze(R.mean(axis=0)))
        object.__setattr__(self, "_cumulative_transitions", _freeze(np.cumsum(P, axis=2)))

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_agents(self) -> int:
        return self.local_rewards.shape[0]

    @property
    def joint_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def global_rewards(self) -> np.ndarray:
        """(S, A) mean of the local rewards."""
        return self._global_rewards

    @property
    def cumulative_transitions(self) -> np.ndarray:
        """(A, S, S) cumulative rows, for inverse-CDF next-state draws."""
        return self._cumulative_transitions


@dataclass(frozen=True)
class GridWorldSpec:
    """Cooperative navigation grid: agents move on an M x M board.

    A reward cell pays its per-agent vector only when every agent stands
    on that cell at once.  Raw reward entries must lie in [0, 10]; they
    are stored divided by ``reward_scale`` (default 10).
    """

    side: int
    num_agents: int
    reward_cells: tuple = ()
    reward_scale: float = 10.0

    def __post_init__(self):
        if self.side < 2:
            raise ConfigError("grid side must be >= 2")
        if self.num_agents < 1:
            raise ConfigError("need at least one agent")
        if self.reward_scale <= 0:
            raise ConfigError("reward_scale must be positive")
        cells = []
        for cell, rewards in self.reward_cells:
            r, c = int(cell[0]), int(cell[1])
            if not (0 <= r < self.side and 0 <= c < self.side):
                raise ConfigError(f"reward cell {cell} outside the {self.side}x{self.side} grid")
            vec = tuple(float(x) for x in rewards)
            if len(vec) != self.num_agents:
                raise ConfigError(f"reward vector {rewards} must have length {self.num_agents}")
            if any(x < 0 or x > 10 for x in vec):
                raise ConfigError("raw reward entries must lie in [0, 10]")
            if any(x > self.reward_scale for x in vec):
                raise ConfigError("raw reward entries exceed reward_scale")
            cells.append(((r, c), vec))
        object.__setattr__(self, "reward_cells", tuple(cells))


@dataclass(frozen=True)
class Policy:
    """Joint policy table (S, A); optional per-agent factors (S, |A_i|)."""

    table: np.ndarray
    factors: Optional[tuple] = None

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.table, dtype=np.float64))
        if t.ndim != 2:
            raise ConfigError("policy table must be 2-D (S, A)")
        if np.any(t < 0):
            raise ConfigError("policy probabilities must be nonnegative")
        err = np.abs(t.sum(axis=1) - 1.0).max()
        if err > ROW_SUM_TOL:
            raise ConfigError(f"policy rows must sum to 1 (max error {err:.3e})")
        object.__setattr__(self, "table", _freeze(t))
        if self.factors is not None:
            facs = tuple(_freeze(np.ascontiguousarray(np.asarray(f, dtype=np.float64)))
                         for f in self.factors)
            product = facs[0]
            for f in facs[1:]:
                product = (product[:, :, None] * f[:, None, :]).reshape(t.shape[0], -1)
            if np.abs(product - t).max() > 1e-9:
                raise ConfigError("policy factors do not multiply to the joint table")
            object.__setattr__(self, "factors", facs)

    @staticmethod
    def uniform(num_states: int, num_actions: int) -> "Policy":
        return Policy(np.full((num_states, num_actions), 1.0 / num_actions))

    @staticmethod
    def deterministic(actions: Sequence[int], num_actions: int) -> "Policy":
        table = np.zeros((len(actions), num_actions))
        table[np.arange(len(actions)), list(actions)] = 1.0
        return Policy(table)


def encode_joint(indices: Sequence[int], sizes: Sequence[int]) -> int:
    """Pack per-agent indices into a flat index, agent 0 most significant."""
    out = 0
    for idx, size in zip(indices, sizes):
        out = out * size + idx
    return out


def decode_joint(flat: int, sizes: Sequence[int]) -> tuple:
    out = []
    for size in reversed(sizes):
        out.append(flat % size)
        flat //= size
    return tuple(reversed(out))


def build_grid_world(spec: GridWorldSpec) -> TabularMdp:
    """Deterministic grid world over joint agent positions.

    The joint state is the tuple of agent cells, |S| = (M^2)^n.  Each agent
    picks one of {up, right, down, left}; moves off the board keep the
    agent in place.
    """
    M, n = spec.side, spec.num_agents
    cells = M * M
    state_sizes = [cells] * n
    action_sizes = [4] * n
    S = cells ** n
    A = 4 ** n

    # per-cell successor for each of the four moves, with boundary clamping
    move = np.empty((cells, 4), dtype=np.int64)
    for cell in range(cells):
        r, c = divmod(cell, M)
        move[cell, 0] = (max(r - 1, 0)) * M + c
        move[cell, 1] = r * M + min(c + 1, M - 1)
        move[cell, 2] = (min(r + 1, M - 1)) * M + c
        move[cell, 3] = r * M + max(c - 1, 0)

    P = np.zeros((A, S, S))
    for s in range(S):
        pos = decode_joint(s, state_sizes)
        for a in range(A):
            acts = decode_joint(a, action_sizes)
            nxt = [move[pos[i], acts[i]] for i in range(n)]
            P[a, s, encode_joint(nxt, state_sizes)] = 1.0

    R = np.zeros((n, S, A))
    for (r, c), vec in spec.reward_cells:
        cell = r * M + c
        s = encode_joint([cell] * n, state_sizes)
        for i in range(n):
            R[i, s, :] = vec[i] / spec.reward_scale

    return TabularMdp(P, R, tuple(action_sizes), reward_scale=spec.reward_scale)


def random_unichain_mdp(num_states: int, per_agent_actions: Sequence[int],
                        rng: Xoshiro256StarStar, floor: float = 1e-3) -> TabularMdp:
    """Random test MDP with Dirichlet(1) rows plus a uniform floor.

    The floor keeps every transition strictly positive, so every policy is
    unichain (in fact irreducible and aperiodic).
    """
    sizes = tuple(int(k) for k in per_agent_actions)
    S, A, n = int(num_states), math.prod(sizes), len(sizes)
    P = np.empty((A, S, S))
    for a in range(A):
        for s in range(S):
            g = -np.log(1.0 - rng.uniforms(S))  # unit exponentials
            row = g / g.sum()
            P[a, s] = (row + floor) / (1.0 + S * floor)
    R = np.empty((n, S, A))
    for i in range(n):
        for s in range(S):
            R[i, s] = rng.uniforms(A)
    return TabularMdp(P, R, sizes)


def aggregate_rewards(mdp: TabularMdp) -> TabularMdp:
    """Single-controller view: one agent holding the team-average reward.

    The joint action space is kept intact; only the reward ownership
    collapses.  Used by the centralized learner.
    """
    return TabularMdp(mdp.transitions, mdp.global_rewards[None, :, :],
                      (mdp.joint_actions,), reward_scale=mdp.reward_scale)


def sample_transition(mdp: TabularMdp, s: int, a: int,
                      rng: Xoshiro256StarStar) -> tuple:
    """Draw s' ~ P[a][s][.] and return (s', per-agent rewards)."""
    if not (0 <= s < mdp.num_states and 0 <= a < mdp.joint_actions):
        raise ParameterError(f"state/action ({s}, {a}) out of range")
    s2 = rng.categorical(mdp.cumulative_transitions[a, s])
    return s2, mdp.local_rewards[:, s, a].copy()


def policy_transition_matrix(mdp: TabularMdp, policy: Policy) -> np.ndarray:
    """Row-stochastic P^pi with P^pi[s][s'] = sum_a pi(a|s) P[a][s][s']."""
    return np.einsum("sa,ast->st", policy.table, mdp.transitions)


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """Solve xi^T P = xi^T with sum(xi) = 1 for a unichain transition matrix."""
    P = np.asarray(transition, dtype=np.float64)
    S = P.shape[0]
    A = P.T - np.eye(S)
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    try:
        xi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NonUnichainError("singular balance equations; chain is not unichain") from exc
    if xi.min() < -1e-8:
        raise NonUnichainError(f"negative stationary mass {xi.min():.3e}; chain is not unichain")
    residual = np.abs(xi @ P - xi).max()
    if residual > STATIONARY_TOL:
        raise NonUnichainError(f"stationary residual {residual:.3e} exceeds tolerance")
    xi = np.clip(xi, 0.0, None)
    return xi / xi.sum()


def average_reward(mdp: TabularMdp, policy: Policy) -> float:
    """Long-run mean scaled reward of ``policy`` (state-independent)."""
    xi = stationary_distribution(policy_transition_matrix(mdp, policy))
    per_state = (policy.table * mdp.global_rewards).sum(axis=1)
    return float(xi @ per_state)


def start_state_gain(mdp: TabularMdp, policy: Policy, start: int = 0) -> float:
    """Long-run mean reward from a given start state.

    Unichain policies reduce to ``average_reward``.  For a deterministic
    chain (deterministic policy on deterministic dynamics, where the gain
    may be start-dependent) the orbit from ``start`` is followed into its
    cycle and the cycle-mean reward returned exactly.
    """
    transition = policy_transition_matrix(mdp, policy)
    try:
        xi = stationary_distribution(transition)
    except NonUnichainError:
        row_max = transition.max(axis=1)
        if row_max.min() < 1.0 - 1e-12:
            raise
        successor = transition.argmax(axis=1)
        per_state = (policy.table * mdp.global_rewards).sum(axis=1)
        first_seen: dict = {}
        s = start
        path = []
        while s not in first_seen:
            first_seen[s] = len(path)
            path.append(s)
            s = int(successor[s])
        cycle = path[first_seen[s]:]
        return float(np.mean([per_state[c] for c in cycle]))
    per_state = (policy.table * mdp.global_rewards).sum(axis=1)
    return float(xi @ per_state)


def mixing_time(mdp: TabularMdp, policy: Policy, max_t: int = 10_000) -> Optional[int]:
    """Smallest t with max_s TV(P^t(s,.), xi) <= 1/4, or None past ``max_t``.

    Computed by repeated dense powering; adequate for desk-scale state
    spaces.
    """
    P = policy_transition_matrix(mdp, policy)
    xi = stationary_distribution(P)
    Q = P.copy()
    for t in range(1, max_t + 1):
        tv = 0.5 * np.abs(Q - xi).sum(axis=1).max()
        if tv <= 0.25:
            return t
        Q = Q @ P
    return None


def tau_bound(mdp: TabularMdp, policies: Sequence[Policy]) -> Optional[float]:
    """Tight uniform-stationarity constant over the sampled policies.

    Returns the smallest tau >= 1 with
    1/(sqrt(tau)|S|) <= xi^pi <= sqrt(tau)/|S| for every sampled policy,
    or None if some state has zero stationary mass.
    """
    S = mdp.num_states
    tau = 1.0
    for policy in policies:
        xi = stationary_distribution(policy_transition_matrix(mdp, policy))
        if xi.min() <= 0.0:
            return None
        ratios = S * xi
        tau = max(tau, float((ratios ** 2).max()), float((ratios ** -2).max()))
    return tau


def simulate_average_reward(mdp: TabularMdp, policy: Policy, steps: int,
                            rng: Xoshiro256StarStar, start_state: int = 0) -> float:
    """Empirical mean scaled reward along one trajectory under ``policy``."""
    if steps < 1:
        raise ParameterError("need at least one step")
    cum_pi = np.cumsum(policy.table, axis=1)
    cum_P = mdp.cumulative_transitions
    rewards = mdp.global_rewards
    s = start_state
    total = 0.0
    for _ in range(steps):
        a = rng.categorical(cum_pi[s])
        total += rewards[s, a]
        s = rng.categorical(cum_P[a, s])
    return total / steps


def enumerate_deterministic_policies(num_states: int, num_actions: int):
    """Yield all deterministic policies as action tuples, lexicographically."""
    yield from itertools.product(range(num_actions), repeat=num_states)
