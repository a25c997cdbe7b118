"""Per-iteration measurements: gain of the averaged policy, duality gaps,
Lyapunov potential, and consensus errors.

Quantities needing the exact LP solution are recorded only when one is
supplied; otherwise their columns stay empty.  The duality gap is logged
under both published sign conventions for the reward term: the "printed"
variant lambda* + sum_a mu(a)^T [(I - P_a) v* + r_a] (equal to 2 lambda*
at the optimum) and the "proofside" variant with -r_a (zero at the
optimum and nonnegative on the simplex).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import NonUnichainError
from .geometry import POSITIVITY_FLOOR
from .mdp import TabularMdp, stationary_distribution

CSV_COLUMNS = ("iter", "avg_reward_scaled", "avg_reward_raw",
               "duality_gap_printed", "duality_gap_proofside",
               "lyapunov", "consensus_v", "consensus_mu")


@dataclass
class DiagRow:
    iteration: int
    avg_reward_scaled: Optional[float] = None
    avg_reward_raw: Optional[float] = None
    duality_gap_printed: Optional[float] = None
    duality_gap_proofside: Optional[float] = None
    lyapunov: Optional[float] = None
    consensus_v: Optional[float] = None
    consensus_mu: Optional[float] = None

    def as_csv(self) -> list:
        vals = (self.avg_reward_scaled, self.avg_reward_raw,
                self.duality_gap_printed, self.duality_gap_proofside,
                self.lyapunov, self.consensus_v, self.consensus_mu)
        return [str(self.iteration)] + [
            "" if v is None or not np.isfinite(v) else format(v, ".12g")
            for v in vals]


@dataclass
class RunTrace:
    """Config echo plus the recorded diagnostic rows of one run."""

    header: dict = field(default_factory=dict)
    rows: List[DiagRow] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.as_csv())


def network_averages(mu_stack: np.ndarray, v_stack: np.ndarray) -> tuple:
    """Arithmetic means of the per-agent estimates."""
    return mu_stack.mean(axis=0), v_stack.mean(axis=0)


def consensus_errors(mu_stack: np.ndarray, v_stack: np.ndarray) -> tuple:
    """(l2 deviation of the stacked values, mean l1 deviation of occupancies)."""
    mu_bar, v_bar = network_averages(mu_stack, v_stack)
    cv = float(np.linalg.norm(v_stack - v_bar))
    cmu = float(np.abs(mu_stack - mu_bar).sum() / mu_stack.shape[0])
    return cv, cmu


def lyapunov(mu_stack: np.ndarray, v_bar: np.ndarray, mu_star: np.ndarray,
             v_star: np.ndarray, t_mix: float) -> float:
    """Mean KL(mu* || mu_i) plus |v_bar - v*|^2 / (2 |S| t_mix^2)."""
    flat_star = np.asarray(mu_star).reshape(-1)
    mask = flat_star > POSITIVITY_FLOOR
    ms = flat_star[mask]
    rows = np.asarray(mu_stack).reshape(mu_stack.shape[0], -1)[:, mask]
    if rows.min() <= POSITIVITY_FLOOR:
        return float("inf")
    kl = float((ms * (np.log(ms) - np.log(rows))).sum(axis=1).mean())
    S = v_star.shape[0]
    return kl + float(np.sum((v_bar - v_star) ** 2)) / (2.0 * S * t_mix ** 2)


def gap_matrices(mdp: TabularMdp, v_star: np.ndarray) -> tuple:
    """Cell coefficients of the two duality-gap variants.

    printed(s,a)  = v*(s) - (P_a v*)(s) + r(s,a)
    proofside(s,a)= v*(s) - (P_a v*)(s) - r(s,a)
    """
    pv = np.einsum("ast,t->sa", mdp.transitions, v_star)
    base = v_star[:, None] - pv
    return base + mdp.global_rewards, base - mdp.global_rewards


def duality_gaps(mu_bar_table: np.ndarray, lambda_star: float,
                 printed_coeff: np.ndarray, proofside_coeff: np.ndarray) -> tuple:
    d_printed = lambda_star + float((mu_bar_table * printed_coeff).sum())
    d_proof = lambda_star + float((mu_bar_table * proofside_coeff).sum())
    return d_printed, d_proof


class TraceRecorder:
    """Observer collecting a DiagRow every ``stride`` iterations.

    The gain column evaluates the policy extracted from the running
    time-averaged occupancy by exact stationary-distribution evaluation.
    LP-dependent columns need ``lp`` (an LpSolution); without it they are
    left empty rather than approximated.
    """

    def __init__(self, mdp: TabularMdp, stride: int, horizon: int,
                 lp=None, t_mix: float = 1.0, evaluate_reward: bool = True):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.mdp = mdp
        self.stride = stride
        self.horizon = horizon
        self.lp = lp
        self.t_mix = t_mix
        self.evaluate_reward = evaluate_reward
        self.trace = RunTrace()
        if lp is not None:
            self._printed, self._proofside = gap_matrices(mdp, lp.v)
            self._mu_star_flat = lp.mu.reshape(-1)

    def __call__(self, view) -> None:
        t = view.iteration
        if t % self.stride and t != self.horizon:
            return
        row = DiagRow(iteration=t)
        row.consensus_v, row.consensus_mu = view.consensus_errors()
        if self.evaluate_reward:
            lam = self._policy_gain(view.occupancy_avg)
            if lam is not None:
                row.avg_reward_scaled = lam
                row.avg_reward_raw = lam * self.mdp.reward_scale
        if self.lp is not None:
            mu_bar = view.mu_bar.reshape(view.team.num_states, view.team.num_actions)
            row.duality_gap_printed, row.duality_gap_proofside = duality_gaps(
                mu_bar, self.lp.lambda_star, self._printed, self._proofside)
            row.lyapunov = lyapunov(view.team.mu, view.v_bar,
                                    self._mu_star_flat, self.lp.v, self.t_mix)
        self.trace.rows.append(row)

    def _policy_gain(self, occupancy: np.ndarray) -> Optional[float]:
        policy = occupancy / occupancy.sum(axis=1, keepdims=True)
        transition = np.einsum("sa,ast->st", policy, self.mdp.transitions)
        try:
            xi = stationary_distribution(transition)
        except NonUnichainError:
            return None
        return float(xi @ (policy * self.mdp.global_rewards).sum(axis=1))


class FeasibilityChecker:
    """Observer asserting the restricted-set and value-box invariants.

    Counts violations beyond the stated tolerances at every iteration;
    inspect ``violations`` after the run.
    """

    def __init__(self, tau: float, t_mix: float,
                 sum_tol: float = 1e-9, marginal_tol: float = 1e-9,
                 value_tol: float = 1e-12):
        self.tau = tau
        self.t_mix = t_mix
        self.sum_tol = sum_tol
        self.marginal_tol = marginal_tol
        self.value_tol = value_tol
        self.violations = 0
        self.checked = 0

    def __call__(self, view) -> None:
        from .geometry import restricted_lower_bound
        team = view.team
        S, A = team.num_states, team.num_actions
        c = restricted_lower_bound(self.tau, S)
        sums = team.mu.sum(axis=1)
        marginals = team.mu.reshape(-1, S, A).sum(axis=2)
        ok = (np.abs(sums - 1.0).max() <= self.sum_tol
              and marginals.min() >= c - self.marginal_tol
              and np.abs(team.v).max() <= 2.0 * self.t_mix + self.value_tol)
        self.checked += 1
        if not ok:
            self.violations += 1
