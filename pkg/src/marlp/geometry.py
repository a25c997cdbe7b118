"""Feasible sets, KL machinery, and occupancy/policy conversions.

Occupancy tables are (S, A) arrays.  The restricted set keeps the table
on the simplex while forcing every state marginal to stay at or above
c = 1/(sqrt(tau) |S|); value vectors live in the box |v|_inf <= 2 t_mix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStateError, NumericalError, ParameterError

# entries below this are treated as zero mass in logs and ratios
POSITIVITY_FLOOR = 1e-300

PROJECTION_TOL = 1e-12
MAX_PROJECTION_SWEEPS = 100


def restricted_lower_bound(tau: float, num_states: int) -> float:
    """Per-state marginal floor c = 1/(sqrt(tau) |S|)."""
    if tau < 1.0:
        raise ParameterError("tau must be >= 1 for the restricted set to be nonempty")
    return 1.0 / (np.sqrt(tau) * num_states)


@dataclass(frozen=True)
class OccupancyMeasure:
    """Nonnegative (S, A) table, convertible to a policy via row normalization."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != 2:
            raise ParameterError("occupancy table must be 2-D (S, A)")
        if t.min() < 0:
            raise ParameterError("occupancy entries must be nonnegative")
        object.__setattr__(self, "table", t)

    def marginals(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def in_simplex(self, tol: float = 1e-9) -> bool:
        return abs(float(self.table.sum()) - 1.0) <= tol

    def in_restricted(self, tau: float, tol: float = 1e-9) -> bool:
        c = restricted_lower_bound(tau, self.table.shape[0])
        return self.in_simplex(tol) and bool(self.marginals().min() >= c - tol)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p/q) with 0 log 0 = 0; +inf when p charges a null set of q."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    mask = p > POSITIVITY_FLOOR
    if np.any(q[mask] <= POSITIVITY_FLOOR):
        return float("inf")
    pm = p[mask]
    return float(np.sum(pm * np.log(pm / q[mask])))


def project_value(v: np.ndarray, t_mix: float) -> np.ndarray:
    """Euclidean projection onto the box |v|_inf <= 2 t_mix (coordinatewise clip)."""
    radius = 2.0 * t_mix
    return np.clip(np.asarray(v, dtype=np.float64), -radius, radius)


def entropic_step(mu: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Multiplicative-weights step mu * exp(delta), renormalized to the simplex.

    The largest delta is subtracted before exponentiation; the output is
    invariant to that shift, so this only guards against overflow.
    """
    mu = np.asarray(mu, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    w = mu * np.exp(delta - delta.max())
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise NumericalError("multiplicative-weights step lost all mass")
    return w / total


def _marginal_scale_factors(marginals: np.ndarray, c: float) -> np.ndarray:
    """Per-state factors that pin low marginals to c and rescale the rest.

    Batched water-filling over the leading axes of ``marginals``
    (shape (..., S)).  Pinned states get factor c/marginal; the others
    share the leftover mass proportionally.  The pinned set only grows,
    so at most S sweeps are needed; the cap guards degenerate inputs.
    """
    m = np.asarray(marginals, dtype=np.float64)
    S = m.shape[-1]
    pinned = np.zeros(m.shape, dtype=bool)
    gamma = np.ones(m.shape[:-1])
    for _ in range(min(S + 1, MAX_PROJECTION_SWEEPS)):
        free_mass = np.where(pinned, 0.0, m).sum(axis=-1)
        pinned_count = pinned.sum(axis=-1)
        gamma = (1.0 - pinned_count * c) / np.maximum(free_mass, POSITIVITY_FLOOR)
        newly = (~pinned) & (gamma[..., None] * m < c - PROJECTION_TOL)
        if not newly.any():
            break
        pinned |= newly
    factors = np.where(pinned, c / np.maximum(m, POSITIVITY_FLOOR), gamma[..., None])
    violation = np.maximum(c - factors * m, 0.0).max()
    if violation > 1e-12:
        raise NumericalError(f"marginal projection left violation {violation:.3e}")
    return factors


def kl_project_to_restricted(mu: np.ndarray, tau: float) -> np.ndarray:
    """KL projection of a strictly positive simplex table onto the restricted set.

    argmin_{m} KL(m || mu) subject to sum(m) = 1 and every state marginal
    >= c = 1/(sqrt(tau) |S|).  The optimality conditions force the
    projection to keep each state's conditional distribution over actions,
    so only per-state scale factors are solved for.
    """
    mu = np.asarray(mu, dtype=np.float64)
    c = restricted_lower_bound(tau, mu.shape[0])
    factors = _marginal_scale_factors(mu.sum(axis=1), c)
    return mu * factors[:, None]


def policy_from_occupancy(mu: np.ndarray) -> np.ndarray:
    """Row-normalize an occupancy table into a policy: pi(a|s) = mu(s,a)/mu(s,.)."""
    mu = np.asarray(mu, dtype=np.float64)
    marg = mu.sum(axis=1)
    if marg.min() <= POSITIVITY_FLOOR:
        raise DegenerateStateError(
            f"state {int(marg.argmin())} has zero occupancy mass; policy undefined")
    return mu / marg[:, None]


def occupancy_from_policy(xi: np.ndarray, policy_table: np.ndarray) -> np.ndarray:
    """Occupancy induced by a stationary distribution and a policy: xi(s) pi(a|s)."""
    return np.asarray(xi)[:, None] * np.asarray(policy_table)


def marginal_local_policy(policy_table: np.ndarray, per_agent_actions: tuple,
                          agent: int) -> np.ndarray:
    """Agent's marginal policy pi_i(a_i|s) = sum over the other agents' actions."""
    S = policy_table.shape[0]
    cube = np.asarray(policy_table).reshape((S,) + tuple(per_agent_actions))
    axes = tuple(ax for ax in range(1, len(per_agent_actions) + 1) if ax != agent + 1)
    return cube.sum(axis=axes)


def product_policy(factors: list) -> np.ndarray:
    """Joint table of independent per-agent policies (S, prod |A_i|)."""
    joint = np.asarray(factors[0], dtype=np.float64)
    for f in factors[1:]:
        f = np.asarray(f, dtype=np.float64)
        joint = (joint[:, :, None] * f[:, None, :]).reshape(joint.shape[0], -1)
    return joint
