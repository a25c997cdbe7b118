"""Time-varying communication graphs and doubly stochastic mixing.

Mixing matrices come from the Metropolis rule, which is symmetric and
doubly stochastic with a strictly positive diagonal for any undirected
edge set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ParameterError
from .rng import Stream, Xoshiro256StarStar, derive_seed

WEIGHT_TOL = 1e-12


def _normalize_edges(edges: Iterable[Tuple[int, int]], n: int) -> frozenset:
    out = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ConfigError(f"self-loop ({i},{j}) not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"edge ({i},{j}) out of range for {n} nodes")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


def metropolis_weights(edges: Iterable[Tuple[int, int]], n: int) -> np.ndarray:
    """Symmetric doubly stochastic weights w_ij = 1/(1 + max(d_i, d_j))."""
    edge_set = _normalize_edges(edges, n)
    deg = np.zeros(n, dtype=np.int64)
    for i, j in edge_set:
        deg[i] += 1
        deg[j] += 1
    W = np.zeros((n, n))
    for i, j in edge_set:
        w = 1.0 / (1.0 + max(deg[i], deg[j]))
        W[i, j] = W[j, i] = w
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    return W


def check_weight_matrix(W: np.ndarray) -> float:
    """Validate symmetry/double stochasticity; return the min positive entry."""
    if np.abs(W - W.T).max() > WEIGHT_TOL:
        raise ConfigError("weight matrix is not symmetric")
    if np.abs(W.sum(axis=1) - 1.0).max() > WEIGHT_TOL:
        raise ConfigError("weight matrix rows do not sum to 1")
    if np.abs(W.sum(axis=0) - 1.0).max() > WEIGHT_TOL:
        raise ConfigError("weight matrix columns do not sum to 1")
    if W.min() < -WEIGHT_TOL:
        raise ConfigError("weight matrix has negative entries")
    positive = W[W > 0.0]
    return float(positive.min()) if positive.size else 0.0


def ring_edges(n: int) -> List[Tuple[int, int]]:
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    return [(i, (i + 1) % n) for i in range(n)]


def complete_edges(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class GraphSchedule:
    """Edge sets over time plus their Metropolis mixing matrices.

    model: "complete" | "ring" | "periodic" | "erdos_renyi".
    For the periodic model the given edge sets repeat with period B; their
    union over one period should be connected.  Erdos-Renyi graphs redraw
    every edge i.i.d. with probability ``p`` each step, from a stream
    derived as derive_seed(seed, Stream.GRAPH, t).
    """

    model: str
    num_nodes: int
    edge_sets: tuple = ()
    p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        n = self.num_nodes
        if n < 1:
            raise ConfigError("need at least one node")
        if self.model in ("complete", "ring"):
            base = complete_edges(n) if self.model == "complete" else ring_edges(n)
            object.__setattr__(self, "edge_sets", (_normalize_edges(base, n),))
        elif self.model == "periodic":
            if not self.edge_sets:
                raise ConfigError("periodic schedule needs at least one edge set")
            object.__setattr__(
                self, "edge_sets",
                tuple(_normalize_edges(e, n) for e in self.edge_sets))
        elif self.model == "erdos_renyi":
            if not (0.0 <= self.p <= 1.0):
                raise ConfigError("edge probability must lie in [0, 1]")
        else:
            raise ConfigError(f"unknown graph model {self.model!r}")
        if self.model != "erdos_renyi":
            object.__setattr__(
                self, "_weights_cache",
                tuple(metropolis_weights(e, n) for e in self.edge_sets))

    @staticmethod
    def complete(n: int) -> "GraphSchedule":
        return GraphSchedule("complete", n)

    @staticmethod
    def ring(n: int) -> "GraphSchedule":
        return GraphSchedule("ring", n)

    @staticmethod
    def periodic(edge_sets: Sequence[Iterable[Tuple[int, int]]], n: int) -> "GraphSchedule":
        return GraphSchedule("periodic", n, edge_sets=tuple(tuple(e) for e in edge_sets))

    @staticmethod
    def erdos_renyi(n: int, p: float, seed: int) -> "GraphSchedule":
        return GraphSchedule("erdos_renyi", n, p=float(p), seed=int(seed))

    @property
    def is_static(self) -> bool:
        return self.model in ("complete", "ring") or (
            self.model == "periodic" and len(self.edge_sets) == 1)

    def edges_at(self, t: int) -> frozenset:
        if self.model == "erdos_renyi":
            rng = Xoshiro256StarStar(derive_seed(self.seed, Stream.GRAPH, t))
            edges = [(i, j)
                     for i in range(self.num_nodes)
                     for j in range(i + 1, self.num_nodes)
                     if rng.uniform() < self.p]
            return frozenset(edges)
        return self.edge_sets[t % len(self.edge_sets)]

    def weights_at(self, t: int) -> np.ndarray:
        if self.model == "erdos_renyi":
            return metropolis_weights(self.edges_at(t), self.num_nodes)
        return self._weights_cache[t % len(self.edge_sets)]


def _connected(edges: frozenset, n: int) -> bool:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    root = find(0)
    return all(find(v) == root for v in range(n))


def check_window_connectivity(schedule: GraphSchedule, B: int, horizon: int) -> bool:
    """True iff every length-B window of the schedule has a connected union."""
    if B < 1:
        raise ParameterError("window length B must be >= 1")
    if horizon < B:
        raise ParameterError("horizon must be at least B")
    if schedule.num_nodes == 1:
        return True
    if schedule.is_static:
        return _connected(schedule.edges_at(0), schedule.num_nodes)
    for t in range(horizon - B + 1):
        union = set()
        for l in range(B):
            union.update(schedule.edges_at(t + l))
        if not _connected(frozenset(union), schedule.num_nodes):
            return False
    return True


def perron_product_gap(weights: Sequence[np.ndarray]) -> np.ndarray:
    """Uniformity gap of the backward products W^t ... W^0.

    Entry t is max_ij |[W^t ... W^0]_ij - 1/n|; it measures how far the
    accumulated mixing is from exact averaging.
    """
    if not len(weights):
        return np.zeros(0)
    n = weights[0].shape[0]
    gaps = np.empty(len(weights))
    product = np.eye(n)
    for t, W in enumerate(weights):
        product = W @ product
        gaps[t] = np.abs(product - 1.0 / n).max()
    return gaps


def proposition1_bound(eta: float, n: int, B: int) -> tuple:
    """Geometric envelope (Gamma, rho) for the product-uniformity gap.

    Gamma = (1 - eta/(4 n^2))^-2 and rho = (1 - eta/(4 n^2))^(1/B), where
    eta lower-bounds the positive mixing weights and B is the window over
    which the union graph is connected.
    """
    if not (0.0 < eta < 1.0):
        raise ParameterError("eta must lie in (0, 1)")
    if n < 1 or B < 1:
        raise ParameterError("n and B must be positive")
    base = 1.0 - eta / (4.0 * n * n)
    return base ** -2, base ** (1.0 / B)
