"""Gossip mixing on time-varying graphs and its geometric envelope.

Metropolis weights make any undirected graph's mixing matrix symmetric
and doubly stochastic.  Products of such matrices converge to the uniform
averaging matrix; the gap decays geometrically with the envelope
Gamma * rho^t predicted from the minimum weight eta, the node count, and
the connectivity window B.
"""

import numpy as np

from marlp import (GraphSchedule, check_weight_matrix,
                   check_window_connectivity, metropolis_weights,
                   perron_product_gap, proposition1_bound)
from marlp.network import ring_edges

n = 5
W = metropolis_weights(ring_edges(n), n)
eta = check_weight_matrix(W)
print(f"5-ring Metropolis weights: min positive entry eta = {eta:.4f}")

gamma, rho = proposition1_bound(eta, n, B=1)
gaps = perron_product_gap([W] * 60)
print(f"envelope Gamma = {gamma:.4f}, rho = {rho:.6f}")
for t in (0, 9, 29, 59):
    print(f"  t = {t + 1:3d}: gap = {gaps[t]:.3e}  <=  envelope "
          f"{gamma * rho ** (t + 1):.3e}")

# a periodic schedule that is only connected across a window of length 2
sched = GraphSchedule.periodic([[(0, 1)], [(1, 2)]], 3)
print("alternating {0-1}, {1-2} schedule:",
      "connected at B=2" if check_window_connectivity(sched, 2, 20) else "?",
      "/ not at B=1" if not check_window_connectivity(sched, 1, 20) else "?")

# random graphs redraw every step but stay reproducible under the seed
er = GraphSchedule.erdos_renyi(4, p=0.5, seed=7)
print("Erdos-Renyi p=0.5 edge counts over 8 steps:",
      [len(er.edges_at(t)) for t in range(8)])
