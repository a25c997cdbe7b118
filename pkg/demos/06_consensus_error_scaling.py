"""Consensus error tracks the step size: halve the steps, halve the error.

Each iteration every agent moves its estimates by an amount proportional
to its step sizes and then averages with its neighbors, so the stacked
deviation from the network mean settles at a level proportional to the
steps.  Here three agents on a ring train on a small random MDP twice,
once with the default dual step and once with half of it (the value step
stays coupled), and the time-averaged consensus errors come out almost
exactly halved.
"""

from marlp import (GraphSchedule, default_hyperparams, random_unichain_mdp,
                   run_rmapd)
from marlp.rng import Xoshiro256StarStar

mdp = random_unichain_mdp(3, (2, 2, 2), Xoshiro256StarStar(23))
schedule = GraphSchedule.ring(3)
horizon = 30_000

results = {}
base_beta = default_hyperparams(3, 8, 2, 4, horizon=horizon).dual_step
for factor in (1.0, 0.5):
    hyper = default_hyperparams(3, 8, 2, 4, horizon=horizon,
                                dual_step=base_beta * factor)
    result = run_rmapd(mdp, schedule, hyper, seed=2)
    results[factor] = result
    print(f"beta = {hyper.dual_step:.3e} (x{factor}):  "
          f"avg |v - v_bar| = {result.avg_consensus_value:.3e}   "
          f"avg |mu - mu_bar| = {result.avg_consensus_occupancy:.3e}")

rv = results[0.5].avg_consensus_value / results[1.0].avg_consensus_value
rm = (results[0.5].avg_consensus_occupancy
      / results[1.0].avg_consensus_occupancy)
print(f"\nhalving beta scaled the errors by {rv:.3f} (value) "
      f"and {rm:.3f} (occupancy) - the O(step) law")
