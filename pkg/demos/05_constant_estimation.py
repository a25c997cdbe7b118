"""Estimate the mixing-time and stationarity constants of an environment.

Both constants are inputs to the learner's step-size formulas.  The
estimator samples random stochastic policies, computes each one's exact
stationary distribution and mixing time, and reports the worst case over
the sample.  On environments with deterministic dynamics the stationarity
constant is unbounded over deterministic policies, so the sampled value
is a lower bound; the CLI's `estimate` subcommand prints the same report.
"""

from marlp import GridWorldSpec, build_grid_world, random_unichain_mdp
from marlp.config import estimate_constants
from marlp.rng import Xoshiro256StarStar

grid = build_grid_world(GridWorldSpec(
    2, 2, (((0, 0), (8.0, 5.0)), ((1, 1), (5.0, 10.0)))))
est = estimate_constants(grid, seed=1)
print("2x2 grid world, 2 agents:")
print("  mixing times over sampled policies:", est["mixing_times"])
print(f"  t_mix estimate (max): {est['t_mix']}")
print(f"  tau estimate: {est['tau']:.2f}  "
      "(lower bound; deterministic policies are non-ergodic here)")

random_mdp = random_unichain_mdp(5, (2, 2), Xoshiro256StarStar(4))
est = estimate_constants(random_mdp, seed=1)
print("\nrandom 5-state MDP (strictly positive transitions):")
print(f"  t_mix estimate: {est['t_mix']}")
print(f"  tau estimate: {est['tau']:.2f}  (honest here: every policy mixes)")
