"""Build the cooperative grid world and solve it three independent ways.

Two agents walk a 3x3 board; the top-left cell pays them (8, 5) and the
bottom-right cell (5, 10), but only when both stand on it together.  The
best stationary behavior is therefore to meet at the bottom-right cell,
worth (5+10)/2 = 7.5 per step.  We confirm this with the occupancy-measure
linear program, relative value iteration, and (on a smaller board) brute
force over deterministic policies.
"""

import numpy as np

from marlp import (GridWorldSpec, brute_force_optimal, build_grid_world,
                   solve_bellman, solve_lp_exact)

spec = GridWorldSpec(3, 2, (((0, 0), (8.0, 5.0)), ((2, 2), (5.0, 10.0))))
mdp = build_grid_world(spec)
print(f"grid 3x3, 2 agents: |S| = {mdp.num_states}, |A| = {mdp.joint_actions}")

lp = solve_lp_exact(mdp)
print(f"LP:      lambda* = {lp.lambda_star:.6f} scaled "
      f"({lp.lambda_star * mdp.reward_scale:.3f} raw), status = {lp.status}")

lam_b, v_b = solve_bellman(mdp)
print(f"Bellman: lambda* = {lam_b:.6f}, value span = "
      f"{v_b.max() - v_b.min():.3f}")

print("optimal occupancy concentrates on state", int(lp.mu.sum(1).argmax()),
      "= both agents on the bottom-right cell")

# brute force enumerates deterministic policies, so it needs a chain that
# stays unichain under all of them: a random MDP with strictly positive
# transitions (the deterministic grid has absorbing deterministic policies)
from marlp import random_unichain_mdp
from marlp.rng import Xoshiro256StarStar

small = random_unichain_mdp(4, (3,), Xoshiro256StarStar(0))
lam_bf, policy = brute_force_optimal(small)
lp_small = solve_lp_exact(small)
print(f"random 4-state MDP: brute force {lam_bf:.6f} vs LP "
      f"{lp_small.lambda_star:.6f} (agree to "
      f"{abs(lam_bf - lp_small.lambda_star):.2e})")
