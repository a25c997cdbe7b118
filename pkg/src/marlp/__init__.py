"""Average-reward tabular multi-agent RL via randomized linear programming.

A numpy library with three layers: exact machinery (tabular MDPs,
occupancy-measure LP, relative value iteration, brute force), the
decentralized stochastic primal-dual learner with gossip consensus, and
diagnostics measuring its convergence quantities.  The ``marlp`` CLI
wraps everything behind YAML configs.
"""

from .baselines import (IaviResult, LpSolution, brute_force_optimal,
                        centralized_spd, independent_avi, solve_bellman,
                        solve_lp_exact)
from .diagnostics import (CSV_COLUMNS, DiagRow, FeasibilityChecker, RunTrace,
                          TraceRecorder, consensus_errors, duality_gaps,
                          gap_matrices, lyapunov, network_averages)
from .errors import (ConfigError, DegenerateStateError, NonUnichainError,
                     NumericalError, ParameterError, SolverError)
from .geometry import (OccupancyMeasure, entropic_step, kl_divergence,
                       kl_project_to_restricted, marginal_local_policy,
                       occupancy_from_policy, policy_from_occupancy,
                       product_policy, project_value, restricted_lower_bound)
from .mdp import (GridWorldSpec, Policy, TabularMdp, aggregate_rewards,
                  average_reward, build_grid_world, mixing_time,
                  policy_transition_matrix, random_unichain_mdp,
                  sample_transition, simulate_average_reward, start_state_gain,
                  stationary_distribution, tau_bound)
from .meta import (MetaConfig, MetaResult, approximate_value_evaluation,
                   default_k, default_l, run_meta)
from .network import (GraphSchedule, check_weight_matrix,
                      check_window_connectivity, metropolis_weights,
                      perron_product_gap, proposition1_bound)
from .rmapd import (HyperParams, RunResult, Sample, TeamState, consensus_round,
                    default_hyperparams, draw_sample, dual_gradient, init_team,
                    on_policy_iteration, primal_gradient, rmapd_iteration,
                    run_rmapd)
from .rng import Stream, Xoshiro256StarStar, derive_seed, mix64

__version__ = "0.1.0"
