import numpy as np
import pytest

from marlp.errors import ParameterError
from marlp.geometry import restricted_lower_bound
from marlp.mdp import TabularMdp, aggregate_rewards, random_unichain_mdp
from marlp.network import GraphSchedule
from marlp.rmapd import (HyperParams, Sample, consensus_round,
                         default_hyperparams, draw_sample, dual_gradient,
                         init_team, primal_gradient, rmapd_iteration,
                         run_rmapd)
from marlp.rng import Xoshiro256StarStar


def single_state_mdp(rewards=(0.2, 0.9)):
    A = len(rewards)
    P = np.ones((A, 1, 1))
    R = np.asarray(rewards, dtype=float)[None, None, :]
    return TabularMdp(P, R, (A,))


def small_random_mdp(seed=0, states=4, actions=(2,)):
    return random_unichain_mdp(states, actions, Xoshiro256StarStar(seed))


class TestDefaults:
    def test_shift_formula(self):
        hyper = default_hyperparams(4, 2, t_mix=3, tau=2)
        assert hyper.shift == 13.0

    def test_horizon_formula(self):
        hyper = default_hyperparams(81, 16, t_mix=3, tau=2)
        assert hyper.horizon == 36 * 1296

    def test_beta_formula(self):
        hyper = default_hyperparams(4, 2, t_mix=2, tau=1)
        sa, T = 8, (1 * 2) ** 2 * 8
        assert hyper.dual_step == pytest.approx(
            0.5 * np.sqrt(np.log(sa) / (2 * sa * T)))

    def test_alpha_rules_differ(self):
        analysis = default_hyperparams(4, 2, 2, 1, alpha_rule="analysis")
        algo1 = default_hyperparams(4, 2, 2, 1, alpha_rule="algorithm1")
        assert analysis.primal_step == pytest.approx(
            4 * 4 * analysis.dual_step)
        sa, T = 8, 32
        assert algo1.primal_step == pytest.approx(
            4 * 2 * np.sqrt(np.log(sa) / (2 * 2 * T)))

    def test_overrides_pass_through_verbatim(self):
        hyper = default_hyperparams(4, 2, 2, 1, horizon=123, shift=7.5,
                                    dual_step=0.25, primal_step=0.125)
        assert (hyper.horizon, hyper.shift, hyper.dual_step,
                hyper.primal_step) == (123, 7.5, 0.25, 0.125)

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            default_hyperparams(0, 2, 2, 1)
        with pytest.raises(ParameterError):
            default_hyperparams(4, 2, 0.5, 1)
        with pytest.raises(ParameterError):
            HyperParams(0, 5.0, 0.1, 0.1, 1.0, 1.0)


class TestConsensusRound:
    def test_identity_no_communication(self):
        mu = np.random.default_rng(0).random((3, 8))
        v = np.random.default_rng(1).random((3, 4))
        mt, vt = consensus_round(mu, v, np.eye(3))
        assert np.array_equal(mt, mu) and np.array_equal(vt, v)

    def test_pair_average(self):
        mu = np.array([[1.0, 0.0], [0.0, 1.0]])
        v = np.array([[2.0], [0.0]])
        W = np.full((2, 2), 0.5)
        mt, vt = consensus_round(mu, v, W)
        assert np.allclose(mt, 0.5) and np.allclose(vt, 1.0)

    def test_consensus_fixed_point(self):
        mu = np.tile(np.linspace(0.1, 0.4, 4), (3, 1))
        v = np.tile(np.array([1.0, -1.0]), (3, 1))
        W = np.full((3, 3), 1 / 3)
        mt, vt = consensus_round(mu, v, W)
        assert np.allclose(mt, mu, atol=1e-15) and np.allclose(vt, v, atol=1e-15)

    def test_locality_zero_weights_ignored(self):
        # agent 0 only hears agent 1; corrupting agent 2 changes nothing
        W = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        mu = np.ones((3, 4)) / 4
        v = np.zeros((3, 2))
        base_mt, base_vt = consensus_round(mu, v, W)
        mu2, v2 = mu.copy(), v.copy()
        mu2[2] = [0.7, 0.1, 0.1, 0.1]
        v2[2] = [5.0, -5.0]
        mt, vt = consensus_round(mu2, v2, W)
        assert np.array_equal(mt[:2], base_mt[:2])
        assert np.array_equal(vt[:2], base_vt[:2])

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterError):
            consensus_round(np.ones((2, 4)), np.ones((2, 2)), np.eye(3))


class TestDrawSample:
    def test_point_mass(self):
        mdp = single_state_mdp()
        mu = np.array([0.0, 1.0])
        rng = Xoshiro256StarStar(0)
        for _ in range(10):
            s = draw_sample(mu, mdp, 0, rng)
            assert (s.state, s.action) == (0, 1)

    def test_multinomial_concentration(self):
        mdp = small_random_mdp(1, states=2, actions=(2,))
        mu = np.full(4, 0.25)
        rng = Xoshiro256StarStar(7)
        counts = np.zeros(4)
        for _ in range(100_000):
            s = draw_sample(mu, mdp, 0, rng)
            counts[s.index] += 1
        assert np.abs(counts / 100_000 - 0.25).max() < 0.01

    def test_fixed_seed_identical_stream(self):
        mdp = small_random_mdp(2)
        mu = np.full(8, 1 / 8)
        streams = []
        for _ in range(2):
            rng = Xoshiro256StarStar(3)
            streams.append([draw_sample(mu, mdp, 0, rng).index
                            for _ in range(50)])
        assert streams[0] == streams[1]


class TestGradients:
    def test_dual_formula_evaluation(self):
        hyper = HyperParams(10, 5.0, 0.1, 0.1, 1.0, 1.0)
        sample = Sample(0, 0, 0, 0.0, 0.5, 0)
        delta = dual_gradient(np.array([0.5, 0.5]), np.zeros(1), sample, hyper)
        assert delta == pytest.approx(0.1 * (-5.0) / 0.5)  # = -1

    def test_dual_nonpositive_under_default_shift(self):
        mdp = small_random_mdp(4)
        hyper = default_hyperparams(4, 2, t_mix=2, tau=2, horizon=100)
        rng = Xoshiro256StarStar(5)
        v = (rng.uniforms(4) - 0.5) * 4 * hyper.t_mix  # anywhere in the box
        mu = np.full(8, 1 / 8)
        for _ in range(500):
            s = draw_sample(mu, mdp, 0, rng)
            assert dual_gradient(mu, v, s, hyper) <= 0.0

    def test_primal_self_loop_zero(self):
        hyper = HyperParams(10, 5.0, 0.1, 0.2, 1.0, 1.0)
        sample = Sample(1, 0, 1, 0.0, 0.25, 2)
        _, _, mag = primal_gradient(np.full(4, 0.25), np.full(4, 0.25),
                                    sample, hyper)
        assert mag == 0.0

    def test_primal_unit_ratio(self):
        hyper = HyperParams(10, 5.0, 0.1, 0.2, 1.0, 1.0)
        mu = np.full(4, 0.25)
        sample = Sample(0, 1, 1, 0.0, 0.25, 1)
        s, s2, mag = primal_gradient(mu, mu, sample, hyper)
        assert (s, s2) == (0, 1)
        assert mag == pytest.approx(0.2)

    def test_zero_probability_rejected(self):
        hyper = HyperParams(10, 5.0, 0.1, 0.2, 1.0, 1.0)
        sample = Sample(0, 0, 0, 0.0, 0.0, 0)
        with pytest.raises(ParameterError):
            dual_gradient(np.zeros(2), np.zeros(1), sample, hyper)
        with pytest.raises(ParameterError):
            primal_gradient(np.zeros(2), np.zeros(2), sample, hyper)


class TestUnbiasedness:
    """Monte-Carlo means against the closed-form conditional expectations,
    on a frozen 4-state 2-action instance."""

    N = 100_000

    def _frozen_setup(self):
        mdp = small_random_mdp(11, states=4, actions=(2,))
        rng = Xoshiro256StarStar(13)
        g = -np.log(1.0 - rng.uniforms(8))
        mu_tilde = g / g.sum()
        g2 = -np.log(1.0 - rng.uniforms(8))
        mu_own = g2 / g2.sum()
        v = (rng.uniforms(4) - 0.5) * 2.0
        hyper = HyperParams(10, 5.0, 0.05, 0.04, 1.0, 1.0)
        return mdp, mu_tilde, mu_own, v, hyper

    def test_dual_gradient_mean_matches_closed_form(self):
        mdp, mu_tilde, _, v, hyper = self._frozen_setup()
        # closed form: E[Delta(s,a)] = beta ((P_a v - v + r_a)(s) - M)
        pv = np.einsum("ast,t->sa", mdp.transitions, v)
        expected = hyper.dual_step * (
            pv - v[:, None] + mdp.local_rewards[0] - hyper.shift).reshape(-1)
        rng = Xoshiro256StarStar(17)
        sums = np.zeros(8)
        squares = np.zeros(8)
        for _ in range(self.N):
            s = draw_sample(mu_tilde, mdp, 0, rng)
            d = dual_gradient(mu_tilde, v, s, hyper)
            sums[s.index] += d
            squares[s.index] += d * d
        mean = sums / self.N
        var = squares / self.N - mean ** 2
        se = np.sqrt(var / self.N)
        assert np.all(np.abs(mean - expected) <= 3.0 * se + 1e-12)

    def test_primal_gradient_mean_matches_closed_form(self):
        mdp, mu_tilde, mu_own, _, hyper = self._frozen_setup()
        # closed form: E[d] = alpha sum_a (I - P_a)^T mu_own(a)
        table = mu_own.reshape(4, 2)
        expected = np.zeros(4)
        for a in range(2):
            expected += hyper.primal_step * (
                (np.eye(4) - mdp.transitions[a]).T @ table[:, a])
        rng = Xoshiro256StarStar(19)
        sums = np.zeros(4)
        squares = np.zeros(4)
        for _ in range(self.N):
            smp = draw_sample(mu_tilde, mdp, 0, rng)
            s, s2, mag = primal_gradient(mu_own, mu_tilde, smp, hyper)
            vec = np.zeros(4)
            vec[s] += mag
            vec[s2] -= mag
            sums += vec
            squares += vec ** 2
        mean = sums / self.N
        var = squares / self.N - mean ** 2
        se = np.sqrt(var / self.N)
        assert np.all(np.abs(mean - expected) <= 3.0 * se + 1e-12)


class TestIteration:
    def test_zero_steps_identity_fixed_point(self):
        mdp = small_random_mdp(3)
        hyper = HyperParams(10, 5.0, 0.0, 0.0, 2.0, 2.0)
        team = init_team(mdp, seed=1)
        mu0, v0 = team.mu.copy(), team.v.copy()
        rmapd_iteration(team, mdp, np.eye(1), hyper)
        assert np.allclose(team.mu, mu0, atol=1e-15)
        assert np.array_equal(team.v, v0)

    def test_feasibility_restored_every_iteration(self):
        mdp = small_random_mdp(4, states=3, actions=(2, 2))
        hyper = default_hyperparams(3, 4, t_mix=2, tau=3, horizon=500)
        sched = GraphSchedule.ring(2)
        c = restricted_lower_bound(hyper.tau, 3)
        team = init_team(mdp, seed=2)
        W = sched.weights_at(0)
        for _ in range(500):
            rmapd_iteration(team, mdp, W, hyper)
            assert np.abs(team.mu.sum(axis=1) - 1.0).max() <= 1e-9
            assert team.mu.reshape(2, 3, 4).sum(axis=2).min() >= c - 1e-9
            assert np.abs(team.v).max() <= 2 * hyper.t_mix + 1e-12

    def test_bit_identical_trajectories(self):
        mdp = small_random_mdp(5, states=3, actions=(2,))
        hyper = default_hyperparams(3, 2, 2, 2, horizon=200)
        sched = GraphSchedule.complete(1)
        r1 = run_rmapd(mdp, sched, hyper, seed=9)
        r2 = run_rmapd(mdp, sched, hyper, seed=9)
        assert np.array_equal(r1.occupancy_avg, r2.occupancy_avg)
        assert np.array_equal(r1.policy_avg, r2.policy_avg)
        assert r1.avg_consensus_value == r2.avg_consensus_value


class TestRunner:
    def test_horizon_must_be_positive(self):
        with pytest.raises(ParameterError):
            HyperParams(0, 5.0, 0.1, 0.1, 1.0, 1.0)

    def test_agent_count_mismatch(self):
        mdp = small_random_mdp(1, states=2, actions=(2, 2))
        hyper = default_hyperparams(2, 4, 1, 1, horizon=5)
        with pytest.raises(ParameterError):
            run_rmapd(mdp, GraphSchedule.complete(3), hyper, seed=0)

    def test_single_state_concentrates_on_best_action(self):
        # with a single state the value difference is identically zero, so
        # any shift above r_max keeps the dual update nonpositive; the small
        # shift keeps the per-sample variance low enough for T = 1e4
        mdp = single_state_mdp((0.1, 0.9))
        hyper = default_hyperparams(1, 2, t_mix=1, tau=1, horizon=10_000,
                                    shift=1.5)
        for seed in (3, 4, 5):
            res = run_rmapd(mdp, GraphSchedule.complete(1), hyper, seed=seed)
            lam = float(res.policy[0] @ mdp.global_rewards[0])
            assert abs(lam - 0.9) <= 0.05
            assert res.policy[0, 1] > 0.9

    def test_policy_outputs_coincide_at_horizon_one(self):
        mdp = small_random_mdp(6, states=2, actions=(2,))
        hyper = default_hyperparams(2, 2, 1, 2, horizon=1)
        res = run_rmapd(mdp, GraphSchedule.complete(1), hyper, seed=4)
        assert np.allclose(res.policy, res.policy_avg, atol=1e-12)

    def test_observer_sees_running_average(self):
        mdp = small_random_mdp(7, states=2, actions=(2,))
        hyper = default_hyperparams(2, 2, 1, 2, horizon=50)
        seen = []

        def observer(view):
            seen.append((view.iteration, view.occupancy_avg.sum()))

        run_rmapd(mdp, GraphSchedule.complete(1), hyper, 5, (observer,))
        assert [t for t, _ in seen] == list(range(1, 51))
        assert all(abs(total - 1.0) < 1e-9 for _, total in seen)


class TestReduction:
    def test_single_node_equals_centralized(self):
        from marlp.baselines import centralized_spd
        mdp = small_random_mdp(8, states=3, actions=(2, 2))
        hyper = default_hyperparams(3, 4, 2, 2, horizon=300)
        direct = run_rmapd(aggregate_rewards(mdp), GraphSchedule.complete(1),
                           hyper, seed=21)
        central = centralized_spd(mdp, hyper, seed=21)
        assert np.array_equal(direct.occupancy_avg, central.occupancy_avg)
        assert np.array_equal(direct.policy, central.policy)
        assert direct.avg_consensus_value == central.avg_consensus_value


class TestOnPolicyMode:
    def test_runs_and_keeps_invariants(self):
        mdp = small_random_mdp(9, states=3, actions=(2, 2))
        hyper = default_hyperparams(3, 4, 2, 3, horizon=400)
        res = run_rmapd(mdp, GraphSchedule.ring(2), hyper, seed=6,
                        execution="on_policy")
        assert abs(res.occupancy_avg.sum() - 1.0) < 1e-9
        assert res.policy.min() >= 0.0

    def test_bit_reproducible(self):
        mdp = small_random_mdp(10, states=3, actions=(2,))
        hyper = default_hyperparams(3, 2, 2, 3, horizon=300)
        a = run_rmapd(mdp, GraphSchedule.complete(1), hyper, 8,
                      execution="on_policy")
        b = run_rmapd(mdp, GraphSchedule.complete(1), hyper, 8,
                      execution="on_policy")
        assert np.array_equal(a.occupancy_avg, b.occupancy_avg)

    def test_differs_from_generative(self):
        mdp = small_random_mdp(11, states=3, actions=(2,))
        hyper = default_hyperparams(3, 2, 2, 3, horizon=300)
        gen = run_rmapd(mdp, GraphSchedule.complete(1), hyper, 8)
        onp = run_rmapd(mdp, GraphSchedule.complete(1), hyper, 8,
                        execution="on_policy")
        assert not np.array_equal(gen.occupancy_avg, onp.occupancy_avg)

    def test_unknown_mode_rejected(self):
        mdp = small_random_mdp(12, states=2, actions=(2,))
        hyper = default_hyperparams(2, 2, 1, 2, horizon=10)
        with pytest.raises(ParameterError):
            run_rmapd(mdp, GraphSchedule.complete(1), hyper, 1,
                      execution="trajectory")


def test_complete_graph_buffers_reach_exact_consensus():
    # uniform averaging matrix: the post-consensus buffers coincide across
    # agents from the first round onward (the iterates then differ only by
    # each agent's own sparse update)
    mdp = small_random_mdp(13, states=2, actions=(2, 2, 2))
    hyper = default_hyperparams(2, 8, 1, 2, horizon=30)
    team = init_team(mdp, seed=3)
    W = GraphSchedule.complete(3).weights_at(0)
    assert np.allclose(W, 1.0 / 3.0, atol=0)
    for _ in range(30):
        rmapd_iteration(team, mdp, W, hyper)
        assert np.abs(team.mu_tilde - team.mu_tilde.mean(axis=0)).max() < 1e-15
        assert np.abs(team.v_tilde - team.v_tilde.mean(axis=0)).max() < 1e-15


def test_collapsed_cells_recover_through_the_floor():
    # a huge positive dual spike (possible under sub-default shifts) crushes
    # every other cell through the normalizer; the post-normalization floor
    # keeps rows recoverable so the restricted projection never faces a
    # marginal below its rescue range
    from marlp.rmapd import _finish_updates
    mdp = small_random_mdp(14, states=3, actions=(2,))
    hyper = HyperParams(10, 0.5, 3e-4, 1e-3, 2.0, 4.0)
    from marlp.geometry import restricted_lower_bound
    c = restricted_lower_bound(hyper.tau, 3)
    n, S, A = 1, 3, 2
    cases = [
        np.array([[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]]),          # dead rows
        np.array([[1e50, 1e-250, 1e-250, 1e-250, 1e-250, 1e-250]]),  # spike
        np.array([[1e300, 1e-310, 0.0, 5e-301, 1e-250, 1e-250]]),
    ]
    for crushed in cases:
        team = init_team(mdp, seed=1)
        _finish_updates(team, mdp, hyper, team.mu.copy(), team.v.copy(),
                        crushed.copy(), team.v.copy())
        assert team.mu.min() > 0.0
        marginals = team.mu.reshape(n, S, A).sum(axis=2)
        assert marginals.min() >= c - 1e-9
        assert abs(team.mu.sum() - 1.0) <= 1e-9


def test_floor_is_invisible_on_live_trajectories():
    # flooring at 1e-250 must not perturb a normal run at all
    mdp = small_random_mdp(15, states=3, actions=(2,))
    hyper = default_hyperparams(3, 2, 2, 3, horizon=500)
    res = run_rmapd(mdp, GraphSchedule.complete(1), hyper, seed=4)
    assert res.occupancy_avg.min() > 1e-12  # nowhere near the floor
