import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from measure_steer import (
    BasisAngles,
    DensityMatrix,
    MeasurementChain,
    OptimizerConfig,
    TargetFrame,
    chain_bruteforce,
    chain_value,
    check_gain_conditions,
    delta_gain,
    greedy_chain,
    optimal_basis,
    optimize_chain,
    p_max_closed,
    p_one_step,
    random_density,
    random_pure,
    run_chain,
)
from measure_steer.chain import _frame_bloch
from strategies import angles, density_matrices, frames

chains = st.lists(angles, min_size=0, max_size=6).map(MeasurementChain)
FAST = OptimizerConfig(random_starts=8)


def random_chain(rng, n):
    return MeasurementChain(
        tuple(BasisAngles(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)) for _ in range(n))
    )


class TestRunChain:
    def test_empty(self, frame, mixed):
        assert run_chain(mixed, frame, MeasurementChain()).p_success == 0.5

    @given(density_matrices, frames, angles)
    def test_single_step_matches(self, rho, f, a):
        res = run_chain(rho, f, MeasurementChain((a,)))
        assert res.p_success == pytest.approx(p_one_step(rho, f, a.realize(f)), abs=1e-12)

    @given(density_matrices, angles)
    def test_repeated_basis(self, rho, a):
        f = TargetFrame.computational()
        one = run_chain(rho, f, MeasurementChain((a,))).p_success
        five = run_chain(rho, f, MeasurementChain((a,) * 5)).p_success
        assert five == pytest.approx(one, abs=1e-12)

    def test_zeno_pair(self, frame):
        # hand-summed over the four outcome records: 0.5625
        chain = MeasurementChain((BasisAngles(2 * math.pi / 3, 0), BasisAngles(math.pi / 3, 0)))
        assert run_chain(frame.zeta_perp.projector(), frame, chain).p_success == pytest.approx(0.5625)

    @given(density_matrices, frames, chains)
    def test_intermediates_valid(self, rho, f, chain):
        res = run_chain(rho, f, chain)
        assert len(res.intermediate_states) == len(chain)
        for state, step, p, d in zip(res.intermediate_states, chain, res.step_probs, res.hs_distances):
            basis = step.realize(f)
            assert abs(basis.s0.vector.conj() @ state.matrix @ basis.s1.vector) <= 1e-12
            assert state.r00 * state.r11 - abs(state.r01) ** 2 >= -1e-12
            assert 0 <= p <= 1
            assert d >= 0 and d <= math.sqrt(2) + 1e-12
        if chain.steps:
            assert res.p_success == res.step_probs[-1]

    @given(density_matrices, frames, chains)
    def test_bloch_objective_agrees(self, rho, f, chain):
        fast = chain_value(_frame_bloch(rho, f), chain.to_params())
        assert fast == pytest.approx(run_chain(rho, f, chain).p_success, abs=1e-12)

    def test_hs_distance_tracks_target(self, frame):
        chain = greedy_chain(frame.zeta_perp.projector(), frame, 3)
        res = run_chain(frame.zeta_perp.projector(), frame, chain)
        # for states diagonal-free in the target frame, d^2 = 2 (1 - p)^2 + 2 |coh|^2
        for state, p, d in zip(res.intermediate_states, res.step_probs, res.hs_distances):
            coh = frame.zeta.vector.conj() @ state.matrix @ frame.zeta_perp.vector
            assert d == pytest.approx(math.sqrt(2 * (1 - p) ** 2 + 2 * abs(coh) ** 2), abs=1e-12)


class TestBruteForce:
    def test_matches_recursion(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            f = TargetFrame.from_target(random_pure(rng))
            rho = random_density(rng)
            chain = random_chain(rng, int(rng.integers(0, 11)))
            assert abs(chain_bruteforce(rho, f, chain) - run_chain(rho, f, chain).p_success) <= 1e-12

    @given(density_matrices, frames, angles)
    def test_single_step_by_hand(self, rho, f, a):
        assert chain_bruteforce(rho, f, MeasurementChain((a,))) == pytest.approx(
            p_one_step(rho, f, a.realize(f)), abs=1e-12
        )

    @given(density_matrices, frames, st.integers(1, 6))
    def test_frame_aligned_is_direct(self, rho, f, n):
        chain = MeasurementChain((BasisAngles(0, 0),) * n)
        assert chain_bruteforce(rho, f, chain) == pytest.approx(run_chain(rho, f, MeasurementChain()).p_success)

    def test_rejects_long_chain(self, frame, mixed):
        with pytest.raises(ValueError):
            chain_bruteforce(mixed, frame, MeasurementChain((BasisAngles(1, 0),) * 21))


class TestDeltaGain:
    @given(density_matrices, frames, angles)
    def test_same_basis_is_zero(self, rho, f, a):
        b = a.realize(f)
        assert abs(delta_gain(rho, f, b, b)) <= 1e-12

    @given(density_matrices, frames, angles)
    def test_frame_basis_is_zero(self, rho, f, a):
        assert abs(delta_gain(rho, f, a.realize(f), BasisAngles(0, 0).realize(f))) <= 1e-12

    @given(density_matrices, frames, angles, angles)
    def test_equals_chain_difference(self, rho, f, a, b):
        d = delta_gain(rho, f, a.realize(f), b.realize(f))
        longer = run_chain(rho, f, MeasurementChain((a, b))).p_success
        shorter = run_chain(rho, f, MeasurementChain((a,))).p_success
        assert d == pytest.approx(longer - shorter, abs=1e-12)

    @given(density_matrices, frames, st.lists(angles, min_size=2, max_size=6))
    def test_telescopes(self, rho, f, steps):
        chain = MeasurementChain(steps)
        res = run_chain(rho, f, chain)
        states = (rho,) + res.intermediate_states
        total = sum(
            delta_gain(states[k], f, steps[k].realize(f), steps[k + 1].realize(f))
            for k in range(len(steps) - 1)
        )
        assert total == pytest.approx(res.p_success - res.step_probs[0], abs=1e-10)


class TestGainConditions:
    @settings(max_examples=500)
    @given(density_matrices, frames, angles, angles)
    def test_sufficient_conditions_are_sound(self, rho, f, a, b):
        check = check_gain_conditions(rho, f, a.realize(f), b.realize(f))
        if check.guaranteed_positive:
            assert delta_gain(rho, f, a.realize(f), b.realize(f)) >= -1e-12

    @given(density_matrices, frames, angles)
    def test_equal_bases_not_guaranteed(self, rho, f, a):
        b = a.realize(f)
        check = check_gain_conditions(rho, f, b, b)
        assert not check.transfer_improves
        assert not check.guaranteed_positive

    def test_constructed_positive_case(self, frame):
        # rho_prev concentrated on |0_N>, which sits far from the target
        step = BasisAngles(2.6, 0.0)
        basis_n = step.realize(frame)
        rho_prev = DensityMatrix.from_frame(0.9, 0, TargetFrame(basis_n.s0, basis_n.s1))
        # next basis: single-step optimum for the pure state |0_N>
        nxt = optimal_basis(basis_n.s0.projector(), frame).realize(frame)
        check = check_gain_conditions(rho_prev, frame, basis_n, nxt)
        assert check.branch_0_dominant and check.transfer_improves and check.guaranteed_positive
        assert delta_gain(rho_prev, frame, basis_n, nxt) > 0

    @given(density_matrices, frames, angles, angles)
    def test_gain_is_population_gap_times_transfer(self, rho, f, a, b):
        check = check_gain_conditions(rho, f, a.realize(f), b.realize(f))
        assert check.transfer_gains[0] == pytest.approx(-check.transfer_gains[1], abs=1e-12)
        gap = check.populations[0] - check.populations[1]
        assert delta_gain(rho, f, a.realize(f), b.realize(f)) == pytest.approx(
            gap * check.transfer_gains[0], abs=1e-12
        )


class TestGreedy:
    @given(density_matrices, frames)
    def test_one_step_is_optimal_basis(self, rho, f):
        if run_chain(rho, f, MeasurementChain()).p_success >= 1 - 1e-12:
            return
        assert greedy_chain(rho, f, 1).steps[0] == optimal_basis(rho, f)

    @given(density_matrices, frames, st.integers(1, 6))
    def test_nondecreasing(self, rho, f, n):
        res = run_chain(rho, f, greedy_chain(rho, f, n))
        probs = [run_chain(rho, f, MeasurementChain()).p_success, *res.step_probs]
        assert all(b >= a - 1e-12 for a, b in zip(probs, probs[1:]))

    def test_orthogonal_start_stalls(self, frame):
        # the unbiased first step lands on I/2, where every later basis gives 1/2
        rho = frame.zeta_perp.projector()
        res = run_chain(rho, frame, greedy_chain(rho, frame, 2))
        assert res.p_success == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(res.intermediate_states[0].matrix, np.eye(2) / 2)

    def test_target_reached_keeps_target(self, frame):
        chain = greedy_chain(frame.projector(), frame, 3)
        assert run_chain(frame.projector(), frame, chain).p_success == pytest.approx(1)

    def test_rejects_zero_steps(self, frame, mixed):
        with pytest.raises(ValueError):
            greedy_chain(mixed, frame, 0)


class TestOptimize:
    @pytest.mark.parametrize("seed", range(4))
    def test_one_step_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(rng)
        f = TargetFrame.from_target(random_pure(rng))
        _, value = optimize_chain(rho, f, 1, FAST)
        c = f.zeta.vector.conj() @ rho.matrix @ f.zeta_perp.vector
        p = float((f.zeta.vector.conj() @ rho.matrix @ f.zeta.vector).real)
        g = abs(c) / math.sqrt(p * (1 - p))
        assert value == pytest.approx(p_max_closed(p, min(g, 1.0)), abs=1e-4)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_incoherent_above_half_cannot_improve(self, frame, n):
        rho = DensityMatrix(0.7, 0.3, 0)
        _, value = optimize_chain(rho, frame, n, FAST)
        assert value == pytest.approx(0.7, abs=1e-4)

    def test_nondecreasing_in_n(self, frame):
        rho = DensityMatrix.from_parameters(0.25, 0.8, 0.4)
        prev_chain, prev = optimize_chain(rho, frame, 1, FAST)
        for n in (2, 3):
            seed = prev_chain.extended(prev_chain.steps[-1])
            prev_chain, value = optimize_chain(rho, frame, n, FAST, [seed])
            assert value >= prev - 1e-9
            prev = value

    def test_orthogonal_start_two_steps(self, frame):
        _, value = optimize_chain(frame.zeta_perp.projector(), frame, 2, FAST)
        assert value > 0.5

    def test_beats_greedy(self, frame):
        rho = frame.zeta_perp.projector()
        greedy = run_chain(rho, frame, greedy_chain(rho, frame, 2)).p_success
        _, value = optimize_chain(rho, frame, 2, FAST)
        assert value >= greedy - 1e-9
        # equally spaced axes reach 9/16; greedy stalls at the maximally mixed state
        assert value == pytest.approx(0.5625, abs=1e-6)

    def test_deterministic_across_threads(self, frame):
        rho = DensityMatrix.from_parameters(0.3, 0.5, 1.0)
        a = optimize_chain(rho, frame, 2, OptimizerConfig(random_starts=6, seed=4, threads=1))
        b = optimize_chain(rho, frame, 2, OptimizerConfig(random_starts=6, seed=4, threads=3))
        assert a == b

    @pytest.mark.parametrize("n", [0, 9])
    def test_rejects_out_of_range(self, frame, mixed, n):
        with pytest.raises(ValueError):
            optimize_chain(mixed, frame, n)

    def test_rejects_mismatched_seed_chain(self, frame, mixed):
        with pytest.raises(ValueError):
            optimize_chain(mixed, frame, 2, FAST, [MeasurementChain((BasisAngles(1, 0),))])
