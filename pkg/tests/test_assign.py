import numpy as np
import pytest

from immiscible import (
    AssignMode,
    Metric,
    apply_mode,
    assign_noise,
    assign_noise_flipped,
    distance_reduction_sweep,
    empirical_conditional_weights,
    pairwise_cost,
    reset_solve_call_count,
    solve_call_count,
)


def toy_batch(rng, n, d):
    return rng.standard_normal((n, d)), rng.standard_normal((n, d))


class TestAssignNoise:
    def test_crossed_pair_gets_swapped(self):
        data = np.array([[0.0], [1.0]])
        noise = np.array([[0.9], [0.1]])
        assigned, assignment, stats = assign_noise(data, noise)
        assert assignment.perm.tolist() == [1, 0]
        assert assigned == pytest.approx(np.array([[0.1], [0.9]]))
        assert assignment.total_cost == pytest.approx(0.2)
        assert stats.pre_cost == pytest.approx(0.9)
        assert stats.post_cost == pytest.approx(0.1)
        assert stats.reduction == pytest.approx((0.1 - 0.9) / 0.9)

    def test_single_row_passthrough(self):
        data = np.array([[2.0, 3.0]])
        noise = np.array([[-1.0, 0.5]])
        assigned, assignment, stats = assign_noise(data, noise)
        assert np.array_equal(assigned, noise)
        assert assignment.perm.tolist() == [0]
        assert stats.reduction == 0.0

    def test_output_is_row_permutation(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            data, noise = toy_batch(rng, 16, 4)
            assigned, assignment, _ = assign_noise(data, noise)
            assert np.array_equal(assigned, noise[assignment.perm])
            assert np.array_equal(
                np.sort(assigned, axis=0), np.sort(noise, axis=0)
            )

    def test_never_worse_than_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            data, noise = toy_batch(rng, 24, 8)
            _, _, stats = assign_noise(data, noise)
            assert stats.post_cost <= stats.pre_cost + 1e-12
            assert stats.reduction <= 0.0

    def test_beats_random_pairings(self):
        rng = np.random.default_rng(2)
        data, noise = toy_batch(rng, 20, 6)
        _, assignment, _ = assign_noise(data, noise)
        costs = pairwise_cost(data, noise)
        rows = np.arange(20)
        for _ in range(100):
            perm = rng.permutation(20)
            assert assignment.total_cost <= costs[rows, perm].sum() + 1e-9

    def test_metric_changes_pairing_objective(self):
        rng = np.random.default_rng(3)
        data, noise = toy_batch(rng, 32, 8)
        for metric in Metric:
            _, assignment, _ = assign_noise(data, noise, metric=metric)
            costs = pairwise_cost(data, noise, metric=metric)
            rows = np.arange(32)
            direct = costs[rows, assignment.perm].sum()
            assert assignment.total_cost == pytest.approx(direct, rel=1e-12)

    def test_stats_use_full_precision_inputs(self):
        rng = np.random.default_rng(4)
        data, noise = toy_batch(rng, 16, 32)
        _, assignment, stats = assign_noise(data, noise, quantize=True)
        costs = pairwise_cost(data, noise)
        rows = np.arange(16)
        assert stats.pre_cost == pytest.approx(np.diag(costs).mean(), rel=1e-12)
        assert stats.post_cost == pytest.approx(
            costs[rows, assignment.perm].mean(), rel=1e-12
        )

    def test_wall_time_recorded(self):
        rng = np.random.default_rng(5)
        data, noise = toy_batch(rng, 8, 4)
        _, _, stats = assign_noise(data, noise)
        assert stats.wall_time >= 0.0

    def test_rejects_mismatched_batches(self):
        with pytest.raises(ValueError):
            assign_noise(np.zeros((3, 2)), np.zeros((4, 2)))


class TestAssignNoiseFlipped:
    def test_mirror_pair_gets_anti_matched(self):
        # Matching against -noise hands each point the noise whose negation
        # is nearest, so the realized distances are maximal, not minimal.
        data = np.array([[1.0, 0.0], [-1.0, 0.0]])
        noise = np.array([[0.9, 0.0], [-0.9, 0.0]])
        assigned, assignment, stats = assign_noise_flipped(data, noise)
        assert assignment.perm.tolist() == [1, 0]
        assert assigned == pytest.approx(np.array([[-0.9, 0.0], [0.9, 0.0]]))
        assert stats.pre_cost == pytest.approx(0.1)
        assert stats.post_cost == pytest.approx(1.9)

    def test_perm_applies_to_original_noise(self):
        rng = np.random.default_rng(6)
        data, noise = toy_batch(rng, 12, 5)
        assigned, assignment, _ = assign_noise_flipped(data, noise)
        assert np.array_equal(assigned, noise[assignment.perm])

    def test_high_dim_pairs_are_worse_than_identity(self):
        # In high dimension the sign-flipped match anti-correlates noise with
        # data, so the realized distances exceed the unpermuted ones.
        rng = np.random.default_rng(7)
        deltas = []
        for _ in range(10):
            data, noise = toy_batch(rng, 32, 3072)
            _, _, stats = assign_noise_flipped(data, noise)
            deltas.append(stats.post_cost - stats.pre_cost)
        assert np.median(deltas) > 0.0

    def test_reverse_order_variant(self):
        rng = np.random.default_rng(8)
        data, noise = toy_batch(rng, 12, 5)
        assigned, assignment, _ = assign_noise_flipped(
            data, noise, reverse_order=True
        )
        assert np.array_equal(assigned, noise[assignment.perm])
        costs = pairwise_cost(data, noise[:, ::-1])
        rows = np.arange(12)
        assert assignment.total_cost == pytest.approx(
            costs[rows, assignment.perm].sum(), rel=1e-12
        )


class TestApplyMode:
    def test_vanilla_is_passthrough(self):
        rng = np.random.default_rng(9)
        data, noise = toy_batch(rng, 8, 3)
        reset_solve_call_count()
        assigned, assignment, stats = apply_mode(AssignMode.VANILLA, data, noise)
        assert solve_call_count() == 0
        assert np.array_equal(assigned, noise)
        assert assignment is None
        assert stats.reduction == 0.0
        assert stats.pre_cost == stats.post_cost
        assert stats.wall_time == 0.0

    def test_each_mode_preserves_noise_rows(self):
        rng = np.random.default_rng(10)
        data, noise = toy_batch(rng, 16, 4)
        for mode in AssignMode:
            assigned, _, _ = apply_mode(mode, data, noise)
            assert np.array_equal(
                assigned[np.lexsort(assigned.T)], noise[np.lexsort(noise.T)]
            )

    def test_l1_mode_uses_l1_objective(self):
        rng = np.random.default_rng(11)
        data, noise = toy_batch(rng, 16, 4)
        _, assignment, _ = apply_mode(AssignMode.IMMISCIBLE_L1, data, noise)
        costs = pairwise_cost(data, noise, metric=Metric.L1)
        rows = np.arange(16)
        assert assignment.total_cost == pytest.approx(
            costs[rows, assignment.perm].sum(), rel=1e-12
        )

    def test_parse_round_trip(self):
        for mode in AssignMode:
            assert AssignMode.parse(mode.value) is mode
        with pytest.raises(ValueError):
            AssignMode.parse("magic")


class TestDistanceReductionSweep:
    def test_rows_and_determinism(self):
        source = lambda n, rng: rng.standard_normal((n, 8))
        rows = distance_reduction_sweep(source, batch_sizes=[4, 8, 16], trials=3, seed=0)
        again = distance_reduction_sweep(source, batch_sizes=[4, 8, 16], trials=3, seed=0)
        assert [r.batch_size for r in rows] == [4, 8, 16]
        for a, b in zip(rows, again):
            assert a.median_reduction == b.median_reduction
            assert len(a.reductions) == 3
            assert np.array_equal(a.reductions, b.reductions)

    def test_reductions_are_negative(self):
        rows = distance_reduction_sweep(
            lambda n, rng: rng.standard_normal((n, 16)),
            batch_sizes=[32],
            trials=4,
            seed=1,
        )
        assert rows[0].median_reduction < 0.0

    def test_rejects_bad_args(self):
        source = lambda n, rng: rng.standard_normal((n, 2))
        with pytest.raises(ValueError):
            distance_reduction_sweep(source, batch_sizes=[], trials=3)
        with pytest.raises(ValueError):
            distance_reduction_sweep(source, batch_sizes=[1], trials=3)
        with pytest.raises(ValueError):
            distance_reduction_sweep(source, batch_sizes=[4], trials=0)


class TestEmpiricalConditionalWeights:
    def test_single_point_dataset_always_hits(self):
        target = np.array([1.5, -0.5])
        data = np.tile(target, (4, 1))
        curve = empirical_conditional_weights(
            target, data, rounds=200, buckets=5, seed=0
        )
        filled = ~np.isnan(curve.frequencies)
        assert filled.any()
        assert curve.frequencies[filled] == pytest.approx(
            np.ones(int(filled.sum()))
        )
        assert curve.rounds == 200
        assert curve.counts.sum() == 200 * 4

    def test_bucket_edges_monotone(self):
        rng = np.random.default_rng(12)
        data = rng.standard_normal((8, 2))
        curve = empirical_conditional_weights(
            data[3], data, rounds=150, buckets=6, seed=1
        )
        assert np.all(np.diff(curve.bucket_edges) > 0.0)
        assert len(curve.bucket_edges) == 7
        assert len(curve.frequencies) == 6

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        data = rng.standard_normal((6, 3))
        a = empirical_conditional_weights(data[0], data, rounds=120, seed=2)
        b = empirical_conditional_weights(data[0], data, rounds=120, seed=2)
        assert np.array_equal(a.counts, b.counts)
        assert np.array_equal(
            np.nan_to_num(a.frequencies), np.nan_to_num(b.frequencies)
        )

    def test_target_must_be_a_data_row(self):
        data = np.zeros((4, 2))
        with pytest.raises(ValueError):
            empirical_conditional_weights(np.array([9.0, 9.0]), data, rounds=100)

    def test_rejects_too_few_rounds(self):
        data = np.zeros((4, 2))
        with pytest.raises(ValueError):
            empirical_conditional_weights(data[0], data, rounds=50)
