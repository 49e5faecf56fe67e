import numpy as np
import pytest
import scipy.sparse as sp

from admira.linalg import FactoredMatrix
from admira.operators import (
    GaussianOperator,
    SamplingOperator,
    estimate_delta,
    estimate_delta_profile,
    sample_indices_without_replacement,
)

from oracles import rank_one_gain_extremes


def random_low_rank(rng, m, n, k):
    U = np.linalg.qr(rng.standard_normal((m, k)))[0]
    V = np.linalg.qr(rng.standard_normal((n, k)))[0]
    s = np.sort(rng.uniform(0.5, 2.0, k))[::-1]
    return FactoredMatrix((m, n), s, U, V, orthonormal=True)


@pytest.fixture(params=["gaussian", "sampling"])
def operator(request):
    if request.param == "gaussian":
        return GaussianOperator(9, 7, 40, seed=5)
    return SamplingOperator.random(9, 7, 40, seed=5)


class TestApply:
    def test_sampling_identity_entries(self):
        op = SamplingOperator(2, 2, [0, 1], [0, 1])
        np.testing.assert_array_equal(op.apply(np.eye(2)), [1.0, 1.0])

    def test_zero_maps_to_zero(self, operator):
        np.testing.assert_array_equal(operator.apply(np.zeros((9, 7))),
                                      np.zeros(40))
        assert np.all(operator.apply(FactoredMatrix.zero(9, 7)) == 0.0)

    def test_factored_matches_densified(self, operator):
        rng = np.random.default_rng(0)
        for _ in range(20):
            F = random_low_rank(rng, 9, 7, 3)
            dense_out = operator.apply(F.densify())
            fact_out = operator.apply(F)
            np.testing.assert_allclose(fact_out, dense_out,
                                       atol=1e-12 * max(1.0, np.abs(dense_out).max()))

    def test_linear(self, operator):
        rng = np.random.default_rng(1)
        X, Y = rng.standard_normal((2, 9, 7))
        np.testing.assert_allclose(operator.apply(2.0 * X - 3.0 * Y),
                                   2.0 * operator.apply(X) - 3.0 * operator.apply(Y),
                                   rtol=1e-12, atol=1e-12)

    def test_shape_mismatch_rejected(self, operator):
        with pytest.raises(ValueError):
            operator.apply(np.zeros((3, 3)))


class TestAdjoint:
    def test_sampling_unit_vector(self):
        op = SamplingOperator(3, 4, [1, 2], [3, 0])
        back = op.adjoint(np.array([1.0, 0.0]))
        dense = back.toarray()
        expected = np.zeros((3, 4))
        expected[1, 3] = 1.0
        np.testing.assert_array_equal(dense, expected)

    def test_zero_vector(self, operator):
        back = operator.adjoint(np.zeros(40))
        dense = back.toarray() if sp.issparse(back) else back
        np.testing.assert_array_equal(dense, np.zeros((9, 7)))

    def test_wrong_length_rejected(self, operator):
        with pytest.raises(ValueError):
            operator.adjoint(np.zeros(13))

    def test_inner_product_identity(self, operator):
        # <A X, y> == <X, A* y> over 100 random pairs
        rng = np.random.default_rng(2)
        for _ in range(100):
            X = rng.standard_normal((9, 7))
            y = rng.standard_normal(40)
            lhs = operator.apply(X) @ y
            back = operator.adjoint(y)
            dense = back.toarray() if sp.issparse(back) else back
            rhs = np.sum(X * dense)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)

    def test_sampling_apply_adjoint_is_identity(self):
        op = SamplingOperator.random(6, 8, 20, seed=9)
        rng = np.random.default_rng(3)
        y = rng.standard_normal(20)
        np.testing.assert_allclose(op.apply(op.adjoint(y)), y, rtol=1e-15)


class TestGaussianScaling:
    def test_unit_gain_in_expectation(self):
        # with N(0, 1/p) frames, E ||A X||^2 = 1 for unit-norm X
        op = GaussianOperator(8, 8, 600, seed=3)
        rng = np.random.default_rng(4)
        gains = []
        for _ in range(200):
            F = random_low_rank(rng, 8, 8, 2)
            X = F.densify()
            X /= np.linalg.norm(X)
            gains.append(np.sum(op.apply(X) ** 2))
        gains = np.asarray(gains)
        stderr = gains.std(ddof=1) / np.sqrt(gains.size)
        assert abs(gains.mean() - 1.0) <= 3.0 * stderr


class TestSamplingConstruction:
    def test_duplicate_indices_rejected(self):
        with pytest.raises(ValueError):
            SamplingOperator(3, 3, [0, 0], [1, 1])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            SamplingOperator(3, 3, [0, 3], [0, 0])

    def test_virtual_fisher_yates_distinct_and_seeded(self):
        idx = sample_indices_without_replacement(10**9, 500, seed=7)
        assert np.unique(idx).size == 500
        np.testing.assert_array_equal(
            idx, sample_indices_without_replacement(10**9, 500, seed=7))

    def test_random_covers_range(self):
        op = SamplingOperator.random(5, 4, 20, seed=1)  # all entries
        flat = np.sort(op.rows * 4 + op.cols)
        np.testing.assert_array_equal(flat, np.arange(20))


class TestDeltaEstimate:
    def test_identity_vectorization_is_exact_isometry(self):
        op = SamplingOperator.identity(6, 5)
        for r in (1, 2, 3):
            est = estimate_delta(op, r, trials=30, seed=0)
            assert est.delta_lower <= 1e-12

    def test_nested_estimates_nondecreasing(self):
        op = GaussianOperator(8, 8, 300, seed=0)
        chain = estimate_delta_profile(op, 4, trials=50, seed=1)
        deltas = [e.delta_lower for e in chain]
        assert all(a <= b + 1e-15 for a, b in zip(deltas, deltas[1:]))
        # single-rank calls agree with the shared-sample profile
        for e in chain:
            single = estimate_delta(op, e.r, trials=50, seed=1)
            assert single.delta_lower == pytest.approx(e.delta_lower, rel=1e-12)

    def test_gaussian_rank_one_against_power_iteration_oracle(self):
        op = GaussianOperator(10, 10, 2000, seed=2)
        est = estimate_delta(op, 1, trials=500, seed=3)
        assert est.delta_lower < 0.5
        gmax, gmin = rank_one_gain_extremes(op.apply_rank_one, 10, 10,
                                            restarts=50, seed=4)
        oracle = max(gmax - 1.0, 1.0 - gmin)
        # the sampled bound cannot beat an optimized search
        assert est.delta_lower <= oracle * (1.0 + 1e-9)
        # and the optimized search itself stays in the plausible range
        assert 0.0 < oracle < 0.5

    def test_invalid_args(self):
        op = SamplingOperator.identity(3, 3)
        with pytest.raises(ValueError):
            estimate_delta(op, 0, trials=5)
        with pytest.raises(ValueError):
            estimate_delta(op, 1, trials=0)
