import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fsquad.analysis import (
    condition_J,
    empirical_variance,
    frobenius_error,
    h_orf,
    h_sfs,
    h_sfs_core,
    h_ssr,
    weighted_moment_check,
    paired_variance_gap,
    q_third,
    rff_variance,
    rmax_solve,
    variance_gap,
    variance_report,
    z_histogram,
)


class TestHsfs:
    def test_zero(self):
        assert h_sfs(0.0, 1.0, 10, 1) == 0.0
        assert_allclose(variance_gap(np.zeros(4)), 0.0, atol=1e-30)

    def test_negative_inside_condition(self):
        z = 0.8
        e = z * z * math.exp(-z * z / 2)
        Q = 1 - 0.5 * e
        assert h_sfs(z, Q, 5, 3) < 0

    @given(st.floats(0, 20), st.floats(0, 1), st.integers(1, 50), st.integers(1, 50))
    def test_bounded_rate(self, z, Q, d, D):
        assert abs(h_sfs(z, Q, d, D)) <= 2.0 / (D * d) + 1e-15

    def test_rejects_D0(self):
        with pytest.raises(ValueError):
            h_sfs(1.0, 0.5, 3, 0)

    def test_closed_form_against_direct_variances(self, rng):
        # V[R_1] - V[f] at D = 1 from the exact second moments of f and |w|^2 f
        d = 4
        z = rng.standard_normal(d) * 0.4
        r2 = float(z @ z)
        Q = q_third(z)
        c = (1 - Q) / d
        Ef = math.exp(-r2 / 2)
        Ef2 = (1 + math.exp(-2 * r2)) / 2
        var_f = Ef2 - Ef**2
        cov_fc = math.exp(-r2 / 2) * (d - r2) - d * Ef  # Cov(f, |w|^2)
        var_c = 2 * d
        # R_1 = f + (1 - Q)(|w|^2 / d) + const
        var_r = var_f + 2 * c * cov_fc + c * c * var_c
        assert_allclose(var_r - var_f, h_sfs(math.sqrt(r2), Q, d, 1), rtol=1e-12)


class TestBounds:
    def test_ssr_limit(self):
        for d in (3, 10, 100):
            assert_allclose(h_ssr(10.0, d), (8 * d + 12) / (d - 2) - 0.5, atol=1e-12)

    def test_ssr_positive(self):
        assert all(h_ssr(z, 10) > 0 for z in np.linspace(0, 10, 101))

    def test_ssr_needs_d_above_2(self):
        with pytest.raises(ValueError):
            h_ssr(1.0, 2)

    def test_orf_zero(self):
        assert h_orf(0.0, 7) == 0.0

    def test_rff_variance(self):
        assert_allclose(rff_variance(1.0, 2), (1 - math.exp(-1)) ** 2 / 4)


class TestCondition:
    def test_examples(self):
        assert condition_J(np.zeros(6)) == 0.0
        assert_allclose(condition_J(np.eye(10)[0]), -0.2197, atol=5e-4)

    @pytest.mark.parametrize("d", [2, 5, 10, 20])
    def test_inside_ball(self, d, rng):
        r = rmax_solve(d)
        for _ in range(200):
            u = rng.standard_normal(d)
            u *= rng.uniform(0.05, 0.999) * r / np.linalg.norm(u)
            assert condition_J(u) < 0

    @pytest.mark.parametrize("d", [1, 3, 10, 54, 200])
    def test_boundary(self, d):
        r = rmax_solve(d)
        assert abs(condition_J(np.full(d, r / math.sqrt(d)))) < 1e-4
        assert condition_J(np.full(d, 1.02 * r / math.sqrt(d))) > 0

    @given(st.integers(1, 8), st.integers(0, 2**31))
    @settings(max_examples=50)
    def test_consistent_with_rule_form(self, d, seed):
        z = np.random.default_rng(seed).standard_normal(d) * 1.5
        Q = q_third(z)
        r2 = float(z @ z)
        other = (1 - Q) - r2 * math.exp(-r2 / 2)
        if abs(other) > 1e-9:
            assert np.sign(condition_J(z)) == np.sign(other)
        assert_allclose(condition_J(z), other, atol=1e-12)

    def test_rmax_values(self):
        assert_allclose(rmax_solve(10), 1.208, atol=1e-3)
        assert_allclose(rmax_solve(22), 1.1909, atol=1e-3)
        assert_allclose(rmax_solve(100), 1.18, atol=1e-3)


class TestEmpiricalVariance:
    def test_constant(self):
        stats = empirical_variance(lambda rng, n: np.full(n, 2.5), 1000, seed=0)
        assert stats.mean == 2.5 and stats.variance == 0.0

    def test_merge_matches_direct(self):
        store = []

        def est(rng, n):
            v = rng.standard_normal(n) * 3 + 1
            store.append(v)
            return v

        stats = empirical_variance(est, 10_000, seed=1, batch=999)
        allv = np.concatenate(store)
        assert_allclose(stats.mean, allv.mean(), rtol=1e-12)
        assert_allclose(stats.variance, allv.var(ddof=1), rtol=1e-10)

    def test_seeded(self):
        f = lambda rng, n: rng.random(n)
        assert empirical_variance(f, 500, seed=4) == empirical_variance(f, 500, seed=4)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            empirical_variance(lambda rng, n: rng.random(n), 1)

    def test_rff_single_feature(self):
        d = 5
        z = np.zeros(d)
        z[0] = 1.0
        stats = empirical_variance(lambda rng, n: np.cos(rng.standard_normal((n, d)) @ z), 1_000_000, seed=2)
        target = (1 - math.exp(-1)) ** 2 / 2
        assert abs(stats.variance - target) < 0.05 * target

    def test_gap_matches_formula(self, rng):
        z = rng.standard_normal(6)
        z *= 0.9 / np.linalg.norm(z)
        rep = variance_report(z, D=1, trials=200_000, seed=3)
        assert abs(rep.empirical_gap - rep.theoretical_gap) < 3 * rep.se_gap
        assert rep.empirical_var_sfs < rep.empirical_var_rff

    def test_paired_gap_identical(self, rng):
        a = rng.standard_normal(100)
        gap, se = paired_variance_gap(a, a)
        assert gap == 0.0 and se == 0.0


class TestFrobenius:
    def test_basic(self, rng):
        K = rng.standard_normal((5, 5))
        assert frobenius_error(K, K) == 0.0
        assert frobenius_error(K, np.zeros_like(K)) == 1.0

    def test_errors(self):
        with pytest.raises(ZeroDivisionError):
            frobenius_error(np.zeros((2, 2)), np.eye(2))
        with pytest.raises(ValueError):
            frobenius_error(np.eye(2), np.eye(3))


class TestWeightedMoment:
    def test_examples(self):
        assert weighted_moment_check(1, 0.0)[0] == 1.0
        a, n = weighted_moment_check(1, 0.5)
        assert_allclose(a, math.exp(-0.125) * 0.75)
        assert_allclose(n, a, atol=1e-6)
        assert weighted_moment_check(3, np.ones(3))[0] == 0.0

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("r", [0.0, 0.5, 1.0, "sqrt_d"])
    def test_quadrature(self, d, r):
        r = math.sqrt(d) if r == "sqrt_d" else r
        z = np.linspace(1.0, 2.0, d)
        z *= r / np.linalg.norm(z)
        a, n = weighted_moment_check(d, z)
        assert_allclose(n, a, atol=1e-6)

    def test_monte_carlo_branch(self):
        z = np.full(5, 0.3)
        a, n = weighted_moment_check(5, z, mc_draws=400_000, seed=1)
        assert abs(a - n) < 0.03


class TestHistogram:
    def test_identical(self):
        h = z_histogram(np.ones((2, 3)), bins=5)
        assert h.counts[0] == 1 and h.counts.sum() == 1

    def test_unit_square(self, rng):
        X = rng.random((300, 2))
        h = z_histogram(X, normalize=False, bins=30)
        assert h.edges[-1] <= math.sqrt(2)
        assert h.n_pairs == 300 * 299 // 2

    def test_subsample_and_fraction(self, rng):
        X = rng.random((1500, 10)) * 0.3
        h = z_histogram(X, n_points=1000, seed=2)
        assert h.n_pairs == 1000 * 999 // 2
        assert 0.0 <= h.fraction_below_rmax <= 1.0
        assert h.fraction_below_rmax == 1.0  # all scaled distances are tiny here
        assert set(h.to_dict()) >= {"counts", "edges", "rmax", "fraction_below_rmax"}

    def test_needs_two(self):
        with pytest.raises(ValueError):
            z_histogram(np.ones((1, 2)))
