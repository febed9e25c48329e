import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import gaussian_moment, monomial, multi_indices
from fsquad.rules import (
    SQRT3,
    DeterministicRule,
    GeneratorVector,
    apply_rule,
    build_fifth_degree,
    build_generic,
    build_third_degree,
    coefficient_b,
    default_generators,
    enumerate_partitions,
    fifth_degree_weights,
    fully_symmetric_set,
    weight,
)


def brute_force_partitions(m, d):
    out = set()
    for v in itertools.product(range(m + 1), repeat=d):
        if sum(v) <= m and all(v[i] >= v[i + 1] for i in range(d - 1)):
            out.add(v)
    return out


class TestPartitions:
    def test_small_cases(self):
        assert enumerate_partitions(0, 3) == [(0, 0, 0)]
        assert set(enumerate_partitions(1, 3)) == {(0, 0, 0), (1, 0, 0)}
        assert set(enumerate_partitions(2, 2)) == {(0, 0), (1, 0), (1, 1), (2, 0)}

    @given(st.integers(0, 4), st.integers(1, 5))
    def test_matches_brute_force(self, m, d):
        parts = enumerate_partitions(m, d)
        assert len(parts) == len(set(parts))
        assert set(parts) == brute_force_partitions(m, d)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            enumerate_partitions(-1, 2)


class TestGenerators:
    def test_requires_zero_first(self):
        with pytest.raises(ValueError):
            GeneratorVector((1.0, 2.0))

    def test_rejects_repeats(self):
        with pytest.raises(ValueError):
            GeneratorVector((0.0, SQRT3, SQRT3))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            GeneratorVector((0.0, -1.0))


class TestCoefficientB:
    def test_values(self):
        g = default_generators(2)
        assert coefficient_b(0, g) == 1.0
        assert coefficient_b(1, g) == 1.0
        assert coefficient_b(2, g) == 0.0

    def test_generic_lambda(self):
        g = GeneratorVector((0.0, 1.5, 2.5))
        # E[x^2 (x^2 - 2.25)] = 3 - 2.25
        assert_allclose(coefficient_b(2, g), 0.75, atol=1e-14)
        # E[x^2 (x^2 - 2.25)(x^2 - 6.25)] = 15 - 8.5 * 3 + 2.25 * 6.25
        assert_allclose(coefficient_b(3, g), 15 - 8.5 * 3 + 2.25 * 6.25, atol=1e-12)

    def test_too_many(self):
        with pytest.raises(ValueError):
            coefficient_b(4, default_generators(2))


class TestWeights:
    def test_third_degree_examples(self):
        g = default_generators(1)
        assert_allclose(weight((0, 0, 0), 1, 3, g), 0.0, atol=1e-15)
        assert_allclose(weight((1, 0, 0), 1, 3, g), 1 / 6)

    def test_fifth_degree_pair_weight(self):
        g = default_generators(2)
        assert_allclose(weight((1, 1, 0, 0), 2, 4, g), 1 / 36)

    def test_fifth_degree_d2_by_hand(self):
        a0, a1, a2, a3 = fifth_degree_weights(2, SQRT3, 2 * SQRT3)
        assert_allclose([a0, a1, a2, a3], [4 / 9, 1 / 9, 1 / 36, 0.0], atol=1e-15)
        assert_allclose(a0 + 4 * a1 + 4 * a2, 1.0, atol=1e-15)

    @pytest.mark.parametrize("lam", [(0.0, SQRT3, 2 * SQRT3), (0.0, 1.2, 2.9), (0.0, 2.0, 0.7)])
    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_closed_form_matches_generic(self, lam, d):
        g = GeneratorVector(lam)
        a0, a1, a2, a3 = fifth_degree_weights(d, lam[1], lam[2])
        got = {p: weight(p, 2, d, g) for p in enumerate_partitions(2, d)}
        z = (0,) * d
        assert_allclose(got[z], a0, rtol=1e-12, atol=1e-12)
        assert_allclose(got[(1,) + z[1:]], a1, rtol=1e-12, atol=1e-12)
        assert_allclose(got[(2,) + z[1:]], a3, rtol=1e-12, atol=1e-12)
        if d >= 2:
            assert_allclose(got[(1, 1) + z[2:]], a2, rtol=1e-12, atol=1e-12)

    def test_equal_generators_error(self):
        with pytest.raises(ValueError):
            fifth_degree_weights(3, 2.0, 2.0)


class TestBuilders:
    def test_third_degree_d3(self):
        r = build_third_degree(3)
        assert r.n_nodes == 7
        assert_allclose(r.weights[0], 0.0, atol=1e-15)
        assert_allclose(r.weights[1:], 1 / 6)

    def test_third_degree_d1_is_gauss_hermite(self):
        x, w = np.polynomial.hermite_e.hermegauss(3)
        w = w / math.sqrt(2 * math.pi)
        r = build_third_degree(1)
        order = np.argsort(r.nodes[:, 0])
        assert_allclose(r.nodes[order, 0], x, atol=1e-14)
        assert_allclose(r.weights[order], w, atol=1e-14)

    @given(st.integers(1, 40), st.floats(0.5, 4.0))
    def test_third_degree_counts_and_sum(self, d, lam):
        r = build_third_degree(d, lam)
        assert r.n_nodes == 2 * d + 1
        assert_allclose(r.weights.sum(), 1.0, atol=1e-12)

    @pytest.mark.parametrize("d,n", [(1, 3), (2, 9), (10, 201), (16, 513), (22, 969), (54, 5833)])
    def test_fifth_degree_counts(self, d, n):
        r = build_fifth_degree(d)
        assert r.n_nodes == n == 1 + 2 * d * d
        assert_allclose(r.weights.sum(), 1.0, atol=1e-12)

    def test_fifth_degree_keeps_lambda2_family_off_sqrt3(self):
        r = build_fifth_degree(3, 1.5, 2.5)
        assert r.n_nodes == 1 + 2 * 3 * 3 + 2 * 3
        assert_allclose(r.weights.sum(), 1.0, atol=1e-12)

    def test_node_order(self):
        r = build_fifth_degree(3)
        l = SQRT3
        assert_allclose(r.nodes[0], 0)
        assert_allclose(r.nodes[1:7], [[l, 0, 0], [-l, 0, 0], [0, l, 0], [0, -l, 0], [0, 0, l], [0, 0, -l]])
        assert_allclose(r.nodes[7:11], [[l, l, 0], [l, -l, 0], [-l, l, 0], [-l, -l, 0]])
        assert_allclose(r.nodes[11], [l, 0, l])

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_generic_builder_agrees(self, d):
        gen = GeneratorVector((0.0, 1.3, 2.2))
        fast = build_fifth_degree(d, 1.3, 2.2)
        slow = build_generic(2, d, gen)
        for f in (lambda W: np.cos(W @ np.linspace(0.1, 0.5, d)), lambda W: np.exp(-0.1 * (W**2).sum(1))):
            assert_allclose(apply_rule(fast, f), apply_rule(slow, f), atol=1e-12)

    @given(st.integers(1, 6))
    def test_full_symmetry(self, d):
        r = build_fifth_degree(d, 1.4, 2.1)
        pts = {tuple(np.round(n, 12)) for n in r.nodes}
        for n in r.nodes:
            for k in range(d):
                m = n.copy()
                m[k] = -m[k]
                assert tuple(np.round(m, 12)) in pts

    def test_fully_symmetric_set_size(self):
        g = default_generators(2)
        assert fully_symmetric_set((1, 1, 0), g).shape == (12, 3)
        assert fully_symmetric_set((0, 0, 0), g).shape == (1, 3)

    def test_json_roundtrip(self):
        r = build_fifth_degree(3)
        doc = json.loads(r.to_json())
        assert set(doc) == {"dim", "degree", "lambdas", "nodes", "weights"}
        back = DeterministicRule.from_json(r.to_json())
        assert_allclose(back.nodes, r.nodes)
        assert_allclose(back.weights, r.weights)

    def test_rules_are_immutable(self):
        r = build_third_degree(2)
        with pytest.raises(ValueError):
            r.weights[0] = 5.0


class TestExactness:
    def test_examples(self):
        r3, r5 = build_third_degree(2), build_fifth_degree(2)
        assert_allclose(apply_rule(r3, lambda W: np.ones(len(W))), 1.0, atol=1e-14)
        assert_allclose(apply_rule(r3, monomial([2, 0])), 1.0, atol=1e-14)
        assert_allclose(apply_rule(r5, monomial([2, 2])), 1.0, atol=1e-14)
        assert_allclose(apply_rule(r3, monomial([2, 2])), 0.0, atol=1e-14)

    @pytest.mark.parametrize("d", [1, 2, 5, 9])
    def test_third_degree(self, d):
        r = build_third_degree(d)
        for alpha in multi_indices(d, 3):
            assert_allclose(apply_rule(r, monomial(alpha)), gaussian_moment(alpha), atol=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 4])
    def test_fifth_degree(self, d):
        r = build_fifth_degree(d)
        for alpha in multi_indices(d, 5):
            assert_allclose(apply_rule(r, monomial(alpha)), gaussian_moment(alpha), atol=1e-10)

    @given(st.integers(1, 6), st.lists(st.integers(0, 5), min_size=6, max_size=6))
    @settings(max_examples=60)
    def test_odd_monomials_vanish(self, d, exps):
        alpha = np.array(exps[:d])
        if not np.any(alpha % 2):
            alpha[0] += 1
        for r in (build_third_degree(d), build_fifth_degree(d)):
            assert abs(apply_rule(r, monomial(alpha))) < 1e-12

    @given(st.integers(1, 5), st.floats(1.0, 6.0), st.floats(1.0, 6.0))
    @settings(max_examples=40)
    def test_lambda2_irrelevant_at_sqrt3(self, d, l2a, l2b):
        if abs(l2a - SQRT3) < 1e-3 or abs(l2b - SQRT3) < 1e-3:
            return
        z = np.linspace(-0.7, 0.9, d)
        f = lambda W: np.cos(W @ z) + (W**2).sum(1) ** 2
        a = apply_rule(build_fifth_degree(d, SQRT3, l2a), f)
        b = apply_rule(build_fifth_degree(d, SQRT3, l2b), f)
        assert_allclose(a, b, atol=1e-12)

    @pytest.mark.parametrize("d", [1, 2])
    def test_against_tensor_gauss_hermite(self, d):
        x, w = np.polynomial.hermite_e.hermegauss(24)
        w = w / math.sqrt(2 * math.pi)
        grid = np.array(list(itertools.product(x, repeat=d)))
        wt = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
        z = np.array([0.4, -0.3])[:d]
        f = lambda W: np.cos(W @ z)
        exact = float(wt @ f(grid))
        assert_allclose(exact, math.exp(-0.5 * z @ z), atol=1e-12)
        # truncation error of the cubature at |z| ~ 0.5 is a few 1e-3 (deg 3) and 1e-4 (deg 5)
        assert abs(apply_rule(build_third_degree(d), f) - exact) < 5e-3
        assert abs(apply_rule(build_fifth_degree(d), f) - exact) < 5e-4
        for alpha in multi_indices(d, 5):
            assert_allclose(apply_rule(build_fifth_degree(d), monomial(alpha)), float(wt @ monomial(alpha)(grid)),
                            atol=1e-10)
