"""Stochastic fully symmetric rules: randomized weights and the control-variate estimator."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .rules import DeterministicRule, GeneratorVector, _denominator, sparse_u_vectors

Integrand = Callable[[np.ndarray], np.ndarray]


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_chi(k: float, size=None, rng=None) -> np.ndarray:
    """Chi(k) draws as the square root of a Gamma(k/2, scale=2) draw."""
    rng = make_rng(rng)
    return np.sqrt(rng.gamma(k / 2.0, 2.0, size=size))


@dataclass(frozen=True)
class StochasticWeights:
    a0_tilde: float
    a1_tilde: float
    omega: np.ndarray


@dataclass(frozen=True)
class ControlVariateEstimate:
    value: float
    f_mc: np.ndarray
    m_rule: np.ndarray
    q_rule: float

    @property
    def per_draw(self) -> np.ndarray:
        return self.q_rule + self.f_mc - self.m_rule


def randomized_weights_third(omega, lambda1: float) -> StochasticWeights:
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[-1]
    s = float(omega @ omega)
    l2 = lambda1 * lambda1
    return StochasticWeights(1.0 - s / l2, s / (2.0 * d * l2), omega)


def _randomized_weights_batch(omegas: np.ndarray, lambda1: float) -> tuple[np.ndarray, np.ndarray]:
    s = np.einsum("ij,ij->i", omegas, omegas)
    d = omegas.shape[1]
    l2 = lambda1 * lambda1
    return 1.0 - s / l2, s / (2.0 * d * l2)


def _placements(p: Sequence[int]):
    """Distinct assignments of the nonzero entries of ``p`` to coordinates."""
    values = sorted((v for v in p if v), reverse=True)
    d = len(p)
    seen = set()
    for coords in itertools.permutations(range(d), len(values)):
        key = frozenset(zip(coords, values))
        if key not in seen:
            seen.add(key)
            yield dict(zip(coords, values))


def randomized_weights_general(p: Sequence[int], m: int, d: int, omega, gen: GeneratorVector) -> float:
    """Randomized interpolatory weight for partition ``p``.

    Each factor b_n of the deterministic weight is replaced by its unaveraged
    integrand prod_{j<n}(omega_k**2 - lambda_j**2) evaluated on the coordinate
    it belongs to; the result is averaged over every placement of ``p`` on the
    coordinates so that all nodes of one fully symmetric set share the weight.
    The expectation over omega ~ N(0, I) is the deterministic weight, and for
    m = 1 this reduces to the closed form of :func:`randomized_weights_third`.
    Implemented for m <= 2.
    """
    if m > 2:
        raise NotImplementedError("randomized weights are provided for m <= 2")
    p = tuple(int(v) for v in p)
    if len(p) != d or sum(p) > m:
        raise ValueError(f"{p} is not a {d}-partition with |p|_1 <= {m}")
    if gen.m < m:
        raise ValueError(f"m={m} needs {m + 1} generators")
    w2 = np.asarray(omega, dtype=float) ** 2
    lam2 = [v * v for v in gen.lambdas]
    budget = m - sum(p)
    n_nonzero = sum(1 for v in p if v)

    def factor(k, pk, top):
        num = 1.0
        for j in range(top):
            num *= w2[k] - lam2[j]
        return num / _denominator(pk, top, gen)

    placements = list(_placements(p))
    total = 0.0
    for support in placements:
        for u in sparse_u_vectors(d, budget):
            term = 1.0
            for k in set(u) | set(support):
                pk = support.get(k, 0)
                term *= factor(k, pk, pk + u.get(k, 0))
            total += term
    return total * 2.0 ** (-n_nonzero) / len(placements)


def _check_third(rule3: DeterministicRule) -> float:
    if rule3.degree != 3:
        raise ValueError("the randomized rule reuses the nodes of the degree-3 rule")
    return rule3.lambdas[1]


def m_rule_eval(integrand: Integrand, omega, rule3: DeterministicRule) -> float:
    lambda1 = _check_third(rule3)
    w = randomized_weights_third(omega, lambda1)
    vals = np.asarray(integrand(rule3.nodes), dtype=float)
    return float(w.a0_tilde * vals[0] + w.a1_tilde * vals[1:].sum())


def rbar_estimate(integrand: Integrand, omegas, rule3: DeterministicRule) -> ControlVariateEstimate:
    """Mean over draws of Q(f) + f(omega_i) - M(f, omega_i)."""
    lambda1 = _check_third(rule3)
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    if omegas.shape[0] == 0:
        raise ValueError("need at least one draw")
    if omegas.shape[1] != rule3.dim:
        raise ValueError("draw dimension does not match the rule")
    node_vals = np.asarray(integrand(rule3.nodes), dtype=float)
    q = float(rule3.weights @ node_vals)
    a0, a1 = _randomized_weights_batch(omegas, lambda1)
    m_vals = a0 * node_vals[0] + a1 * node_vals[1:].sum()
    f_vals = np.asarray(integrand(omegas), dtype=float)
    value = float(np.mean(q + f_vals - m_vals))
    return ControlVariateEstimate(value=value, f_mc=f_vals, m_rule=m_vals, q_rule=q)


def draw_omegas(d: int, D: int, seed=None) -> np.ndarray:
    return make_rng(seed).standard_normal((D, d))


def triple_stochastic_eval(integrand: Integrand, Q, rho: float, beta: float) -> float:
    """f(0)(1 - beta/rho^2) + (beta/d) sum_j [f(-rho Q e_j) + f(rho Q e_j)] / (2 rho^2)."""
    Q = np.asarray(Q, dtype=float)
    if rho == 0:
        raise ValueError("rho must be nonzero")
    d = Q.shape[0]
    cols = rho * Q.T  # row j is rho * Q e_j
    pts = np.vstack([np.zeros((1, d)), cols, -cols])
    vals = np.asarray(integrand(pts), dtype=float)
    r2 = rho * rho
    return float(vals[0] * (1.0 - beta / r2) + (beta / d) * vals[1:].sum() / (2.0 * r2))


def sample_triple_stochastic(d: int, seed=None) -> tuple[np.ndarray, float, float]:
    """One draw of (Q Haar-orthogonal, rho ~ chi(d+2), beta).

    beta stands in for sum_i omega_i**2 of the randomized weights, so it is
    drawn chi-square with d degrees of freedom; E[beta] = d keeps the rule
    unbiased.
    """
    from .baselines import haar_orthogonal

    rng = make_rng(seed)
    Q = haar_orthogonal(d, rng)
    return Q, float(sample_chi(d + 2, rng=rng)), float(rng.chisquare(d))


__all__ = [
    "ControlVariateEstimate",
    "StochasticWeights",
    "draw_omegas",
    "m_rule_eval",
    "randomized_weights_general",
    "randomized_weights_third",
    "rbar_estimate",
    "sample_chi",
    "sample_triple_stochastic",
    "triple_stochastic_eval",
]
