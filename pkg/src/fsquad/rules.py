"""Deterministic fully symmetric interpolatory rules for the standard Gaussian measure.

A rule is a finite set of signed-weight nodes that integrates every polynomial
of total degree ``2m + 1`` exactly against N(0, I_d). Nodes are generated from
a generator vector ``(0, lambda_1, ..., lambda_m)`` by coordinate permutations
and sign changes.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SQRT3 = math.sqrt(3.0)

# 3 - lambda_1**2 evaluates to ~4e-16 at lambda_1 = sqrt(3); below this it is zero.
_VANISH_TOL = 1e-12


@dataclass(frozen=True)
class GeneratorVector:
    """Generators ``(lambda_0 = 0, lambda_1, ..., lambda_m)``."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if not lam or lam[0] != 0.0:
            raise ValueError("generator vector must start with lambda_0 = 0")
        if any(v < 0 for v in lam):
            raise ValueError("generators must be non-negative")
        sq = [v * v for v in lam]
        for i, j in itertools.combinations(range(len(sq)), 2):
            if sq[i] == sq[j]:
                raise ValueError(
                    f"generators lambda_{i} and lambda_{j} coincide; "
                    "interpolatory weights divide by their squared difference"
                )

    @property
    def m(self) -> int:
        return len(self.lambdas) - 1

    def __getitem__(self, i: int) -> float:
        return self.lambdas[i]


def default_generators(m: int = 2) -> GeneratorVector:
    """``(0, sqrt(3), 2 sqrt(3))`` truncated to ``m + 1`` entries.

    With lambda_1 = sqrt(3) every weight that involves lambda_2 vanishes, so
    the value 2 sqrt(3) only keeps denominators finite.
    """
    return GeneratorVector((0.0, SQRT3, 2.0 * SQRT3)[: m + 1])


@dataclass(frozen=True)
class DeterministicRule:
    dim: int
    degree: int
    lambdas: tuple[float, ...]
    nodes: np.ndarray
    weights: np.ndarray
    families: tuple[str, ...] = field(default=())

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, self.dim)
        weights = np.array(self.weights, dtype=float).ravel()
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("nodes and weights differ in length")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "lambdas": list(self.lambdas),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "DeterministicRule":
        return cls(
            dim=int(doc["dim"]),
            degree=int(doc["degree"]),
            lambdas=tuple(doc["lambdas"]),
            nodes=np.asarray(doc["nodes"], dtype=float).reshape(-1, int(doc["dim"])),
            weights=np.asarray(doc["weights"], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "DeterministicRule":
        return cls.from_dict(json.loads(text))


def enumerate_partitions(m: int, d: int) -> list[tuple[int, ...]]:
    """All non-increasing length-``d`` integer vectors with entries summing to at most ``m``."""
    if m < 0 or d < 1:
        raise ValueError("need m >= 0 and d >= 1")
    out = []

    def rec(prefix, remaining, cap):
        if len(prefix) == d:
            out.append(tuple(prefix))
            return
        for v in range(min(cap, remaining), -1, -1):
            rec(prefix + [v], remaining - v, v)

    rec([], m, m)
    return sorted(out, key=lambda p: (sum(p), tuple(-v for v in p)))


def normal_even_moment(k: int) -> int:
    """E[x**(2k)] for x ~ N(0, 1), i.e. (2k - 1)!!."""
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


def coefficient_b(i: int, gen: GeneratorVector) -> float:
    """E[prod_{j<i} (x**2 - lambda_j**2)] under the standard normal; ``b_0 = 1``."""
    if i < 0:
        raise ValueError("i must be non-negative")
    if i > len(gen.lambdas):
        raise ValueError(f"b_{i} needs generators lambda_0..lambda_{i - 1}")
    # polynomial in s = x**2, coefficients low -> high
    poly = np.array([1.0])
    for j in range(i):
        poly = np.convolve(poly, [-gen[j] ** 2, 1.0])
    value = sum(c * normal_even_moment(k) for k, c in enumerate(poly))
    if i > 0 and abs(value) < _VANISH_TOL * max(1.0, np.abs(poly).max()):
        value = 0.0
    return float(value)


def _denominator(p_i: int, top: int, gen: GeneratorVector) -> float:
    out = 1.0
    for j in range(top + 1):
        if j != p_i:
            out *= gen[p_i] ** 2 - gen[j] ** 2
    return out


def sparse_u_vectors(d: int, budget: int):
    """Yield ``{coord: count}`` for every u in N^d with ``|u|_1 <= budget``."""
    for size in range(budget + 1):
        for combo in itertools.combinations_with_replacement(range(d), size):
            yield Counter(combo)


def weight(p: Sequence[int], m: int, d: int, gen: GeneratorVector) -> float:
    """Interpolatory weight of partition ``p`` by direct summation over ``u``.

    Generic and slow; the builders below use closed forms for m <= 2 and this
    routine audits them.
    """
    p = tuple(int(v) for v in p)
    if len(p) != d or sum(p) > m or any(v < 0 for v in p):
        raise ValueError(f"{p} is not a {d}-partition with |p|_1 <= {m}")
    if gen.m < m:
        raise ValueError(f"degree parameter m={m} needs {m + 1} generators")
    b = [coefficient_b(i, gen) for i in range(m + 1)]
    support = {k: v for k, v in enumerate(p) if v}
    n_nonzero = len(support)
    total = 0.0
    for u in sparse_u_vectors(d, m - sum(p)):
        term = 1.0
        for k in set(u) | set(support):
            pk = support.get(k, 0)
            top = pk + u.get(k, 0)
            term *= b[top] / _denominator(pk, top, gen)
        total += term
    return total * 2.0 ** (-n_nonzero)


def fully_symmetric_set(p: Sequence[int], gen: GeneratorVector) -> np.ndarray:
    """All distinct sign/permutation images of ``lambda_p``, deterministic order."""
    p = tuple(p)
    d = len(p)
    pts = []
    seen = set()
    for q in sorted(set(itertools.permutations(p)), reverse=True):
        nz = [k for k in range(d) if q[k]]
        for signs in itertools.product((1.0, -1.0), repeat=len(nz)):
            v = [0.0] * d
            for k, s in zip(nz, signs):
                v[k] = s * gen[q[k]]
            key = tuple(v)
            if key not in seen:
                seen.add(key)
                pts.append(v)
    return np.array(pts, dtype=float).reshape(-1, d)


def third_degree_weights(d: int, lambda1: float) -> tuple[float, float]:
    l2 = lambda1 * lambda1
    return 1.0 - d / l2, 1.0 / (2.0 * l2)


def fifth_degree_weights(d: int, lambda1: float, lambda2: float) -> tuple[float, float, float, float]:
    """Closed-form (a0, a1, a2, a3) for the degree-5 rule."""
    l1, l2 = lambda1 * lambda1, lambda2 * lambda2
    if l1 == l2:
        raise ValueError("lambda1 and lambda2 must differ")
    b2 = 3.0 - l1
    if abs(b2) < _VANISH_TOL:
        b2 = 0.0
    a0 = 1.0 - d / l1 + d * (d - 1) / (2.0 * l1 * l1) + d * b2 / (l1 * l2)
    a1 = 1.0 / (2.0 * l1) + b2 / (2.0 * l1 * (l1 - l2)) - (d - 1) / (2.0 * l1 * l1)
    a2 = 1.0 / (4.0 * l1 * l1)
    a3 = b2 / (2.0 * l2 * (l2 - l1))
    return a0, a1, a2, a3


def _axis_nodes(d: int, radius: float) -> np.ndarray:
    # +e_1, -e_1, +e_2, -e_2, ...
    out = np.zeros((2 * d, d))
    idx = np.arange(d)
    out[2 * idx, idx] = radius
    out[2 * idx + 1, idx] = -radius
    return out


def _pair_nodes(d: int, radius: float) -> np.ndarray:
    pairs = list(itertools.combinations(range(d), 2))
    out = np.zeros((4 * len(pairs), d))
    for n, (i, t) in enumerate(pairs):
        for s, (si, st) in enumerate(((1, 1), (1, -1), (-1, 1), (-1, -1))):
            out[4 * n + s, i] = si * radius
            out[4 * n + s, t] = st * radius
    return out


def build_third_degree(d: int, lambda1: float = SQRT3) -> DeterministicRule:
    if d < 1 or lambda1 <= 0:
        raise ValueError("need d >= 1 and lambda1 > 0")
    a0, a1 = third_degree_weights(d, lambda1)
    nodes = np.vstack([np.zeros((1, d)), _axis_nodes(d, lambda1)])
    weights = np.concatenate([[a0], np.full(2 * d, a1)])
    return DeterministicRule(
        dim=d, degree=3, lambdas=(0.0, lambda1), nodes=nodes, weights=weights,
        families=("origin",) + ("axis",) * (2 * d),
    )


def build_fifth_degree(d: int, lambda1: float = SQRT3, lambda2: float = 2 * SQRT3) -> DeterministicRule:
    """Degree-5 rule; the +-lambda2 e_i family is omitted when its weight is zero."""
    if d < 1 or lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("need d >= 1 and positive generators")
    a0, a1, a2, a3 = fifth_degree_weights(d, lambda1, lambda2)
    blocks = [np.zeros((1, d)), _axis_nodes(d, lambda1), _pair_nodes(d, lambda1)]
    wts = [[a0], np.full(2 * d, a1), np.full(2 * d * (d - 1), a2)]
    fams = ["origin"] + ["axis"] * (2 * d) + ["pair"] * (2 * d * (d - 1))
    if a3 != 0.0:
        blocks.append(_axis_nodes(d, lambda2))
        wts.append(np.full(2 * d, a3))
        fams += ["axis2"] * (2 * d)
    return DeterministicRule(
        dim=d, degree=5, lambdas=(0.0, lambda1, lambda2),
        nodes=np.vstack(blocks), weights=np.concatenate(wts), families=tuple(fams),
    )


def build_generic(m: int, d: int, gen: GeneratorVector | None = None) -> DeterministicRule:
    """Rule assembled from :func:`weight` over every partition. Audit path only."""
    gen = gen or default_generators(m)
    nodes, weights = [], []
    for p in enumerate_partitions(m, d):
        a = weight(p, m, d, gen)
        pts = fully_symmetric_set(p, gen)
        nodes.append(pts)
        weights.append(np.full(len(pts), a))
    return DeterministicRule(
        dim=d, degree=2 * m + 1, lambdas=gen.lambdas,
        nodes=np.vstack(nodes), weights=np.concatenate(weights),
    )


def apply_rule(rule: DeterministicRule, integrand: Callable[[np.ndarray], np.ndarray]) -> float:
    """Weighted sum of ``integrand`` over the rule nodes.

    ``integrand`` is vectorised: it maps an ``(n, d)`` array of points to ``n`` values.
    """
    values = np.asarray(integrand(rule.nodes), dtype=float)
    return float(rule.weights @ values)
