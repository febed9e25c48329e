"""Comparison feature maps: RFF, ORF, ROM, QMC, GQ, SGQ and SSR.

Every generator returns a :class:`~fsquad.features.FeatureMap` whose nodes
live in the canonical N(0, I_d) frame; kernel width enters through
``input_scale``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special
from scipy.stats import qmc

from .features import Activation, FeatureMap
from .rules import SQRT3, build_third_degree
from .stochastic import make_rng, sample_chi

BASELINE_KINDS = ("RFF", "ORF", "ROM", "QMC", "GQ", "SGQ", "SSR")


@dataclass
class BaselineConfig:
    kind: str
    N: int
    seed: int | None = 0
    sigma2: float = 1.0
    rom_blocks: int = 3
    qmc_skip: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}; expected one of {BASELINE_KINDS}")
        if self.N < 1:
            raise ValueError("N must be >= 1")


def haar_orthogonal(d: int, seed=None) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR of a Gaussian matrix."""
    rng = make_rng(seed)
    G = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))


def _map(nodes: np.ndarray, weights, kind, activation, input_scale, **meta) -> FeatureMap:
    return FeatureMap(
        transform=np.ascontiguousarray(nodes.T),
        weights=np.asarray(weights, dtype=float),
        activation=activation or Activation(),
        kind=kind,
        input_scale=input_scale,
        meta=meta,
    )


def rff_matrix(d: int, N: int, input_scale: float = 1.0, seed=None, activation=None) -> FeatureMap:
    nodes = make_rng(seed).standard_normal((N, d))
    return _map(nodes, np.full(N, 1.0 / N), "RFF", activation, input_scale, seed=seed)


def orf_matrix(d: int, N: int, input_scale: float = 1.0, seed=None, activation=None) -> FeatureMap:
    """Stacked blocks of Haar rows, each row rescaled by an independent chi(d) length."""
    rng = make_rng(seed)
    blocks = []
    for _ in range(-(-N // d)):
        Q = haar_orthogonal(d, rng)
        blocks.append(sample_chi(d, size=d, rng=rng)[:, None] * Q)
    nodes = np.vstack(blocks)[:N]
    return _map(nodes, np.full(N, 1.0 / N), "ORF", activation, input_scale, seed=seed)


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def rom_blocks(d: int, t: int = 3, seed=None) -> np.ndarray:
    """One ``p x p`` product of ``t`` factors H Lambda_i with p the next power of two."""
    rng = make_rng(seed)
    p = next_pow2(d)
    H = linalg.hadamard(p).astype(float) / math.sqrt(p)
    M = np.eye(p)
    for _ in range(t):
        signs = rng.choice((-1.0, 1.0), size=p)
        M = M @ (H * signs)
    return M


def rom_matrix(d: int, N: int, input_scale: float = 1.0, t: int = 3, seed=None,
               activation=None) -> FeatureMap:
    """Structured orthogonal rows sqrt(p) * prod_i H Lambda_i, truncated to the first d inputs.

    Inputs are implicitly zero-padded to p; scaling by sqrt(p) gives rows with
    E|row[:d]|^2 = d, matching Gaussian directions.
    """
    rng = make_rng(seed)
    p = next_pow2(d)
    blocks = []
    for _ in range(-(-N // p)):
        blocks.append(math.sqrt(p) * rom_blocks(d, t, rng)[:, :d])
    nodes = np.vstack(blocks)[:N]
    return _map(nodes, np.full(N, 1.0 / N), "ROM", activation, input_scale, seed=seed, t=t)


def halton(n: int, d: int, skip: int = 1) -> np.ndarray:
    """Unscrambled Halton points with indices ``skip, skip+1, ...`` (bases are the first d primes)."""
    eng = qmc.Halton(d, scramble=False)
    if skip:
        eng.fast_forward(skip)
    return eng.random(n)


def inverse_normal_cdf(u) -> np.ndarray:
    return special.ndtri(np.asarray(u, dtype=float))


def qmc_matrix(d: int, N: int, input_scale: float = 1.0, skip: int = 1, activation=None) -> FeatureMap:
    nodes = inverse_normal_cdf(halton(N, d, skip))
    return _map(nodes, np.full(N, 1.0 / N), "QMC", activation, input_scale, skip=skip)


_GH3_NODES = np.array([-SQRT3, 0.0, SQRT3])
_GH3_WEIGHTS = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])


def gq_map(d: int, N: int, input_scale: float = 1.0, seed=None, activation=None) -> FeatureMap:
    """3-point Gauss-Hermite product rule, subsampled to N nodes when 3**d > N.

    Nodes are drawn i.i.d. with probability equal to their product weight, so
    each sampled node carries weight 1/N and the estimator's mean is the full
    product rule.
    """
    if d * math.log(3) <= math.log(max(N, 1)) + 1e-12:
        idx = np.array(np.meshgrid(*[np.arange(3)] * d, indexing="ij")).reshape(d, -1).T
        nodes = _GH3_NODES[idx]
        weights = np.prod(_GH3_WEIGHTS[idx], axis=1)
        return _map(nodes, weights, "GQ", activation, input_scale, seed=seed, subsampled=False)
    rng = make_rng(seed)
    idx = rng.choice(3, size=(N, d), p=_GH3_WEIGHTS)
    return _map(_GH3_NODES[idx], np.full(N, 1.0 / N), "GQ", activation, input_scale,
                seed=seed, subsampled=True)


def sgq_third_map(d: int, lambda1: float = SQRT3, input_scale: float = 1.0, a0_hat: float | None = None,
                  p1_hat: float | None = None, a1_hat: float | None = None, activation=None) -> FeatureMap:
    """Degree-3 sparse grid from the univariate rule {-p1, 0, p1} with weights (a1, a0, a1).

    Defaults map the univariate rule onto the generator lambda1:
    a0 = 1 - 1/lambda1^2, p1 = lambda1, a1 = 1/(2 lambda1^2).
    """
    l2 = lambda1 * lambda1
    a0_hat = 1.0 - 1.0 / l2 if a0_hat is None else a0_hat
    p1_hat = lambda1 if p1_hat is None else p1_hat
    a1_hat = 1.0 / (2.0 * l2) if a1_hat is None else a1_hat
    rule = build_third_degree(d, p1_hat)
    weights = np.concatenate([[1.0 - d + d * a0_hat], np.full(2 * d, a1_hat)])
    return _map(rule.nodes, weights, "SGQ", activation, input_scale, lambda1=lambda1)


def ssr_rule(Q, rho: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes {0, +-rho Q e_j} with weights {1 - d/rho^2, 1/(2 rho^2)}, in the degree-3 node order."""
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    nodes = np.zeros((2 * d + 1, d))
    nodes[1::2] = rho * Q.T
    nodes[2::2] = -rho * Q.T
    weights = np.concatenate([[1.0 - d / rho**2], np.full(2 * d, 1.0 / (2.0 * rho**2))])
    return nodes, weights


def ssr_block(d: int, rng) -> tuple[np.ndarray, np.ndarray]:
    Q = haar_orthogonal(d, rng)
    return ssr_rule(Q, float(sample_chi(d + 2, rng=rng)))


def ssr_map(d: int, N: int, input_scale: float = 1.0, seed=None, activation=None) -> FeatureMap:
    """Stochastic spherical-radial rule; ceil(N / (2d+1)) whole blocks, averaged.

    Whole blocks are kept so that every realisation integrates constants exactly.
    """
    rng = make_rng(seed)
    n_blocks = max(1, -(-N // (2 * d + 1)))
    nodes, weights = zip(*(ssr_block(d, rng) for _ in range(n_blocks)))
    return _map(np.vstack(nodes), np.concatenate(weights) / n_blocks, "SSR", activation, input_scale,
                seed=seed, blocks=n_blocks)


def unit_sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def spherical_rule(Q) -> tuple[np.ndarray, np.ndarray]:
    """Degree-3 stochastic spherical rule: nodes +-Q e_j, equal weights |U_d| / (2d)."""
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    nodes = np.empty((2 * d, d))
    nodes[0::2] = Q.T
    nodes[1::2] = -Q.T
    return nodes, np.full(2 * d, unit_sphere_area(d) / (2 * d))


def spherical_rule_from_dfs(Q, lambda1: float = SQRT3) -> tuple[np.ndarray, np.ndarray]:
    """Project the degree-3 rule onto the unit sphere after rotating it by Q.

    The rule is rewritten for the weight exp(-|w|^2) (nodes / sqrt 2, weights
    * pi^(d/2)), the origin is dropped, each node is rotated and normalised, and
    its weight becomes a_j |node_j|^2 / (Gamma(d/2 + 1) / 2), the degree-2
    radial moment correction.
    """
    Q = np.asarray(Q, dtype=float)
    d = Q.shape[0]
    rule = build_third_degree(d, lambda1)
    nodes = rule.nodes[1:] / math.sqrt(2.0)
    weights = rule.weights[1:] * math.pi ** (d / 2)
    rotated = nodes @ Q.T
    norms = np.linalg.norm(rotated, axis=1)
    sphere = rotated / norms[:, None]
    radial = math.gamma(d / 2 + 1) / 2.0
    return sphere, weights * norms**2 / radial


def build_baseline(cfg: BaselineConfig, d: int, input_scale: float = 1.0, activation=None) -> FeatureMap:
    k = cfg.kind
    if k == "RFF":
        return rff_matrix(d, cfg.N, input_scale, cfg.seed, activation)
    if k == "ORF":
        return orf_matrix(d, cfg.N, input_scale, cfg.seed, activation)
    if k == "ROM":
        return rom_matrix(d, cfg.N, input_scale, cfg.rom_blocks, cfg.seed, activation)
    if k == "QMC":
        return qmc_matrix(d, cfg.N, input_scale, cfg.qmc_skip, activation)
    if k == "GQ":
        return gq_map(d, cfg.N, input_scale, cfg.seed, activation)
    if k == "SGQ":
        return sgq_third_map(d, input_scale=input_scale, activation=activation)
    return ssr_map(d, cfg.N, input_scale, cfg.seed, activation)
