"""Variance formulas, the variance-reduction condition and related diagnostics.

Throughout, ``z`` is the scaled difference (x - y) / sqrt(d sigma2) that
enters the Gaussian integrand cos(omega^T z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import optimize

from .rules import SQRT3, apply_rule, build_third_degree
from .stochastic import make_rng


@dataclass(frozen=True)
class VarianceReport:
    z: float
    d: int
    D: int
    theoretical_gap: float
    empirical_var_sfs: float
    empirical_var_rff: float
    se_var_sfs: float
    se_var_rff: float
    empirical_gap: float
    se_gap: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def q_third(z, lambda1: float = SQRT3) -> float:
    """Degree-3 rule applied to cos(omega^T z)."""
    z = np.asarray(z, dtype=float)
    rule = build_third_degree(z.size, lambda1)
    return apply_rule(rule, lambda W: np.cos(W @ z))


def h_sfs_core(z: float, Q: float) -> float:
    a = 1.0 - Q
    e = z * z * math.exp(-z * z / 2.0)
    return (a - 0.5 * e) ** 2 - 0.25 * z**4 * math.exp(-z * z)


def h_sfs(z: float, Q: float, d: int, D: int = 1) -> float:
    """V[S-FS] - V[RFF] = 2 / (D d) * h(z, Q)."""
    if D < 1:
        raise ValueError("D must be >= 1")
    return 2.0 / (D * d) * h_sfs_core(z, Q)


def variance_gap(z, D: int = 1, lambda1: float = SQRT3) -> float:
    """V[S-FS] - V[RFF] at the vector z, with Q from the actual degree-3 rule."""
    z = np.asarray(z, dtype=float)
    return h_sfs(float(np.linalg.norm(z)), q_third(z, lambda1), z.size, D)


def rff_variance(z: float, D: int = 1) -> float:
    return (1.0 - math.exp(-z * z)) ** 2 / (2.0 * D)


def h_ssr(z: float, d: int) -> float:
    if d <= 2:
        raise ValueError("the SSR bound needs d > 2")
    return (8.0 * d + 12.0) / (d - 2.0) - (1.0 - math.exp(-z * z)) ** 2 / 2.0


def h_orf(z: float, d: int) -> float:
    z2 = z * z
    g = math.exp(z2) * (z**8 + 6 * z**6 + 7 * z**4 + z2) / 4.0 \
        + math.exp(z2) * z**4 * (z**6 + 2 * z**4) / (2.0 * d)
    return g / d - (d - 1) * math.exp(-z2) * z**4 / (2.0 * d)


def condition_J(z, lambda1: float = SQRT3) -> float:
    """(d - sum_i cos(lambda1 z_i)) / lambda1^2 - |z|^2 exp(-|z|^2 / 2); negative means reduction."""
    z = np.asarray(z, dtype=float)
    l2 = lambda1 * lambda1
    r2 = float(z @ z)
    return (z.size - float(np.cos(lambda1 * z).sum())) / l2 - r2 * math.exp(-r2 / 2.0)


def _radial_constraint(r: float, d: int) -> float:
    return 1.0 / 3.0 - math.cos(SQRT3 * r / math.sqrt(d)) / 3.0 - r * r / d * math.exp(-r * r / 2.0)


def rmax_solve(d: int, r_hi: float = 10.0, step: float = 1e-3, xtol: float = 1e-10) -> float:
    """Radius where the diagonal-direction condition first stops holding.

    The constraint is negative just above r = 0; the first sign change found
    by scanning is refined by bisection.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    grid = np.arange(step, r_hi + step, step)
    vals = np.array([_radial_constraint(r, d) for r in grid])
    idx = np.nonzero(vals >= 0)[0]
    if idx.size == 0:
        return float("inf")
    k = idx[0]
    if k == 0:
        return 0.0
    return float(optimize.bisect(_radial_constraint, grid[k - 1], grid[k], args=(d,), xtol=xtol))


class SampleStats(NamedTuple):
    mean: float
    variance: float
    stderr: float


def empirical_variance(estimator: Callable[[np.random.Generator, int], np.ndarray], trials: int,
                       seed=0, batch: int = 65536) -> SampleStats:
    """Mean / unbiased variance / standard error of the mean over independent trials.

    ``estimator(rng, n)`` returns n independent trial values. Batches draw
    from child seeds of ``seed`` and are merged with the pairwise Welford
    update, so results do not depend on how batches are scheduled.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    n_batches = -(-trials // batch)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    n, mean, m2 = 0, 0.0, 0.0
    for b, child in enumerate(children):
        size = min(batch, trials - b * batch)
        vals = np.asarray(estimator(np.random.default_rng(child), size), dtype=float)
        nb = vals.size
        mb = float(vals.mean())
        m2b = float(((vals - mb) ** 2).sum())
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    var = m2 / (n - 1)
    return SampleStats(mean, var, math.sqrt(var / n))


def paired_variance_gap(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Var(a) - Var(b) from paired samples and its delta-method standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    ca = (a - a.mean()) ** 2
    cb = (b - b.mean()) ** 2
    diff = ca - cb
    gap = float(diff.sum() / (n - 1))
    return gap, float(diff.std(ddof=1) / math.sqrt(n))


def variance_report(z_vec, D: int = 1, trials: int = 100_000, seed=0, lambda1: float = SQRT3) -> VarianceReport:
    """Empirical V[S-FS] and V[RFF] from common draws, against the closed form."""
    z_vec = np.asarray(z_vec, dtype=float)
    d = z_vec.size
    z = float(np.linalg.norm(z_vec))
    Q = q_third(z_vec, lambda1)
    rng = make_rng(seed)
    W = rng.standard_normal((trials, D, d))
    f = np.cos(W @ z_vec)
    c = (W * W).sum(-1)
    # R_1 = Q + f - M(f, omega) and M = 1 + c (Q - 1) / d for the Gaussian integrand
    r1 = Q + f - (1.0 + c * (Q - 1.0) / d)
    sfs = r1.mean(axis=1)
    rff = f.mean(axis=1)
    gap, se_gap = paired_variance_gap(sfs, rff)

    def var_se(x):
        v = x.var(ddof=1)
        return float(v), float(((x - x.mean()) ** 2).std(ddof=1) / math.sqrt(x.size))

    vs, ses = var_se(sfs)
    vr, ser = var_se(rff)
    return VarianceReport(z, d, D, h_sfs(z, Q, d, D), vs, vr, ses, ser, gap, se_gap)


def frobenius_error(K, Khat) -> float:
    K = np.asarray(K, dtype=float)
    Khat = np.asarray(Khat, dtype=float)
    if K.shape != Khat.shape:
        raise ValueError("shape mismatch")
    den = np.linalg.norm(K)
    if den == 0:
        raise ZeroDivisionError("reference matrix has zero Frobenius norm")
    return float(np.linalg.norm(K - Khat) / den)


def gauss_hermite_tensor(d: int, n: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite rule for N(0, I_d): nodes ``(n**d, d)`` and weights."""
    x, w = hermegauss(n)
    w = w / math.sqrt(2 * math.pi)
    grids = np.meshgrid(*[x] * d, indexing="ij")
    wgrids = np.meshgrid(*[w] * d, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


def weighted_moment_check(d: int, z, n_points: int = 40, mc_draws: int = 1_000_000, seed=0) -> tuple[float, float]:
    """E[cos(omega^T z) |omega|^2] in closed form and by quadrature (d <= 3) or Monte Carlo."""
    z = np.broadcast_to(np.asarray(z, dtype=float), (d,)).copy() if np.ndim(z) == 0 else np.asarray(z, float)
    if z.size != d:
        raise ValueError("z must have d entries")
    r2 = float(z @ z)
    analytic = math.exp(-r2 / 2.0) * (d - r2)
    if d <= 3:
        nodes, weights = gauss_hermite_tensor(d, n_points)
    else:
        nodes = make_rng(seed).standard_normal((mc_draws, d))
        weights = np.full(mc_draws, 1.0 / mc_draws)
    numeric = float(weights @ (np.cos(nodes @ z) * (nodes * nodes).sum(1)))
    return analytic, numeric


@dataclass(frozen=True)
class ZHistogram:
    counts: np.ndarray
    edges: np.ndarray
    rmax: float
    fraction_below_rmax: float
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "edges": self.edges.tolist(),
            "rmax": self.rmax,
            "fraction_below_rmax": self.fraction_below_rmax,
            "n_pairs": self.n_pairs,
        }


def pairwise_z(X, sigma2: float = 1.0, normalize: bool = True) -> np.ndarray:
    """Upper-triangle distances |x_i - x_j|, divided by sqrt(d sigma2) when ``normalize``."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    iu = np.triu_indices(n, k=1)
    sq = (X * X).sum(1)
    D2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)[iu]
    z = np.sqrt(D2)
    return z / math.sqrt(d * sigma2) if normalize else z


def z_histogram(X, n_points: int = 1000, bins: int = 30, seed=0, sigma2: float = 1.0,
                normalize: bool = True) -> ZHistogram:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    if X.shape[0] > n_points:
        X = X[np.sort(make_rng(seed).choice(X.shape[0], n_points, replace=False))]
    z = pairwise_z(X, sigma2, normalize)
    hi = float(z.max()) if z.max() > 0 else 1.0
    counts, edges = np.histogram(z, bins=bins, range=(0.0, hi))
    r = rmax_solve(X.shape[1])
    return ZHistogram(counts, edges, r, float(np.mean(z <= r)), int(z.size))
