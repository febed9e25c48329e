"""Exact kernels used as ground truth.

All three families are expectations over omega ~ N(0, I_d) of
<phi(omega^T x), phi(omega^T y)>:

* ``gaussian``: phi = (cos, sin) on inputs scaled by 1 / sqrt(d * sigma2), giving
  exp(-|x - y|^2 / (2 d sigma2)).
* ``arccos0``: phi = sqrt(2) * Heaviside, giving 1 - theta / pi.
* ``arccos1``: phi = sqrt(2) * ReLU, giving |x||y|(sin theta + (pi - theta) cos theta) / pi.

The sqrt(2) factor puts the arc-cosine kernels in their usual normalisation
(k(x, x) = |x|^2 for order one).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

FAMILIES = ("gaussian", "arccos0", "arccos1")


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    sigma2: float = 1.0
    d: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "gaussian" and not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    def input_scale(self, d: int) -> float:
        """Factor applied to projections omega^T x before the activation."""
        if self.family == "gaussian":
            return 1.0 / math.sqrt((self.d or d) * self.sigma2)
        return 1.0


@functools.lru_cache(maxsize=1)
def _heaviside_table(n: int = 1025) -> tuple[np.ndarray, np.ndarray]:
    # P(omega^T x > 0, omega^T y > 0) depends only on the angle; integrate the
    # indicator of both half-planes over the direction of the 2-D projection.
    thetas = np.linspace(0.0, math.pi, n)
    vals = np.empty(n)
    for k, th in enumerate(thetas):
        g = lambda psi, th=th: float(math.cos(psi) > 0 and math.cos(psi - th) > 0)
        brk = sorted({math.pi / 2, 3 * math.pi / 2, (th + math.pi / 2) % (2 * math.pi),
                      (th + 3 * math.pi / 2) % (2 * math.pi)})
        val, _ = integrate.quad(g, 0.0, 2 * math.pi, points=brk, limit=200, epsabs=1e-13)
        vals[k] = 2.0 * val / (2 * math.pi)
    return thetas, vals


def _angles(xn, yn, dots):
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = dots / (xn * yn)
    cos = np.clip(np.nan_to_num(cos), -1.0, 1.0)
    return np.arccos(cos)


def _gram(spec: KernelSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    if spec.family == "gaussian":
        sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
        sq = np.maximum(sq, 0.0)
        return np.exp(-sq / (2.0 * (spec.d or d) * spec.sigma2))
    xn = np.linalg.norm(X, axis=1)[:, None]
    yn = np.linalg.norm(Y, axis=1)[None, :]
    theta = _angles(xn, yn, X @ Y.T)
    zero = (xn == 0) | (yn == 0)
    if spec.family == "arccos0":
        grid, table = _heaviside_table()
        out = np.interp(theta, grid, table)
    else:
        out = xn * yn * (np.sin(theta) + (math.pi - theta) * np.cos(theta)) / math.pi
    return np.where(zero, 0.0, out)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y differ in dimension")
    if spec.family == "gaussian":
        # direct difference keeps k(x, y) = k(y, x) bit-for-bit
        diff = x - y
        return float(math.exp(-float(diff @ diff) / (2.0 * (spec.d or x.size) * spec.sigma2)))
    return float(_gram(spec, x[None, :], y[None, :])[0, 0])


def gram_matrix(spec: KernelSpec, X, Y=None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if Y is None:
        K = _gram(spec, X, X)
        K = 0.5 * (K + K.T)
        if spec.family == "gaussian":
            np.fill_diagonal(K, 1.0)
        return K
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y differ in dimension")
    return _gram(spec, X, Y)
