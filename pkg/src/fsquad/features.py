"""Explicit feature maps built from quadrature rules.

A map keeps its nodes as the columns of a ``d x N`` transform together with
one signed weight per node. Features are ``sqrt(|w_c|) * phi(scale * x^T W_c)``
and the kernel estimate is the *signed* inner product
``sum_c sign(w_c) * Phi_c(x) * Phi_c(y)``. Carrying the sign separately is
the real-arithmetic form of using imaginary square roots for negative weights.

Column layout of a realised feature matrix: for ``cos_sin`` the first N
columns are cosines of the N projections and the next N are sines; the other
activations produce N columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse

from .kernels import KernelSpec
from .rules import DeterministicRule
from .stochastic import _randomized_weights_batch, make_rng

ACTIVATIONS = ("cos_sin", "heaviside", "relu")
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Activation:
    kind: str = "cos_sin"

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}")

    @property
    def output_width(self) -> int:
        return 2 if self.kind == "cos_sin" else 1

    def __call__(self, proj: np.ndarray) -> np.ndarray:
        if self.kind == "cos_sin":
            return np.concatenate([np.cos(proj), np.sin(proj)], axis=-1)
        if self.kind == "heaviside":
            return _SQRT2 * (proj > 0).astype(float)
        return _SQRT2 * np.maximum(proj, 0.0)

    def pair_product(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        """<phi(s), phi(t)> elementwise."""
        if self.kind == "cos_sin":
            return np.cos(s) * np.cos(t) + np.sin(s) * np.sin(t)
        if self.kind == "heaviside":
            return 2.0 * ((s > 0) & (t > 0))
        return 2.0 * np.maximum(s, 0.0) * np.maximum(t, 0.0)


def activation_for(spec: KernelSpec) -> Activation:
    return Activation({"gaussian": "cos_sin", "arccos0": "heaviside", "arccos1": "relu"}[spec.family])


@dataclass(frozen=True)
class FeatureMap:
    transform: object  # ndarray or scipy sparse, shape (d, N)
    weights: np.ndarray
    activation: Activation
    kind: str
    input_scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if self.transform.shape[1] != w.shape[0]:
            raise ValueError("transform columns and weights differ in count")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.transform.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.n_nodes * self.activation.output_width

    @property
    def nodes(self) -> np.ndarray:
        """Nodes as rows, ``(N, d)``, without the input scale."""
        T = self.transform.toarray() if sparse.issparse(self.transform) else np.asarray(self.transform)
        return T.T

    @property
    def signs(self) -> np.ndarray:
        s = np.where(self.weights < 0, -1.0, 1.0)
        return np.tile(s, self.activation.output_width)

    def nnz(self) -> int:
        if sparse.issparse(self.transform):
            return int(self.transform.count_nonzero())
        return int(np.count_nonzero(self.transform))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "activation": self.activation.kind,
            "input_scale": self.input_scale,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "meta": {k: v for k, v in self.meta.items() if _jsonable(v)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureMap":
        nodes = np.asarray(doc["nodes"], dtype=float)
        return cls(
            transform=nodes.T.copy(),
            weights=np.asarray(doc["weights"], dtype=float),
            activation=Activation(doc["activation"]),
            kind=doc["kind"],
            input_scale=float(doc["input_scale"]),
            meta=dict(doc.get("meta", {})),
        )


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
    except TypeError:
        return False
    return True


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    signs: np.ndarray
    kind: str = ""

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        header = "signs," + ",".join(f"{s:+.0f}" for s in self.signs)
        np.savetxt(path, self.values, delimiter=",", header=header, comments="# ")

    @classmethod
    def from_csv(cls, path, kind: str = "") -> "FeatureMatrix":
        with open(path) as fh:
            first = fh.readline()
        signs = np.array([float(v) for v in first.lstrip("# ").strip().split(",")[1:]])
        values = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(values, signs, kind)


def _rule_transform(rule: DeterministicRule):
    return sparse.csc_matrix(rule.nodes.T)


def build_dfs_map(rule: DeterministicRule, activation: Activation | None = None,
                  input_scale: float = 1.0) -> FeatureMap:
    activation = activation or Activation()
    return FeatureMap(
        transform=_rule_transform(rule),
        weights=rule.weights.copy(),
        activation=activation,
        kind=f"DFS{rule.degree}",
        input_scale=input_scale,
        meta={"lambdas": list(rule.lambdas)},
    )


def _halton_normal(d: int, D: int, skip: int = 1) -> np.ndarray:
    from .baselines import halton, inverse_normal_cdf
    return inverse_normal_cdf(halton(D, d, skip=skip))


def build_sfs_map(rule3: DeterministicRule, D: int, seed=None, activation: Activation | None = None,
                  input_scale: float = 1.0, sampler: str = "mc") -> FeatureMap:
    """Control-variate map with ``D + 2 (2d + 1)`` nodes.

    Blocks, in order: the D sampled directions with weight 1/D; the degree-3
    nodes with weight minus the draw-averaged randomized weights; the degree-3
    nodes with their deterministic weights. The signed inner product equals
    Q(f) + mean_i f(omega_i) - mean_i M(f, omega_i).
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    if rule3.degree != 3:
        raise ValueError("the control variate is built on the degree-3 rule")
    activation = activation or Activation()
    d = rule3.dim
    if sampler == "mc":
        omegas = make_rng(seed).standard_normal((D, d))
    elif sampler == "qmc":
        omegas = _halton_normal(d, D)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    a0, a1 = _randomized_weights_batch(omegas, rule3.lambdas[1])
    mean_tilde = np.concatenate([[a0.mean()], np.full(2 * d, a1.mean())])
    rule_T = _rule_transform(rule3)
    transform = sparse.hstack([sparse.csc_matrix(omegas.T), rule_T, rule_T], format="csc")
    weights = np.concatenate([np.full(D, 1.0 / D), -mean_tilde, rule3.weights])
    return FeatureMap(
        transform=transform, weights=weights, activation=activation, kind="SFS",
        input_scale=input_scale,
        meta={"D": D, "seed": seed if isinstance(seed, (int, type(None))) else None,
              "sampler": sampler, "omegas": omegas, "lambdas": list(rule3.lambdas)},
    )


def transform(fmap: FeatureMap, X) -> FeatureMatrix:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != fmap.dim:
        raise ValueError(f"samples have {X.shape[1]} features, map expects {fmap.dim}")
    proj = X @ fmap.transform
    proj = np.asarray(proj) * fmap.input_scale
    feats = fmap.activation(proj)
    scale = np.tile(np.sqrt(np.abs(fmap.weights)), fmap.activation.output_width)
    return FeatureMatrix(feats * scale, fmap.signs, fmap.kind)


def approx_gram(A: FeatureMatrix, B: FeatureMatrix | None = None) -> np.ndarray:
    B = A if B is None else B
    if A.values.shape[1] != B.values.shape[1] or not np.array_equal(A.signs, B.signs):
        raise ValueError("feature matrices have incompatible widths or sign metadata")
    return (A.values * A.signs) @ B.values.T


def pair_integrand(activation: Activation, x, y, input_scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """f_xy(omega) = <phi(s omega^T x), phi(s omega^T y)>, vectorised over rows of omega."""
    x = np.asarray(x, dtype=float) * input_scale
    y = np.asarray(y, dtype=float) * input_scale
    return lambda W: activation.pair_product(np.asarray(W) @ x, np.asarray(W) @ y)


def direct_estimate(fmap: FeatureMap, x, y) -> float:
    """sum_c w_c f_xy(node_c), evaluated node by node without building features."""
    f = pair_integrand(fmap.activation, x, y, fmap.input_scale)
    return float(fmap.weights @ f(fmap.nodes))
