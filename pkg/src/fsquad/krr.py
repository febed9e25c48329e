"""Dataset handling and kernel ridge regression classification on exact or approximate kernels."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .features import FeatureMatrix, approx_gram, transform
from .kernels import KernelSpec, gram_matrix
from .methods import build_feature_map
from .stochastic import make_rng

SIGMA2_GRID = (0.1, 0.5, 1.0, 5.0, 10.0)
LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 10.0)


class IndefiniteGramError(ValueError):
    """The regularised approximate Gram matrix is not positive definite."""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = ""
    train: np.ndarray | None = None
    test: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y differ in length")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.name if name is None else name)

    def train_set(self) -> "Dataset":
        return self if self.train is None else self.subset(self.train, f"{self.name}:train")

    def test_set(self) -> "Dataset":
        if self.test is None:
            raise ValueError(f"dataset {self.name!r} has no test split")
        return self.subset(self.test, f"{self.name}:test")


def make_blobs(n: int = 200, d: int = 10, classes: int = 2, separation: float = 4.0, seed=0) -> Dataset:
    """Isotropic Gaussian clusters with unit variance; class means sit ``separation`` apart along axes."""
    rng = make_rng(seed)
    y = rng.integers(0, classes, n)
    means = np.zeros((classes, d))
    for c in range(classes):
        means[c, c % d] = separation * (1 + c // d)
    X = means[y] + rng.standard_normal((n, d))
    labels = np.where(y == 0, -1, 1) if classes == 2 else y
    return Dataset(X, labels, f"blobs{classes}")


def split_dataset(ds: Dataset, test_fraction: float = 0.3, seed=0) -> Dataset:
    perm = make_rng(seed).permutation(ds.n)
    n_test = int(round(test_fraction * ds.n))
    return replace(ds, train=np.sort(perm[n_test:]), test=np.sort(perm[:n_test]))


def _label(token: str):
    v = float(token)
    return int(v) if v.is_integer() else v


def parse_libsvm(path, n_features: int | None = None) -> Dataset:
    """Read ``label idx:value ...`` lines with 1-based feature indices."""
    path = Path(path)
    labels, rows = [], []
    width = 0
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(_label(parts[0]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            entries = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    if not sep:
                        raise ValueError
                    k = int(idx)
                    entries[k] = float(val)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: malformed entry {tok!r}") from None
                if k < 1:
                    raise ValueError(f"{path}:{lineno}: feature index {k} must be >= 1")
                width = max(width, k)
            rows.append(entries)
    if n_features is not None:
        if width > n_features:
            raise ValueError(f"{path}: feature index {width} exceeds n_features={n_features}")
        width = n_features
    X = np.zeros((len(rows), width))
    for i, entries in enumerate(rows):
        for k, v in entries.items():
            X[i, k - 1] = v
    return Dataset(X, np.array(labels), path.stem)


def write_libsvm(ds: Dataset, path) -> None:
    with Path(path).open("w") as fh:
        for x, y in zip(ds.X, ds.y):
            items = " ".join(f"{k + 1}:{float(v)!r}" for k, v in enumerate(x) if v != 0)
            fh.write(f"{y} {items}".rstrip() + "\n")


def minmax_normalize(train: Dataset, test: Dataset | None = None, skip_if_in_range: bool = False):
    """Rescale columns to [0, 1] with train statistics; test values are clipped.

    Constant columns become 0. With ``skip_if_in_range`` data already inside
    [0, 1] is returned unchanged.
    """
    if train.n == 0:
        raise ValueError("empty training set")
    if skip_if_in_range and train.X.min() >= 0 and train.X.max() <= 1:
        return train, test
    lo = train.X.min(axis=0)
    span = train.X.max(axis=0) - lo
    const = span == 0
    span = np.where(const, 1.0, span)

    def apply(X):
        Z = (X - lo) / span
        Z[:, const] = 0.0
        return np.clip(Z, 0.0, 1.0)

    tr = replace(train, X=apply(train.X))
    te = None if test is None else replace(test, X=apply(test.X))
    return tr, te


def _targets(y: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """+-1 coding: one column for binary (last class positive), one per class otherwise."""
    if classes.size <= 2:
        return np.where(y == classes[-1], 1.0, -1.0)[:, None]
    return np.where(y[:, None] == classes[None, :], 1.0, -1.0)


@dataclass
class KrrModel:
    mode: str
    lam: float
    classes: np.ndarray
    coef: np.ndarray  # dual: (n_train, k); primal: (width, k)
    train_features: FeatureMatrix | None = None
    residual: float = 0.0
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"mode": self.mode, "lambda": self.lam, "classes": self.classes.tolist(),
                "residual": self.residual, **self.info}


def _solve_dual(K: np.ndarray, Y: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    A = K + lam * np.eye(K.shape[0])
    try:
        cf = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError:
        ev = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
        raise IndefiniteGramError(
            f"K + lambda I is not positive definite (smallest eigenvalue {ev:.3e} at lambda={lam}); "
            "increase lambda or use a map without negative weights") from None
    alpha = linalg.cho_solve(cf, Y)
    return alpha, _rel_residual(A, alpha, Y)


def _rel_residual(A, x, b) -> float:
    den = np.linalg.norm(b)
    return float(np.linalg.norm(A @ x - b) / den) if den > 0 else float(np.linalg.norm(A @ x))


def krr_fit(features, y, lam: float, mode: str = "auto", regression: bool = False) -> KrrModel:
    """Closed-form KRR on a FeatureMatrix (dual or primal) or a precomputed Gram matrix (dual).

    Primal weights solve (S Z^T Z + lam I) w = S Z^T y with S the column signs;
    by the push-through identity this predicts exactly as the dual
    (Z S Z^T + lam I) alpha = y. With ``regression`` the targets are used as
    given instead of being +-1 coded per class.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    y = np.asarray(y).ravel()
    if regression:
        classes = np.array([])
        Y = y.astype(float)[:, None]
    else:
        classes = np.unique(y)
        Y = _targets(y, classes)
    if isinstance(features, FeatureMatrix):
        Z, s = features.values, features.signs
        if mode == "auto":
            mode = "primal" if Z.shape[1] < Z.shape[0] else "dual"
    else:
        Z, s = None, None
        if mode == "primal":
            raise ValueError("primal mode needs explicit features")
        mode = "dual"
    if mode == "dual":
        K = np.asarray(features, dtype=float) if Z is None else approx_gram(features)
        if K.shape != (y.size, y.size):
            raise ValueError("Gram matrix does not match the number of labels")
        coef, res = _solve_dual(0.5 * (K + K.T), Y, lam)
    elif mode == "primal":
        if np.all(s > 0):
            coef, res = _solve_dual(Z.T @ Z, Z.T @ Y, lam)
        else:
            A = s[:, None] * (Z.T @ Z) + lam * np.eye(Z.shape[1])
            B = s[:, None] * (Z.T @ Y)
            coef = linalg.solve(A, B)
            res = _rel_residual(A, coef, B)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not np.all(np.isfinite(coef)):
        raise FloatingPointError("KRR solve produced non-finite coefficients")
    return KrrModel(mode, lam, classes, coef, features if Z is not None else None, res,
                    {"multiclass": classes.size > 2,
                     "strategy": "regression" if regression else ("one-vs-rest" if classes.size > 2 else "sign")})


def decision_scores(model: KrrModel, features) -> np.ndarray:
    """Scores of shape (n, k); ``features`` is a FeatureMatrix or a test-by-train Gram block."""
    if model.mode == "primal":
        return features.values @ model.coef
    if isinstance(features, FeatureMatrix):
        if model.train_features is None:
            raise ValueError("model was fitted on a Gram matrix; pass the test-by-train kernel block")
        K = approx_gram(features, model.train_features)
    else:
        K = np.asarray(features, dtype=float)
    return K @ model.coef


def predict(model: KrrModel, features) -> np.ndarray:
    """Binary: sign of the score with 0 sent to the positive class; multiclass: argmax."""
    S = decision_scores(model, features)
    if model.classes.size == 0:
        return S[:, 0]
    if model.classes.size <= 2:
        pos = S[:, 0] >= 0
        neg = model.classes[0]
        return np.where(pos, model.classes[-1], neg)
    return model.classes[np.argmax(S, axis=1)]


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def fold_indices(n: int, folds: int = 5, seed=0) -> list[np.ndarray]:
    """Seeded partition of range(n) into ``folds`` nearly equal parts."""
    if folds < 2 or folds > n:
        raise ValueError("need 2 <= folds <= n")
    perm = make_rng(seed).permutation(n)
    return [np.sort(p) for p in np.array_split(perm, folds)]


def _features_or_gram(X, kernel: KernelSpec, method: str, D: int, seed):
    """Train-set representation: (FeatureMatrix, None) for maps, (None, Gram) for the exact kernel."""
    fmap = build_feature_map(method, X.shape[1], kernel, D, seed)
    if fmap is None:
        return None, gram_matrix(kernel, X)
    return transform(fmap, X), None


def _cv_scores_for_kernel(X, y, kernel, lambdas, folds, method, D, seed) -> dict:
    F, K = _features_or_gram(X, kernel, method, D, seed)
    if K is None:
        K = approx_gram(F)
    out = {}
    for lam in lambdas:
        accs = []
        try:
            for hold in folds:
                keep = np.setdiff1d(np.arange(y.size), hold)
                model = krr_fit(K[np.ix_(keep, keep)], y[keep], lam)
                accs.append(accuracy(y[hold], predict(model, K[np.ix_(hold, keep)])))
            out[lam] = float(np.mean(accs))
        except (IndefiniteGramError, FloatingPointError):
            out[lam] = -math.inf
    return out


@dataclass(frozen=True)
class CvResult:
    sigma2: float
    lam: float
    score: float
    table: dict  # (sigma2, lam) -> mean fold accuracy


def cross_validate(ds: Dataset, kernel: KernelSpec | None = None, sigma2_grid=SIGMA2_GRID,
                   lambda_grid=LAMBDA_GRID, folds: int = 5, seed=0, method: str = "EXACT",
                   D: int | None = None, workers: int = 1) -> CvResult:
    """Grid search by mean fold accuracy; ties prefer larger lambda, then smaller sigma2.

    The width grid only applies to the Gaussian family. Grid points whose
    regularised Gram is indefinite are skipped.
    """
    kernel = kernel or KernelSpec()
    if ds.n == 0:
        raise ValueError("empty training set")
    sigmas = tuple(sigma2_grid) if kernel.family == "gaussian" else (kernel.sigma2,)
    lambdas = tuple(lambda_grid)
    if len(sigmas) * len(lambdas) == 1:
        return CvResult(sigmas[0], lambdas[0], float("nan"), {})
    parts = fold_indices(ds.n, folds, seed)
    D = D or 8 * ds.d

    def job(s2):
        return _cv_scores_for_kernel(ds.X, ds.y, replace(kernel, sigma2=s2), lambdas, parts, method, D, seed)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(job, sigmas))
    table = {(s2, lam): acc for s2, res in zip(sigmas, results) for lam, acc in res.items()}
    best = max(table, key=lambda k: (table[k], k[1], -k[0]))
    if table[best] == -math.inf:
        raise IndefiniteGramError("every grid point produced an indefinite system")
    return CvResult(best[0], best[1], table[best], table)


@dataclass(frozen=True)
class TrainResult:
    method: str
    accuracy: float
    sigma2: float
    lam: float
    n_nodes: int
    width: int


def fit_and_score(train: Dataset, test: Dataset, kernel: KernelSpec, lam: float, method: str = "EXACT",
                  D: int | None = None, seed=0) -> TrainResult:
    D = D or 8 * train.d
    fmap = build_feature_map(method, train.d, kernel, D, seed)
    if fmap is None:
        model = krr_fit(gram_matrix(kernel, train.X), train.y, lam)
        pred = predict(model, gram_matrix(kernel, test.X, train.X))
        n_nodes = width = 0
    else:
        Ftr, Fte = transform(fmap, train.X), transform(fmap, test.X)
        model = krr_fit(Ftr, train.y, lam)
        pred = predict(model, Fte)
        n_nodes, width = fmap.n_nodes, fmap.width
    return TrainResult(method, accuracy(test.y, pred), kernel.sigma2, lam, n_nodes, width)
