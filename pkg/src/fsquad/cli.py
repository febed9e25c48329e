"""Command-line front end: approx | bench | train | condition | variance.

Every option can come from an INI file (section ``[fsquad]``, keys named as
the long flags with dashes turned into underscores); flags given on the
command line override the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import frobenius_error
from .features import approx_gram, transform
from .kernels import FAMILIES, KernelSpec, gram_matrix
from .krr import (Dataset, cross_validate, fit_and_score, make_blobs, minmax_normalize, parse_libsvm,
                  split_dataset)
from .methods import METHODS, build_feature_map, check_methods, is_deterministic

COMMANDS = ("approx", "bench", "train", "condition", "variance")
RMAX_DIMS = (10, 16, 20, 22, 50, 54, 100, 200)


def _floats(s) -> tuple[float, ...]:
    return tuple(float(v) for v in str(s).replace(",", " ").split())


def _ints(s) -> tuple[int, ...]:
    return tuple(int(v) for v in str(s).replace(",", " ").split())


def _strs(s) -> tuple[str, ...]:
    return tuple(v for v in str(s).replace(",", " ").split())


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "results"
    methods: tuple[str, ...] = ("EXACT", "DFS3", "DFS5", "SFS", "RFF", "ORF", "QMC", "SSR")
    dataset: str = "synthetic"
    test_dataset: str = ""
    kernel: str = "gaussian"
    sigma2: float = 1.0
    lam: float = 0.01
    tune: bool = True
    trials: int = 10
    d_multipliers: tuple[int, ...] = (2, 4, 8, 16, 32)
    subset: int = 1000
    test_fraction: float = 0.3
    skip_normalize_if_in_range: bool = False
    synthetic_n: int = 600
    synthetic_d: int = 10
    synthetic_classes: int = 2
    workers: int = 4
    bench_dims: tuple[int, ...] = (64, 128, 256, 512, 1024)
    bench_n: int = 1000
    bench_reps: int = 5
    bench_D: int = 0
    dims: tuple[int, ...] = RMAX_DIMS
    var_d: int = 10
    var_D: int = 1
    var_trials: int = 100_000
    z_grid: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 3.0, 31), 6).tolist())

    def canonical(self) -> dict:
        doc = asdict(self)
        for k in ("out", "workers"):
            doc.pop(k)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in doc.items()}

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_TYPES = {
    "seed": int, "out": str, "methods": _strs, "dataset": str, "test_dataset": str, "kernel": str,
    "sigma2": float, "lam": float, "tune": None, "trials": int, "d_multipliers": _ints, "subset": int,
    "test_fraction": float, "skip_normalize_if_in_range": None, "synthetic_n": int, "synthetic_d": int,
    "synthetic_classes": int, "workers": int, "bench_dims": _ints, "bench_n": int, "bench_reps": int,
    "bench_D": int, "dims": _ints, "var_d": int, "var_D": int, "var_trials": int, "z_grid": _floats,
}


def _bool(s) -> bool:
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _convert(key: str, raw):
    conv = _TYPES[key] or _bool
    return conv(raw)


def load_config(path) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(f"config file {path} not found")
    if "fsquad" not in cp:
        raise ValueError(f"{path}: missing [fsquad] section")
    out = {}
    for key, raw in cp["fsquad"].items():
        if key not in _TYPES:
            raise ValueError(f"{path}: unknown key {key!r}")
        out[key] = _convert(key, raw)
    return out


def resolve_config(args) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _convert(f.name, v) if isinstance(v, str) else v
    cfg = RunConfig(**values)
    cfg = replace(cfg, methods=tuple(check_methods(cfg.methods)))
    if cfg.kernel not in FAMILIES:
        raise ValueError(f"unknown kernel {cfg.kernel!r}; expected one of {FAMILIES}")
    return cfg


def _child_seed(*key: int) -> int:
    return int(np.random.SeedSequence([abs(int(k)) for k in key]).generate_state(1)[0])


def load_dataset(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    """Normalised (train, test) pair. ``synthetic`` generates Gaussian blobs from the seed."""
    if cfg.dataset == "synthetic":
        ds = make_blobs(cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_classes, seed=cfg.seed)
        ds = split_dataset(ds, cfg.test_fraction, cfg.seed)
        train, test = ds.train_set(), ds.test_set()
    else:
        train = parse_libsvm(cfg.dataset)
        if cfg.test_dataset:
            test = parse_libsvm(cfg.test_dataset)
            # libsvm files omit trailing zero columns, so the two widths can differ
            d = max(train.d, test.d)
            train, test = (Dataset(np.pad(s.X, ((0, 0), (0, d - s.d))), s.y, s.name) for s in (train, test))
        else:
            ds = split_dataset(train, cfg.test_fraction, cfg.seed)
            train, test = ds.train_set(), ds.test_set()
    return minmax_normalize(train, test, cfg.skip_normalize_if_in_range)


def _kernel(cfg: RunConfig, sigma2: float | None = None) -> KernelSpec:
    return KernelSpec(cfg.kernel, cfg.sigma2 if sigma2 is None else sigma2)


def _run_jobs(fn, jobs, workers: int) -> list:
    # results come back in job order whatever the completion order
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(fn, jobs))


def _write(out: Path, name: str, rows: list[dict], meta: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if rows:
        with (out / f"{name}.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            w.writeheader()
            w.writerows(rows)
    with (out / f"{name}.json").open("w") as fh:
        json.dump({"meta": meta, "records": rows}, fh, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _meta(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.canonical(), "config_hash": cfg.config_hash(), "seed": cfg.seed}


@dataclass
class ExperimentReport:
    method: str
    kernel: str
    sigma2: float
    D: int
    n_nodes: int
    width: int
    error_mean: float
    error_std: float
    time_mean: float
    accuracy_mean: float
    accuracy_std: float
    trials: int
    seed: int
    config_hash: str


def _schedule(cfg: RunConfig, method: str, d: int) -> list[int]:
    if method in ("EXACT", "DFS3", "DFS5", "SGQ"):
        return [0]
    return [m * d for m in cfg.d_multipliers]


def cmd_approx(cfg: RunConfig) -> list[dict]:
    train, _ = load_dataset(cfg)
    rng = np.random.default_rng(_child_seed(cfg.seed, 1))
    X = train.X if train.n <= cfg.subset else train.X[np.sort(rng.choice(train.n, cfg.subset, replace=False))]
    d = X.shape[1]
    kernel = _kernel(cfg)
    K = gram_matrix(kernel, X)

    jobs = []
    for mi, m in enumerate(cfg.methods):
        for D in _schedule(cfg, m, d):
            n_trials = 1 if is_deterministic(m, d, D) else cfg.trials
            jobs += [(m, D, t, _child_seed(cfg.seed, mi, D, t)) for t in range(n_trials)]

    def run(job):
        m, D, t, seed = job
        t0 = time.perf_counter()
        fmap = build_feature_map(m, d, kernel, max(D, 1), seed)
        if fmap is None:
            Khat, nodes, width = K, 0, 0
        else:
            F = transform(fmap, X)
            nodes, width = fmap.n_nodes, fmap.width
        elapsed = time.perf_counter() - t0
        if fmap is not None:
            Khat = approx_gram(F)
        return m, D, nodes, width, frobenius_error(K, Khat), elapsed

    results = _run_jobs(run, jobs, cfg.workers)
    rows = []
    h = cfg.config_hash()
    groups: dict = {}
    for r in results:
        groups.setdefault((r[0], r[1]), []).append(r)
    for (m, D), rs in groups.items():
        errs = np.array([r[4] for r in rs])
        rows.append(asdict(ExperimentReport(
            m, cfg.kernel, cfg.sigma2, D, rs[0][2], rs[0][3], float(errs.mean()), float(errs.std()),
            float(np.mean([r[5] for r in rs])), float("nan"), float("nan"), len(rs), cfg.seed, h)))
    _write(Path(cfg.out), "approx", rows, {**_meta(cfg, "approx"), "n_subset": int(X.shape[0]),
                                          "width_convention": "n_nodes counts quadrature nodes; width counts realised columns"})
    return rows


def cmd_bench(cfg: RunConfig) -> list[dict]:
    rows = []
    h = cfg.config_hash()
    kernel = _kernel(cfg)
    for mi, m in enumerate(cfg.methods):
        if m == "EXACT":
            continue
        for d in cfg.bench_dims:
            X = np.random.default_rng(_child_seed(cfg.seed, d)).standard_normal((cfg.bench_n, d))
            D = cfg.bench_D or 2 * d
            seed = _child_seed(cfg.seed, mi, d)
            times = []
            for rep in range(cfg.bench_reps + 1):
                t0 = time.perf_counter()
                fmap = build_feature_map(m, d, kernel, D, seed)
                transform(fmap, X)
                if rep:  # first pass is a warm-up
                    times.append(time.perf_counter() - t0)
            rows.append({"method": m, "d": d, "D": D, "n_nodes": fmap.n_nodes, "width": fmap.width,
                         "n_samples": cfg.bench_n, "time_median": float(np.median(times)),
                         "reps": cfg.bench_reps, "seed": cfg.seed, "config_hash": h})
    slopes = {}
    for m in {r["method"] for r in rows}:
        pts = [(r["d"], r["time_median"]) for r in rows if r["method"] == m]
        if len(pts) >= 2:
            x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
            slopes[m] = float(np.polyfit(x, y, 1)[0])
    _write(Path(cfg.out), "bench", rows, {**_meta(cfg, "bench"), "loglog_slope": slopes})
    return rows


def cmd_train(cfg: RunConfig) -> list[dict]:
    train, test = load_dataset(cfg)
    d = train.d
    h = cfg.config_hash()
    if cfg.tune:
        cv = cross_validate(train, _kernel(cfg), seed=cfg.seed, workers=cfg.workers)
        sigma2, lam = cv.sigma2, cv.lam
    else:
        sigma2, lam = cfg.sigma2, cfg.lam
    kernel = _kernel(cfg, sigma2)

    jobs = []
    for mi, m in enumerate(cfg.methods):
        for D in _schedule(cfg, m, d):
            n_trials = 1 if is_deterministic(m, d, D) else cfg.trials
            jobs += [(m, D, t, _child_seed(cfg.seed, mi, D, t)) for t in range(n_trials)]

    def run(job):
        m, D, t, seed = job
        return m, D, fit_and_score(train, test, kernel, lam, m, max(D, 1), seed)

    results = _run_jobs(run, jobs, cfg.workers)
    groups: dict = {}
    for m, D, r in results:
        groups.setdefault((m, D), []).append(r)
    rows = []
    for (m, D), rs in groups.items():
        acc = np.array([r.accuracy for r in rs])
        rows.append(asdict(ExperimentReport(
            m, cfg.kernel, sigma2, D, rs[0].n_nodes, rs[0].width, float("nan"), float("nan"), float("nan"),
            float(acc.mean()), float(acc.std()), len(rs), cfg.seed, h)))
    multiclass = np.unique(train.y).size > 2
    _write(Path(cfg.out), "train", rows, {**_meta(cfg, "train"), "sigma2": sigma2, "lambda": lam,
                                         "multiclass_strategy": "one-vs-rest" if multiclass else "sign"})
    return rows


def cmd_condition(cfg: RunConfig) -> list[dict]:
    rows = [{"d": d, "r_max": round(analysis.rmax_solve(d), 6)} for d in cfg.dims]
    _write(Path(cfg.out), "condition", rows, _meta(cfg, "condition"))
    return rows


def cmd_variance(cfg: RunConfig) -> list[dict]:
    d, D = cfg.var_d, cfg.var_D
    rows = []
    diag = np.ones(d) / math.sqrt(d)
    axis = np.eye(d)[0]
    for i, z in enumerate(cfg.z_grid):
        rep = analysis.variance_report(z * diag, D, cfg.var_trials, _child_seed(cfg.seed, i))
        rows.append({
            "z": z,
            "h_sfs_diag": analysis.h_sfs_core(z, analysis.q_third(z * diag)),
            "h_sfs_axis": analysis.h_sfs_core(z, analysis.q_third(z * axis)),
            "h_ssr": analysis.h_ssr(z, d) if d > 2 else float("nan"),
            "h_orf": analysis.h_orf(z, d),
            "gap_theory": rep.theoretical_gap,
            "gap_empirical": rep.empirical_gap,
            "gap_se": rep.se_gap,
            "var_sfs": rep.empirical_var_sfs,
            "var_rff": rep.empirical_var_rff,
            "d": d, "D": D, "seed": cfg.seed, "config_hash": cfg.config_hash(),
        })
    _write(Path(cfg.out), "variance", rows, {**_meta(cfg, "variance"), "r_max": analysis.rmax_solve(d)})
    return rows


HANDLERS = {"approx": cmd_approx, "bench": cmd_bench, "train": cmd_train,
            "condition": cmd_condition, "variance": cmd_variance}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsquad", description="Quadrature-based kernel feature maps: experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [fsquad] section")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--methods", help=f"comma-separated subset of {','.join(METHODS)}")
    common.add_argument("--dataset", help="libsvm file or 'synthetic'")
    common.add_argument("--test-dataset", dest="test_dataset")
    common.add_argument("--kernel", choices=FAMILIES)
    common.add_argument("--sigma2", type=float)
    common.add_argument("--lam", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--dims", help="dimensions for 'condition'")
    common.add_argument("--bench-dims", dest="bench_dims")
    common.add_argument("--var-d", dest="var_d", type=int)
    common.add_argument("--var-D", dest="var_D", type=int)
    common.add_argument("--var-trials", dest="var_trials", type=int)
    common.add_argument("--no-tune", dest="tune", action="store_const", const=False)
    sub = p.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common], help=HANDLERS[c].__doc__ or c)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        rows = HANDLERS[args.command](cfg)
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        print(f"fsquad {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for r in rows:
        print(json.dumps(r, default=_json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
