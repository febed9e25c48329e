"""Method tags and a single factory that turns (tag, d, kernel, D, seed) into a feature map."""

from __future__ import annotations

from .baselines import BASELINE_KINDS, BaselineConfig, build_baseline
from .features import FeatureMap, activation_for, build_dfs_map, build_sfs_map
from .kernels import KernelSpec
from .rules import build_fifth_degree, build_third_degree

METHODS = ("EXACT", "DFS3", "DFS5", "SFS") + BASELINE_KINDS
# Tags whose output does not depend on the seed.
DETERMINISTIC = frozenset({"EXACT", "DFS3", "DFS5", "SGQ", "QMC"})


def check_methods(tags) -> list[str]:
    out = []
    for t in tags:
        t = t.strip().upper()
        if t not in METHODS:
            raise ValueError(f"unknown method {t!r}; valid tags: {', '.join(METHODS)}")
        out.append(t)
    return out


def is_deterministic(tag: str, d: int, D: int) -> bool:
    # GQ uses the full product grid, no sampling, once it fits in D nodes
    return tag in DETERMINISTIC or (tag == "GQ" and 3**d <= D)


def build_feature_map(tag: str, d: int, kernel: KernelSpec, D: int, seed=None, *,
                      rom_blocks: int = 3, qmc_skip: int = 1) -> FeatureMap | None:
    """Feature map for ``tag``; ``None`` for the exact kernel.

    ``D`` is the requested feature budget. It is the Monte-Carlo draw count for
    SFS (which then carries D + 4d + 2 nodes) and the node count for the
    sampled baselines; the deterministic rules ignore it.
    """
    tag = check_methods([tag])[0]
    if tag == "EXACT":
        return None
    act = activation_for(kernel)
    scale = kernel.input_scale(d)
    if tag == "DFS3":
        return build_dfs_map(build_third_degree(d), act, scale)
    if tag == "DFS5":
        return build_dfs_map(build_fifth_degree(d), act, scale)
    if tag == "SFS":
        return build_sfs_map(build_third_degree(d), D, seed, act, scale)
    cfg = BaselineConfig(tag, D, seed=seed, sigma2=kernel.sigma2, rom_blocks=rom_blocks, qmc_skip=qmc_skip)
    return build_baseline(cfg, d, scale, act)
