import itertools
from collections import Counter

import numpy as np
import pytest
from scipy import stats


def gaussian_moment(alpha) -> float:
    """E[prod_i w_i**alpha_i] under N(0, I), via scipy's univariate moments."""
    out = 1.0
    for a in alpha:
        out *= stats.norm.moment(int(a)) if a else 1.0
    return float(out)


def multi_indices(d: int, max_degree: int):
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            alpha = np.zeros(d, dtype=int)
            for k, c in Counter(combo).items():
                alpha[k] = c
            yield alpha


def monomial(alpha):
    alpha = np.asarray(alpha)
    return lambda W: np.prod(np.asarray(W, dtype=float) ** alpha, axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
