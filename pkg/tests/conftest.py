"""Shared fixtures: a zoo of fitted surrogates reused across test modules.

The zoo spans both kernels, both fit modes and 2-D/3-D inputs so the
oracle-equivalence and bound tests exercise more than one configuration.
Fitting is the slow part, so everything is session scoped.
"""

from __future__ import annotations

import numpy as np
import pytest

from kernelsa import benchmarks, design, surrogate
from kernelsa.core import DesignData, InputSpace, denormalize

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def unit_design(d: int, n: int, func, seed: int) -> DesignData:
    space = InputSpace.unit(d)
    pts = design.initial_lhs(d, n, seed=seed)
    return DesignData(space, pts, func(pts), ("initial",) * n)


def benchmark_design(name: str, n: int, seed: int) -> DesignData:
    bench = benchmarks.get_benchmark(name)
    unit = design.initial_lhs(bench.space.d, n, seed=seed)
    pts = denormalize(bench.space, unit)
    return DesignData(bench.space, pts, bench.f(pts), ("initial",) * n)


@pytest.fixture(scope="session")
def surrogate_zoo():
    """name -> (fitted model, training data) for six varied surrogates."""
    zoo = {}
    data = unit_design(2, 40, lambda p: p[:, 0], seed=1)
    zoo["linear_2d_se"] = (surrogate.fit(data, kernel="se", seed=0), data)
    data = unit_design(2, 40, lambda p: p[:, 0] + p[:, 1], seed=2)
    zoo["additive_2d_matern"] = (surrogate.fit(data, kernel="matern32", seed=0), data)
    data = unit_design(2, 60, lambda p: (p[:, 0] - 0.5) * (p[:, 1] - 0.5), seed=3)
    zoo["product_2d_se"] = (surrogate.fit(data, kernel="se", seed=0), data)
    data = benchmark_design("ishigami", 120, seed=4)
    zoo["ishigami_3d_matern"] = (surrogate.fit(data, kernel="matern32", seed=0), data)
    zoo["ishigami_3d_se_reg"] = (
        surrogate.fit(data, kernel="se", mode="regularized", seed=0),
        data,
    )
    data = benchmark_design("gfunction", 100, seed=5)
    zoo["gfunction_3d_matern"] = (surrogate.fit(data, kernel="matern32", seed=0), data)
    return zoo


@pytest.fixture(scope="session")
def ishigami_data_30():
    return benchmark_design("ishigami", 30, seed=11)
