"""Monte-Carlo estimators used to verify the analytic index engine.

Pick-freeze Sobol estimation (Jansen variants) and a sampling estimator for
mean squared partial derivatives. Both run against anything evaluable on the
unit hypercube -- true benchmark functions or fitted surrogates -- and report
standard errors so agreement checks can be phrased in sigma units.

Reproducibility: all streams derive from ``numpy.random.SeedSequence(seed)``
(PCG64); the A and B sample matrices use spawn keys 0 and 1, the derivative
estimator uses the root stream. Same seed means bit-identical estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import EvaluationError


@dataclass(frozen=True)
class MCSobolResult:
    main: np.ndarray
    total: np.ndarray
    variance: float
    main_se: np.ndarray
    total_se: np.ndarray


@dataclass(frozen=True)
class MCDgsmResult:
    nu: np.ndarray
    se: np.ndarray


def _checked_eval(f: Callable, x: np.ndarray) -> np.ndarray:
    values = np.asarray(f(x), dtype=float).ravel()
    if values.shape[0] != x.shape[0]:
        raise EvaluationError(
            f"function returned {values.shape[0]} values for {x.shape[0]} points"
        )
    bad = ~np.isfinite(values)
    if bad.any():
        idx = int(np.argmax(bad))
        raise EvaluationError(f"non-finite response {values[idx]} at point {x[idx]}")
    return values


def saltelli_estimate(
    f: Callable[[np.ndarray], np.ndarray], d: int, base_n: int, seed: int = 0
) -> MCSobolResult:
    """Jansen pick-freeze estimates of main and total Sobol indices.

    ``f`` maps an (n, d) array on [0, 1]^d to n values. ``base_n`` must be a
    power of two >= 1024; the total evaluation cost is (d + 2) * base_n.
    A constant function yields variance 0 and NaN indices.
    """
    if base_n < 1024 or base_n & (base_n - 1):
        raise ValueError(f"base_n must be a power of two >= 1024, got {base_n}")
    children = np.random.SeedSequence(seed).spawn(2)
    a = np.random.default_rng(children[0]).random((base_n, d))
    b = np.random.default_rng(children[1]).random((base_n, d))
    f_a = _checked_eval(f, a)
    f_b = _checked_eval(f, b)
    variance = float(np.var(np.concatenate([f_a, f_b]), ddof=1))

    main = np.full(d, np.nan)
    total = np.full(d, np.nan)
    main_se = np.full(d, np.nan)
    total_se = np.full(d, np.nan)
    for i in range(d):
        ab = a.copy()
        ab[:, i] = b[:, i]
        f_ab = _checked_eval(f, ab)
        first_terms = 0.5 * (f_b - f_ab) ** 2  # V - V_i per sample
        total_terms = 0.5 * (f_a - f_ab) ** 2  # V_i^T per sample
        if variance > 1e-30:
            main[i] = (variance - float(np.mean(first_terms))) / variance
            total[i] = float(np.mean(total_terms)) / variance
            main_se[i] = float(np.std(first_terms, ddof=1)) / np.sqrt(base_n) / variance
            total_se[i] = float(np.std(total_terms, ddof=1)) / np.sqrt(base_n) / variance
    return MCSobolResult(main, total, variance, main_se, total_se)


def mc_dgsm(
    f_grad: Callable[[np.ndarray], np.ndarray], d: int, n: int, seed: int = 0
) -> MCDgsmResult:
    """Mean squared partial derivatives over n uniform unit-hypercube points.

    ``f_grad`` maps an (n, d) array to an (n, d) array of partials taken with
    respect to the normalized coordinates.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    x = rng.random((n, d))
    grads = np.asarray(f_grad(x), dtype=float)
    if grads.shape != x.shape:
        raise EvaluationError(f"gradient shape {grads.shape} does not match points {x.shape}")
    if not np.isfinite(grads).all():
        idx = int(np.argmax(~np.isfinite(grads).all(axis=1)))
        raise EvaluationError(f"non-finite gradient at point {x[idx]}")
    squared = grads**2
    nu = squared.mean(axis=0)
    se = squared.std(axis=0, ddof=1) / np.sqrt(n)
    return MCDgsmResult(nu, se)
