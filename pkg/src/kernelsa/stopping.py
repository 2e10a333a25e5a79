"""Accuracy measures and cross-validated stopping criteria.

Surrogate accuracy is scored with RRSE (root relative squared error) and BEEQ
(Bayesian estimation error quotient, a geometric mean of pointwise error
ratios). The sequential loop stops on the variance of sensitivity indices
across k leave-fold-out refits: when the chosen summary of that variance stays
below a threshold for two consecutive iterations, the design is trusted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import analytic, surrogate
from .core import DegenerateModelError, DesignData, FitError

CRITERION_FAMILIES = ("sobol_main", "sobol_total", "dgsm", "dgsm_normalized")


def rrse(y_true, y_pred) -> float:
    """Root relative squared error against the mean predictor."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    denom = float(np.sum((y_true - y_true.mean()) ** 2))
    if denom <= 0.0:
        raise DegenerateModelError("responses are constant; RRSE is undefined")
    return float(np.sqrt(np.sum((y_true - y_pred) ** 2) / denom))


def beeq(y_true, y_pred) -> float:
    """Geometric mean of |error| / |deviation from the mean| over points.

    Points where the response equals the sample mean contribute a zero
    denominator and are dropped with a warning; an exact prediction anywhere
    drives the geometric mean to zero.
    """
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    num = np.abs(y_true - y_pred)
    den = np.abs(y_true - y_true.mean())
    keep = den > 0.0
    if not keep.all():
        warnings.warn(
            f"dropping {int((~keep).sum())} point(s) equal to the response mean",
            RuntimeWarning,
            stacklevel=2,
        )
    if not keep.any():
        raise DegenerateModelError("responses are constant; BEEQ is undefined")
    num, den = num[keep], den[keep]
    if np.any(num == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(num / den))))


@dataclass(frozen=True)
class IndexCvResult:
    """Per-fold index vectors plus the variance summaries used for stopping.

    ``mean`` is the across-fold population variance summed over dimensions and
    divided by d; ``max`` is the largest per-dimension variance, also divided
    by d (``max_undivided`` keeps the raw value).
    """

    family: str
    fold_indices: np.ndarray
    mean: float
    max: float
    max_undivided: float
    failed_folds: tuple[int, ...] = ()


def fold_assignments(n: int, k: int, seed: int = 0) -> list[np.ndarray]:
    """Shuffle 0..n-1 with the given seed and split into k near-equal folds."""
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k={k} with n={n}")
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), k)


def variance_summaries(fold_indices: np.ndarray) -> tuple[float, float, float]:
    """(mean, max, max_undivided) criterion values from a (folds, d) array."""
    var = np.var(fold_indices, axis=0, ddof=0)
    d = fold_indices.shape[1]
    return float(var.sum() / d), float(var.max() / d), float(var.max())


def _fold_vector(model, table, family: str, d: int) -> np.ndarray:
    if family in ("sobol_main", "sobol_total"):
        report = analytic.sobol_report(model, table)
        return report.main if family == "sobol_main" else report.total
    nu, _ = analytic.dgsm_report(model, table)
    if family == "dgsm":
        return nu
    total = nu.sum()
    if total <= 0.0:
        raise DegenerateModelError("all derivative measures vanish; cannot normalize")
    return nu / total


def index_cv(
    data: DesignData,
    k: int = 5,
    family: str = "sobol_total",
    *,
    kernel: str = "matern32",
    mode: str = "interpolating",
    theta: np.ndarray | None = None,
    gamma: float | None = None,
    ard: bool | None = None,
    quad_order: int = 64,
    seed: int = 0,
) -> IndexCvResult:
    """Variance of sensitivity indices across leave-fold-out refits.

    Each fold's model is fit on the design with that fold removed, using the
    supplied ``theta`` (and ``gamma``) so only the weights are recomputed.
    Folds whose reduced design cannot be fit or is degenerate are skipped and
    reported; at least two folds must survive.
    """
    if family not in CRITERION_FAMILIES:
        raise ValueError(f"unknown criterion family {family!r}")
    folds = fold_assignments(data.n, k, seed)
    all_idx = np.arange(data.n)
    vectors = []
    failed: list[int] = []
    for fold_id, fold in enumerate(folds):
        keep = np.setdiff1d(all_idx, fold)
        try:
            reduced = data.subset(keep)
            model = surrogate.fit(
                reduced,
                kernel=kernel,
                mode=mode,
                gamma=gamma,
                ard=ard,
                seed=seed,
                theta=theta,
            )
            table = analytic.build_integral_table(model, quad_order=quad_order)
            vectors.append(_fold_vector(model, table, family, data.space.d))
        except (FitError, DegenerateModelError):
            failed.append(fold_id)
    if len(vectors) < 2:
        raise DegenerateModelError(
            f"only {len(vectors)} of {k} folds produced indices; cannot estimate variance"
        )
    fold_indices = np.vstack(vectors)
    mean, mx, mx_raw = variance_summaries(fold_indices)
    if not (0.0 <= mean <= data.space.d * mx + 1e-30):
        raise AssertionError("criterion aggregation violated mean <= d * max")
    return IndexCvResult(
        family=family,
        fold_indices=fold_indices,
        mean=mean,
        max=mx,
        max_undivided=mx_raw,
        failed_folds=tuple(failed),
    )


def consecutive_below(values, threshold: float, count: int = 2) -> bool:
    """True when the last ``count`` values all sit below the threshold."""
    values = list(values)
    if len(values) < count:
        return False
    return all(v < threshold for v in values[-count:])
