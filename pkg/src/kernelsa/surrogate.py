"""Fitting affine tensor-product surrogates to design data.

Two fit modes:

* ``interpolating`` -- ordinary-Kriging style: generalized-least-squares
  constant mean, weights from the jittered kernel system, lengthscales by
  maximizing the profiled log marginal likelihood (multi-start simplex
  search in log-theta).
* ``regularized`` -- LS-SVM style: plain mean offset, weights from
  (K + I/gamma), a single shared lengthscale chosen jointly with gamma on a
  log grid by 10-fold cross-validated RRSE.

Either way the result is the same value object, so the analytic index
engine does not care how the weights were produced.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

from . import kernels
from .core import AffineTensorSurrogate, DesignData, FitError
from .kernels import KernelSpec

# Hyperparameter search box (theta multiplies distance directly).
THETA_LOW = 1e-2
THETA_HIGH = 1e3
# Soft box for the simplex search; outside counts as an invalid probe.
_THETA_HARD_LOW = 1e-4
_THETA_HARD_HIGH = 1e5

JITTER_START_FACTOR = 1e-10
JITTER_MAX_FACTOR = 1e-4

GAMMA_GRID = np.logspace(0.0, 6.0, 7)
THETA_GRID = np.logspace(np.log10(THETA_LOW), np.log10(THETA_HIGH), 7)


def _pairwise_deltas(x: np.ndarray) -> np.ndarray:
    return x[:, None, :] - x[None, :, :]


def _jitter_ladder(k: np.ndarray, start_factor: float, max_factor: float) -> np.ndarray:
    base = start_factor * np.trace(k) / k.shape[0]
    top = max_factor * np.trace(k) / k.shape[0]
    n_steps = int(np.ceil(np.log10(top / base))) + 1
    return base * 10.0 ** np.arange(n_steps)


def _chol_with_jitter(k: np.ndarray, start_factor: float = JITTER_START_FACTOR,
                      max_factor: float = JITTER_MAX_FACTOR):
    """Cholesky of K + jitter*I, escalating jitter until it succeeds."""
    eye = np.eye(k.shape[0])
    for jitter in _jitter_ladder(k, start_factor, max_factor):
        try:
            return cho_factor(k + jitter * eye, lower=True), jitter
        except LinAlgError:
            continue
    raise FitError(
        "kernel matrix is numerically singular even at maximum jitter; "
        "remove duplicate or near-duplicate design points"
    )


def _gls_solution(k: np.ndarray, y: np.ndarray, jitter_start: float = JITTER_START_FACTOR,
                  jitter_max: float = JITTER_MAX_FACTOR):
    """Constant-trend GLS pieces: offset, centered weights, log det, sigma^2."""
    n = y.shape[0]
    chol, jitter = _chol_with_jitter(k, jitter_start, jitter_max)
    ones = np.ones(n)
    kinv_y = cho_solve(chol, y)
    kinv_1 = cho_solve(chol, ones)
    offset = float(ones @ kinv_y) / float(ones @ kinv_1)
    weights = kinv_y - offset * kinv_1
    residual = y - offset
    # data explained by the trend alone: the exact weights are zero, and
    # solving the near-singular system would only amplify rounding noise
    if np.abs(residual).max() <= 1e-10 * max(1.0, np.abs(y).max()):
        weights = np.zeros_like(weights)
    sigma2 = float(residual @ weights) / n
    # Guard: exactly reproduced (constant) data makes the profiled variance 0.
    sigma2 = max(sigma2, 1e-32 * max(1.0, float(y @ y) / n))
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    return offset, weights, sigma2, logdet, jitter


def _profiled_lml(k: np.ndarray, y: np.ndarray) -> float:
    n = y.shape[0]
    _, _, sigma2, logdet, _ = _gls_solution(k, y)
    return -0.5 * n * np.log(sigma2) - 0.5 * logdet - 0.5 * n * (1.0 + np.log(2.0 * np.pi))


def log_marginal_likelihood(data: DesignData, spec: KernelSpec) -> float:
    """Profiled Gaussian log marginal likelihood of the responses.

    The process variance is profiled out and the constant trend is estimated
    by GLS, so the maximizing theta is invariant to affine response scaling.
    Deterministic for fixed inputs.
    """
    x = data.normalized_points
    k = kernels.kernel_matrix(spec, x, x)
    return _profiled_lml(k, data.responses)


def _resolve_ard(ard: bool | None, d: int, mode: str) -> bool:
    if ard is not None:
        return ard
    if mode == "regularized":
        # a single lengthscale keeps the (theta, gamma) grid search flat
        return False
    return d < 20


def _optimize_theta_mle(
    deltas: np.ndarray,
    y: np.ndarray,
    family: str,
    n_theta: int,
    seed: int,
    n_starts: int,
    max_evals: int,
    theta0: np.ndarray | None,
) -> np.ndarray:
    rng = np.random.default_rng(seed)

    def objective(log_theta: np.ndarray) -> float:
        theta = np.exp(log_theta)
        if np.any(theta < _THETA_HARD_LOW) or np.any(theta > _THETA_HARD_HIGH):
            return np.inf
        k = kernels.kernel_matrix_from_deltas(KernelSpec(family, theta), deltas)
        try:
            return -_profiled_lml(k, y)
        except FitError:
            return np.inf

    starts = []
    if theta0 is not None:
        starts.append(np.log(np.asarray(theta0, dtype=float)))
    # deterministic start from a coarse shared-lengthscale sweep; random
    # starts alone often stall on the flat large-theta plateau where the
    # interpolant degenerates to spikes
    sweep = np.log(np.logspace(np.log10(THETA_LOW), np.log10(THETA_HIGH), 11))
    sweep_values = [objective(np.full(n_theta, s)) for s in sweep]
    starts.append(np.full(n_theta, sweep[int(np.argmin(sweep_values))]))
    while len(starts) < n_starts:
        starts.append(rng.uniform(np.log(THETA_LOW), np.log(THETA_HIGH), size=n_theta))

    best_value = np.inf
    best = np.full(n_theta, np.log(1.0))
    for start in starts:
        result = minimize(
            objective,
            np.asarray(start, dtype=float),
            method="Nelder-Mead",
            options={"maxfev": max_evals, "xatol": 1e-3, "fatol": 1e-7, "adaptive": n_theta > 2},
        )
        if result.fun < best_value:
            best_value = result.fun
            best = result.x
    if not np.isfinite(best_value):
        raise FitError("likelihood optimization failed for every start point")
    return np.exp(best)


def _cv_rrse_for(deltas, y, family, theta, gamma, folds) -> float:
    spec = KernelSpec(family, np.atleast_1d(theta))
    k = kernels.kernel_matrix_from_deltas(spec, deltas)
    predictions = np.empty_like(y)
    for fold in folds:
        train = np.setdiff1d(np.arange(len(y)), fold)
        ktt = k[np.ix_(train, train)] + np.eye(train.size) / gamma
        offset = float(np.mean(y[train]))
        try:
            chol = cho_factor(ktt, lower=True)
        except LinAlgError:
            return np.inf
        alpha = cho_solve(chol, y[train] - offset)
        predictions[fold] = offset + k[np.ix_(fold, train)] @ alpha
    denom = float(np.sum((y - y.mean()) ** 2))
    if denom <= 0.0:
        return 0.0
    return float(np.sqrt(np.sum((y - predictions) ** 2) / denom))


def _select_regularized(deltas, y, family, gamma, seed):
    rng = np.random.default_rng(seed)
    n = len(y)
    k_folds = min(10, n)
    folds = np.array_split(rng.permutation(n), k_folds)
    gammas = GAMMA_GRID if gamma is None else np.array([gamma])
    best = (np.inf, THETA_GRID[0], gammas[0])
    for theta in THETA_GRID:
        for g in gammas:
            score = _cv_rrse_for(deltas, y, family, theta, g, folds)
            if score < best[0]:
                best = (score, theta, g)
    if not np.isfinite(best[0]):
        raise FitError("regularized grid search failed for every (theta, gamma) cell")
    return best[1], best[2]


def fit(
    data: DesignData,
    kernel: str = "matern32",
    mode: str = "interpolating",
    gamma: float | None = None,
    ard: bool | None = None,
    seed: int = 0,
    n_starts: int = 8,
    max_evals: int = 200,
    theta: np.ndarray | None = None,
    theta0: np.ndarray | None = None,
    return_info: bool = False,
    jitter_start: float = JITTER_START_FACTOR,
    jitter_max: float = JITTER_MAX_FACTOR,
) -> AffineTensorSurrogate:
    """Fit a surrogate to the design.

    ``theta`` fixes the lengthscales outright (used by fold refits that reuse
    hyperparameters); ``theta0`` only warm-starts the search. ``ard`` defaults
    to one lengthscale per dimension below 20 inputs and a single shared one
    from 20 up. With ``return_info`` the selected hyperparameters come back in
    a dict alongside the model, so later refits can skip the search.
    """
    if mode not in ("interpolating", "regularized"):
        raise ValueError(f"unknown fit mode {mode!r}")
    d = data.space.d
    if data.n < d + 2:
        raise FitError(f"need at least d + 2 = {d + 2} points, got {data.n}")
    x = data.normalized_points
    y = data.responses
    deltas = _pairwise_deltas(x)
    use_ard = _resolve_ard(ard, d, mode)
    n_theta = d if use_ard else 1

    if mode == "interpolating":
        if theta is None:
            theta = _optimize_theta_mle(
                deltas, y, kernel, n_theta, seed, n_starts, max_evals, theta0
            )
        spec = KernelSpec(kernel, np.atleast_1d(theta))
        k = kernels.kernel_matrix_from_deltas(spec, deltas)
        offset, weights, _, _, _ = _gls_solution(k, y, jitter_start, jitter_max)
    else:
        if theta is None:
            theta_value, gamma = _select_regularized(deltas, y, kernel, gamma, seed)
            theta = np.array([theta_value])
        elif gamma is None:
            raise ValueError("regularized mode with fixed theta also needs gamma")
        spec = KernelSpec(kernel, np.atleast_1d(theta))
        k = kernels.kernel_matrix_from_deltas(spec, deltas)
        offset = float(np.mean(y))
        try:
            chol = cho_factor(k + np.eye(data.n) / gamma, lower=True)
        except LinAlgError as exc:
            raise FitError("regularized kernel system is singular") from exc
        weights = cho_solve(chol, y - offset)

    model = AffineTensorSurrogate(offset=offset, weights=weights, centers=x, kernel=spec)
    if not return_info:
        return model
    info = {
        "kernel": kernel,
        "mode": mode,
        "theta": spec.theta,
        "gamma": None if mode == "interpolating" else float(gamma),
        "ard": use_ard,
    }
    return model, info


def predict(model: AffineTensorSurrogate, x) -> np.ndarray | float:
    """Evaluate the surrogate at normalized points (single d-vector or batch)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = np.atleast_2d(arr)
    k = kernels.kernel_matrix(model.kernel, pts, model.centers)
    values = model.offset + k @ model.weights
    return float(values[0]) if single else values


def predict_gradient(model: AffineTensorSurrogate, x) -> np.ndarray:
    """Gradient of the surrogate at normalized points, shape (n, d).

    Chunked so large Monte-Carlo batches do not materialize an
    (n, terms, d) factor tensor all at once.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = pts.shape
    n_terms = model.n_terms
    out = np.empty((n, d))
    chunk = max(1, int(48e6 / (n_terms * d * 8 * 3)))
    spec = model.kernel
    for s in range(0, n, chunk):
        xs = pts[s : s + chunk]
        m = xs.shape[0]
        fac = np.empty((m, n_terms, d))
        dfac = np.empty((m, n_terms, d))
        for l in range(d):
            fac[:, :, l] = kernels.factor(spec, l, model.centers[None, :, l], xs[:, l, None])
            dfac[:, :, l] = kernels.factor_derivative(
                spec, l, model.centers[None, :, l], xs[:, l, None]
            )
        left = np.cumprod(fac, axis=2)
        right = np.cumprod(fac[:, :, ::-1], axis=2)[:, :, ::-1]
        for i in range(d):
            term = dfac[:, :, i].copy()
            if i > 0:
                term *= left[:, :, i - 1]
            if i < d - 1:
                term *= right[:, :, i + 1]
            out[s : s + chunk, i] = term @ model.weights
    return out
