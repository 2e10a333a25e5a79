"""Separable kernel families.

Every kernel here is a product of one-dimensional factors, one per input
dimension, so that downstream code can integrate each dimension on its own.
Factors are evaluated on normalized [0, 1] coordinates and use a direct
multiplicative lengthscale theta (larger theta = narrower kernel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT3 = np.sqrt(3.0)

FAMILIES = ("se", "matern32")


@dataclass(frozen=True)
class KernelSpec:
    """A separable kernel: family name plus lengthscale vector.

    ``theta`` has one entry per dimension (ARD) or a single shared entry.
    """

    family: str
    theta: np.ndarray

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}, expected one of {FAMILIES}")
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta must be a 1-d array with at least one entry")
        if not np.all(theta > 0.0):
            raise ValueError("all lengthscale parameters must be strictly positive")
        object.__setattr__(self, "theta", theta)

    @property
    def is_ard(self) -> bool:
        return self.theta.size > 1

    def theta_for(self, dim: int) -> float:
        """Lengthscale used for dimension ``dim`` (shared theta broadcasts)."""
        if self.is_ard:
            return float(self.theta[dim])
        return float(self.theta[0])


def _se_factor(theta: float, delta):
    return np.exp(-theta * np.square(delta))


def _se_factor_derivative(theta: float, delta):
    return -2.0 * theta * delta * np.exp(-theta * np.square(delta))


def _matern32_factor(theta: float, delta):
    t = SQRT3 * theta * np.abs(delta)
    return (1.0 + t) * np.exp(-t)


def _matern32_factor_derivative(theta: float, delta):
    # d/dx of (1 + a|x-c|) exp(-a|x-c|) = -a^2 (x-c) exp(-a|x-c|), a = sqrt(3) theta;
    # continuous through x = c with value 0.
    return -3.0 * theta * theta * delta * np.exp(-SQRT3 * theta * np.abs(delta))


_FACTOR = {"se": _se_factor, "matern32": _matern32_factor}
_FACTOR_DERIVATIVE = {"se": _se_factor_derivative, "matern32": _matern32_factor_derivative}


def factor(spec: KernelSpec, dim: int, center, x):
    """One-dimensional kernel factor h(x) centered at ``center``.

    ``center`` and ``x`` may be scalars or broadcastable arrays. The full
    d-dimensional kernel is the product of these factors over dimensions.
    """
    return _FACTOR[spec.family](spec.theta_for(dim), np.asarray(x, dtype=float) - center)


def factor_derivative(spec: KernelSpec, dim: int, center, x):
    """Derivative of :func:`factor` with respect to ``x``."""
    return _FACTOR_DERIVATIVE[spec.family](spec.theta_for(dim), np.asarray(x, dtype=float) - center)


def kernel_matrix(spec: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Cross-kernel matrix K[i, j] = prod_l h_l(x1[i, l] - x2[j, l]).

    Inputs are (n1, d) and (n2, d) arrays in normalized coordinates.
    """
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    if x1.shape[1] != x2.shape[1]:
        raise ValueError("x1 and x2 must have the same number of columns")
    fac = _FACTOR[spec.family]
    out = np.ones((x1.shape[0], x2.shape[0]))
    for l in range(x1.shape[1]):
        delta = x1[:, l, None] - x2[None, :, l]
        out *= fac(spec.theta_for(l), delta)
    return out


def kernel_matrix_from_deltas(spec: KernelSpec, deltas: np.ndarray) -> np.ndarray:
    """Kernel matrix from precomputed pairwise differences, shape (n1, n2, d).

    Lets hyperparameter search reuse one distance computation across many
    theta evaluations.
    """
    fac = _FACTOR[spec.family]
    out = np.ones(deltas.shape[:2])
    for l in range(deltas.shape[2]):
        out *= fac(spec.theta_for(l), deltas[:, :, l])
    return out
