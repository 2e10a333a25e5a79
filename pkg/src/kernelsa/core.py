"""Core domain types and coordinate normalization.

Everything downstream (fitting, integration, index extraction) works on the
unit hypercube; these types pin down the mapping between original simulator
coordinates and [0, 1]^d, and carry the invariants the rest of the package
relies on. All types are immutable value objects: grow a design or a trace by
constructing a new value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .kernels import KernelSpec

# Two points closer than this in normalized max-norm are treated as duplicates.
DUPLICATE_TOL = 1e-10


class KernelSaError(Exception):
    """Base class for errors raised by this package."""


class DomainError(KernelSaError):
    """A point or domain definition violates the input space."""


class FitError(KernelSaError):
    """Surrogate fitting failed (conditioning, size, ...)."""


class DegenerateModelError(KernelSaError):
    """The surrogate is (numerically) constant; indices are undefined."""


class ConsistencyError(KernelSaError):
    """An internal invariant failed, signalling a quadrature or fit defect."""


class EvaluationError(KernelSaError):
    """A simulator evaluation failed or returned malformed output."""


@dataclass(frozen=True)
class InputSpace:
    """Named box domain with independent uniform inputs per dimension."""

    dims: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        dims = tuple((str(n), float(lo), float(hi)) for n, lo, hi in self.dims)
        if len(dims) < 1:
            raise DomainError("input space needs at least one dimension")
        names = [n for n, _, _ in dims]
        if len(set(names)) != len(names):
            raise DomainError(f"dimension names must be unique, got {names}")
        for n, lo, hi in dims:
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise DomainError(f"dimension {n!r} has non-finite bounds ({lo}, {hi})")
            if not lo < hi:
                raise DomainError(f"dimension {n!r} needs lower < upper, got ({lo}, {hi})")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _, _ in self.dims)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for _, lo, _ in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, _, hi in self.dims])

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @staticmethod
    def unit(d: int, prefix: str = "x") -> "InputSpace":
        """Unit hypercube with auto-numbered names x1..xd."""
        return InputSpace(tuple((f"{prefix}{i + 1}", 0.0, 1.0) for i in range(d)))

    @staticmethod
    def box(lower: Sequence[float], upper: Sequence[float], prefix: str = "x") -> "InputSpace":
        return InputSpace(
            tuple((f"{prefix}{i + 1}", float(lo), float(hi)) for i, (lo, hi) in enumerate(zip(lower, upper)))
        )


def _check_inside(space: InputSpace, x: np.ndarray) -> None:
    lower, upper = space.lower, space.upper
    below = x < lower
    above = x > upper
    if below.any() or above.any():
        bad = np.argwhere(below | above)
        dim = int(bad[0][-1])
        name = space.names[dim]
        value = x[tuple(bad[0])]
        raise DomainError(
            f"coordinate {name!r} = {value} outside [{lower[dim]}, {upper[dim]}]"
        )


def normalize(space: InputSpace, x) -> np.ndarray:
    """Map points from original coordinates onto [0, 1]^d.

    Accepts a single d-vector or an (n, d) batch; raises :class:`DomainError`
    naming the offending dimension for points outside the box.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.d:
        raise DomainError(f"expected {space.d} coordinates, got shape {x.shape}")
    _check_inside(space, x)
    return (x - space.lower) / space.widths


def denormalize(space: InputSpace, u) -> np.ndarray:
    """Inverse of :func:`normalize`: map [0, 1]^d points back to the box."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != space.d:
        raise DomainError(f"expected {space.d} coordinates, got shape {u.shape}")
    return space.lower + u * space.widths


@dataclass(frozen=True)
class DesignData:
    """Evaluated sample set: points in original coordinates plus responses.

    ``provenance`` labels each point ("initial" or "batch-<k>") so the state
    of the sequential loop can be reconstructed from a flushed design file.
    """

    space: InputSpace
    points: np.ndarray
    responses: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        responses = np.asarray(self.responses, dtype=float).ravel()
        if points.shape[1] != self.space.d:
            raise DomainError(f"points have {points.shape[1]} columns, space has {self.space.d}")
        if points.shape[0] != responses.shape[0]:
            raise DomainError(
                f"{points.shape[0]} points but {responses.shape[0]} responses"
            )
        if len(self.provenance) != points.shape[0]:
            raise DomainError("provenance must label every point")
        _check_inside(self.space, points)
        normed = (points - self.space.lower) / self.space.widths
        if points.shape[0] > 1:
            diff = np.abs(normed[:, None, :] - normed[None, :, :]).max(axis=2)
            np.fill_diagonal(diff, np.inf)
            closest = diff.min()
            if closest < DUPLICATE_TOL:
                i, j = np.unravel_index(int(np.argmin(diff)), diff.shape)
                raise DomainError(f"points {i} and {j} are duplicates (max-norm {closest:.2e})")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def normalized_points(self) -> np.ndarray:
        return normalize(self.space, self.points)

    def extended(self, points, responses, provenance: str) -> "DesignData":
        """New design with a batch appended; duplicate checks rerun."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        responses = np.asarray(responses, dtype=float).ravel()
        labels = self.provenance + tuple(provenance for _ in range(points.shape[0]))
        return DesignData(
            self.space,
            np.vstack([self.points, points]),
            np.concatenate([self.responses, responses]),
            labels,
        )

    def subset(self, idx) -> "DesignData":
        idx = np.asarray(idx)
        return DesignData(
            self.space,
            self.points[idx],
            self.responses[idx],
            tuple(self.provenance[i] for i in np.atleast_1d(idx)),
        )


@dataclass(frozen=True)
class AffineTensorSurrogate:
    """Constant offset plus a weighted sum of separable kernel terms.

    Centers live in normalized [0, 1]^d coordinates; prediction is
    offset + sum_i weights[i] * prod_l factor(theta_l, centers[i, l], x_l).
    """

    offset: float
    weights: np.ndarray
    centers: np.ndarray
    kernel: KernelSpec

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).ravel()
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if weights.shape[0] != centers.shape[0]:
            raise ValueError(
                f"{weights.shape[0]} weights for {centers.shape[0]} centers"
            )
        if centers.min() < -1e-12 or centers.max() > 1.0 + 1e-12:
            raise ValueError("centers must lie in the unit hypercube")
        if self.kernel.is_ard and self.kernel.theta.size != centers.shape[1]:
            raise ValueError("ARD theta length must equal the dimension count")
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "centers", np.clip(centers, 0.0, 1.0))

    @property
    def n_terms(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


_REPORT_MAIN_TOL = 1e-8
# near-singular interpolants carry large weights that amplify quadrature
# rounding in the closed variances, so the sum guard needs headroom
_REPORT_SUM_TOL = 1e-4


@dataclass(frozen=True)
class SensitivityReport:
    """Per-dimension sensitivity indices extracted from one surrogate.

    ``dgsm`` values are means of squared derivatives taken on the unit
    hypercube; ``dgsm_scale`` carries (upper - lower)^2 per dimension so a
    caller can convert back to original-coordinate derivatives.
    """

    total_variance: float
    main: np.ndarray
    total: np.ndarray
    interactions: Mapping[tuple[int, ...], float] | None = None
    dgsm: np.ndarray | None = None
    dgsm_bound: np.ndarray | None = None
    dgsm_scale: np.ndarray | None = None

    def __post_init__(self):
        main = np.asarray(self.main, dtype=float)
        total = np.asarray(self.total, dtype=float)
        if self.total_variance < 0:
            raise ValueError("total variance must be nonnegative")
        if main.shape != total.shape:
            raise ValueError("main and total index vectors must have matching shape")
        if np.any(main > total + _REPORT_MAIN_TOL):
            raise ValueError("main index exceeds total index beyond tolerance")
        if main.sum() > 1.0 + _REPORT_SUM_TOL:
            raise ValueError("main indices sum past 1 beyond tolerance")
        if self.dgsm is not None:
            dgsm = np.asarray(self.dgsm, dtype=float)
            if np.any(dgsm < 0):
                raise ValueError("derivative indices must be nonnegative")
            if self.dgsm_bound is not None and self.total_variance > 0:
                expected = dgsm / (np.pi**2 * self.total_variance)
                if not np.allclose(self.dgsm_bound, expected, rtol=1e-10, atol=1e-12):
                    raise ValueError("dgsm_bound does not equal dgsm / (pi^2 V)")
            object.__setattr__(self, "dgsm", dgsm)
        object.__setattr__(self, "main", main)
        object.__setattr__(self, "total", total)

    @property
    def d(self) -> int:
        return self.main.shape[0]


@dataclass(frozen=True)
class IterationRecord:
    """One pass of the sequential loop: sample count, criteria, fold indices."""

    sample_count: int
    criterion_values: Mapping[str, float]
    fold_indices: Mapping[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class StoppingTrace:
    """Per-iteration criterion history; sample counts strictly increase."""

    records: tuple[IterationRecord, ...] = ()

    def __post_init__(self):
        counts = [r.sample_count for r in self.records]
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError(f"sample counts must strictly increase, got {counts}")
        object.__setattr__(self, "records", tuple(self.records))

    def with_record(self, record: IterationRecord) -> "StoppingTrace":
        return StoppingTrace(self.records + (record,))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)
