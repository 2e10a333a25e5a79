"""Initial and sequential experimental designs on the unit hypercube.

Three strategies: a maximin-optimized Latin hypercube for the seed design,
local-linear-residual + Voronoi-volume infill (exploitation + exploration),
and a density criterion blending maximin and projected distances. All outputs
are in normalized coordinates and deterministic per (data, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import DesignData

# Proposals must stay at least this far (euclidean, normalized) from the design.
MIN_SITE_DISTANCE = 1e-6

VORONOI_TEST_CAP = 100_000
CANDIDATES_PER_POINT = 500
DENSITY_WEIGHT = 0.5


@dataclass(frozen=True)
class DesignProposal:
    """A batch of new sites with the scores that ranked them."""

    points: np.ndarray
    exploration: np.ndarray
    exploitation: np.ndarray
    combined: np.ndarray
    fallback_cells: tuple[int, ...] = ()

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.min() < 0.0 or pts.max() > 1.0:
            raise ValueError("proposed points must lie in the unit hypercube")
        object.__setattr__(self, "points", pts)


def initial_lhs(d: int, n: int, seed: int = 0, optimize: bool = True) -> np.ndarray:
    """Latin hypercube on [0, 1]^d, maximin-improved by swap hill-climbing.

    Each column occupies all n strata of width 1/n. With ``optimize`` on, a
    budget of random within-column swaps is attempted and kept only when the
    minimum pairwise distance improves, so the result is never worse than the
    plain seeded hypercube.
    """
    if n < d + 2:
        raise ValueError(f"need at least d + 2 = {d + 2} points, got {n}")
    rng = np.random.default_rng(seed)
    pts = np.empty((n, d))
    for l in range(d):
        pts[:, l] = (rng.permutation(n) + rng.random(n)) / n
    if not optimize or n < 3:
        return pts

    sq = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    np.fill_diagonal(sq, np.inf)
    best = sq.min()
    trials = min(5000, max(500, 30 * n))
    for _ in range(trials):
        col = int(rng.integers(d))
        i, j = rng.choice(n, size=2, replace=False)
        pts[i, col], pts[j, col] = pts[j, col], pts[i, col]
        for r in (i, j):
            row = np.sum((pts - pts[r]) ** 2, axis=1)
            row[r] = np.inf
            sq[r, :] = row
            sq[:, r] = row
        candidate = sq.min()
        if candidate > best:
            best = candidate
        else:
            pts[i, col], pts[j, col] = pts[j, col], pts[i, col]
            for r in (i, j):
                row = np.sum((pts - pts[r]) ** 2, axis=1)
                row[r] = np.inf
                sq[r, :] = row
                sq[:, r] = row
    return pts


def voronoi_volumes(points: np.ndarray, n_test: int, seed: int = 0) -> np.ndarray:
    """Monte-Carlo Voronoi cell volume estimates (cells partition the cube)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    volumes, _, _, _ = _voronoi_assignment(points, n_test, np.random.default_rng(seed))
    return volumes


def _voronoi_assignment(points: np.ndarray, n_test: int, rng: np.random.Generator):
    test = rng.random((n_test, points.shape[1]))
    dist, owner = cKDTree(points).query(test)
    volumes = np.bincount(owner, minlength=points.shape[0]) / n_test
    return volumes, owner, dist, test


def _local_nonlinearity(x: np.ndarray, y: np.ndarray):
    """LOLA exploitation scores: absolute residual of a gradient fit anchored
    at each point, over its 2d nearest neighbors."""
    n, d = x.shape
    k = min(2 * d + 1, n)
    _, nb = cKDTree(x).query(x, k=k)
    scores = np.zeros(n)
    fallback = []
    for p in range(n):
        neighbors = nb[p, 1:]
        a = x[neighbors] - x[p]
        b = y[neighbors] - y[p]
        grad, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
        if rank < d:
            fallback.append(p)
            continue
        scores[p] = np.abs(b - a @ grad).sum()
    return scores, tuple(fallback)


def lola_voronoi_batch(data: DesignData, batch: int, seed: int = 0) -> DesignProposal:
    """Nonlinearity-weighted Voronoi infill.

    Each existing point gets exploration = estimated Voronoi cell volume and
    exploitation = local-linear-fit residual; cells are ranked by volume plus
    sum-normalized residual and each selected cell contributes the test point
    farthest from its center. Points with a rank-deficient neighborhood fall
    back to the pure volume score and are listed in ``fallback_cells``.
    """
    x = data.normalized_points
    y = data.responses
    n, d = x.shape
    if n < 2 * (d + 1):
        raise ValueError(f"need at least 2(d+1) = {2 * (d + 1)} points, got {n}")
    if batch < 1:
        raise ValueError("batch must be positive")
    rng = np.random.default_rng(seed)
    n_test = min(100 * n, VORONOI_TEST_CAP)
    volumes, owner, dist, test = _voronoi_assignment(x, n_test, rng)
    nonlin, fallback = _local_nonlinearity(x, y)
    # residuals at rounding-noise level would otherwise be amplified by the
    # normalization below and rank cells on floating-point garbage
    floor = 1e-12 * max(1.0, float(np.ptp(y)))
    nonlin[nonlin <= floor] = 0.0
    total = nonlin.sum()
    combined = volumes + (nonlin / total if total > 0 else 0.0)

    order = np.argsort(-combined, kind="stable")
    chosen: list[int] = []
    picked_cells: list[int] = []
    # second pass lets a cell contribute again if there are more cells needed
    # than have any test points
    for allow_reuse in (False, True):
        for cell in order:
            if len(chosen) == batch:
                break
            if not allow_reuse and cell in picked_cells:
                continue
            members = np.flatnonzero(owner == cell)
            members = members[np.argsort(-dist[members], kind="stable")]
            for m in members:
                if m in chosen or dist[m] < MIN_SITE_DISTANCE:
                    continue
                if chosen and np.min(
                    np.linalg.norm(test[chosen] - test[m], axis=1)
                ) < MIN_SITE_DISTANCE:
                    continue
                chosen.append(int(m))
                picked_cells.append(int(cell))
                break
        if len(chosen) == batch:
            break
    if len(chosen) < batch:
        raise RuntimeError("could not place the requested batch; domain saturated")
    cells = np.asarray(picked_cells)
    return DesignProposal(
        points=test[chosen],
        exploration=volumes[cells],
        exploitation=nonlin[cells] / total if total > 0 else np.zeros(batch),
        combined=combined[cells],
        fallback_cells=fallback,
    )


def density_batch(data: DesignData, batch: int, seed: int = 0) -> DesignProposal:
    """Greedy candidate selection by blended maximin and projected distance.

    Candidates are scored w * (min euclidean distance to the design) +
    (1 - w) * (min per-axis projected distance); distances fold in previously
    accepted batch members so one call spreads the whole batch.
    """
    x = data.normalized_points
    n, d = x.shape
    if batch < 1:
        raise ValueError("batch must be positive")
    rng = np.random.default_rng(seed)
    pool = rng.random((CANDIDATES_PER_POINT * batch, d))

    dist_e = cKDTree(x).query(pool)[0]
    dist_p = np.full(pool.shape[0], np.inf)
    for l in range(d):
        dist_p = np.minimum(dist_p, np.abs(pool[:, l : l + 1] - x[None, :, l]).min(axis=1))

    chosen: list[int] = []
    expl, proj, comb = [], [], []
    for _ in range(batch):
        score = DENSITY_WEIGHT * dist_e + (1.0 - DENSITY_WEIGHT) * dist_p
        score[dist_e < MIN_SITE_DISTANCE] = -np.inf
        if chosen:
            score[chosen] = -np.inf
        pick = int(np.argmax(score))
        if not np.isfinite(score[pick]):
            raise RuntimeError("candidate pool exhausted; increase the pool size")
        chosen.append(pick)
        expl.append(dist_e[pick])
        proj.append(dist_p[pick])
        comb.append(score[pick])
        new = pool[pick]
        dist_e = np.minimum(dist_e, np.linalg.norm(pool - new, axis=1))
        dist_p = np.minimum(dist_p, np.abs(pool - new).min(axis=1))
    return DesignProposal(
        points=pool[chosen],
        exploration=np.asarray(expl),
        exploitation=np.asarray(proj),
        combined=np.asarray(comb),
    )
