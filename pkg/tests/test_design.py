"""Initial Latin hypercubes and sequential infill batches."""

import numpy as np
import pytest

from kernelsa import design
from kernelsa.core import DesignData, InputSpace


def _strata_exact(points):
    # every column must place exactly one point in each of n equal bins
    n, d = points.shape
    for l in range(d):
        bins = np.floor(points[:, l] * n).astype(int)
        bins = np.minimum(bins, n - 1)
        if not np.array_equal(np.sort(bins), np.arange(n)):
            return False
    return True


def test_lhs_stratification_1d():
    pts = design.initial_lhs(1, 4, seed=0)
    assert pts.shape == (4, 1)
    assert _strata_exact(pts)


def test_lhs_stratification_2d():
    pts = design.initial_lhs(2, 20, seed=3)
    assert pts.shape == (20, 2)
    assert _strata_exact(pts)


def test_lhs_stratification_survives_optimization():
    for seed in range(10):
        pts = design.initial_lhs(3, 15, seed=seed, optimize=True)
        assert _strata_exact(pts)


def test_lhs_optimization_never_hurts_maximin():
    def min_dist(p):
        diff = p[:, None, :] - p[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        return dist.min()

    wins = 0
    for seed in range(50):
        raw = design.initial_lhs(2, 20, seed=seed, optimize=False)
        opt = design.initial_lhs(2, 20, seed=seed, optimize=True)
        assert min_dist(opt) >= min_dist(raw) - 1e-12
        wins += min_dist(opt) > min_dist(raw)
    assert wins > 40  # the swap search nearly always improves something


def test_lhs_needs_enough_points():
    with pytest.raises(ValueError):
        design.initial_lhs(3, 4, seed=0)


def test_lhs_seeded_determinism():
    a = design.initial_lhs(2, 10, seed=5)
    b = design.initial_lhs(2, 10, seed=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, design.initial_lhs(2, 10, seed=6))


def test_voronoi_volume_single_point():
    vol = design.voronoi_volumes(np.array([[0.3, 0.7]]), n_test=10**4, seed=0)
    assert vol.shape == (1,)
    assert vol[0] == pytest.approx(1.0, abs=0.02)


def test_voronoi_volume_symmetric_pair():
    pts = np.array([[0.25, 0.5], [0.75, 0.5]])
    vol = design.voronoi_volumes(pts, n_test=10**4, seed=0)
    assert vol[0] == pytest.approx(0.5, abs=0.02)
    assert vol[1] == pytest.approx(0.5, abs=0.02)


def test_voronoi_volumes_sum_to_one():
    rng = np.random.default_rng(9)
    pts = rng.random((17, 3))
    vol = design.voronoi_volumes(pts, n_test=10**4, seed=1)
    assert vol.sum() == pytest.approx(1.0, abs=0.01)
    assert np.all(vol >= 0)


def _design_from(points, y):
    space = InputSpace.unit(points.shape[1])
    return DesignData(space, points, y, ("initial",) * points.shape[0])


def test_lola_linear_response_has_no_nonlinearity():
    pts = design.initial_lhs(2, 12, seed=4)
    y = 2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 3.0
    scores, fallback = design._local_nonlinearity(pts, y)
    assert np.abs(scores).max() < 1e-8
    assert fallback == ()
    data = _design_from(pts, y)
    prop = design.lola_voronoi_batch(data, batch=3, seed=0)
    # with no curvature the batch is ranked by cell volume alone
    assert np.abs(prop.exploitation).max() == 0.0
    assert prop.points.shape == (3, 2)


def test_lola_scores_nonlinear_region_highest():
    # response curves sharply only near the origin corner
    pts = design.initial_lhs(2, 30, seed=8)
    y = np.exp(-20.0 * (pts**2).sum(axis=1))
    scores, _ = design._local_nonlinearity(pts, y)
    hot = np.argmax(scores)
    assert np.linalg.norm(pts[hot]) < 0.7


def test_lola_batch_respects_spacing_and_bounds():
    pts = design.initial_lhs(3, 25, seed=2)
    y = np.sin(3 * pts[:, 0]) + pts[:, 1] ** 2
    data = _design_from(pts, y)
    prop = design.lola_voronoi_batch(data, batch=10, seed=1)
    assert prop.points.shape == (10, 3)
    assert prop.points.min() >= 0.0 and prop.points.max() <= 1.0
    merged = np.vstack([data.points, prop.points])
    diff = np.abs(merged[:, None, :] - merged[None, :, :]).max(axis=2)
    np.fill_diagonal(diff, np.inf)
    assert diff.min() >= design.MIN_SITE_DISTANCE


def test_lola_needs_enough_history():
    pts = design.initial_lhs(2, 5, seed=0)
    data = _design_from(pts, pts[:, 0])
    with pytest.raises(ValueError):
        design.lola_voronoi_batch(data, batch=2, seed=0)


def test_lola_collinear_neighborhoods_fall_back():
    # all samples on the diagonal: every local model is rank deficient
    t = np.linspace(0.05, 0.95, 8)
    pts = np.column_stack([t, t])
    data = _design_from(pts, t)
    prop = design.lola_voronoi_batch(data, batch=2, seed=0)
    assert len(prop.fallback_cells) == 8
    assert np.abs(prop.exploitation).max() == 0.0
    assert prop.points.shape == (2, 2)


def test_lola_determinism():
    pts = design.initial_lhs(2, 14, seed=6)
    data = _design_from(pts, np.sin(5 * pts[:, 0]) * pts[:, 1])
    a = design.lola_voronoi_batch(data, batch=4, seed=3)
    b = design.lola_voronoi_batch(data, batch=4, seed=3)
    assert np.array_equal(a.points, b.points)


def test_density_batch_fills_empty_space():
    data = _design_from(np.array([[0.5, 0.5]]), np.array([1.0]))
    prop = design.density_batch(data, batch=1, seed=0)
    assert np.linalg.norm(prop.points[0] - 0.5) > 0.55


def test_density_batch_spacing_and_shape():
    pts = design.initial_lhs(2, 10, seed=1)
    data = _design_from(pts, pts[:, 0])
    prop = design.density_batch(data, batch=6, seed=2)
    assert prop.points.shape == (6, 2)
    merged = np.vstack([data.points, prop.points])
    diff = np.abs(merged[:, None, :] - merged[None, :, :]).max(axis=2)
    np.fill_diagonal(diff, np.inf)
    assert diff.min() >= design.MIN_SITE_DISTANCE


def test_density_batch_determinism():
    pts = design.initial_lhs(3, 9, seed=7)
    data = _design_from(pts, pts.sum(axis=1))
    a = design.density_batch(data, batch=5, seed=4)
    b = design.density_batch(data, batch=5, seed=4)
    assert np.array_equal(a.points, b.points)


def test_proposal_validates_unit_cube():
    with pytest.raises(ValueError):
        design.DesignProposal(
            np.array([[1.2, 0.0]]), np.ones(1), np.ones(1), np.ones(1)
        )
