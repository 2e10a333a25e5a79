"""Domain types: spaces, designs, surrogate container, reports, traces."""

import numpy as np
import pytest

from kernelsa.core import (
    AffineTensorSurrogate,
    DesignData,
    DomainError,
    InputSpace,
    IterationRecord,
    SensitivityReport,
    StoppingTrace,
    denormalize,
    normalize,
)
from kernelsa.kernels import KernelSpec


ISHIGAMI_SPACE = InputSpace.box([-np.pi] * 3, [np.pi] * 3)


def test_space_properties():
    s = InputSpace.unit(3)
    assert s.d == 3
    assert s.names == ("x1", "x2", "x3")
    assert np.array_equal(s.lower, np.zeros(3))
    assert np.array_equal(s.widths, np.ones(3))


def test_space_validation():
    with pytest.raises(DomainError):
        InputSpace(())
    with pytest.raises(DomainError):
        InputSpace((("a", 0.0, 1.0), ("a", 0.0, 1.0)))
    with pytest.raises(DomainError):
        InputSpace((("a", 1.0, 1.0),))
    with pytest.raises(DomainError):
        InputSpace((("a", 0.0, np.inf),))


def test_normalize_center():
    assert np.allclose(normalize(ISHIGAMI_SPACE, [0.0, 0.0, 0.0]), [0.5, 0.5, 0.5])
    assert np.allclose(normalize(ISHIGAMI_SPACE, [-np.pi] * 3), [0.0, 0.0, 0.0])
    assert np.allclose(normalize(ISHIGAMI_SPACE, [np.pi] * 3), [1.0, 1.0, 1.0])


def test_normalize_round_trip():
    rng = np.random.default_rng(0)
    space = InputSpace.box([-3.0, 0.1, 5.0], [-1.0, 0.2, 50.0])
    x = space.lower + rng.random((1000, 3)) * space.widths
    back = denormalize(space, normalize(space, x))
    assert np.abs(back - x).max() < 1e-12


def test_normalize_rejects_outside_point():
    with pytest.raises(DomainError, match="x1"):
        normalize(ISHIGAMI_SPACE, [4.0, 0.0, 0.0])


def test_normalize_rejects_wrong_width():
    with pytest.raises(DomainError):
        normalize(ISHIGAMI_SPACE, [0.0, 0.0])


def test_design_basic():
    space = InputSpace.unit(2)
    pts = np.array([[0.1, 0.2], [0.9, 0.8]])
    data = DesignData(space, pts, [1.0, 2.0], ("initial", "initial"))
    assert data.n == 2
    assert np.array_equal(data.normalized_points, pts)


def test_design_rejects_duplicates():
    space = InputSpace.unit(2)
    pts = np.array([[0.5, 0.5], [0.5, 0.5 + 1e-12]])
    with pytest.raises(DomainError, match="duplicate"):
        DesignData(space, pts, [0.0, 1.0], ("initial", "initial"))


def test_design_rejects_shape_mismatches():
    space = InputSpace.unit(2)
    pts = np.array([[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(DomainError):
        DesignData(space, pts, [1.0], ("initial", "initial"))
    with pytest.raises(DomainError):
        DesignData(space, pts, [1.0, 2.0], ("initial",))
    with pytest.raises(DomainError):
        DesignData(InputSpace.unit(3), pts, [1.0, 2.0], ("initial", "initial"))


def test_design_rejects_point_outside_space():
    space = InputSpace.unit(2)
    with pytest.raises(DomainError):
        DesignData(space, [[0.5, 1.4]], [0.0], ("initial",))


def test_design_extended_appends_and_labels():
    space = InputSpace.unit(2)
    data = DesignData(space, [[0.1, 0.1], [0.9, 0.9]], [0.0, 1.0], ("initial", "initial"))
    grown = data.extended([[0.5, 0.4]], [2.0], "batch-1")
    assert grown.n == 3
    assert grown.provenance == ("initial", "initial", "batch-1")
    assert data.n == 2  # original untouched
    with pytest.raises(DomainError, match="duplicate"):
        grown.extended([[0.5, 0.4]], [2.0], "batch-2")


def test_design_subset():
    space = InputSpace.unit(1)
    data = DesignData(space, [[0.1], [0.5], [0.9]], [1.0, 2.0, 3.0], ("a", "b", "c"))
    sub = data.subset([2, 0])
    assert np.allclose(sub.points.ravel(), [0.9, 0.1])
    assert sub.provenance == ("c", "a")


def test_surrogate_container_validation():
    spec = KernelSpec("se", np.array([1.0]))
    with pytest.raises(ValueError, match="weights"):
        AffineTensorSurrogate(0.0, np.ones(3), np.zeros((2, 2)), spec)
    with pytest.raises(ValueError, match="unit hypercube"):
        AffineTensorSurrogate(0.0, np.ones(1), np.array([[1.5, 0.0]]), spec)
    with pytest.raises(ValueError, match="ARD"):
        AffineTensorSurrogate(
            0.0, np.ones(1), np.array([[0.5, 0.5, 0.5]]), KernelSpec("se", np.ones(2))
        )


def test_report_invariants():
    SensitivityReport(1.0, np.array([0.3, 0.2]), np.array([0.5, 0.4]))
    with pytest.raises(ValueError, match="variance"):
        SensitivityReport(-1.0, np.array([0.1]), np.array([0.2]))
    with pytest.raises(ValueError, match="total"):
        SensitivityReport(1.0, np.array([0.5]), np.array([0.3]))
    with pytest.raises(ValueError, match="sum"):
        SensitivityReport(1.0, np.array([0.7, 0.7]), np.array([0.8, 0.8]))
    with pytest.raises(ValueError, match="nonnegative"):
        SensitivityReport(
            1.0, np.array([0.1]), np.array([0.2]), dgsm=np.array([-1.0])
        )


def test_trace_ordering():
    r1 = IterationRecord(10, {"mean": 0.5})
    r2 = IterationRecord(20, {"mean": 0.1})
    trace = StoppingTrace((r1,)).with_record(r2)
    assert len(trace) == 2
    assert [r.sample_count for r in trace] == [10, 20]
    with pytest.raises(ValueError, match="strictly increase"):
        trace.with_record(IterationRecord(20, {"mean": 0.05}))
