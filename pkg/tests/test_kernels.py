"""One-dimensional kernel factors and their derivatives."""

import numpy as np
import pytest

from kernelsa import kernels
from kernelsa.kernels import FAMILIES, KernelSpec


def test_se_factor_known_value():
    spec = KernelSpec("se", np.array([4.0]))
    assert kernels.factor(spec, 0, 0.0, 0.5) == pytest.approx(np.exp(-1.0), abs=1e-15)


def test_se_derivative_known_value():
    # d/dx exp(-theta (x-c)^2) = -2 theta (x-c) exp(...)
    spec = KernelSpec("se", np.array([1.0]))
    got = kernels.factor_derivative(spec, 0, 0.0, 0.3)
    assert got == pytest.approx(-0.6 * np.exp(-0.09), abs=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_factor_is_one_at_center(family):
    spec = KernelSpec(family, np.array([2.7]))
    assert kernels.factor(spec, 0, 0.42, 0.42) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_derivative_is_zero_at_center(family):
    spec = KernelSpec(family, np.array([2.7]))
    assert kernels.factor_derivative(spec, 0, 0.42, 0.42) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_factor_range_and_symmetry(family):
    # theta capped where exp() still resolves: huge theta*delta underflows to 0
    rng = np.random.default_rng(5)
    theta = 10.0 ** rng.uniform(-2, 2, size=200)
    c = rng.random(200)
    delta = rng.uniform(-1, 1, size=200)
    for th, cc, dd in zip(theta, c, delta):
        spec = KernelSpec(family, np.array([th]))
        plus = kernels.factor(spec, 0, cc, cc + dd)
        minus = kernels.factor(spec, 0, cc, cc - dd)
        assert 0.0 < plus <= 1.0
        assert plus == pytest.approx(minus, abs=1e-15)


@pytest.mark.parametrize("family", FAMILIES)
def test_derivative_matches_central_differences(family):
    rng = np.random.default_rng(17)
    n = 2000
    theta = 10.0 ** rng.uniform(-2, 2, size=n)
    c = rng.random(n)
    x = rng.random(n)
    h = 1e-6
    for th, cc, xx in zip(theta, c, x):
        spec = KernelSpec(family, np.array([th]))
        fd = (kernels.factor(spec, 0, cc, xx + h) - kernels.factor(spec, 0, cc, xx - h)) / (2 * h)
        got = kernels.factor_derivative(spec, 0, cc, xx)
        assert got == pytest.approx(fd, abs=1e-5)


def test_per_dimension_theta_indexing():
    spec = KernelSpec("se", np.array([1.0, 100.0]))
    wide = kernels.factor(spec, 0, 0.0, 0.3)
    narrow = kernels.factor(spec, 1, 0.0, 0.3)
    assert wide == pytest.approx(np.exp(-0.09))
    assert narrow == pytest.approx(np.exp(-9.0))
    assert narrow < wide


def test_shared_theta_broadcasts_to_any_dimension():
    spec = KernelSpec("matern32", np.array([3.0]))
    vals = [kernels.factor(spec, l, 0.2, 0.7) for l in range(5)]
    assert len(set(vals)) == 1


def test_kernel_matrix_symmetry_and_diagonal():
    rng = np.random.default_rng(3)
    x = rng.random((15, 4))
    spec = KernelSpec("matern32", rng.uniform(0.5, 5.0, size=4))
    k = kernels.kernel_matrix(spec, x, x)
    assert np.allclose(k, k.T, atol=1e-15)
    assert np.allclose(np.diag(k), 1.0, atol=1e-15)
    assert k.min() > 0.0


def test_kernel_matrix_is_product_of_factors():
    rng = np.random.default_rng(9)
    a = rng.random((6, 3))
    b = rng.random((4, 3))
    spec = KernelSpec("se", np.array([1.5, 0.7, 3.0]))
    k = kernels.kernel_matrix(spec, a, b)
    for i in range(6):
        for j in range(4):
            prod = 1.0
            for l in range(3):
                prod *= kernels.factor(spec, l, b[j, l], a[i, l])
            assert k[i, j] == pytest.approx(prod, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("cubic", np.array([1.0]))
    with pytest.raises(ValueError):
        KernelSpec("se", np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        KernelSpec("se", np.array([0.0]))
