"""Benchmark functions, gradients and their frozen reference indices."""

import numpy as np
import pytest

from kernelsa import benchmarks
from kernelsa.benchmarks import BENCHMARKS, get_benchmark
from kernelsa.mc import mc_dgsm, saltelli_estimate


def test_registry():
    assert set(BENCHMARKS) == {"ishigami", "gfunction", "moon"}
    assert get_benchmark("ishigami").space.d == 3
    assert get_benchmark("gfunction").space.d == 3
    assert get_benchmark("moon").space.d == 20
    with pytest.raises(KeyError):
        get_benchmark("rosenbrock")


def test_ishigami_point_values():
    f = get_benchmark("ishigami").f
    assert f(np.zeros((1, 3)))[0] == 0.0
    assert f(np.array([[np.pi / 2, 0.0, 0.0]]))[0] == pytest.approx(1.0)
    # b x3^4 sin(x1) term
    assert f(np.array([[np.pi / 2, 0.0, 2.0]]))[0] == pytest.approx(1.0 + 0.1 * 16.0)


def test_gfunction_point_values():
    f = get_benchmark("gfunction").f
    # |4x - 2| = 2 at x = 0, factors (2 + a_i) / (1 + a_i) with a = (-0.5, 0, 0.5)
    assert f(np.zeros((1, 3)))[0] == pytest.approx(3.0 * 2.0 * (5.0 / 3.0))
    # the a = 0 middle factor vanishes at the kink, zeroing the product
    assert f(np.full((1, 3), 0.5))[0] == pytest.approx(0.0)
    assert f(np.full((1, 3), 0.25))[0] == pytest.approx(
        ((1.0 - 0.5) / 0.5) * 1.0 * (1.5 / 1.5)
    )


def test_moon_point_values():
    f = get_benchmark("moon").f
    assert f(np.zeros((1, 20)))[0] == 0.0
    total = -19.71 + 23.72 + 28.99 - 13.34
    assert f(np.ones((1, 20)))[0] == pytest.approx(total)
    # single active pair: x7 = x12 = 1, everything else 0
    x = np.zeros((1, 20))
    x[0, 6] = 1.0
    x[0, 11] = 1.0
    assert f(x)[0] == pytest.approx(28.99)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_gradient_matches_central_differences(name):
    bench = get_benchmark(name)
    rng = np.random.default_rng(hash(name) % 2**32)
    n = 2000
    u = rng.random((n, bench.space.d))
    if name == "gfunction":
        # |4x - 2| has no derivative at x = 0.5; move probes off the kink
        off = np.abs(u - 0.5) < 1e-4
        u[off] += 2e-4
    x = bench.space.lower + u * bench.space.widths
    grad = bench.gradient(x)
    h = 1e-6
    for l in range(bench.space.d):
        up, dn = x.copy(), x.copy()
        up[:, l] += h
        dn[:, l] -= h
        fd = (bench.f(up) - bench.f(dn)) / (2 * h)
        assert np.abs(grad[:, l] - fd).max() < 1e-5


def test_unit_function_and_gradient_chain_rule():
    bench = get_benchmark("ishigami")
    uf = bench.unit_function()
    ug = bench.unit_gradient()
    u = np.array([[0.5, 0.5, 0.5], [0.25, 0.75, 0.1]])
    x = bench.space.lower + u * bench.space.widths
    assert uf(u) == pytest.approx(bench.f(x))
    assert ug(u) == pytest.approx(bench.gradient(x) * (2 * np.pi))


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_reference_indices_match_monte_carlo(name):
    bench = get_benchmark(name)
    est = saltelli_estimate(bench.unit_function(), bench.space.d, base_n=2**14, seed=7)
    assert np.all(np.abs(est.main - bench.reference_main) < 3 * est.main_se + 2e-3)
    assert np.all(np.abs(est.total - bench.reference_total) < 3 * est.total_se + 2e-3)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_reference_dgsm_matches_monte_carlo(name):
    bench = get_benchmark(name)
    est = mc_dgsm(bench.unit_gradient(), bench.space.d, n=2**14, seed=7)
    assert np.all(np.abs(est.nu - bench.reference_dgsm_unit) < 3 * est.se + 1e-6)


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_reference_variance_matches_sampling(name):
    bench = get_benchmark(name)
    exact = {
        "ishigami": benchmarks.ishigami_exact,
        "gfunction": benchmarks.g_function_exact,
        "moon": benchmarks.moon_exact,
    }[name]()
    rng = np.random.default_rng(13)
    n = 2**18
    y = bench.f(bench.space.lower + rng.random((n, bench.space.d)) * bench.space.widths)
    centered = y - y.mean()
    sample_v = float(np.mean(centered**2))
    se = np.sqrt((np.mean(centered**4) - sample_v**2) / n)
    assert abs(exact["variance"] - sample_v) < 3 * se


def test_exact_tables_are_consistent():
    for fn in (benchmarks.ishigami_exact, benchmarks.g_function_exact, benchmarks.moon_exact):
        ref = fn()
        assert np.all(ref["main"] >= -1e-12)
        assert np.all(ref["total"] >= ref["main"] - 1e-12)
        assert ref["main"].sum() <= 1.0 + 1e-9
        assert np.all(ref["dgsm_unit"] >= 0.0)
        # the derivative bound dominates every total index
        bound = ref["dgsm_unit"] / (np.pi**2 * ref["variance"])
        assert np.all(ref["total"] <= bound + 1e-9)


def test_ishigami_exact_values():
    ref = benchmarks.ishigami_exact()
    assert ref["main"] == pytest.approx([0.3139, 0.4424, 0.0], abs=1e-4)
    assert ref["total"] == pytest.approx([0.5576, 0.4424, 0.2437], abs=1e-4)
    assert ref["dgsm_unit"] == pytest.approx([304.757, 967.221, 433.761], abs=0.01)


def test_gfunction_exact_values():
    ref = benchmarks.g_function_exact()
    assert ref["variance"] == pytest.approx(625.0 / 243.0)
    assert ref["main"] == pytest.approx([0.5184, 0.1296, 0.0576], abs=1e-4)
    assert ref["total"] == pytest.approx([0.7936, 0.3472, 0.1792], abs=1e-4)
