"""Benchmark functions with analytic gradients and reference indices.

Reference main/total indices and derivative measures are exact closed forms
for all three functions (the tests cross-check them against pick-freeze
Monte-Carlo estimates on the true functions). The Moon function keeps only
its four dominant terms, so its references describe that truncated form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import InputSpace, denormalize


@dataclass(frozen=True)
class Benchmark:
    """A test function on its box domain, with exact gradient and references."""

    name: str
    space: InputSpace
    f: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    reference_main: np.ndarray | None = None
    reference_total: np.ndarray | None = None
    reference_dgsm_unit: np.ndarray | None = None

    def unit_function(self) -> Callable[[np.ndarray], np.ndarray]:
        """The function composed with denormalization, for [0, 1]^d callers."""
        return lambda u: self.f(denormalize(self.space, u))

    def unit_gradient(self) -> Callable[[np.ndarray], np.ndarray]:
        """Gradient with respect to normalized coordinates (chain rule)."""
        widths = self.space.widths
        return lambda u: self.gradient(denormalize(self.space, u)) * widths


def ishigami(x: np.ndarray, a: float = 7.0, b: float = 0.1) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])


def ishigami_gradient(x: np.ndarray, a: float = 7.0, b: float = 0.1) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = np.empty_like(x)
    g[:, 0] = np.cos(x[:, 0]) * (1.0 + b * x[:, 2] ** 4)
    g[:, 1] = 2.0 * a * np.sin(x[:, 1]) * np.cos(x[:, 1])
    g[:, 2] = 4.0 * b * x[:, 2] ** 3 * np.sin(x[:, 0])
    return g


def ishigami_exact(a: float = 7.0, b: float = 0.1) -> dict[str, np.ndarray | float]:
    """Exact variance decomposition and unit-hypercube derivative indices."""
    pi = np.pi
    v1 = 0.5 * (1.0 + b * pi**4 / 5.0) ** 2
    v2 = a**2 / 8.0
    v13 = 8.0 * b**2 * pi**8 / 225.0
    v = 0.5 + a**2 / 8.0 + b * pi**4 / 5.0 + b**2 * pi**8 / 18.0
    scale = (2.0 * pi) ** 2
    nu = scale * np.array(
        [
            0.5 * (1.0 + 2.0 * b * pi**4 / 5.0 + b**2 * pi**8 / 9.0),
            a**2 / 2.0,
            8.0 * b**2 * pi**6 / 7.0,
        ]
    )
    return {
        "variance": v,
        "main": np.array([v1, v2, 0.0]) / v,
        "total": np.array([v1 + v13, v2, v13]) / v,
        "dgsm_unit": nu,
    }


G_COEFFS = np.array([-0.5, 0.0, 0.5])  # a_i = (i - 2) / 2 for i = 1..3


def _g_factors(x: np.ndarray) -> np.ndarray:
    return (np.abs(4.0 * x - 2.0) + G_COEFFS) / (1.0 + G_COEFFS)


def g_function(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.prod(_g_factors(x), axis=1)


def g_function_gradient(x: np.ndarray) -> np.ndarray:
    """Gradient of the G-function; one-sided (from the right) at x_i = 0.5."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    factors = _g_factors(x)
    sign = np.where(4.0 * x - 2.0 >= 0.0, 1.0, -1.0)
    dfactors = 4.0 * sign / (1.0 + G_COEFFS)
    left = np.cumprod(factors, axis=1)
    right = np.cumprod(factors[:, ::-1], axis=1)[:, ::-1]
    g = np.empty_like(x)
    for i in range(x.shape[1]):
        others = np.ones(x.shape[0])
        if i > 0:
            others = others * left[:, i - 1]
        if i < x.shape[1] - 1:
            others = others * right[:, i + 1]
        g[:, i] = dfactors[:, i] * others
    return g


def g_function_exact() -> dict[str, np.ndarray | float]:
    """Exact indices: Var of factor i is (1/3)/(1+a_i)^2 and factors multiply.

    The derivative measure uses E[g_l^2] = (4/3 + 2 a_l + a_l^2)/(1 + a_l)^2
    and (dg_i/dx)^2 = 16/(1 + a_i)^2 almost everywhere.
    """
    vi = (1.0 / 3.0) / (1.0 + G_COEFFS) ** 2
    v = np.prod(1.0 + vi) - 1.0
    total = np.array([vi[i] * np.prod(1.0 + np.delete(vi, i)) for i in range(3)]) / v
    m = (4.0 / 3.0 + 2.0 * G_COEFFS + G_COEFFS**2) / (1.0 + G_COEFFS) ** 2
    nu = np.array(
        [16.0 / (1.0 + G_COEFFS[i]) ** 2 * np.prod(np.delete(m, i)) for i in range(3)]
    )
    return {"variance": v, "main": vi / v, "total": total, "dgsm_unit": nu}


MOON_TERMS = ((-19.71, 0, 17), (23.72, 0, 18), (28.99, 6, 11))
MOON_QUAD = (-13.34, 18)  # coefficient * x_19^2


def moon(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = MOON_QUAD[0] * x[:, MOON_QUAD[1]] ** 2
    for coeff, i, j in MOON_TERMS:
        out = out + coeff * x[:, i] * x[:, j]
    return out


def moon_gradient(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = np.zeros_like(x)
    g[:, MOON_QUAD[1]] += 2.0 * MOON_QUAD[0] * x[:, MOON_QUAD[1]]
    for coeff, i, j in MOON_TERMS:
        g[:, i] += coeff * x[:, j]
        g[:, j] += coeff * x[:, i]
    return g


def moon_exact() -> dict[str, np.ndarray | float]:
    """Exact variance decomposition of the truncated Moon function.

    Every term is bilinear or quadratic in uniform variables, so the usual
    moments give it in closed form: a pair term c x_i x_j contributes
    c^2 mu^2 / 12 to each main variance and c^2 (1/9 - 1/16 - 1/24) to the
    interaction; the x_19 column mixes its linear and quadratic parts.
    """
    d = 20
    mu, var, ex2 = 0.5, 1.0 / 12.0, 1.0 / 3.0
    pair_int = ex2**2 - mu**4 - 2.0 * mu**2 * var
    main = np.zeros(d)
    inter = np.zeros(d)
    linear = np.zeros(d)  # coefficient of x_v in E[f | x_v]
    for coeff, i, j in MOON_TERMS:
        linear[i] += coeff * mu
        linear[j] += coeff * mu
        inter[i] += coeff**2 * pair_int
        inter[j] += coeff**2 * pair_int
    main = linear**2 * var
    q, qi = MOON_QUAD
    a = linear[qi]
    main[qi] = a**2 / 12.0 + a * q / 6.0 + 4.0 * q**2 / 45.0
    v = float(main.sum() + inter.sum() / 2.0)
    nu = np.zeros(d)
    for coeff, i, j in MOON_TERMS:
        # fold the cross moments of every term sharing the variable
        nu[i] += coeff**2 * ex2
        nu[j] += coeff**2 * ex2
    nu[MOON_QUAD[1]] += 4.0 * q**2 * ex2
    c1, c2 = MOON_TERMS[0][0], MOON_TERMS[1][0]
    nu[0] += 2.0 * c1 * c2 * mu**2  # d f / d x_1 = c1 x_18 + c2 x_19
    nu[qi] += 2.0 * c2 * (2.0 * q) * mu**2  # d f / d x_19 = c2 x_1 + 2 q x_19
    return {"variance": v, "main": main / v, "total": (main + inter) / v, "dgsm_unit": nu}


_ISHIGAMI_EXACT = ishigami_exact()
_G_EXACT = g_function_exact()
_MOON_EXACT = moon_exact()

BENCHMARKS: dict[str, Benchmark] = {}


def _register(bench: Benchmark) -> Benchmark:
    BENCHMARKS[bench.name] = bench
    return bench


ISHIGAMI = _register(
    Benchmark(
        name="ishigami",
        space=InputSpace.box([-np.pi] * 3, [np.pi] * 3),
        f=ishigami,
        gradient=ishigami_gradient,
        reference_main=np.asarray(_ISHIGAMI_EXACT["main"]),
        reference_total=np.asarray(_ISHIGAMI_EXACT["total"]),
        reference_dgsm_unit=np.asarray(_ISHIGAMI_EXACT["dgsm_unit"]),
    )
)

GFUNCTION = _register(
    Benchmark(
        name="gfunction",
        space=InputSpace.unit(3),
        f=g_function,
        gradient=g_function_gradient,
        reference_main=np.asarray(_G_EXACT["main"]),
        reference_total=np.asarray(_G_EXACT["total"]),
        reference_dgsm_unit=np.asarray(_G_EXACT["dgsm_unit"]),
    )
)

MOON = _register(
    Benchmark(
        name="moon",
        space=InputSpace.unit(20),
        f=moon,
        gradient=moon_gradient,
        reference_main=np.asarray(_MOON_EXACT["main"]),
        reference_total=np.asarray(_MOON_EXACT["total"]),
        reference_dgsm_unit=np.asarray(_MOON_EXACT["dgsm_unit"]),
    )
)


def get_benchmark(name: str) -> Benchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; available: {sorted(BENCHMARKS)}"
        ) from None
