"""Closed-form test functions and the Gamma-function regression problem.

These are independent of the fitting code and serve as oracles: a Lanczos
Gamma, Euler's sum-of-products identity, the [5/6] Padé approximant of sine in
both ratio and continued-fraction form, and Lambert's fraction for tanh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cfr.data import Dataset
from cfr.model import ContinuedFraction

__all__ = [
    "PoleError",
    "gamma",
    "GammaDatasetSpec",
    "make_gamma_dataset",
    "euler_sum",
    "euler_cf",
    "euler_fraction",
    "pade_sin",
    "cf_sin",
    "sine_fraction",
    "tanh_cf",
    "example_fraction",
]


class PoleError(ArithmeticError):
    pass


# Lanczos approximation, g = 7, nine coefficients
_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Gamma function for real ``x``; raises PoleError at non-positive integers."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"Gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    a = _LANCZOS_COEF[0]
    t = x + _LANCZOS_G + 0.5
    for i in range(1, _LANCZOS_G + 2):
        a += _LANCZOS_COEF[i] / (x + i)
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


@dataclass(frozen=True)
class GammaDatasetSpec:
    lo: float = -2.683
    hi: float = 4.5
    n_samples: int = 873
    max_power: int = 6

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("lo must be below hi")
        if self.n_samples < 2:
            raise ValueError("need at least 2 samples")
        if self.max_power < 1:
            raise ValueError("max_power must be at least 1")

    @property
    def grid(self) -> np.ndarray:
        k = np.arange(self.n_samples)
        return self.lo + k * (self.hi - self.lo) / (self.n_samples - 1)


def make_gamma_dataset(spec: GammaDatasetSpec | None = None) -> Dataset:
    """Evenly spaced samples of Gamma with features ``[1, x, x^2, ..., x^max_power]``."""
    spec = spec or GammaDatasetSpec()
    xs = spec.grid
    for x in xs:
        if x <= 0 and abs(x - round(x)) < 1e-9:
            raise PoleError(f"grid point {x!r} lies on a pole of Gamma")
    features = np.vander(xs, spec.max_power + 1, increasing=True)
    names = ["one", "x"] + [f"x^{p}" for p in range(2, spec.max_power + 1)]
    targets = np.array([gamma(x) for x in xs])
    return Dataset(features, targets, names, "gamma")


def euler_sum(a) -> float:
    """``a0 + a0*a1 + ... + a0*a1*...*an``."""
    total, prod = 0.0, 1.0
    for v in a:
        prod *= v
        total += prod
    return total


def euler_cf(a, eps: float = 1e-9) -> float:
    """Right-hand side of Euler's identity,
    ``a0 / (1 - a1 / (1 + a1 - a2 / (1 + a2 - ... - an / (1 + an))))``."""
    a = [float(v) for v in a]
    if not a:
        raise ValueError("need at least one value")
    n = len(a) - 1
    if n == 0:
        return a[0]
    r = 1.0 + a[n]
    for k in range(n - 1, 0, -1):
        if abs(r) < eps:
            raise PoleError(f"denominator vanished at level {k + 1}")
        r = 1.0 + a[k] - a[k + 1] / r
    if abs(r) < eps:
        raise PoleError("denominator vanished at level 1")
    d = 1.0 - a[1] / r
    if abs(d) < eps:
        raise PoleError("outer denominator vanished")
    return a[0] / d


def euler_fraction(a) -> ContinuedFraction:
    """Euler's fraction as a constant-only model over one dummy input."""
    a = [float(v) for v in a]
    n = len(a) - 1
    depth = n + 1
    constants = np.zeros(2 * depth + 1)
    constants[1] = a[0]
    constants[2] = 1.0
    for k in range(1, n + 1):
        constants[2 * k + 1] = -a[k]
        constants[2 * k + 2] = 1.0 + a[k]
    n_terms = 2 * depth + 1
    return ContinuedFraction(np.zeros((n_terms, 1)), constants,
                             np.zeros((n_terms, 1), dtype=bool), [False])


def _ratio(num, den):
    return float(Fraction(num, den))


# Padé [5/6] of sin(x); exact rational coefficients
_PADE_NUM = ((1, 1, 1), (3, -2363, 18183), (5, 12671, 4363920))
_PADE_DEN = ((0, 1, 1), (2, 445, 12122), (4, 601, 872784), (6, 121, 16662240))
# the same approximant as x + K_{k=1..6} (c_k x^{p_k}) / 1
_SIN_CF_NUM = ((3, -1, 6), (2, 1, 20), (2, -11, 420), (2, 25, 2772), (2, -11, 900), (2, 1331, 82650))


def pade_sin(x: float) -> float:
    num = sum(_ratio(p, q) * x ** k for k, p, q in _PADE_NUM)
    den = sum(_ratio(p, q) * x ** k for k, p, q in _PADE_DEN)
    return num / den


def cf_sin(x: float) -> float:
    r = 1.0
    for power, p, q in reversed(_SIN_CF_NUM[1:]):
        r = 1.0 + _ratio(p, q) * x ** power / r
    power, p, q = _SIN_CF_NUM[0]
    return x + _ratio(p, q) * x ** power / r


def sine_fraction() -> ContinuedFraction:
    """The Padé sine approximant as a depth-6 model over inputs ``(x, x^2, x^3)``."""
    depth = len(_SIN_CF_NUM)
    n_terms = 2 * depth + 1
    coefficients = np.zeros((n_terms, 3))
    constants = np.zeros(n_terms)
    coefficients[0, 0] = 1.0
    for k, (power, p, q) in enumerate(_SIN_CF_NUM):
        coefficients[2 * k + 1, power - 1] = _ratio(p, q)
        constants[2 * k + 2] = 1.0
    active = coefficients != 0.0
    return ContinuedFraction(coefficients, constants, active, [True, True, True])


def tanh_cf(x1: float, x2: float, levels: int, offset: float = 1.0) -> float:
    """Lambert-type fraction for ``tanh(x1 + 5*x2)`` truncated after ``levels``
    partial quotients: ``offset + z / (1 + z^2 / (3 + z^2 / (5 + ...)))``.

    ``offset`` is the leading constant (default 1); the fraction converges to
    ``tanh`` itself with ``offset=0``.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    z = x1 + 5.0 * x2
    z2 = z * z
    r = 2.0 * levels - 1.0
    for i in range(levels - 1, 0, -1):
        if abs(r) < 1e-12:
            raise PoleError(f"denominator vanished at level {i + 1}")
        r = (2.0 * i - 1.0) + z2 / r
    if abs(r) < 1e-12:
        raise PoleError("denominator vanished at level 1")
    return offset + z / r


def example_fraction() -> ContinuedFraction:
    """``2.1 w + (4.7 x + w + 1.01) / (x + (1.3 + 5.7 y) / (3.9 x))`` over ``(w, x, y, z)``."""
    coefficients = np.zeros((5, 4))
    constants = np.zeros(5)
    coefficients[0, 0] = 2.1
    coefficients[1, 1], coefficients[1, 0], constants[1] = 4.7, 1.0, 1.01
    coefficients[2, 1] = 1.0
    coefficients[3, 2], constants[3] = 5.7, 1.3
    coefficients[4, 1] = 3.9
    active = coefficients != 0.0
    return ContinuedFraction(coefficients, constants, active, [True, True, True, False])
