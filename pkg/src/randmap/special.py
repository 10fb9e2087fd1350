"""Scalar special functions used by the limit laws."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

EULER_GAMMA = 0.57721566490153286061

_E1_BRANCH = 1.0
_EPS = 1e-17


def std_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def chi2_1_cdf(x):
    """CDF of chi-square with one degree of freedom, ``2*Phi(sqrt(x)) - 1``.

    Evaluated as ``erf(sqrt(x/2))`` (same function, no cancellation near 0).
    Accepts arrays; returns 0 for ``x <= 0``.
    """
    x = np.asarray(x, dtype=float)
    out = _sp.erf(np.sqrt(np.maximum(x, 0.0) / 2.0))
    return out if out.ndim else float(out)


def _e1_series(s: float) -> float:
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= s / k
        contrib = term / k
        total += contrib if k % 2 else -contrib
        if contrib < _EPS * abs(total):
            break
        k += 1
    return -EULER_GAMMA - math.log(s) + total


def _e1_contfrac(s: float) -> float:
    # modified Lentz on e^{-s} / (s + 1 - 1^2/(s + 3 - 2^2/(s + 5 - ...)))
    tiny = 1e-300
    b = s + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-s)
    raise ArithmeticError(f"E1 continued fraction did not converge at s={s}")


def exp_integral_e1(s: float) -> float:
    """Exponential integral ``E1(s) = int_s^inf e^-t / t dt`` for ``s > 0``."""
    if not s > 0.0:
        raise ValueError("E1 is only defined here for s > 0")
    if s < _E1_BRANCH:
        return _e1_series(s)
    return _e1_contfrac(s)


def gamma_fn(theta: float) -> float:
    if theta == 0.5:
        return math.sqrt(math.pi)
    if theta == 1.0:
        return 1.0
    return math.gamma(theta)
