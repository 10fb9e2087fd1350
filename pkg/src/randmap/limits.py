"""Limit laws of the largest component and the deepest cycle.

The density ``p_theta`` is produced by the method of steps on unit intervals.
On ``(k, k+1]`` every quantity is sampled at ``x = k + u**(1/theta)`` for a
uniform grid of ``u`` in ``[0, 1]``; with this variable the delay singularity
at ``x = 1`` disappears and the delayed history ``p(x - 1)`` sits on exactly
the same ``u`` nodes of the previous interval.

Instead of stepping ``x p' = -(1-theta) p - theta p(x-1)`` directly, the
solver uses the integrated identity

    x p(x) = theta * int_{x-1}^{x} p(t) dt,        x > 1,

whose right-hand side has only positive terms, so the super-exponentially
small tail keeps full relative precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate

from .special import EULER_GAMMA, chi2_1_cdf, exp_integral_e1, gamma_fn

# Purdom and Williams' leading coefficient of E(kappa_n) / sqrt(n)
PW_COEFFS = (0.7824816, 0.104055, 0.0652068, -0.1052117, 0.0416667)

DEFAULT_STEP = 1e-4
DEFAULT_XMAX = 50
# rows whose integration weight never exceeds this are skipped in quadrature
_NEGLIGIBLE = 1e-40


class ConvergenceError(ArithmeticError):
    pass


class OutOfTableRange(ValueError):
    pass


# ---------------------------------------------------------------- solver

@njit(cache=True)
def _solve_rows(theta, c0, m, k_max):
    """Return (P, W): P[k, j] = p(k + u_j^(1/theta)), W = P * dx/du."""
    h = 1.0 / m
    inv = 1.0 / theta
    u = np.arange(m + 1) * h
    jac = np.empty(m + 1)
    for j in range(m + 1):
        jac[j] = inv * u[j] ** (inv - 1.0) if u[j] > 0.0 or inv == 1.0 else 0.0
    P = np.zeros((k_max, m + 1))
    W = np.zeros((k_max, m + 1))
    # (0, 1]: closed form, dx/du * p is the constant c0 / theta
    P[0, 0] = np.inf
    for j in range(1, m + 1):
        P[0, j] = c0 * u[j] ** ((theta - 1.0) * inv)
        W[0, j] = c0 * inv
    W[0, 0] = c0 * inv
    R = np.empty(m + 1)
    for k in range(1, k_max):
        # R[j] = int_{x_j - 1}^{k} p = int_{u_j}^{1} W[k-1]
        if k == 1:
            for j in range(m + 1):
                R[j] = c0 * inv * (1.0 - u[j])
        else:
            w = W[k - 1]
            R[m] = 0.0
            R[m - 1] = h / 24.0 * (w[m - 3] - 5.0 * w[m - 2] + 19.0 * w[m - 1] + 9.0 * w[m])
            for j in range(m - 2, 0, -1):
                R[j] = R[j + 1] + h / 24.0 * (-w[j - 1] + 13.0 * w[j] + 13.0 * w[j + 1] - w[j + 2])
            R[0] = R[1] + h / 24.0 * (9.0 * w[0] + 19.0 * w[1] - 5.0 * w[2] + w[3])
        s = 0.0
        for j in range(m + 1):
            x = k + u[j] ** inv
            if j == 0:
                a0 = 0.0
                rest = 0.0
            elif j == 1:
                a0 = h / 2.0
                rest = h / 2.0 * W[k, 0]
            elif j == 2:
                a0 = 5.0 * h / 12.0
                rest = h / 12.0 * (8.0 * W[k, 1] - W[k, 0])
            else:
                a0 = 9.0 * h / 24.0
                rest = h / 24.0 * (19.0 * W[k, j - 1] - 5.0 * W[k, j - 2] + W[k, j - 3])
            pj = theta * (R[j] + s + rest) / (x - theta * a0 * jac[j])
            P[k, j] = pj
            W[k, j] = pj * jac[j]
            s += rest + a0 * W[k, j]
    return P, W


@dataclass(frozen=True)
class DensityTable:
    """Samples of ``p_theta`` on ``(0, x_max]``.

    Row ``k`` of ``rows`` holds ``p`` at ``x = k + u**(1/theta)`` and row ``k``
    of ``weights`` holds ``p * dx/du`` there, a smooth integrand in ``u``.
    """

    theta: float
    step: float
    x_max: int
    rows: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    interp_order: int = 3

    @property
    def m(self) -> int:
        return self.rows.shape[1] - 1

    @property
    def u(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m + 1)

    @property
    def grid(self) -> np.ndarray:
        """Increasing abscissae on (0, x_max] (row junctions listed once)."""
        xs = self.u[None, 1:] ** (1.0 / self.theta) + np.arange(self.x_max)[:, None]
        return xs.ravel()

    @property
    def values(self) -> np.ndarray:
        return self.rows[:, 1:].ravel()

    @property
    def closed_form_scale(self) -> float:
        return math.exp(-EULER_GAMMA * self.theta) / gamma_fn(self.theta)

    def p(self, x):
        """Interpolate ``p_theta`` at ``x`` (cubic in ``u``; exact on (0, 1])."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any(x <= 0.0) or np.any(x > self.x_max):
            raise OutOfTableRange(f"p is tabulated on (0, {self.x_max}] only")
        out = np.empty_like(x)
        head = x <= 1.0
        out[head] = self.closed_form_scale * x[head] ** (self.theta - 1.0)
        xt = x[~head]
        if xt.size:
            k = np.minimum(np.ceil(xt).astype(np.int64) - 1, self.x_max - 1)
            u = np.clip(xt - k, 0.0, 1.0) ** self.theta
            s = u * self.m
            i0 = np.clip(np.floor(s).astype(np.int64) - 1, 0, self.m - 3)
            t = s - i0
            acc = np.zeros_like(xt)
            for a in range(4):
                la = np.ones_like(xt)
                for b in range(4):
                    if b != a:
                        la *= (t - b) / (a - b)
                acc += la * self.rows[k, i0 + a]
            out[~head] = acc
        return float(out[0]) if scalar else out

    def integrate(self, g, with_error: bool = False):
        """``int_0^x_max g(x) p(x) dx`` by composite Simpson in ``u``.

        ``g`` maps an array of abscissae to values (broadcasting over a
        leading axis is allowed).  With ``with_error`` also return the
        difference to the half-resolution rule as an error estimate.
        """
        live = np.flatnonzero(self.weights.max(axis=1) > _NEGLIGIBLE)
        u = self.u
        xs = np.arange(self.x_max)[live, None] + u[None, :] ** (1.0 / self.theta)
        vals = np.asarray(g(xs)) * self.weights[live]
        fine = integrate.simpson(vals, dx=1.0 / self.m, axis=-1).sum(axis=-1)
        if not with_error:
            return fine
        coarse = integrate.simpson(vals[..., ::2], dx=2.0 / self.m, axis=-1).sum(axis=-1)
        return fine, np.abs(fine - coarse)


def _solve(theta, x_max, m):
    c0 = math.exp(-EULER_GAMMA * theta) / gamma_fn(theta)
    return _solve_rows(float(theta), c0, int(m), int(x_max))


def solve_dde(theta: float = 0.5, x_max: float = DEFAULT_XMAX,
              step: float = DEFAULT_STEP, tol: float = 1e-7) -> DensityTable:
    """Solve the delay equation ``x p' + (1-theta) p + theta p(x-1) = 0``.

    ``x_max`` is rounded up to a whole number of unit intervals and ``step``
    to the nearest ``1/m``.  The total mass is compared against a solve at
    twice the step; a change above ``tol`` raises ``ConvergenceError``.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if x_max < 2:
        raise ValueError("x_max must be at least 2")
    if not 0.0 < step <= 1e-3:
        raise ValueError("step must lie in (0, 1e-3]")
    k_max = int(math.ceil(x_max))
    m = int(round(1.0 / step))
    rows, weights = _solve(theta, k_max, m)
    table = DensityTable(theta=theta, step=1.0 / m, x_max=k_max, rows=rows, weights=weights)
    half = m // 2
    c_rows, c_weights = _solve(theta, k_max, half)
    coarse = DensityTable(theta=theta, step=1.0 / half, x_max=k_max,
                          rows=c_rows, weights=c_weights)
    mass, mass_coarse = table.integrate(np.ones_like), coarse.integrate(np.ones_like)
    if abs(mass - mass_coarse) > tol:
        raise ConvergenceError(
            f"mass changed by {abs(mass - mass_coarse):.3e} between step {2.0 / m:g} "
            f"and {1.0 / m:g} (tolerance {tol:g})")
    return table


# ---------------------------------------------------------------- mu law

def _mu_scale(theta):
    return math.exp(EULER_GAMMA * theta) * gamma_fn(theta)


def mu_cdf(table: DensityTable, x):
    """Limit CDF of mu_n / n: ``e^{gamma theta} Gamma(theta) x^{theta-1} p(1/x)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x > 1.0):
        raise OutOfTableRange("mu_cdf is defined on (0, 1]")
    if np.any(1.0 / x > table.x_max):
        raise OutOfTableRange(f"mu_cdf needs x >= 1/{table.x_max}")
    th = table.theta
    out = _mu_scale(th) * x ** (th - 1.0) * table.p(1.0 / x)
    return float(out) if np.ndim(out) == 0 else out


def mu_pdf(table: DensityTable, x):
    """Limit density of mu_n / n: ``theta e^{gamma theta} Gamma(theta) x^{theta-2} p(1/x - 1)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x > 1.0):
        raise OutOfTableRange("mu_pdf is defined on (0, 1]")
    if np.any(1.0 / x - 1.0 > table.x_max):
        raise OutOfTableRange(f"mu_pdf needs x >= 1/{table.x_max + 1}")
    th = table.theta
    y = 1.0 / x - 1.0
    pv = np.full(y.shape, np.inf)
    pos = y > 0.0
    pv[pos] = table.p(y[pos])
    out = th * _mu_scale(th) * x ** (th - 2.0) * pv
    return float(out) if np.ndim(out) == 0 else out


def mu_moment(table: DensityTable, a: float, with_error: bool = False):
    """``int_0^1 x^a f(x) dx`` via ``x = 1/(1+y)``, i.e. ``c theta E[(1+eta)^(-a-theta)]``."""
    th = table.theta
    scale = th * _mu_scale(th)
    res = table.integrate(lambda y: (1.0 + y) ** (-a - th), with_error=with_error)
    if with_error:
        return scale * res[0], scale * res[1]
    return scale * res


def nu_limit_cdf(table: DensityTable, y, tol: float = 1e-8):
    """Limit CDF of nu_n^2 / n: ``H(y) = int_0^1 f(x) G(y/x) dx``.

    The CDF of nu_n / sqrt(n) at ``t`` is ``H(t**2)``.  Raises
    ``ConvergenceError`` when the quadrature error estimate exceeds ``tol``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("H is a CDF on [0, inf); y must be nonnegative")
    flat = np.atleast_1d(y).ravel()
    th = table.theta
    scale = th * _mu_scale(th)
    out = np.empty_like(flat)
    # chunks keep the (n_y, rows, nodes) temporaries small
    for lo in range(0, flat.size, 8):
        yy = flat[lo:lo + 8][:, None, None]
        val, err = table.integrate(
            lambda z: (1.0 + z) ** (-th) * chi2_1_cdf(yy * (1.0 + z)), with_error=True)
        worst = float(np.max(scale * err))
        if worst > tol:
            raise ConvergenceError(f"H quadrature error estimate {worst:.3e} exceeds {tol:g}")
        out[lo:lo + 8] = np.minimum(scale * val, 1.0)
    out[flat == 0.0] = 0.0
    out = out.reshape(np.shape(y))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- constants

def _i_integrand(u):
    if u == 0.0:
        return 0.0
    s = u * u
    return math.exp(-s - 0.5 * exp_integral_e1(s))


def constant_I(tol: float = 1e-12) -> float:
    """``lim E(nu_n)/sqrt(n)`` from its Laplace representation.

    ``(1/sqrt 2) int_0^inf exp(-s - E1(s)/2) / sqrt(s) ds`` becomes
    ``sqrt(2) int_0^inf exp(-u^2 - E1(u^2)/2) du`` with ``s = u^2``; the
    integrand is below 1e-27 past ``u = 8``.
    """
    total = 0.0
    for a, b in ((0.0, 1.0), (1.0, 3.0), (3.0, 8.0)):
        val, err = integrate.quad(_i_integrand, a, b, epsabs=tol, epsrel=0.0, limit=200)
        if err > 1e-10:
            raise ConvergenceError(f"I quadrature error {err:.3e} on [{a}, {b}]")
        total += val
    return math.sqrt(2.0) * total


def laplace_p(s: float, theta: float = 0.5) -> float:
    """Closed-form Laplace transform ``e^{-gamma theta} s^{-theta} e^{-theta E1(s)}``."""
    return math.exp(-EULER_GAMMA * theta) * s ** (-theta) * math.exp(-theta * exp_integral_e1(s))


def purdom_williams_kappa(n: int) -> float:
    """Five-term asymptotic expansion of E(kappa_n)."""
    if n < 1:
        raise ValueError("n must be positive")
    r = math.sqrt(n)
    c = PW_COEFFS
    return c[0] * r + c[1] + c[2] / r + c[3] / n + c[4] / (n * r)


def ratio_constants(I: float) -> dict:
    cond = math.sqrt(2.0 / math.pi) * I
    conl = PW_COEFFS[0] / math.sqrt(math.pi / 2.0)
    return {"ratio_cond": cond, "ratio_conl": conl, "richest_diff": conl - cond}


# ---------------------------------------------------------------- tables

@dataclass(frozen=True)
class LimitTables:
    density: DensityTable
    x_grid: np.ndarray
    p_grid: np.ndarray
    F_grid: np.ndarray
    f_grid: np.ndarray
    y_grid: np.ndarray
    H_grid: np.ndarray
    constants: dict

    def nu_cdf(self, t):
        """Limit CDF of nu_n / sqrt(n)."""
        t = np.asarray(t, dtype=float)
        return nu_limit_cdf(self.density, np.maximum(t, 0.0) ** 2)


def limit_constants(table: DensityTable) -> dict:
    """Scalar limits; the mapping-specific ones are ``None`` unless theta = 1/2."""
    mean_mu = float(mu_moment(table, 1.0))
    out = {"I": None, "mean_mu": mean_mu, "var_limit": None,
           "ratio_cond": None, "ratio_conl": None, "richest_diff": None}
    if table.theta == 0.5:
        I = constant_I()
        out["I"] = I
        out["var_limit"] = mean_mu - I * I
        out.update(ratio_constants(I))
    return out


def default_x_grid(x_max: int) -> np.ndarray:
    lo = 1.0 / x_max
    return np.round(np.arange(1, int(round(1 / lo)) + 1) * lo, 12)


def build_limit_tables(theta: float = 0.5, x_max: float = DEFAULT_XMAX,
                       step: float = DEFAULT_STEP, x_grid=None, y_grid=None) -> LimitTables:
    table = solve_dde(theta, x_max, step)
    x_grid = default_x_grid(table.x_max) if x_grid is None else np.asarray(x_grid, float)
    y_grid = np.round(np.arange(0, 321) * 0.05, 12) if y_grid is None else np.asarray(y_grid, float)
    return LimitTables(
        density=table,
        x_grid=x_grid,
        p_grid=table.p(x_grid),
        F_grid=mu_cdf(table, x_grid),
        f_grid=mu_pdf(table, x_grid),
        y_grid=y_grid,
        H_grid=nu_limit_cdf(table, y_grid),
        constants=limit_constants(table),
    )
