"""Exact rational laws: Katz's count, the connected-mapping law of the cycle
length, and exhaustive enumeration of all n**n mappings for small n."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

from .graph import _analyze

ENUMERATE_MAX_N = 8


def katz_A(n: int) -> Fraction:
    """``A_n = sum_{k<n} n^k / k!``, computed over the common denominator (n-1)!."""
    if n < 1:
        raise ValueError("n must be positive")
    den = math.factorial(n - 1)
    # (n-1)!/k! is an integer for k <= n-1
    num = sum(n ** k * (den // math.factorial(k)) for k in range(n))
    return Fraction(num, den)


def connected_count(n: int) -> int:
    """Number of connected mappings of [n], ``(n-1)! A_n``."""
    a = katz_A(n)
    return a.numerator * (math.factorial(n - 1) // a.denominator)


def log_katz_A(n: int) -> float:
    k = np.arange(n)
    return float(logsumexp(k * math.log(n) - gammaln(k + 1)))


def indec_ratio(n: int) -> float:
    """``e^{-n} A_n`` evaluated in log space."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.exp(log_katz_A(n) - n)


@dataclass(frozen=True)
class ConnectedLaw:
    m: int
    pmf: dict[int, Fraction]
    A: Fraction
    mean: Fraction
    second_moment: Fraction

    @property
    def mean_closed_form(self) -> Fraction:
        return Fraction(self.m ** self.m, math.factorial(self.m - 1)) / self.A


def connected_law(m: int) -> ConnectedLaw:
    """Law of the cycle length of a uniformly random connected mapping of [m]."""
    a = katz_A(m)
    pmf = {k: Fraction(m ** (m - k), math.factorial(m - k)) / a for k in range(1, m + 1)}
    mean = sum(k * p for k, p in pmf.items())
    second = sum(k * k * p for k, p in pmf.items())
    return ConnectedLaw(m=m, pmf=pmf, A=a, mean=mean, second_moment=second)


# ---------------------------------------------------------------- enumeration

@njit(cache=True, nogil=True)
def _enumerate_shard(n, first):
    """Tally stats over every mapping whose first target is ``first`` (0-based)."""
    joint = np.zeros((n + 1, n + 1), np.int64)  # [nu, mu]
    lam = np.zeros(n + 1, np.int64)
    kappa = np.zeros(n + 1, np.int64)
    tau = np.zeros(n + 1, np.int64)
    events = np.zeros(2, np.int64)  # richest != largest, tau in largest
    t = np.zeros(n, np.int64)
    t[0] = first
    indeg = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    sz = np.empty(n, np.int64)
    minlab = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    out = np.empty(8, np.int64)
    while True:
        _analyze(t, indeg, stack, sz, minlab, order, out)
        joint[out[2], out[1]] += 1
        lam[out[0]] += 1
        kappa[out[3]] += 1
        tau[out[4]] += 1
        if out[6] == 0:
            events[0] += 1
        if out[7] == 1:
            events[1] += 1
        # big-endian mixed-radix increment over positions 1..n-1
        i = n - 1
        while i >= 1 and t[i] == n - 1:
            t[i] = 0
            i -= 1
        if i < 1:
            break
        t[i] += 1
    return joint, lam, kappa, tau, events


def _pmf(counts: np.ndarray, total: int) -> dict[int, Fraction]:
    return {int(k): Fraction(int(c), total) for k, c in enumerate(counts) if c}


def _moment(pmf: dict[int, Fraction], power: int = 1) -> Fraction:
    return sum((Fraction(k ** power) * p for k, p in pmf.items()), Fraction(0))


@dataclass(frozen=True)
class ExactTable:
    n: int
    nu_pmf: dict[int, Fraction]
    mu_pmf: dict[int, Fraction]
    lambda_pmf: dict[int, Fraction]
    kappa_pmf: dict[int, Fraction]
    tau_pmf: dict[int, Fraction]
    joint_counts: np.ndarray  # [nu, mu] -> number of mappings
    p_richest_not_largest: Fraction
    p_tau_in_largest: Fraction

    @property
    def total(self) -> int:
        return self.n ** self.n

    @property
    def E_nu(self) -> Fraction:
        return _moment(self.nu_pmf)

    @property
    def E_nu2(self) -> Fraction:
        return _moment(self.nu_pmf, 2)

    @property
    def E_mu(self) -> Fraction:
        return _moment(self.mu_pmf)

    @property
    def E_lambda(self) -> Fraction:
        return _moment(self.lambda_pmf)

    @property
    def E_kappa(self) -> Fraction:
        return _moment(self.kappa_pmf)

    @property
    def connected_count(self) -> int:
        return int(self.joint_counts[:, self.n].sum())

    @property
    def identity_holds(self) -> bool:
        return self.E_nu2 == self.E_mu

    def connected_nu_pmf(self) -> dict[int, Fraction]:
        """Empirical cycle-length law among the connected mappings of [n]."""
        col = self.joint_counts[:, self.n]
        return _pmf(col, int(col.sum()))

    def recombined_moment(self, power: int) -> Fraction:
        """``sum_m E(nu'_m^power) P(mu_n = m)`` from the connected laws."""
        return sum((_moment(connected_law(m).pmf, power) * p for m, p in self.mu_pmf.items()),
                   Fraction(0))

    @property
    def recombination_holds(self) -> bool:
        return self.recombined_moment(1) == self.E_nu and self.recombined_moment(2) == self.E_nu2

    def to_json(self) -> dict:
        def pairs(pmf):
            return [[k, _frac(v)] for k, v in sorted(pmf.items())]
        return {
            "n": self.n,
            "nu_pmf": pairs(self.nu_pmf),
            "mu_pmf": pairs(self.mu_pmf),
            "lambda_pmf": pairs(self.lambda_pmf),
            "kappa_pmf": pairs(self.kappa_pmf),
            "E_nu": _frac(self.E_nu),
            "E_nu2": _frac(self.E_nu2),
            "E_mu": _frac(self.E_mu),
            "E_lambda": _frac(self.E_lambda),
            "E_kappa": _frac(self.E_kappa),
            "connected_count": str(self.connected_count),
            "identity_holds": self.identity_holds,
        }


def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def enumerate_all(n: int, workers: int = 1) -> ExactTable:
    """Exact laws over all ``n**n`` mappings (``1 <= n <= 8``).

    The outer target ``T(1)`` shards the work; shard tallies are integers and
    merge by addition.
    """
    if not 1 <= n <= ENUMERATE_MAX_N:
        raise ValueError(f"enumeration needs 1 <= n <= {ENUMERATE_MAX_N}, got {n}")
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            shards = list(pool.map(lambda f: _enumerate_shard(n, f), range(n)))
    else:
        shards = [_enumerate_shard(n, f) for f in range(n)]
    joint, lam, kappa, tau, events = (sum(parts) for parts in zip(*shards))
    total = n ** n
    table = ExactTable(
        n=n,
        nu_pmf=_pmf(joint.sum(axis=1), total),
        mu_pmf=_pmf(joint.sum(axis=0), total),
        lambda_pmf=_pmf(lam, total),
        kappa_pmf=_pmf(kappa, total),
        tau_pmf=_pmf(tau, total),
        joint_counts=joint,
        p_richest_not_largest=Fraction(int(events[0]), total),
        p_tau_in_largest=Fraction(int(events[1]), total),
    )
    if not table.recombination_holds:
        raise ArithmeticError(f"conditional recombination failed at n={n}")
    return table
