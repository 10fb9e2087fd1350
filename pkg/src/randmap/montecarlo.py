"""Monte Carlo over uniform random mappings.

Replicate ``r`` draws its mapping from a generator seeded by
``SeedSequence(master_seed, spawn_key=(r,))``, so any replicate can be
regenerated on its own and the work split is irrelevant to the result.
Replicates are processed in fixed-size chunks; each chunk yields a
``MomentAccumulator`` and chunks are merged in index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .graph import Mapping, _stats_kernel

STATS = ("lam", "mu", "nu", "nu2", "kappa", "tau")
# columns of a replicate row, as produced by the stats kernel
ROW_FIELDS = ("lam", "mu", "nu", "kappa", "tau", "richest_size", "richest_is_largest",
              "tau_in_largest")
CSV_HEADER = "n,rep,lambda,mu,nu,kappa,tau,richest_size,richest_is_largest,tau_in_largest"
CHUNK = 128
# int64 work arrays held per worker by the stats kernel, plus the targets
_BYTES_PER_VERTEX = 8 * 7
DEFAULT_MEMORY_BUDGET = 2 << 30


class ResourceBudgetError(MemoryError):
    pass


def default_ecdf_grid() -> tuple[float, ...]:
    return tuple(round(0.05 * i, 10) for i in range(81))


@dataclass(frozen=True)
class SimConfig:
    n: int
    reps: int
    master_seed: int = 42
    workers: int = 1
    ecdf_grid: tuple[float, ...] = field(default_factory=default_ecdf_grid)
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.n < 1 or self.reps < 1 or self.workers < 1:
            raise ValueError("n, reps and workers must be positive")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        g = np.asarray(self.ecdf_grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(g < 0) or np.any(np.diff(g) <= 0):
            raise ValueError("ecdf_grid must be nonnegative and strictly increasing")
        object.__setattr__(self, "ecdf_grid", tuple(float(v) for v in g))


def replicate_rng(master_seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(rep,))))


def random_mapping(n: int, rng: np.random.Generator) -> Mapping:
    """Uniform mapping of [n]: each target drawn independently from [1, n]."""
    return Mapping(rng.integers(1, n + 1, size=n))


def replicate_targets(n: int, master_seed: int, rep: int) -> np.ndarray:
    """0-based targets of replicate ``rep``; equals ``random_mapping(...)`` minus one."""
    return replicate_rng(master_seed, rep).integers(1, n + 1, size=n) - 1


@dataclass
class MomentAccumulator:
    """Exact power sums of the tracked statistics.

    Sums are Python integers, so merging is exact and order-free; ``mean`` and
    ``m2`` are derived from them in rational arithmetic.
    """

    ecdf_grid: tuple[float, ...]
    n: int
    count: int = 0
    sums: dict[str, list[int]] = field(default_factory=lambda: {s: [0, 0, 0, 0] for s in STATS})
    cross: dict[str, int] = field(default_factory=lambda: {"nu*lam": 0, "kappa*lam": 0,
                                                           "kappa*nu": 0})
    richest_not_largest: int = 0
    tau_in_largest: int = 0
    ecdf_counts: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.ecdf_counts:
            self.ecdf_counts = [0] * len(self.ecdf_grid)

    def add_rows(self, rows: np.ndarray) -> None:
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, len(ROW_FIELDS))
        cols = {name: [int(v) for v in rows[:, i]] for i, name in enumerate(ROW_FIELDS)}
        cols["nu2"] = [v * v for v in cols["nu"]]
        for s in STATS:
            acc = self.sums[s]
            for v in cols[s]:
                acc[0] += v
                acc[1] += v * v
                acc[2] += v * v * v
                acc[3] += v * v * v * v
        self.cross["nu*lam"] += sum(a * b for a, b in zip(cols["nu"], cols["lam"]))
        self.cross["kappa*lam"] += sum(a * b for a, b in zip(cols["kappa"], cols["lam"]))
        self.cross["kappa*nu"] += sum(a * b for a, b in zip(cols["kappa"], cols["nu"]))
        self.richest_not_largest += sum(1 for v in cols["richest_is_largest"] if v == 0)
        self.tau_in_largest += sum(cols["tau_in_largest"])
        scaled = rows[:, 2] / math.sqrt(self.n)
        for i, t in enumerate(self.ecdf_grid):
            self.ecdf_counts[i] += int(np.count_nonzero(scaled <= t))
        self.count += rows.shape[0]

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.ecdf_grid != self.ecdf_grid or other.n != self.n:
            raise ValueError("cannot merge accumulators of different configurations")
        out = MomentAccumulator(self.ecdf_grid, self.n)
        out.count = self.count + other.count
        out.sums = {s: [a + b for a, b in zip(self.sums[s], other.sums[s])] for s in STATS}
        out.cross = {k: self.cross[k] + other.cross[k] for k in self.cross}
        out.richest_not_largest = self.richest_not_largest + other.richest_not_largest
        out.tau_in_largest = self.tau_in_largest + other.tau_in_largest
        out.ecdf_counts = [a + b for a, b in zip(self.ecdf_counts, other.ecdf_counts)]
        return out

    def exact_mean(self, stat: str) -> Fraction:
        return Fraction(self.sums[stat][0], self.count)

    def mean(self, stat: str) -> float:
        return float(self.exact_mean(stat))

    def m2(self, stat: str) -> float:
        s1, s2 = self.sums[stat][0], self.sums[stat][1]
        return float(Fraction(s2) - Fraction(s1 * s1, self.count))

    def variance(self, stat: str) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            raise ValueError("variance needs at least two replicates")
        return self.m2(stat) / (self.count - 1)

    def central_moment(self, stat: str, k: int) -> float:
        """Plug-in k-th central moment (k <= 4)."""
        c = self.count
        m = self.exact_mean(stat)
        raw = [Fraction(1)] + [Fraction(v, c) for v in self.sums[stat][:k]]
        total = sum(math.comb(k, j) * raw[j] * (-m) ** (k - j) for j in range(k + 1))
        return float(total)

    def covariance(self, a: str, b: str) -> float:
        key = f"{a}*{b}"
        c = self.count
        sab = Fraction(self.cross[key])
        return float((sab - Fraction(self.sums[a][0] * self.sums[b][0], c)) / (c - 1))


# ---------------------------------------------------------------- driver

def _chunk_rows(n: int, master_seed: int, start: int, stop: int) -> np.ndarray:
    rows = np.empty((stop - start, len(ROW_FIELDS)), np.int64)
    for r in range(start, stop):
        rows[r - start] = _stats_kernel(replicate_targets(n, master_seed, r))
    return rows


def check_memory(cfg: SimConfig) -> None:
    need = cfg.n * cfg.workers * _BYTES_PER_VERTEX
    if need > cfg.memory_budget:
        raise ResourceBudgetError(
            f"n*workers needs about {need} bytes, above the budget of {cfg.memory_budget}")


def simulate_rows(cfg: SimConfig) -> np.ndarray:
    """Per-replicate statistics, shape ``(reps, 8)`` in replicate order."""
    check_memory(cfg)
    bounds = [(lo, min(lo + CHUNK, cfg.reps)) for lo in range(0, cfg.reps, CHUNK)]

    def work(b):
        return _chunk_rows(cfg.n, cfg.master_seed, *b)

    if cfg.workers == 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(work, bounds))
    return np.concatenate(parts)


def accumulate(rows: np.ndarray, cfg: SimConfig) -> MomentAccumulator:
    acc = MomentAccumulator(cfg.ecdf_grid, cfg.n)
    for lo in range(0, rows.shape[0], CHUNK):
        part = MomentAccumulator(cfg.ecdf_grid, cfg.n)
        part.add_rows(rows[lo:lo + CHUNK])
        acc = acc.merge(part)
    return acc


def run_simulation(cfg: SimConfig, return_rows: bool = False):
    rows = simulate_rows(cfg)
    acc = accumulate(rows, cfg)
    return (acc, rows) if return_rows else acc


def write_replicates_csv(path, rows: np.ndarray, n: int) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r, row in enumerate(rows):
            fh.write(f"{n},{r}," + ",".join(str(int(v)) for v in row) + "\n")


# ---------------------------------------------------------------- report

@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


@dataclass(frozen=True)
class SimReport:
    n: int
    reps: int
    master_seed: int
    mean_nu_over_sqrt_n: Estimate
    var_nu_over_n: Estimate
    mean_lambda_over_sqrt_n: Estimate
    mean_mu_over_n: Estimate
    mean_kappa_over_sqrt_n: Estimate
    mean_kappa: Estimate
    ratio_nu_lambda: Estimate
    ratio_kappa_lambda: Estimate
    ratio_difference: Estimate
    p_richest_not_largest: Estimate
    p_tau_in_largest: Estimate
    ecdf_grid: list[float]
    ecdf: list[float]
    ks_distance: float | None = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "SimReport":
        kw = {k: Estimate(**v) if isinstance(v, dict) else v for k, v in d.items()}
        return cls(**kw)


def _ratio_se(acc: MomentAccumulator, a: str, b: str) -> float:
    """Delta-method standard error of mean(a) / mean(b)."""
    ma, mb = acc.mean(a), acc.mean(b)
    r = ma / mb
    var = acc.variance(a) - 2.0 * r * acc.covariance(a, b) + r * r * acc.variance(b)
    return math.sqrt(max(var, 0.0) / acc.count) / mb


def _proportion(k: int, c: int) -> Estimate:
    p = k / c
    return Estimate(p, math.sqrt(p * (1.0 - p) / c))


def report(acc: MomentAccumulator, limits=None, master_seed: int = 0) -> SimReport:
    """Normalised estimates with standard errors.

    ``limits`` may be any object with a ``nu_cdf(t)`` method (the limit CDF
    of nu/sqrt(n)); when given, the KS distance over the ECDF grid is filled.
    """
    c = acc.count
    if c < 2:
        raise ValueError("a report needs at least two replicates")
    n = acc.n
    rn = math.sqrt(n)

    def scaled(stat, scale):
        return Estimate(acc.mean(stat) / scale, math.sqrt(acc.variance(stat) / c) / scale)

    var_nu = acc.variance("nu")
    mu4 = acc.central_moment("nu", 4)
    var_of_var = max(mu4 - var_nu * var_nu * (c - 3) / (c - 1), 0.0) / c

    mean_nu, mean_kappa, mean_lam = acc.mean("nu"), acc.mean("kappa"), acc.mean("lam")
    # (E kappa - E nu) / E lambda, delta method on the difference
    diff = (mean_kappa - mean_nu) / mean_lam
    var_d = acc.variance("kappa") + var_nu - 2.0 * acc.covariance("kappa", "nu")
    cov_dl = acc.covariance("kappa", "lam") - acc.covariance("nu", "lam")
    var_diff = var_d - 2.0 * diff * cov_dl + diff * diff * acc.variance("lam")
    diff_se = math.sqrt(max(var_diff, 0.0) / c) / mean_lam

    ecdf = [k / c for k in acc.ecdf_counts]
    ks = None
    if limits is not None:
        h = np.asarray(limits.nu_cdf(np.asarray(acc.ecdf_grid)), dtype=float)
        ks = float(np.max(np.abs(np.asarray(ecdf) - h)))
    return SimReport(
        n=n,
        reps=c,
        master_seed=master_seed,
        mean_nu_over_sqrt_n=scaled("nu", rn),
        var_nu_over_n=Estimate(var_nu / n, math.sqrt(var_of_var) / n),
        mean_lambda_over_sqrt_n=scaled("lam", rn),
        mean_mu_over_n=scaled("mu", n),
        mean_kappa_over_sqrt_n=scaled("kappa", rn),
        mean_kappa=scaled("kappa", 1.0),
        ratio_nu_lambda=Estimate(mean_nu / mean_lam, _ratio_se(acc, "nu", "lam")),
        ratio_kappa_lambda=Estimate(mean_kappa / mean_lam, _ratio_se(acc, "kappa", "lam")),
        ratio_difference=Estimate(diff, diff_se),
        p_richest_not_largest=_proportion(acc.richest_not_largest, c),
        p_tau_in_largest=_proportion(acc.tau_in_largest, c),
        ecdf_grid=list(acc.ecdf_grid),
        ecdf=ecdf,
        ks_distance=ks,
    )
