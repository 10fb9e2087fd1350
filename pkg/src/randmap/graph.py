"""Functional-digraph decomposition and per-mapping statistics.

A mapping ``T: [n] -> [n]`` is stored as a 1-based ``targets`` array.  The
numba kernels below work on 0-based copies; every public function speaks
1-based labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

BRUTEFORCE_MAX_N = 10_000


@dataclass(frozen=True)
class Mapping:
    targets: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.targets, dtype=np.int64)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("a mapping needs at least one vertex")
        if t.min() < 1 or t.max() > t.size:
            raise ValueError(f"targets must lie in [1, {t.size}]")
        t.setflags(write=False)
        object.__setattr__(self, "targets", t)

    @property
    def n(self) -> int:
        return int(self.targets.size)

    @classmethod
    def from_list(cls, targets) -> "Mapping":
        return cls(np.asarray(targets, dtype=np.int64))

    def zero_based(self) -> np.ndarray:
        return self.targets - 1


@dataclass(frozen=True)
class Component:
    size: int
    cycle_len: int
    min_label: int
    tree_sizes: tuple[int, ...]


@dataclass(frozen=True)
class Decomposition:
    """Components are listed in increasing order of ``min_label``."""

    component_id: np.ndarray
    is_cyclic: np.ndarray
    components: list[Component] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.component_id.size)


@dataclass(frozen=True)
class MappingStats:
    lam: int
    mu: int
    nu: int
    kappa: int
    tau: int
    richest_size: int
    richest_is_largest: bool
    tau_in_largest: bool

    def as_row(self) -> tuple:
        return (self.lam, self.mu, self.nu, self.kappa, self.tau,
                self.richest_size, int(self.richest_is_largest), int(self.tau_in_largest))


# ---------------------------------------------------------------- kernels

@njit(cache=True, nogil=True)
def _peel(t, indeg, stack, sz, minlab, order):
    """In-degree peeling.

    On return ``indeg[i] > 0`` exactly for cyclic ``i``; ``sz[c]`` is the tree
    size hanging at cyclic ``c`` (root included); ``minlab`` carries the
    smallest label of each tree; ``order[:k]`` is the removal order.
    """
    n = t.size
    for i in range(n):
        indeg[i] = 0
        sz[i] = 1
        minlab[i] = i
    for i in range(n):
        indeg[t[i]] += 1
    top = 0
    for i in range(n):
        if indeg[i] == 0:
            stack[top] = i
            top += 1
    k = 0
    while top > 0:
        top -= 1
        v = stack[top]
        order[k] = v
        k += 1
        w = t[v]
        sz[w] += sz[v]
        if minlab[v] < minlab[w]:
            minlab[w] = minlab[v]
        indeg[w] -= 1
        if indeg[w] == 0:
            stack[top] = w
            top += 1
    return k


@njit(cache=True, nogil=True)
def _analyze(t, indeg, stack, sz, minlab, order, out):
    """Fill ``out`` with (lambda, mu, nu, kappa, tau, richest_size,
    richest_is_largest, tau_in_largest).  Clobbers the work arrays."""
    n = t.size
    _peel(t, indeg, stack, sz, minlab, order)
    lam = 0
    tau = 0
    mu = -1
    mu_min = n
    nu = 0
    mu_tree = 0
    kappa = -1
    kappa_min = n
    richest = 0
    for i in range(n):
        if indeg[i] <= 0:
            continue
        # walk the cycle through i, marking it visited
        size = 0
        clen = 0
        cmin = n
        ctree = 0
        j = i
        while indeg[j] > 0:
            indeg[j] = 0
            clen += 1
            size += sz[j]
            if minlab[j] < cmin:
                cmin = minlab[j]
            if sz[j] > ctree:
                ctree = sz[j]
            j = t[j]
        lam += clen
        if ctree > tau:
            tau = ctree
        if size > mu or (size == mu and cmin < mu_min):
            mu = size
            mu_min = cmin
            nu = clen
            mu_tree = ctree
        if clen > kappa or (clen == kappa and cmin < kappa_min):
            kappa = clen
            kappa_min = cmin
            richest = size
    out[0] = lam
    out[1] = mu
    out[2] = nu
    out[3] = kappa
    out[4] = tau
    out[5] = richest
    out[6] = 1 if kappa_min == mu_min else 0
    out[7] = 1 if mu_tree == tau else 0


@njit(cache=True, nogil=True)
def _stats_kernel(t):
    n = t.size
    indeg = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    sz = np.empty(n, np.int64)
    minlab = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    out = np.empty(8, np.int64)
    _analyze(t, indeg, stack, sz, minlab, order, out)
    return out


@njit(cache=True)
def _decompose_kernel(t):
    n = t.size
    indeg = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    sz = np.empty(n, np.int64)
    minlab = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    k = _peel(t, indeg, stack, sz, minlab, order)
    cyclic = indeg > 0
    comp = np.full(n, -1, np.int64)
    # per component: size, cycle_len, min_label, first cyclic vertex
    info = np.zeros((n, 4), np.int64)
    # cyclic vertices listed cycle by cycle, in walking order
    cycle_seq = np.empty(n - k, np.int64)
    pos = 0
    nc = 0
    for i in range(n):
        if not cyclic[i] or comp[i] >= 0:
            continue
        size = 0
        clen = 0
        cmin = n
        j = i
        while comp[j] < 0:
            comp[j] = nc
            cycle_seq[pos] = j
            pos += 1
            clen += 1
            size += sz[j]
            if minlab[j] < cmin:
                cmin = minlab[j]
            j = t[j]
        info[nc, 0] = size
        info[nc, 1] = clen
        info[nc, 2] = cmin
        info[nc, 3] = i
        nc += 1
    for r in range(k - 1, -1, -1):
        v = order[r]
        comp[v] = comp[t[v]]
    return comp, cyclic, info[:nc], cycle_seq, sz


@njit(cache=True)
def _bruteforce_cyclic(t):
    n = t.size
    flags = np.zeros(n, np.bool_)
    for i in range(n):
        j = t[i]
        for _ in range(n):
            if j == i:
                flags[i] = True
                break
            j = t[j]
    return flags


# ---------------------------------------------------------------- public API

def decompose(m: Mapping) -> Decomposition:
    comp, cyclic, info, cycle_seq, sz = _decompose_kernel(m.zero_based())
    # renumber components by increasing min_label
    rank = np.argsort(info[:, 2], kind="stable")
    relabel = np.empty_like(rank)
    relabel[rank] = np.arange(rank.size)
    components = []
    starts = np.concatenate(([0], np.cumsum(info[:, 1])))
    for c in rank:
        seq = cycle_seq[starts[c]:starts[c + 1]]
        components.append(Component(
            size=int(info[c, 0]),
            cycle_len=int(info[c, 1]),
            min_label=int(info[c, 2]) + 1,
            tree_sizes=tuple(int(s) for s in sz[seq]),
        ))
    return Decomposition(component_id=relabel[comp], is_cyclic=cyclic,
                         components=components)


def stats(d: Decomposition) -> MappingStats:
    comps = d.components
    if not comps:
        raise ValueError("empty decomposition")
    # ties: smallest min_label wins, and comps are sorted by min_label
    largest = max(comps, key=lambda c: (c.size, -c.min_label))
    richest = max(comps, key=lambda c: (c.cycle_len, -c.min_label))
    tau = max(max(c.tree_sizes) for c in comps)
    return MappingStats(
        lam=sum(c.cycle_len for c in comps),
        mu=largest.size,
        nu=largest.cycle_len,
        kappa=richest.cycle_len,
        tau=tau,
        richest_size=richest.size,
        richest_is_largest=richest is largest,
        tau_in_largest=max(largest.tree_sizes) == tau,
    )


def mapping_stats(m: Mapping) -> MappingStats:
    """Same result as ``stats(decompose(m))`` without building the components."""
    return stats_from_targets(m.zero_based())


def stats_from_targets(t0: np.ndarray) -> MappingStats:
    out = _stats_kernel(np.ascontiguousarray(t0, dtype=np.int64))
    return MappingStats(*(int(v) for v in out[:6]), bool(out[6]), bool(out[7]))


def cyclic_vertices_bruteforce(m: Mapping) -> np.ndarray:
    if m.n > BRUTEFORCE_MAX_N:
        raise ValueError(f"brute-force cyclic detection is limited to n <= {BRUTEFORCE_MAX_N}")
    return _bruteforce_cyclic(m.zero_based())
