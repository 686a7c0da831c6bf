"""Vectorised polymer dynamics for many independent chains on a small host graph.

The scalar driver in :mod:`polymer_mcmc.dynamics` enumerates polymers
lazily and is the right tool for large graphs.  Here every allowed polymer
is listed once up front (a *catalogue*), configurations are bitmasks over at
most 64 vertices, and each chain step is a handful of numpy operations over
all chains at once.  The update rule is the same: uniform vertex, fair coin,
removal of the polymer covering the vertex or a geometric-truncation draw
from ``nu_v`` followed by a compatibility check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import (DEFAULT_CAP_CONST, DEFAULT_THETA, InvalidModelError, NuSampler,
                       step_budget, work_cap)
from .polymers import DEFAULT_NODE_BUDGET, Polymer, PolymerModel

MAX_BATCH_VERTICES = 64


class PolymerCatalogue:
    """All allowed polymers of a model with the lookup tables the batch engine needs."""

    def __init__(self, model: PolymerModel, sampler: Optional[NuSampler] = None,
                 budget: int = DEFAULT_NODE_BUDGET, polymers: Optional[list[Polymer]] = None):
        if model.n > MAX_BATCH_VERTICES:
            raise ValueError(f"batch engine supports at most {MAX_BATCH_VERTICES} vertices")
        self.model = model
        self.sampler = sampler or NuSampler(model)
        r = self.sampler.r
        n = model.n
        # a precomputed list lets tempered copies of one model skip re-enumeration
        self.polymers: list[Polymer] = (sorted(polymers) if polymers is not None
                                        else model.all_polymers(budget=budget))
        P = len(self.polymers)
        self.index = {p: j for j, p in enumerate(self.polymers)}
        self.sizes = np.array([p.size for p in self.polymers], dtype=np.int64)
        self.log_weights = np.array([model.log_weight(p) for p in self.polymers])
        adj = model.host.adjacency
        masks, closed = [], []
        for p in self.polymers:
            mk = 0
            cl = 0
            for u in p.support:
                mk |= 1 << u
                cl |= 1 << u
                for w in adj[u]:
                    cl |= 1 << w
            masks.append(mk)
            closed.append(cl)
        self.masks = np.array(masks, dtype=np.uint64)
        self.closed = np.array(closed, dtype=np.uint64)
        self.covers = np.zeros((max(P, 1), n), dtype=bool)
        for j, p in enumerate(self.polymers):
            self.covers[j, list(p.support)] = True

        # per-vertex lists sorted by size, cumulative acceptance masses w e^{r|g|}
        self.K = int(self.sizes.max()) if P else 0
        per_v = [[j for j in range(P) if v in self.polymers[j].support] for v in range(n)]
        for lst in per_v:
            lst.sort(key=lambda j: (self.sizes[j], self.polymers[j]))
        L = max((len(lst) for lst in per_v), default=0)
        L = max(L, 1)
        self.table = np.full((n, L), -1, dtype=np.int64)
        self.cum = np.full((n, L), np.inf)
        self.count_le = np.zeros((n, self.K + 1), dtype=np.int64)
        self.bad = np.zeros((n, self.K + 1), dtype=bool)
        for v, lst in enumerate(per_v):
            acc = 0.0
            for col, j in enumerate(lst):
                acc += math.exp(self.log_weights[j] + r * self.sizes[j])
                self.table[v, col] = j
                self.cum[v, col] = acc
            sz = [int(self.sizes[j]) for j in lst]
            for k in range(self.K + 1):
                cnt = sum(1 for s in sz if s <= k)
                self.count_le[v, k] = cnt
                self.bad[v, k] = cnt > 0 and self.cum[v, cnt - 1] > 1 + 1e-12

    def __len__(self) -> int:
        return len(self.polymers)

    def state_keys(self, owner: np.ndarray) -> list[tuple[Polymer, ...]]:
        """Canonical configuration keys for each row of an owner matrix."""
        keys = []
        for row in owner:
            ids = sorted(set(int(j) for j in row if j >= 0))
            keys.append(tuple(sorted(self.polymers[j] for j in ids)))
        return keys


@dataclass
class BatchRun:
    catalogue: PolymerCatalogue
    owner: np.ndarray  # (chains, n) polymer index covering each vertex, -1 if none
    covered: np.ndarray  # (chains,) uint64 vertex masks
    steps: int
    work_units: np.ndarray
    enumerated: np.ndarray
    truncated: np.ndarray

    @property
    def total_sizes(self) -> np.ndarray:
        return np.bitwise_count(self.covered).astype(np.int64)

    def keys(self) -> list[tuple[Polymer, ...]]:
        return self.catalogue.state_keys(self.owner)

    def state_counts(self) -> dict[tuple[Polymer, ...], int]:
        """Histogram of final configurations (canonical keys)."""
        rows, counts = np.unique(self.owner, axis=0, return_counts=True)
        keys = self.catalogue.state_keys(rows)
        return {k: int(c) for k, c in zip(keys, counts)}


def run_chains_batch(m: PolymerModel, epsilon: float, size: int, seed=None,
                     theta: float = DEFAULT_THETA, cap_const: float = DEFAULT_CAP_CONST,
                     steps: Optional[int] = None,
                     catalogue: Optional[PolymerCatalogue] = None) -> BatchRun:
    """``size`` independent polymer-dynamics chains from the empty configuration."""
    cat = catalogue or PolymerCatalogue(m)
    return run_grouped_batch([cat], np.zeros(size, dtype=np.int64), epsilon, seed,
                             theta, cap_const, steps)


def run_grouped_batch(cats: list[PolymerCatalogue], group: np.ndarray, epsilon: float,
                      seed=None, theta: float = DEFAULT_THETA,
                      cap_const: float = DEFAULT_CAP_CONST,
                      steps: Optional[int] = None) -> BatchRun:
    """Chains of several models over one polymer list, advanced together.

    ``cats`` must share the host and the polymer list (e.g. tempered copies
    of one model); chain ``j`` follows model ``cats[group[j]]``.  Only the
    acceptance tables and the truncation rate differ between groups.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    cat = cats[0]
    if any(c.polymers != cat.polymers for c in cats[1:]):
        raise ValueError("grouped catalogues must share one polymer list")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    group = np.asarray(group, dtype=np.int64)
    size = len(group)
    n = cat.model.n
    total = step_budget(n, epsilon / 2, theta) if steps is None else steps
    cap = work_cap(n, epsilon, cap_const)
    owner = np.full((size, n), -1, dtype=np.int32)
    covered = np.zeros(size, dtype=np.uint64)
    work = np.zeros(size, dtype=np.int64)
    enumerated = np.zeros(size, dtype=np.int64)
    r_of = np.array([c.sampler.r for c in cats])[group]
    cum_all = np.stack([c.cum for c in cats])
    bad_all = np.stack([c.bad for c in cats])
    rows_all = np.arange(size)
    cols = np.arange(cum_all.shape[2])
    for _ in range(total):
        u = rng.random((4, size))
        v = np.minimum((u[0] * n).astype(np.int64), n - 1)
        remove = u[1] < 0.5
        work += 1
        if len(cat) == 0:
            continue
        # removal branch
        rem_rows = rows_all[remove]
        if rem_rows.size:
            p = owner[rem_rows, v[rem_rows]]
            hit = p >= 0
            rem_rows, p = rem_rows[hit], p[hit]
            if rem_rows.size:
                block = owner[rem_rows]
                block[block == p[:, None]] = -1
                owner[rem_rows] = block
                covered[rem_rows] &= ~cat.masks[p]
        # insertion branch
        ins_rows = rows_all[~remove]
        if ins_rows.size == 0:
            continue
        vi = v[ins_rows]
        k = np.floor(-np.log1p(-u[2, ins_rows]) / r_of[ins_rows]).astype(np.int64)
        k = np.minimum(k, cat.K)
        cnt = cat.count_le[vi, k]
        enumerated[ins_rows] += cnt
        work[ins_rows] += cnt
        active = cnt > 0
        if not active.any():
            continue
        ins_rows, vi, cnt, k = ins_rows[active], vi[active], cnt[active], k[active]
        gi = group[ins_rows]
        bad = bad_all[gi, vi, k]
        if bad.any():
            b = int(np.flatnonzero(bad)[0])
            raise InvalidModelError(
                f"acceptance mass > 1 at vertex {int(vi[b])}, k={int(k[b])}: "
                "sampling condition violated")
        uu = 1.0 - u[3, ins_rows]  # (0, 1]
        cum = cum_all[gi, vi]
        idx = ((cum < uu[:, None]) & (cols[None, :] < cnt[:, None])).sum(axis=1)
        got = idx < cnt
        if not got.any():
            continue
        ins_rows, vi, idx = ins_rows[got], vi[got], idx[got]
        chosen = cat.table[vi, idx]
        ok = (cat.closed[chosen] & covered[ins_rows]) == 0
        ins_rows, chosen = ins_rows[ok], chosen[ok]
        if ins_rows.size:
            covered[ins_rows] |= cat.masks[chosen]
            block = owner[ins_rows]
            cov = cat.covers[chosen]
            block[cov] = np.broadcast_to(chosen[:, None], cov.shape)[cov]
            owner[ins_rows] = block
    truncated = work > cap
    if truncated.any():
        owner[truncated] = -1
        covered[truncated] = 0
    return BatchRun(cat, owner, covered, total, work, enumerated, truncated)
