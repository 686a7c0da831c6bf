"""Hard-core model at high fugacity on bipartite expanders.

For each side ``i`` of the bipartition, a polymer is a small set of side-``i``
vertices that is connected in the square of the graph.  Its weight
``lam^|g| / (1+lam)^|N(g)|`` is what remains after summing the other side out,
so ``(1+lam)^{|V^{1-i}|} Z^i`` counts the independent sets that look mostly
like the other side.  The two sided counts are added, and samples are drawn
by choosing a side in proportion, sampling polymers, and filling in the rest.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .annealing import EstimateReport, estimate_with_median
from .batch import run_chains_batch
from .dynamics import run_chain
from .graph import (EXACT_CUTOFF, HostGraph, MissingBipartitionError,
                    bipartite_expansion_constant, check_bipartite_vertex_expansion, power_graph)
from .polymers import Polymer, PolymerModel


@dataclass
class HardcoreParams:
    lam: float
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("fugacity must be positive")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def lam_threshold(self, delta: int) -> Optional[float]:
        if self.alpha is None:
            return None
        return (3 * delta) ** (6 / self.alpha)

    def threshold_met(self, delta: int) -> Optional[bool]:
        t = self.lam_threshold(delta)
        return None if t is None else self.lam >= t


@dataclass
class IndependentSet:
    members: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def is_valid(self, g: HostGraph) -> bool:
        s = set(self.members)
        return all(w not in s for v in self.members for w in g.adjacency[v])

    def to_text(self) -> str:
        return "".join(f"{v}\n" for v in self.members)

    def to_json(self, **params) -> str:
        return json.dumps({"members": list(self.members), "params": params, **self.meta})


def _require_bipartite(g: HostGraph) -> None:
    if g.bipartition is None:
        raise MissingBipartitionError("the hard-core polymer models need a bipartition")


class HardcoreSideModel(PolymerModel):
    """Side-``i`` polymers on the squared graph with the summed-out weight."""

    def __init__(self, g: HostGraph, params: HardcoreParams, side: int):
        _require_bipartite(g)
        if side not in (0, 1):
            raise ValueError("side must be 0 or 1")
        self.graph = g
        self.params = params
        self.side = side
        self.host = power_graph(g, 2)
        self.q = 2
        self.ground = (0,) * g.n
        self.eligible = tuple(b == side for b in g.bipartition)
        self.part_size = sum(self.eligible)
        self.max_size = self.part_size // 2
        self.log_lam = math.log(params.lam)
        self.log_1p = math.log1p(params.lam)
        alpha = params.alpha
        if alpha is None and g.n <= EXACT_CUTOFF:
            alpha = bipartite_expansion_constant(g)
            if alpha is not None and not math.isfinite(alpha):
                alpha = None
        self.alpha = alpha
        self.tau_hint = None if alpha is None else alpha * self.log_lam

    def is_allowed(self, p: Polymer) -> bool:
        return (1 <= p.size <= self.max_size and all(self.eligible[v] for v in p.support)
                and all(s == 1 for s in p.spins))

    def outer_boundary(self, p: Polymer) -> int:
        return len(self.graph.neighbourhood(p.support))

    def log_weight(self, p: Polymer) -> float:
        return p.size * self.log_lam - self.outer_boundary(p) * self.log_1p

    def exact_weight(self, p: Polymer, lam):
        """The weight in the arithmetic of ``lam`` (pass a ``Fraction`` for exact values)."""
        return lam ** p.size / (1 + lam) ** self.outer_boundary(p)

    def describe(self) -> dict:
        d = super().describe()
        d.update(side=self.side, lam=self.params.lam, alpha=self.alpha)
        return d


def hc_polymer_model(g: HostGraph, p: HardcoreParams, side: int) -> HardcoreSideModel:
    return HardcoreSideModel(g, p, side)


def hypotheses(g: HostGraph, p: HardcoreParams) -> dict:
    out = {"alpha": p.alpha, "expansion_verified": None,
           "threshold_met": p.threshold_met(g.max_degree)}
    if p.alpha is not None:
        rep = check_bipartite_vertex_expansion(g, p.alpha)
        out["expansion_verified"] = rep.holds if rep.verified == "exact" else None
    return out


def _range_note(n: int, epsilon: float) -> Optional[str]:
    if epsilon < 4 * math.exp(-n):
        return f"epsilon={epsilon} is below 4 e^-n = {4 * math.exp(-n):.3g}"
    return None


@dataclass
class TwoSidedEstimate:
    report: EstimateReport
    log_terms: tuple[float, float]  # log of (1+lam)^{|V^{1-i}|} Z_hat^i for i = 0, 1

    @property
    def side0_probability(self) -> float:
        return float(expit(self.log_terms[0] - self.log_terms[1]))


def _two_sided(g, p, epsilon, seed, backend) -> TwoSidedEstimate:
    _require_bipartite(g)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    note = _range_note(g.n, epsilon)
    if note:
        warnings.warn(note)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sizes = (len(g.part(0)), len(g.part(1)))
    l1p = math.log1p(p.lam)
    side_reps = []
    terms = []
    for side, child in zip((0, 1), ss.spawn(2)):
        model = HardcoreSideModel(g, p, side)
        rep = estimate_with_median(model, epsilon / 32, epsilon / 32, child, backend=backend)
        side_reps.append(rep)
        terms.append(sizes[1 - side] * l1p + rep.log_z_hat)
    log_z = float(np.logaddexp(*terms))
    notes = [note] if note else []
    for r in side_reps:
        notes.extend(r.warnings)
    rep = EstimateReport(log_z, None, seed if isinstance(seed, int) else None,
                         amplification=side_reps[0].amplification, failure_budget=epsilon / 32,
                         backend=side_reps[0].backend,
                         work_units=sum(r.work_units for r in side_reps),
                         truncated_runs=sum(r.truncated_runs for r in side_reps),
                         warnings=notes,
                         extras={"log_z_side": [r.log_z_hat for r in side_reps],
                                 "hypotheses": hypotheses(g, p)})
    return TwoSidedEstimate(rep, (terms[0], terms[1]))


def count_hardcore(g: HostGraph, p: HardcoreParams, epsilon: float, seed=None,
                   backend: str = "auto") -> EstimateReport:
    """Two-sided estimate ``(1+lam)^{|V1|} Z0_hat + (1+lam)^{|V0|} Z1_hat``."""
    return _two_sided(g, p, epsilon, seed, backend).report


def _fill(g: HostGraph, side: int, occupied: set[int], lam: float, rng) -> list[int]:
    blocked = g.neighbourhood(occupied)
    other = [v for v in g.part(1 - side) if v not in blocked]
    keep = rng.random(len(other)) < lam / (1 + lam)
    return [v for v, k in zip(other, keep) if k]


def sample_hardcore(g: HostGraph, p: HardcoreParams, epsilon: float, seed=None,
                    backend: str = "auto") -> IndependentSet:
    """Count both sides, pick a side in proportion, sample its polymers, fill the other side."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_count, s_side, s_chain, s_fill = ss.spawn(4)
    est = _two_sided(g, p, epsilon, s_count, backend)
    p0 = est.side0_probability
    side = 0 if np.random.default_rng(s_side).random() < p0 else 1
    model = HardcoreSideModel(g, p, side)
    occupied: set[int] = set()
    truncated = False
    if model.max_size >= 1:
        run = run_chain(model, epsilon / 8, seed=np.random.default_rng(s_chain))
        occupied = set(run.final.owner)
        truncated = run.truncated
    members = sorted(occupied | set(_fill(g, side, occupied, p.lam, np.random.default_rng(s_fill))))
    return IndependentSet(tuple(members), {"side": side, "side0_probability": p0,
                                           "log_z_hat": est.report.log_z_hat,
                                           "truncated": truncated,
                                           **est.report.extras})


def sample_hardcore_batch(g: HostGraph, p: HardcoreParams, epsilon: float, size: int,
                          seed=None, backend: str = "kernel") -> tuple[np.ndarray, np.ndarray, float]:
    """Many draws of the side/polymer/fill steps sharing a single counting phase.

    Returns ``(sides, vertex masks, side-0 probability)``.  Conditional on the
    shared estimates, each draw has exactly the law of one
    :func:`sample_hardcore` call with those estimates.  Needs ``n <= 64``.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_count, s_side, s_chain, s_fill = ss.spawn(4)
    est = _two_sided(g, p, epsilon, s_count, backend)
    p0 = est.side0_probability
    sides = (np.random.default_rng(s_side).random(size) >= p0).astype(np.int64)
    masks = np.zeros(size, dtype=np.uint64)
    chain_rng = np.random.default_rng(s_chain)
    fill_rng = np.random.default_rng(s_fill)
    nbr = np.array(g.neighbour_masks(), dtype=np.uint64)
    for side in (0, 1):
        rows = np.flatnonzero(sides == side)
        if rows.size == 0:
            continue
        model = HardcoreSideModel(g, p, side)
        if model.max_size >= 1:
            covered = run_chains_batch(model, epsilon / 8, rows.size, seed=chain_rng).covered
        else:
            covered = np.zeros(rows.size, dtype=np.uint64)
        blocked = np.zeros(rows.size, dtype=np.uint64)
        for v in range(g.n):
            hit = (covered >> np.uint64(v)) & np.uint64(1)
            blocked |= np.where(hit.astype(bool), nbr[v], np.uint64(0))
        out = covered.copy()
        for v in g.part(1 - side):
            free = ((blocked >> np.uint64(v)) & np.uint64(1)) == 0
            take = free & (fill_rng.random(rows.size) < p.lam / (1 + p.lam))
            out |= np.where(take, np.uint64(1) << np.uint64(v), np.uint64(0))
        masks[rows] = out
    return sides, masks, p0
