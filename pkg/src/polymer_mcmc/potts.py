"""Ferromagnetic Potts model at low temperature as a polymer model.

Fix a ground colour ``g``.  A polymer is a connected vertex set of size at
most ``M`` with colours from ``[q] minus {g}``; its weight is
``exp(-beta B)`` where ``B`` counts the bichromatic edges inside the polymer
plus every edge leaving it.  The product of polymer weights is then the Potts
weight of the colouring obtained by painting the rest of the graph ``g``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .annealing import EstimateReport, estimate_partition
from .batch import run_chains_batch
from .dynamics import run_chain
from .graph import EXACT_CUTOFF, HostGraph, check_edge_expansion, edge_expansion_constant
from .polymers import Configuration, Polymer, PolymerModel, sampling_threshold

BRUTE_FALLBACK_MAX_N = 20


@dataclass
class PottsParams:
    q: int
    beta: float
    alpha: Optional[float] = None
    ground: int = 0
    size_cap: Optional[int] = None

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("need at least two colours")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not 0 <= self.ground < self.q:
            raise ValueError("ground colour out of range")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def beta_threshold(self, delta: int) -> Optional[float]:
        if self.alpha is None:
            return None
        return sampling_threshold(self.q, delta) / self.alpha

    def threshold_met(self, delta: int) -> Optional[bool]:
        t = self.beta_threshold(delta)
        return None if t is None else self.beta >= t


@dataclass
class Coloring:
    colors: tuple[int, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def to_text(self) -> str:
        return "".join(f"{v} {c}\n" for v, c in enumerate(self.colors))

    def to_json(self, **params) -> str:
        return json.dumps({"colors": list(self.colors), "params": params, **self.meta})


def boundary_count(host: HostGraph, p: Polymer) -> int:
    """``B(gamma)``: bichromatic internal edges plus edge-boundary size."""
    spin = p.spin_map()
    b = 0
    for u in p.support:
        su = spin[u]
        for w in host.adjacency[u]:
            sw = spin.get(w)
            if sw is None:
                b += 1
            elif u < w and sw != su:
                b += 1
    return b


class PottsPolymerModel(PolymerModel):
    def __init__(self, host: HostGraph, params: PottsParams, ground: Optional[int] = None):
        self.host = host
        self.params = params
        self.q = params.q
        self.beta = params.beta
        self.color = params.ground if ground is None else ground
        self.ground = (self.color,) * host.n
        self.max_size = host.n // 2 if params.size_cap is None else params.size_cap
        alpha = params.alpha
        if alpha is None:
            alpha = edge_expansion_constant(host) if host.n <= EXACT_CUTOFF else None
            if alpha is not None and not math.isfinite(alpha):
                alpha = None
        self.alpha = alpha
        # every allowed polymer has |gamma| <= n/2, so B >= alpha |gamma| on an alpha-expander
        self.tau_hint = None if alpha is None else alpha * params.beta

    def is_allowed(self, p: Polymer) -> bool:
        return 1 <= p.size <= self.max_size and self.color not in p.spins

    def log_weight(self, p: Polymer) -> float:
        return -self.beta * boundary_count(self.host, p)

    def describe(self) -> dict:
        d = super().describe()
        d.update(beta=self.beta, ground_color=self.color, alpha=self.alpha)
        return d


def potts_polymer_model(g: HostGraph, p: PottsParams) -> PottsPolymerModel:
    return PottsPolymerModel(g, p)


def bichromatic_count(g: HostGraph, colors: Sequence[int]) -> int:
    return sum(1 for u, v in g.edges() if colors[u] != colors[v])


def polymer_to_coloring(c: Configuration, p: PottsParams, ground: Optional[int] = None) -> Coloring:
    g = p.ground if ground is None else ground
    colors = [g] * c.host.n
    for poly in c.polymers:
        for v, s in zip(poly.support, poly.spins):
            colors[v] = s
    return Coloring(tuple(colors))


def coloring_to_polymers(colors: Sequence[int], host: HostGraph, ground: int) -> list[Polymer]:
    """Connected components of the non-ground vertices, as polymers (no allowedness check)."""
    seen = [False] * host.n
    out = []
    for v in range(host.n):
        if seen[v] or colors[v] == ground:
            continue
        comp = []
        stack = [v]
        seen[v] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in host.adjacency[u]:
                if not seen[w] and colors[w] != ground:
                    seen[w] = True
                    stack.append(w)
        comp.sort()
        out.append(Polymer(tuple(comp), tuple(colors[u] for u in comp)))
    out.sort()
    return out


def coloring_to_configuration(col: Coloring | Sequence[int], host: HostGraph,
                              ground: int) -> Configuration:
    colors = col.colors if isinstance(col, Coloring) else col
    return Configuration(host, coloring_to_polymers(colors, host, ground))


def hypotheses(g: HostGraph, p: PottsParams) -> dict:
    out = {"alpha": p.alpha, "expansion_verified": None, "threshold_met": p.threshold_met(g.max_degree)}
    if p.alpha is not None:
        rep = check_edge_expansion(g, p.alpha)
        out["expansion_verified"] = rep.holds if rep.verified == "exact" else None
    return out


def _range_note(n: int, q: int, epsilon: float) -> Optional[str]:
    if epsilon < q * math.exp(-n):
        return f"epsilon={epsilon} is below q e^-n = {q * math.exp(-n):.3g}"
    return None


def sample_potts(g: HostGraph, p: PottsParams, epsilon: float, seed=None,
                 backend: str = "scalar") -> Coloring:
    """Approximate Potts sample: uniform ground colour, then polymer dynamics at ``epsilon/q``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    note = _range_note(g.n, p.q, epsilon)
    if note:
        warnings.warn(note)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_colour, s_chain = ss.spawn(2)
    colour = int(np.random.default_rng(s_colour).integers(p.q))
    model = PottsPolymerModel(g, p, ground=colour)
    if backend == "batch":
        run = run_chains_batch(model, epsilon / p.q, 1, seed=np.random.default_rng(s_chain))
        conf = Configuration(g, run.keys()[0])
        meta = {"truncated": bool(run.truncated[0]), "work_units": int(run.work_units[0])}
    else:
        run = run_chain(model, epsilon / p.q, seed=np.random.default_rng(s_chain))
        conf = run.final
        meta = {"truncated": run.truncated, "work_units": run.work_units}
    out = polymer_to_coloring(conf, p, ground=colour)
    out.meta.update(meta, ground_color=colour, **hypotheses(g, p))
    if note:
        out.meta["warning"] = note
    return out


def sample_potts_batch(g: HostGraph, p: PottsParams, epsilon: float, size: int, seed=None) -> np.ndarray:
    """``size`` independent :func:`sample_potts` draws as a ``(size, n)`` colour array."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_colour, s_chain = ss.spawn(2)
    colours = np.random.default_rng(s_colour).integers(p.q, size=size)
    out = np.empty((size, g.n), dtype=np.int64)
    rng = np.random.default_rng(s_chain)
    for c in range(p.q):
        rows = np.flatnonzero(colours == c)
        if rows.size == 0:
            continue
        model = PottsPolymerModel(g, p, ground=c)
        run = run_chains_batch(model, epsilon / p.q, rows.size, seed=rng)
        cols = np.full((rows.size, g.n), c, dtype=np.int64)
        have = run.owner >= 0
        if len(run.catalogue):
            spin_of = np.zeros((len(run.catalogue), g.n), dtype=np.int64)
            for j, poly in enumerate(run.catalogue.polymers):
                spin_of[j, list(poly.support)] = poly.spins
            r, v = np.nonzero(have)
            cols[r, v] = spin_of[run.owner[r, v], v]
        out[rows] = cols
    return out


def count_potts(g: HostGraph, p: PottsParams, epsilon: float, seed=None,
                backend: str = "auto", diagnostics: bool = False) -> EstimateReport:
    """``q`` times the annealing estimate of the ground-colour polymer partition function."""
    from . import oracle

    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if epsilon < p.q * math.exp(-g.n):
        if g.n > BRUTE_FALLBACK_MAX_N:
            raise ValueError("epsilon below q e^-n on a graph too large for brute force")
        z = oracle.brute_potts_partition(g, p.q, p.beta)
        return EstimateReport(math.log(z), None, seed if isinstance(seed, int) else None,
                              backend="brute-force", warnings=[_range_note(g.n, p.q, epsilon)],
                              extras={"hypotheses": hypotheses(g, p)})
    model = PottsPolymerModel(g, p)
    rep = estimate_partition(model, epsilon / (2 * p.q), seed, backend=backend)
    rep.log_z_hat += math.log(p.q)
    rep.extras["hypotheses"] = hypotheses(g, p)
    if diagnostics and p.q ** g.n <= 10 ** 6:
        z_exact = oracle.brute_potts_partition(g, p.q, p.beta)
        z_poly, _ = oracle.brute_polymer_partition(model)
        rep.extras["exact_z"] = z_exact
        rep.extras["q_times_polymer_z"] = p.q * z_poly
        rep.extras["polymer_gap_log"] = math.log(p.q * z_poly) - math.log(z_exact)
    return rep
