"""Size-capped polymer models and single-spin Metropolis dynamics restricted to them.

A configuration is read as a spin assignment (ground spin off the polymers).
One step picks a vertex and a spin uniformly, recomputes the components of
non-ground vertices near that vertex, and accepts the move with the
Metropolis probability if every resulting component is an allowed polymer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamics import ChainRun, UniformStream, _as_stream
from .graph import HostGraph, MissingBipartitionError
from .hardcore import HardcoreParams
from .polymers import DEFAULT_NODE_BUDGET, Configuration, Polymer, PolymerModel

BUDGET_CONST = 64
DEFAULT_CEILING = 1e9


class GlauberBudgetError(RuntimeError):
    """The default step budget exceeds the configured ceiling; pass ``steps``."""


class TruncatedModel(PolymerModel):
    def __init__(self, base: PolymerModel, k: int):
        if k < 1:
            raise ValueError("size cap must be >= 1")
        self.base = base
        self.k = k
        self.host = base.host
        self.q = base.q
        self.ground = base.ground
        self.eligible = base.eligible
        self.tau_hint = base.tau_hint
        self.max_size = min(base.max_size, k)

    def is_allowed(self, p: Polymer) -> bool:
        return p.size <= self.k and self.base.is_allowed(p)

    def log_weight(self, p: Polymer) -> float:
        return self.base.log_weight(p)

    def describe(self) -> dict:
        d = self.base.describe()
        d.update(truncated_at=self.k, max_size=self.max_size)
        return d


def truncate(m: PolymerModel, k: int) -> TruncatedModel:
    return TruncatedModel(m, k)


def truncation_size(n: int, epsilon: float, tau: float) -> float:
    """``3 ln(2n/epsilon) / (2 tau)``; callers take the ceiling and floor at 1."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return 3 * math.log(2 * n / epsilon) / (2 * tau)


def potts_cap(n: int, epsilon: float, alpha: float, beta: float) -> float:
    return 3 * math.log(4 * n / epsilon) / (2 * alpha * beta)


def hardcore_cap(n: int, epsilon: float, alpha: float, lam: float) -> float:
    return 3 * (2 + alpha) * math.log(4 * n / epsilon) / (2 * alpha * math.log(lam))


def integer_cap(value: float) -> int:
    return max(1, math.ceil(value))


# ----------------------------------------------------------------------------
# hard-core deviation model on G itself
# ----------------------------------------------------------------------------

class DeviationModel(PolymerModel):
    """Deviations from the all-side-``i`` independent set.

    Ground spins are 1 (occupied) on side ``i`` and 0 elsewhere.  A polymer
    may hold at most a quarter of side ``i`` and must contain every neighbour
    of each of its other-side vertices.
    """

    def __init__(self, g: HostGraph, params: HardcoreParams, side: int):
        if g.bipartition is None:
            raise MissingBipartitionError("deviation model needs a bipartition")
        if side not in (0, 1):
            raise ValueError("side must be 0 or 1")
        self.host = g
        self.params = params
        self.side = side
        self.q = 2
        self.ground = tuple(1 if b == side else 0 for b in g.bipartition)
        self.part_size = sum(1 for b in g.bipartition if b == side)
        self.max_size = g.n
        self.log_lam = math.log(params.lam)
        self.tau_hint = (None if params.alpha is None
                         else params.alpha / (2 + params.alpha) * self.log_lam)

    def is_allowed(self, p: Polymer) -> bool:
        if p.size < 1 or any(s == self.ground[v] for v, s in zip(p.support, p.spins)):
            return False
        side = self.host.bipartition
        own = sum(1 for v in p.support if side[v] == self.side)
        if own > self.part_size / 4:
            return False
        members = set(p.support)
        for v in p.support:
            if side[v] != self.side and any(w not in members for w in self.host.adjacency[v]):
                return False
        return self.host.is_connected_set(p.support)

    def log_weight(self, p: Polymer) -> float:
        side = self.host.bipartition
        own = sum(1 for v in p.support if side[v] == self.side)
        return (p.size - 2 * own) * self.log_lam

    def describe(self) -> dict:
        d = super().describe()
        d.update(side=self.side, lam=self.params.lam)
        return d


def hc_deviation_model(g: HostGraph, p: HardcoreParams, side: int) -> DeviationModel:
    return DeviationModel(g, p, side)


def configuration_to_independent_set(c: Configuration, m: DeviationModel) -> list[int]:
    spins = list(m.ground)
    for poly in c.polymers:
        for v, s in zip(poly.support, poly.spins):
            spins[v] = s
    return [v for v in range(m.n) if spins[v] == 1]


# ----------------------------------------------------------------------------
# dynamics
# ----------------------------------------------------------------------------

def _local_components(m: PolymerModel, c: Configuration, v: int, s: int):
    """Polymers touched by setting ``sigma(v) = s`` and the components that replace them."""
    adj = m.host.adjacency
    old = set()
    if v in c.owner:
        old.add(c.owner[v])
    for w in adj[v]:
        if w in c.owner:
            old.add(c.owner[w])
    spin = {}
    for p in old:
        spin.update(zip(p.support, p.spins))
    spin.pop(v, None)
    if s != m.ground[v]:
        spin[v] = s
    new = []
    seen = set()
    for start in sorted(spin):
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in spin and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    stack.append(w)
        comp.sort()
        new.append(Polymer(tuple(comp), tuple(spin[u] for u in comp)))
    return old, new


def glauber_step(c: Configuration, m: PolymerModel, rng) -> Configuration:
    """One restricted Metropolis update of ``c`` in place."""
    stream = _as_stream(rng)
    v = min(int(stream.next() * m.n), m.n - 1)
    s = min(int(stream.next() * m.q), m.q - 1)
    u = stream.next()
    cur = c.owner[v].spin_map()[v] if v in c.owner else m.ground[v]
    if s == cur:
        return c
    old, new = _local_components(m, c, v, s)
    if not all(m.is_allowed(p) for p in new):
        return c
    diff = math.fsum(m.log_weight(p) for p in new) - math.fsum(m.log_weight(p) for p in old)
    if diff < 0 and u > math.exp(diff):
        return c
    for p in old:
        c.remove(p)
    for p in new:
        c.try_insert(p)
    return c


def potts_eta(beta: float, delta: int) -> float:
    return math.exp(beta * delta)


def hardcore_eta(lam: float) -> float:
    return lam


def default_glauber_budget(n: int, cap: int, eta: float, epsilon: float,
                           const: float = BUDGET_CONST) -> float:
    """``const * M * eta^{M+1} * n^2 * ln n * ln(eta/epsilon)``."""
    return const * cap * eta ** (cap + 1) * n ** 2 * math.log(max(n, 2)) * math.log(eta / epsilon)


def run_restricted_glauber(m: PolymerModel, epsilon: float, seed=None,
                           steps: Optional[int] = None, eta: Optional[float] = None,
                           ceiling: float = DEFAULT_CEILING) -> ChainRun:
    """Run :func:`glauber_step` from the empty configuration."""
    if steps is None:
        if eta is None:
            raise ValueError("eta is needed for the default budget")
        budget = default_glauber_budget(m.n, m.max_size, eta, epsilon)
        if budget > ceiling:
            raise GlauberBudgetError(f"default budget {budget:.3g} exceeds ceiling {ceiling:.3g}")
        steps = math.ceil(budget)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    stream = UniformStream(rng)
    c = Configuration(m.host)
    for _ in range(steps):
        glauber_step(c, m, stream)
    return ChainRun(steps, steps, 0, False, c, seed if isinstance(seed, int) else None)


# ----------------------------------------------------------------------------
# property checks
# ----------------------------------------------------------------------------

@dataclass
class PrefixReport:
    checked: int
    no_valid_root: list[Polymer] = field(default_factory=list)
    min_root_failures: int = 0

    @property
    def ok(self) -> bool:
        return not self.no_valid_root


def _dfs_order(host: HostGraph, support: tuple[int, ...], root: int) -> list[int]:
    inside = set(support)
    order, seen, stack = [], {root}, [root]
    while stack:
        u = stack.pop()
        order.append(u)
        for w in sorted(host.adjacency[u], reverse=True):
            if w in inside and w not in seen:
                seen.add(w)
                stack.append(w)
    return order


def check_dfs_prefixes(m: PolymerModel, k_max: int,
                       budget: int = DEFAULT_NODE_BUDGET) -> PrefixReport:
    """Do DFS orderings build every polymer through allowed prefixes?

    Tries the minimum-id vertex as root first, then every other root.
    Polymers with no working root are listed; the chain itself never needs
    this, it only matters for the comparison argument.
    """
    polys = m.all_polymers(k_max, budget)
    rep = PrefixReport(len(polys))
    for p in polys:
        spin = p.spin_map()
        good_root = False
        for root in p.support:
            order = _dfs_order(m.host, p.support, root)
            ok = True
            for t in range(1, len(order)):
                pre = tuple(sorted(order[:t]))
                if not m.is_allowed(Polymer(pre, tuple(spin[u] for u in pre))):
                    ok = False
                    break
            if ok:
                good_root = True
                break
            if root == p.support[0]:
                rep.min_root_failures += 1
        if not good_root:
            rep.no_valid_root.append(p)
    return rep


def check_eta_bound(m: PolymerModel, eta: float, states=None) -> tuple[bool, float]:
    """Exhaustively check ``mu(G)/mu(G')`` in ``[1/eta, eta]`` for one-spin neighbours.

    Returns ``(holds, largest |log ratio|)``.
    """
    from .oracle import components_of, enumerate_configurations

    states = states if states is not None else enumerate_configurations(m)
    index = set(states)
    worst = 0.0
    for st in states:
        sigma = list(m.ground)
        for p in st:
            for v, s in zip(p.support, p.spins):
                sigma[v] = s
        lw = math.fsum(m.log_weight(p) for p in st)
        for v in range(m.n):
            for s in range(m.q):
                if s == sigma[v]:
                    continue
                new = list(sigma)
                new[v] = s
                target = components_of(m, new)
                if target not in index:
                    continue
                lw2 = math.fsum(m.log_weight(p) for p in target)
                worst = max(worst, abs(lw2 - lw))
    return worst <= math.log(eta) + 1e-12, worst
