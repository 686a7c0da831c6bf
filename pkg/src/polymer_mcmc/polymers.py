"""Subset polymer models, configurations and the weight-condition checkers."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .graph import HostGraph
from .subgraphs import all_connected_sets, connected_sets_at

DEFAULT_NODE_BUDGET = 2_000_000


class EnumerationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True, order=True, slots=True)
class Polymer:
    """Connected support (sorted vertex ids) plus the non-ground spin of each vertex."""
    support: tuple[int, ...]
    spins: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.support)

    def spin_map(self) -> dict[int, int]:
        return dict(zip(self.support, self.spins))


def sampling_threshold(q: int, delta: int) -> float:
    """Smallest tau allowed by the polymer sampling condition: 5 + 3 log((q-1) Delta)."""
    return 5 + 3 * math.log(max((q - 1) * delta, 1))


class PolymerModel:
    """Behavioural contract every concrete model fills in.

    Subclasses set ``host``, ``q``, ``ground``, ``max_size`` and implement
    :meth:`is_allowed` and :meth:`log_weight`.  ``eligible`` (optional)
    marks vertices that can ever belong to a polymer; enumeration is then run
    on the induced subgraph, which must not change the allowed set.
    """

    host: HostGraph
    q: int
    ground: tuple[int, ...]
    max_size: int
    tau_hint: Optional[float] = None
    eligible: Optional[tuple[bool, ...]] = None

    @property
    def n(self) -> int:
        return self.host.n

    def is_allowed(self, p: Polymer) -> bool:
        raise NotImplementedError

    def log_weight(self, p: Polymer) -> float:
        raise NotImplementedError

    def weight(self, p: Polymer) -> float:
        return math.exp(self.log_weight(p))

    def spin_choices(self, v: int) -> list[int]:
        g = self.ground[v]
        return [s for s in range(self.q) if s != g]

    def labelings(self, support: tuple[int, ...]) -> Iterable[Polymer]:
        choices = [self.spin_choices(v) for v in support]
        for spins in itertools.product(*choices):
            yield Polymer(support, spins)

    def polymers_at(self, v: int, k: int) -> list[Polymer]:
        """``A_k(v)``: allowed polymers through ``v`` with at most ``k`` vertices."""
        k = min(k, self.max_size)
        if k < 1:
            return []
        out = []
        for support in connected_sets_at(self.host, v, k, self.eligible):
            for p in self.labelings(support):
                if self.is_allowed(p):
                    out.append(p)
        return out

    def all_polymers(self, k: Optional[int] = None,
                     budget: int = DEFAULT_NODE_BUDGET) -> list[Polymer]:
        """Every allowed polymer of size <= k (default: the model's hard cap), sorted."""
        k = self.max_size if k is None else min(k, self.max_size)
        if k < 1:
            return []
        out = []
        visited = 0
        for support in all_connected_sets(self.host, k, self.eligible):
            for p in self.labelings(support):
                visited += 1
                if visited > budget:
                    raise EnumerationBudgetError(
                        f"polymer enumeration exceeded {budget} candidates")
                if self.is_allowed(p):
                    out.append(p)
        out.sort()
        return out

    def describe(self) -> dict:
        return {"model": type(self).__name__, "n": self.n, "q": self.q,
                "max_size": self.max_size, "tau_hint": self.tau_hint}


class HardcoreVertexModel(PolymerModel):
    """Hard-core model written as a polymer model: single occupied vertices of weight lambda."""

    def __init__(self, host: HostGraph, lam: float):
        if lam <= 0:
            raise ValueError("fugacity must be positive")
        self.host = host
        self.lam = lam
        self.q = 2
        self.ground = (0,) * host.n
        self.max_size = 1
        self.tau_hint = -math.log(lam)

    def is_allowed(self, p: Polymer) -> bool:
        return p.size == 1 and p.spins == (1,)

    def log_weight(self, p: Polymer) -> float:
        return math.log(self.lam)


class FunctionModel(PolymerModel):
    """Model assembled from plain callables; handy for synthetic instances."""

    def __init__(self, host: HostGraph, q: int, log_weight: Callable[[Polymer], float],
                 is_allowed: Optional[Callable[[Polymer], bool]] = None,
                 max_size: Optional[int] = None, ground: Optional[Sequence[int]] = None,
                 tau_hint: Optional[float] = None):
        self.host = host
        self.q = q
        self.ground = tuple(ground) if ground is not None else (0,) * host.n
        self.max_size = host.n if max_size is None else max_size
        self.tau_hint = tau_hint
        self._log_weight = log_weight
        self._allowed = is_allowed

    def is_allowed(self, p: Polymer) -> bool:
        return p.size <= self.max_size and (self._allowed is None or self._allowed(p))

    def log_weight(self, p: Polymer) -> float:
        return self._log_weight(p)


def decay_model(host: HostGraph, tau: float, q: int = 2,
                max_size: Optional[int] = None) -> FunctionModel:
    """Every connected polymer allowed with weight exactly ``exp(-tau |gamma|)``."""
    return FunctionModel(host, q, lambda p: -tau * p.size, max_size=max_size, tau_hint=tau)


# ----------------------------------------------------------------------------
# compatibility and configurations
# ----------------------------------------------------------------------------

def compatible(a: Polymer, b: Polymer, host: HostGraph) -> bool:
    """True iff the supports are at host distance >= 2 (disjoint and non-adjacent)."""
    sb = set(b.support)
    for u in a.support:
        if u in sb:
            return False
        for w in host.adjacency[u]:
            if w in sb:
                return False
    return True


class Configuration:
    """Set of pairwise compatible polymers with a vertex -> polymer index."""

    __slots__ = ("host", "owner", "polymers")

    def __init__(self, host: HostGraph, polymers: Iterable[Polymer] = ()):
        self.host = host
        self.owner: dict[int, Polymer] = {}
        self.polymers: set[Polymer] = set()
        for p in polymers:
            if not self.try_insert(p):
                raise ValueError(f"polymer {p} conflicts with the configuration")

    def can_insert(self, p: Polymer) -> bool:
        owner = self.owner
        adj = self.host.adjacency
        for u in p.support:
            if u in owner:
                return False
            for w in adj[u]:
                if w in owner:
                    return False
        return True

    def try_insert(self, p: Polymer) -> bool:
        if not self.can_insert(p):
            return False
        self.polymers.add(p)
        for u in p.support:
            self.owner[u] = p
        return True

    def remove(self, p: Polymer) -> None:
        self.polymers.remove(p)
        for u in p.support:
            del self.owner[u]

    def polymer_at(self, v: int) -> Optional[Polymer]:
        return self.owner.get(v)

    def key(self) -> tuple[Polymer, ...]:
        """Canonical, totally ordered representation."""
        return tuple(sorted(self.polymers))

    def copy(self) -> "Configuration":
        c = Configuration(self.host)
        c.polymers = set(self.polymers)
        c.owner = dict(self.owner)
        return c

    def total_size(self) -> int:
        return len(self.owner)

    def __len__(self) -> int:
        return len(self.polymers)

    def __eq__(self, other) -> bool:
        return isinstance(other, Configuration) and self.polymers == other.polymers

    def __repr__(self) -> str:
        return f"Configuration({list(self.key())})"


def insert_polymer(c: Configuration, p: Polymer, m: Optional[PolymerModel] = None) -> bool:
    """Add ``p`` to ``c`` in place if compatible with every member; report acceptance."""
    if m is not None and not m.is_allowed(p):
        raise ValueError(f"{p} is not an allowed polymer of the model")
    return c.try_insert(p)


def config_log_weight(c: Configuration | Iterable[Polymer], m: PolymerModel) -> float:
    polys = c.polymers if isinstance(c, Configuration) else c
    return math.fsum(m.log_weight(p) for p in polys)


def config_weight(c: Configuration | Iterable[Polymer], m: PolymerModel) -> float:
    return math.exp(config_log_weight(c, m))


# ----------------------------------------------------------------------------
# weight conditions
# ----------------------------------------------------------------------------

@dataclass
class ConditionReport:
    condition: str  # "sampling" | "kotecky-preiss" | "mixing"
    parameter: Optional[float]
    scope: str  # "exhaustive" (hard cap <= k_max) | "truncated" (advisory)
    k_max: int
    checked: int
    violations: list[tuple[Polymer, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> dict:
        return {"condition": self.condition, "parameter": self.parameter, "scope": self.scope,
                "k_max": self.k_max, "checked": self.checked,
                "violations": len(self.violations),
                "examples": [(list(p.support), list(p.spins), lhs, rhs)
                             for p, lhs, rhs in self.violations[:5]]}


def _scope(m: PolymerModel, k_max: int) -> str:
    return "exhaustive" if m.max_size <= k_max else "truncated"


def check_sampling_condition(m: PolymerModel, tau: float, k_max: int,
                             budget: int = DEFAULT_NODE_BUDGET) -> ConditionReport:
    """Report every enumerated polymer with ``w > exp(-tau |gamma|)``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    polys = m.all_polymers(k_max, budget)
    viol = []
    for p in polys:
        lhs = m.log_weight(p)
        rhs = -tau * p.size
        if lhs > rhs + 1e-12 * max(1.0, abs(rhs)):
            viol.append((p, math.exp(lhs), math.exp(rhs)))
    return ConditionReport("sampling", tau, _scope(m, k_max), k_max, len(polys), viol)


def _incompatibility_sums(m: PolymerModel, k_max: int, term: Callable[[Polymer, float], float],
                          budget: int) -> tuple[list[Polymer], list[float]]:
    polys = m.all_polymers(k_max, budget)
    through: dict[int, list[int]] = {}
    for idx, p in enumerate(polys):
        for v in p.support:
            through.setdefault(v, []).append(idx)
    terms = [term(p, m.log_weight(p)) for p in polys]
    adj = m.host.adjacency
    sums = []
    for p in polys:
        closed = set(p.support)
        for u in p.support:
            closed.update(adj[u])
        hit = set()
        for v in closed:
            hit.update(through.get(v, ()))
        sums.append(math.fsum(terms[j] for j in hit))
    return polys, sums


def check_mixing_condition(m: PolymerModel, theta: float = 1 / math.e, k_max: int = 3,
                           budget: int = DEFAULT_NODE_BUDGET) -> ConditionReport:
    """Truncated check of sum over incompatible g' of |g'| w_g' <= theta |g|."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    polys, sums = _incompatibility_sums(m, k_max, lambda p, lw: p.size * math.exp(lw), budget)
    viol = [(p, s, theta * p.size) for p, s in zip(polys, sums) if s > theta * p.size * (1 + 1e-12)]
    return ConditionReport("mixing", theta, _scope(m, k_max), k_max, len(polys), viol)


def check_kotecky_preiss(m: PolymerModel, k_max: int = 3,
                         budget: int = DEFAULT_NODE_BUDGET) -> ConditionReport:
    """Truncated check of sum over incompatible g' of e^|g'| w_g' <= |g|."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    polys, sums = _incompatibility_sums(m, k_max, lambda p, lw: math.exp(p.size + lw), budget)
    viol = [(p, s, float(p.size)) for p, s in zip(polys, sums) if s > p.size * (1 + 1e-12)]
    return ConditionReport("kotecky-preiss", None, _scope(m, k_max), k_max, len(polys), viol)


def empirical_tau(m: PolymerModel, k_max: Optional[int] = None) -> float:
    """Largest tau with ``w <= exp(-tau |gamma|)`` over enumerated polymers (inf if none)."""
    polys = m.all_polymers(k_max)
    if not polys:
        return math.inf
    return min(-m.log_weight(p) / p.size for p in polys)
