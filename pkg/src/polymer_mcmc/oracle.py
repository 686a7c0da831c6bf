"""Brute-force ground truth for desk-scale instances.

Everything here enumerates: polymer configurations, colourings,
independent sets, and full transition matrices with every source of
randomness summed out.  These are the reference values the samplers and
counters are tested against.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np
from scipy import sparse

from .dynamics import NuSampler
from .graph import HostGraph
from .polymers import Polymer, PolymerModel

STATE_LIMIT = 5000
OMEGA_BUDGET = 200_000


class OracleSizeError(RuntimeError):
    pass


@dataclass
class ExactDistribution:
    states: list
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self._index = {s: i for i, s in enumerate(self.states)}

    def index(self, state) -> int:
        return self._index[state]

    def prob(self, state) -> float:
        i = self._index.get(state)
        return 0.0 if i is None else float(self.probs[i])

    def as_dict(self) -> dict:
        return dict(zip(self.states, self.probs.tolist()))


# ----------------------------------------------------------------------------
# polymer configurations
# ----------------------------------------------------------------------------

def enumerate_configurations(m: PolymerModel, size_limit: Optional[int] = None,
                             budget: int = OMEGA_BUDGET,
                             polymers: Optional[Sequence[Polymer]] = None) -> list[tuple[Polymer, ...]]:
    """All sets of pairwise compatible allowed polymers, canonically sorted."""
    polys = sorted(polymers) if polymers is not None else m.all_polymers(size_limit)
    adj = m.host.adjacency
    closed = []
    masks = []
    for p in polys:
        mk = cl = 0
        for u in p.support:
            mk |= 1 << u
            cl |= 1 << u
            for w in adj[u]:
                cl |= 1 << w
        masks.append(mk)
        closed.append(cl)
    out: list[tuple[Polymer, ...]] = []

    def rec(start: int, covered: int, chosen: list[Polymer]) -> None:
        out.append(tuple(chosen))
        if len(out) > budget:
            raise OracleSizeError(f"configuration space exceeds {budget} states")
        for j in range(start, len(polys)):
            if closed[j] & covered == 0:
                chosen.append(polys[j])
                rec(j + 1, covered | masks[j], chosen)
                chosen.pop()

    rec(0, 0, [])
    out.sort()
    return out


def brute_polymer_partition(m: PolymerModel, size_limit: Optional[int] = None,
                            budget: int = OMEGA_BUDGET) -> tuple[float, ExactDistribution]:
    """Exact ``Z`` and Gibbs measure of a polymer model by enumerating Omega."""
    states = enumerate_configurations(m, size_limit, budget)
    logw = np.array([math.fsum(m.log_weight(p) for p in s) for s in states])
    shift = logw.max()
    w = np.exp(logw - shift)
    total = math.fsum(w)
    return float(math.exp(shift) * total), ExactDistribution(states, w / total)


def polymer_partition_by_subsets(m: PolymerModel, size_limit: Optional[int] = None) -> float:
    """Second enumerator: filter every subset of the polymer list for compatibility."""
    polys = m.all_polymers(size_limit)
    if len(polys) > 22:
        raise OracleSizeError("subset filter limited to 22 polymers")
    adj = m.host.adjacency
    total = 0.0
    for mask in range(1 << len(polys)):
        chosen = [polys[j] for j in range(len(polys)) if mask >> j & 1]
        used: set[int] = set()
        ok = True
        for p in chosen:
            near = set(p.support)
            for u in p.support:
                near.update(adj[u])
            if near & used:
                ok = False
                break
            used.update(p.support)
        # the check above is one-sided; confirm pairwise distance >= 2
        if ok:
            for a, b in itertools.combinations(chosen, 2):
                sb = set(b.support)
                if any(u in sb or any(w in sb for w in adj[u]) for u in a.support):
                    ok = False
                    break
        if ok:
            total += math.exp(math.fsum(m.log_weight(p) for p in chosen))
    return total


# ----------------------------------------------------------------------------
# spin systems
# ----------------------------------------------------------------------------

def brute_hardcore_partition(g: HostGraph, lam, max_n: int = 24):
    """``sum over independent sets of lam^|I|`` by branching on the lowest free vertex.

    Works with floats or exact numbers (``fractions.Fraction``).
    """
    if g.n > max_n:
        raise OracleSizeError(f"n={g.n} exceeds the independent-set enumeration guard {max_n}")
    nbr = g.neighbour_masks()
    one = lam ** 0
    memo: dict[int, object] = {}

    def count(free: int):
        if free == 0:
            return one
        if free in memo:
            return memo[free]
        v = (free & -free).bit_length() - 1
        rest = free & ~(1 << v)
        val = count(rest) + lam * count(rest & ~nbr[v])
        memo[free] = val
        return val

    return count((1 << g.n) - 1)


def independent_sets(g: HostGraph, max_n: int = 24) -> list[int]:
    """Every independent set as a vertex bitmask, in increasing mask order."""
    if g.n > max_n:
        raise OracleSizeError("too many vertices")
    nbr = g.neighbour_masks()
    out = []

    def rec(v: int, chosen: int, blocked: int) -> None:
        if v == g.n:
            out.append(chosen)
            return
        rec(v + 1, chosen, blocked)
        if not blocked >> v & 1:
            rec(v + 1, chosen | 1 << v, blocked | nbr[v])

    rec(0, 0, 0)
    out.sort()
    return out


def hardcore_partition_by_subsets(g: HostGraph, lam) -> object:
    """Second enumerator: filter all 2^n subsets."""
    nbr = g.neighbour_masks()
    total = lam * 0
    for mask in range(1 << g.n):
        if all(not (mask >> v & 1) or not (nbr[v] & mask) for v in range(g.n)):
            total += lam ** bin(mask).count("1")
    return total


def hardcore_distribution(g: HostGraph, lam: float) -> ExactDistribution:
    sets = independent_sets(g)
    logw = np.array([bin(s).count("1") * math.log(lam) for s in sets])
    w = np.exp(logw - logw.max())
    return ExactDistribution(sets, w / w.sum())


def bichromatic_edges(g: HostGraph, colors: Sequence[int]) -> int:
    return sum(1 for u, v in g.edges() if colors[u] != colors[v])


def brute_potts_partition(g: HostGraph, q: int, beta: float, limit: int = 10**7) -> float:
    """``sum over colourings of exp(-beta m(G, sigma))``; accumulates per bichromatic count."""
    counts = potts_energy_counts(g, q, limit)
    return math.fsum(c * math.exp(-beta * k) for k, c in enumerate(counts))


def potts_energy_counts(g: HostGraph, q: int, limit: int = 10**7) -> list[int]:
    """Number of colourings with each bichromatic-edge count (exact integers)."""
    if q ** g.n > limit:
        raise OracleSizeError(f"q^n = {q ** g.n} exceeds {limit}")
    edges = np.array(g.edges(), dtype=np.int64).reshape(-1, 2)
    counts = np.zeros(len(edges) + 1, dtype=np.int64)
    chunk = 1 << 16
    total = q ** g.n
    powers = q ** np.arange(g.n, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        colors = (idx[:, None] // powers[None, :]) % q
        if len(edges):
            mono = (colors[:, edges[:, 0]] != colors[:, edges[:, 1]]).sum(axis=1)
        else:
            mono = np.zeros(len(idx), dtype=np.int64)
        counts += np.bincount(mono, minlength=len(edges) + 1)
    return counts.tolist()


def potts_distribution(g: HostGraph, q: int, beta: float, limit: int = 10**6) -> ExactDistribution:
    if q ** g.n > limit:
        raise OracleSizeError("too many colourings")
    states = list(itertools.product(range(q), repeat=g.n))
    logw = np.array([-beta * bichromatic_edges(g, s) for s in states])
    w = np.exp(logw - logw.max())
    return ExactDistribution(states, w / w.sum())


# ----------------------------------------------------------------------------
# transition matrices
# ----------------------------------------------------------------------------

def _spin_config(m: PolymerModel, state: Sequence[Polymer]) -> list[int]:
    sigma = list(m.ground)
    for p in state:
        for v, s in zip(p.support, p.spins):
            sigma[v] = s
    return sigma


def components_of(m: PolymerModel, sigma: Sequence[int]) -> tuple[Polymer, ...]:
    """Extended inverse spin map: connected components (in the host) of non-ground vertices."""
    adj = m.host.adjacency
    seen = [False] * m.n
    out = []
    for v in range(m.n):
        if seen[v] or sigma[v] == m.ground[v]:
            continue
        comp = [v]
        seen[v] = True
        stack = [v]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w] and sigma[w] != m.ground[w]:
                    seen[w] = True
                    comp.append(w)
                    stack.append(w)
        comp.sort()
        out.append(Polymer(tuple(comp), tuple(sigma[u] for u in comp)))
    return tuple(sorted(out))


def exact_kernel(m: PolymerModel, dynamics: str = "polymer",
                 sampler: Optional[NuSampler] = None, state_limit: int = STATE_LIMIT,
                 states: Optional[list] = None):
    """Exact transition matrix over Omega with all randomness summed out.

    Returns ``(states, P)`` with ``P`` a scipy CSR matrix indexed like ``states``.
    ``dynamics`` is ``"polymer"`` (polymer dynamics with the geometric-mixture
    law of ``nu_v``) or ``"glauber"`` (restricted Metropolis Glauber dynamics).
    """
    if states is None:
        states = enumerate_configurations(m, budget=state_limit)
    if len(states) > state_limit:
        raise OracleSizeError(f"|Omega| = {len(states)} exceeds {state_limit}")
    index = {s: i for i, s in enumerate(states)}
    n = m.n
    rows, cols, vals = [], [], []

    def add(i: int, j: int, p: float) -> None:
        rows.append(i)
        cols.append(j)
        vals.append(p)

    if dynamics == "polymer":
        s = sampler or NuSampler(m)
        laws = [s.law(v) for v in range(n)]
        adj = m.host.adjacency
        for i, state in enumerate(states):
            owner = {}
            for p in state:
                for u in p.support:
                    owner[u] = p
            for v in range(n):
                # removal half
                gv = owner.get(v)
                if gv is None:
                    add(i, i, 0.5 / n)
                else:
                    add(i, index[tuple(x for x in state if x != gv)], 0.5 / n)
                # insertion half
                law, empty = laws[v]
                stay = empty
                for p, prob in law.items():
                    ok = all(u not in owner and all(w not in owner for w in adj[u])
                             for u in p.support)
                    if ok:
                        add(i, index[tuple(sorted(state + (p,)))], 0.5 / n * prob)
                    else:
                        stay += prob
                add(i, i, 0.5 / n * stay)
    elif dynamics == "glauber":
        logw = [math.fsum(m.log_weight(p) for p in st) for st in states]
        for i, state in enumerate(states):
            sigma = _spin_config(m, state)
            for v in range(n):
                for spin in range(m.q):
                    base = 1.0 / (n * m.q)
                    if spin == sigma[v]:
                        add(i, i, base)
                        continue
                    new = list(sigma)
                    new[v] = spin
                    target = components_of(m, new)
                    j = index.get(target)
                    if j is None or not all(m.is_allowed(p) for p in target):
                        add(i, i, base)
                        continue
                    acc = min(1.0, math.exp(logw[j] - logw[i]))
                    add(i, j, base * acc)
                    if acc < 1:
                        add(i, i, base * (1 - acc))
    else:
        raise ValueError(f"unknown dynamics {dynamics!r}")
    P = sparse.csr_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    P.sum_duplicates()
    return states, P


def distribution_after(P, start: int, steps: int) -> np.ndarray:
    """Row ``start`` of ``P^steps`` by repeated vector-matrix products."""
    x = np.zeros(P.shape[0])
    x[start] = 1.0
    PT = P.T.tocsr()
    for _ in range(steps):
        x = PT @ x
    return x


def gibbs_vector(m: PolymerModel, states: Sequence[tuple[Polymer, ...]]) -> np.ndarray:
    logw = np.array([math.fsum(m.log_weight(p) for p in s) for s in states])
    w = np.exp(logw - logw.max())
    return w / w.sum()


def detailed_balance_gap(mu: np.ndarray, P) -> float:
    """``max |mu_i P_ij - mu_j P_ji|`` over all entries."""
    F = sparse.diags(mu) @ P
    D = (F - F.T).tocoo()
    return float(np.max(np.abs(D.data))) if D.nnz else 0.0


# ----------------------------------------------------------------------------
# distances
# ----------------------------------------------------------------------------

def tv_distance(a, b) -> float:
    """Half the L1 distance.  Accepts aligned arrays, ``ExactDistribution`` or count mappings.

    Mappings (e.g. ``Counter`` of observed states) are normalised; states
    missing on one side count as probability zero.
    """
    if isinstance(a, ExactDistribution) and isinstance(b, ExactDistribution):
        a, b = a.as_dict(), b.as_dict()
    elif isinstance(a, ExactDistribution):
        a = a.as_dict()
    elif isinstance(b, ExactDistribution):
        b = b.as_dict()
    if isinstance(a, Mapping) or isinstance(b, Mapping):
        if not (isinstance(a, Mapping) and isinstance(b, Mapping)):
            raise ValueError("cannot compare a mapping with an unindexed array")
        ta = math.fsum(a.values())
        tb = math.fsum(b.values())
        keys = set(a) | set(b)
        return 0.5 * math.fsum(abs(a.get(k, 0) / ta - b.get(k, 0) / tb) for k in keys)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("mismatched supports")
    return float(0.5 * np.abs(a / a.sum() - b / b.sum()).sum())


def tv_noise_sigma(p: Mapping[Hashable, float] | np.ndarray, draws: int) -> float:
    """Scale of the Monte Carlo error of an empirical TV estimate from ``draws`` samples.

    Half the sum of binomial standard deviations ``sqrt(p(1-p)/N)``; an upper
    bound on the expected TV between the empirical and true law.
    """
    vals = np.fromiter(p.values(), dtype=float) if isinstance(p, Mapping) else np.asarray(p)
    return float(0.5 * np.sqrt(vals * (1 - vals) / draws).sum())


# ----------------------------------------------------------------------------
# two-sided hard-core procedure, computed from first principles
# ----------------------------------------------------------------------------

def _square_components(g: HostGraph, members: list[int]) -> list[list[int]]:
    """Components of ``members`` under 'graph distance <= 2'."""
    left = set(members)
    comps = []
    while left:
        start = min(left)
        left.discard(start)
        comp, stack = [start], [start]
        while stack:
            u = stack.pop()
            near = set(g.adjacency[u])
            for w in g.adjacency[u]:
                near.update(g.adjacency[w])
            for w in sorted(near & left):
                left.discard(w)
                comp.append(w)
                stack.append(w)
        comps.append(sorted(comp))
    return comps


def side_union_weights(g: HostGraph, lam, side: int) -> dict[int, object]:
    """Side-``side`` polymer configurations keyed by the union of their supports.

    A subset ``S`` of the side is the union of a unique configuration iff
    each of its distance-2 components has at most half the side's vertices;
    the weight is ``lam^|S| / (1+lam)^|N(S)|``.  Arithmetic follows ``lam``.
    """
    members = g.part(side)
    half = len(members) / 2
    out = {}
    for r in range(len(members) + 1):
        for combo in itertools.combinations(members, r):
            if any(len(c) > half for c in _square_components(g, list(combo))):
                continue
            nb = g.neighbourhood(combo)
            mask = sum(1 << v for v in combo)
            out[mask] = lam ** len(combo) / (1 + lam) ** len(nb)
    return out


def hardcore_two_sided_law(g: HostGraph, lam: float) -> ExactDistribution:
    """Output law of: pick side with exact weights, exact polymer Gibbs draw, then fill."""
    if g.bipartition is None:
        raise ValueError("needs a bipartition")
    sizes = (len(g.part(0)), len(g.part(1)))
    p_fill = lam / (1 + lam)
    law: dict[int, float] = {}
    sides = [side_union_weights(g, lam, i) for i in (0, 1)]
    z = [math.fsum(s.values()) for s in sides]
    terms = [sizes[1] * math.log1p(lam) + math.log(z[0]),
             sizes[0] * math.log1p(lam) + math.log(z[1])]
    top = max(terms)
    side_p = [math.exp(t - top) for t in terms]
    side_p = [x / sum(side_p) for x in side_p]
    for i in (0, 1):
        other = g.part(1 - i)
        for mask, w in sides[i].items():
            occupied = [v for v in range(g.n) if mask >> v & 1]
            free = [v for v in other if v not in g.neighbourhood(occupied)]
            base = side_p[i] * w / z[i]
            for r in range(len(free) + 1):
                pr = base * p_fill ** r * (1 - p_fill) ** (len(free) - r)
                for extra in itertools.combinations(free, r):
                    key = mask | sum(1 << v for v in extra)
                    law[key] = law.get(key, 0.0) + pr
    states = sorted(law)
    return ExactDistribution(states, np.array([law[s] for s in states]))
