"""Host graphs: representation, squaring, expansion checks, generators and file I/O.

Vertices are the dense integers ``0..n-1``.  Adjacency is stored as sorted
tuples so a :class:`HostGraph` is hashable-free but cheap to share; every
constructor validates symmetry, loops and duplicate edges.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

EXACT_CUTOFF = 24


class GraphFormatError(ValueError):
    """Malformed graph file."""


class GraphValidationError(ValueError):
    """Graph data violates a structural invariant."""


class MissingBipartitionError(ValueError):
    pass


class GeneratorBudgetError(RuntimeError):
    """Random generator gave up; retry with another seed."""


@dataclass(frozen=True)
class HostGraph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    bipartition: Optional[tuple[int, ...]] = None  # part label (0/1) per vertex
    max_degree: int = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphValidationError("graph needs at least one vertex")
        if len(self.adjacency) != self.n:
            raise GraphValidationError("adjacency length differs from n")
        for u, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphValidationError(f"vertex {u}: neighbours unsorted or duplicated")
            for v in nbrs:
                if not 0 <= v < self.n:
                    raise GraphValidationError(f"edge {u}-{v} out of range")
                if v == u:
                    raise GraphValidationError(f"self-loop at vertex {u}")
                if u not in self.adjacency[v]:
                    raise GraphValidationError(f"asymmetric edge {u}-{v}")
        if self.bipartition is not None:
            if len(self.bipartition) != self.n or set(self.bipartition) - {0, 1}:
                raise GraphValidationError("bipartition must label every vertex 0 or 1")
            for u, v in self.edges():
                if self.bipartition[u] == self.bipartition[v]:
                    raise GraphValidationError(f"edge {u}-{v} inside part {self.bipartition[u]}")
        object.__setattr__(self, "max_degree", max((len(a) for a in self.adjacency), default=0))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   part0: Optional[Iterable[int]] = None) -> "HostGraph":
        nbrs: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphValidationError(f"edge {u}-{v} out of range for n={n}")
            if u == v:
                raise GraphValidationError(f"self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphValidationError(f"duplicate edge {u}-{v}")
            seen.add(key)
            nbrs[u].append(v)
            nbrs[v].append(u)
        bip = None
        if part0 is not None:
            zero = set(int(x) for x in part0)
            bip = tuple(0 if v in zero else 1 for v in range(n))
        return cls(n, tuple(tuple(sorted(a)) for a in nbrs), bip)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def part(self, i: int) -> list[int]:
        if self.bipartition is None:
            raise MissingBipartitionError("graph has no bipartition")
        return [v for v in range(self.n) if self.bipartition[v] == i]

    def neighbourhood(self, vertices: Iterable[int]) -> set[int]:
        """All vertices adjacent to some vertex of ``vertices``."""
        out: set[int] = set()
        for v in vertices:
            out.update(self.adjacency[v])
        return out

    def distances_from(self, source: int) -> list[float]:
        dist = [math.inf] * self.n
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if dist[w] == math.inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def is_connected_set(self, vertices: Iterable[int]) -> bool:
        vs = set(vertices)
        if not vs:
            return False
        start = next(iter(vs))
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in self.adjacency[u]:
                if w in vs and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(vs)

    def neighbour_masks(self) -> list[int]:
        """Adjacency as Python-int bitmasks (used by the small-graph engines)."""
        return [sum(1 << w for w in self.adjacency[v]) for v in range(self.n)]


def power_graph(g: HostGraph, exponent: int = 2) -> HostGraph:
    """Square of ``g``: join vertices at distance 1 or 2.  The bipartition is dropped."""
    if exponent != 2:
        raise ValueError("only the square (exponent=2) is supported")
    nbrs = []
    for u in range(g.n):
        reach = set(g.adjacency[u])
        for w in g.adjacency[u]:
            reach.update(g.adjacency[w])
        reach.discard(u)
        nbrs.append(tuple(sorted(reach)))
    return HostGraph(g.n, tuple(nbrs))


# ----------------------------------------------------------------------------
# expansion
# ----------------------------------------------------------------------------

@dataclass
class ExpansionReport:
    kind: str  # "edge-expansion" | "bipartite-vertex-expansion"
    alpha: float
    verified: str  # "exact" | "unverified"
    witness: Optional[tuple[int, ...]] = None
    witness_side: Optional[int] = None

    @property
    def holds(self) -> bool:
        return self.verified == "exact" and self.witness is None


def _popcount_table(nbits: int) -> np.ndarray:
    return np.bitwise_count(np.arange(1 << nbits, dtype=np.uint32)).astype(np.int16)


def _mask_to_tuple(mask: int, labels: Sequence[int]) -> tuple[int, ...]:
    return tuple(labels[b] for b in range(len(labels)) if mask >> b & 1)


def edge_cut_sizes(g: HostGraph) -> np.ndarray:
    """``cut[mask] = e(S, S^c)`` for every subset mask of the vertex set (n <= EXACT_CUTOFF)."""
    n = g.n
    cut = np.zeros(1 << n, dtype=np.int32)
    nbr = g.neighbour_masks()
    for b in range(n):
        low = np.arange(1 << b, dtype=np.uint32)
        inside = np.bitwise_count(low & np.uint32(nbr[b] & ((1 << b) - 1))).astype(np.int32)
        cut[1 << b: 1 << (b + 1)] = cut[: 1 << b] + g.degree(b) - 2 * inside
    return cut


def check_edge_expansion(g: HostGraph, alpha: float, exact_cutoff: int = EXACT_CUTOFF) -> ExpansionReport:
    """Check ``e(S, S^c) >= alpha |S|`` for all ``|S| <= n/2`` (exhaustive up to the cutoff)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if g.n > exact_cutoff:
        return ExpansionReport("edge-expansion", alpha, "unverified")
    cut = edge_cut_sizes(g)
    size = _popcount_table(g.n)
    eligible = (size >= 1) & (size <= g.n / 2)
    bad = np.flatnonzero(eligible & (cut < alpha * size - 1e-12))
    witness = None
    if bad.size:
        # smallest violating set first, then lowest mask
        first = bad[np.lexsort((bad, size[bad]))[0]]
        witness = _mask_to_tuple(int(first), list(range(g.n)))
    return ExpansionReport("edge-expansion", alpha, "exact", witness)


def check_bipartite_vertex_expansion(g: HostGraph, alpha: float,
                                     exact_cutoff: int = EXACT_CUTOFF) -> ExpansionReport:
    """Check ``|N(S)| >= (1+alpha)|S|`` for small ``S`` inside each part."""
    if g.bipartition is None:
        raise MissingBipartitionError("bipartite expansion needs a bipartition")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if g.n > exact_cutoff:
        return ExpansionReport("bipartite-vertex-expansion", alpha, "unverified")
    for side in (0, 1):
        members = g.part(side)
        k = len(members)
        if k == 0:
            continue
        other = g.part(1 - side)
        pos = {v: j for j, v in enumerate(other)}
        nbr = [sum(1 << pos[w] for w in g.adjacency[v]) for v in members]
        nb = np.zeros(1 << k, dtype=np.uint32)
        for b in range(k):
            nb[1 << b: 1 << (b + 1)] = nb[: 1 << b] | np.uint32(nbr[b])
        size = _popcount_table(k)
        nsize = np.bitwise_count(nb).astype(np.int16)
        eligible = (size >= 1) & (size <= k / 2)
        bad = np.flatnonzero(eligible & (nsize < (1 + alpha) * size - 1e-12))
        if bad.size:
            first = bad[np.lexsort((bad, size[bad]))[0]]
            return ExpansionReport("bipartite-vertex-expansion", alpha, "exact",
                                   _mask_to_tuple(int(first), members), side)
    return ExpansionReport("bipartite-vertex-expansion", alpha, "exact")


def edge_expansion_constant(g: HostGraph) -> Optional[float]:
    """Largest alpha for which ``g`` is an exact alpha-expander (None above the cutoff)."""
    if g.n > EXACT_CUTOFF:
        return None
    if g.n == 1:
        return math.inf
    cut = edge_cut_sizes(g)
    size = _popcount_table(g.n)
    eligible = (size >= 1) & (size <= g.n / 2)
    return float(np.min(cut[eligible] / size[eligible]))


def bipartite_expansion_constant(g: HostGraph) -> Optional[float]:
    """Largest alpha with ``|N(S)| >= (1+alpha)|S|`` for every small ``S`` in either part.

    None above the exact cutoff; inf when no part has a nonempty small set.
    """
    if g.bipartition is None:
        raise MissingBipartitionError("bipartite expansion needs a bipartition")
    if g.n > EXACT_CUTOFF:
        return None
    best = math.inf
    for side in (0, 1):
        members = g.part(side)
        k = len(members)
        if k < 2:
            continue
        other = g.part(1 - side)
        pos = {v: j for j, v in enumerate(other)}
        nbr = [sum(1 << pos[w] for w in g.adjacency[v]) for v in members]
        nb = np.zeros(1 << k, dtype=np.uint32)
        for b in range(k):
            nb[1 << b: 1 << (b + 1)] = nb[: 1 << b] | np.uint32(nbr[b])
        size = _popcount_table(k)
        eligible = (size >= 1) & (size <= k / 2)
        ratio = np.bitwise_count(nb[eligible]).astype(float) / size[eligible]
        best = min(best, float(ratio.min()) - 1)
    return best


# ----------------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------------

def generate_random_regular_bipartite(n_per_side: int, delta: int, seed: int,
                                      max_attempts: int = 10_000) -> HostGraph:
    """Delta-regular simple bipartite graph as a union of ``delta`` random perfect matchings.

    Left vertices are ``0..n_per_side-1`` (part 0), right vertices follow.  A
    matching that would duplicate an existing edge is redrawn.
    """
    if n_per_side < 1 or delta < 0:
        raise ValueError("need n_per_side >= 1 and delta >= 0")
    if delta > n_per_side:
        raise ValueError(f"delta={delta} exceeds n_per_side={n_per_side}")
    rng = np.random.default_rng(seed)
    used: set[tuple[int, int]] = set()
    attempts = 0
    left = np.arange(n_per_side)
    rounds = 0
    while rounds < delta:
        attempts += 1
        if attempts > max_attempts:
            raise GeneratorBudgetError(
                f"rejection budget exhausted after {max_attempts} matchings; try another seed")
        perm = rng.permutation(n_per_side)
        pairs = set(zip(left.tolist(), perm.tolist()))
        if pairs & used:
            # repair pass: swap clashing targets with random partners
            perm = _repair_matching(perm, used, rng)
            if perm is None:
                continue
            pairs = set(zip(left.tolist(), perm.tolist()))
        used |= pairs
        rounds += 1
    edges = [(u, n_per_side + v) for u, v in sorted(used)]
    return HostGraph.from_edges(2 * n_per_side, edges, part0=range(n_per_side))


def _repair_matching(perm: np.ndarray, used: set, rng: np.random.Generator,
                     sweeps: int = 50) -> Optional[np.ndarray]:
    perm = perm.copy()
    n = len(perm)
    for _ in range(sweeps):
        clashes = [u for u in range(n) if (u, int(perm[u])) in used]
        if not clashes:
            return perm
        for u in clashes:
            w = int(rng.integers(n))
            if (u, int(perm[w])) not in used and (w, int(perm[u])) not in used:
                perm[u], perm[w] = perm[w], perm[u]
    return None


def cycle_graph(n: int) -> HostGraph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    part0 = range(0, n, 2) if n % 2 == 0 else None
    return HostGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], part0=part0)


def path_graph(n: int) -> HostGraph:
    return HostGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], part0=range(0, n, 2))


def complete_graph(n: int) -> HostGraph:
    return HostGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_bipartite(a: int, b: int) -> HostGraph:
    return HostGraph.from_edges(a + b, [(i, a + j) for i in range(a) for j in range(b)],
                                part0=range(a))


# ----------------------------------------------------------------------------
# file format
# ----------------------------------------------------------------------------

def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


def parse_graph(text: str) -> HostGraph:
    """Parse the text graph format (see :func:`format_graph`)."""
    lines = _content_lines(text)
    if not lines:
        raise GraphFormatError("empty graph file")
    lineno, header = lines[0]
    tokens = header.split()
    if len(tokens) not in (2, 3) or (len(tokens) == 3 and tokens[2] != "bipartite"):
        raise GraphFormatError(f"line {lineno}: expected 'n m' or 'n m bipartite'")
    try:
        n, m = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise GraphFormatError(f"line {lineno}: non-integer header") from None
    body = lines[1:]
    part0 = None
    if len(tokens) == 3:
        if not body:
            raise GraphFormatError("bipartite header but no part line")
        lineno, pline = body[0]
        try:
            part0 = [int(x) for x in pline.split()]
        except ValueError:
            raise GraphFormatError(f"line {lineno}: bad part-0 vertex list") from None
        body = body[1:]
    if len(body) != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(body)}")
    edges = []
    for lineno, line in body:
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v'")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer vertex id") from None
    return HostGraph.from_edges(n, edges, part0=part0)


def load_graph(path) -> HostGraph:
    return parse_graph(Path(path).read_text())


def format_graph(g: HostGraph) -> str:
    edges = g.edges()
    lines = []
    if g.bipartition is not None:
        lines.append(f"{g.n} {len(edges)} bipartite")
        lines.append(" ".join(str(v) for v in g.part(0)))
    else:
        lines.append(f"{g.n} {len(edges)}")
    lines.extend(f"{u} {v}" for u, v in edges)
    return "\n".join(lines) + "\n"


def save_graph(g: HostGraph, path) -> None:
    Path(path).write_text(format_graph(g))
