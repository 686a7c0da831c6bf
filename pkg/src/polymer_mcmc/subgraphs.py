"""Enumeration of connected vertex sets anchored at a vertex."""
from __future__ import annotations

import math
from typing import Optional, Sequence

from .graph import HostGraph


def connected_sets_at(g: HostGraph, v: int, k: int,
                      eligible: Optional[Sequence[bool]] = None) -> list[tuple[int, ...]]:
    """All connected vertex sets of size <= k containing ``v``, lexicographically sorted.

    Each set is produced once: a branch adds candidate ``u_i`` while the
    earlier candidates ``u_1..u_{i-1}`` are forbidden for the rest of that
    branch.  ``eligible`` optionally restricts which vertices may be used
    (connectivity is then that of the induced subgraph on eligible vertices).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range")
    if eligible is not None and not eligible[v]:
        return []
    adj = g.adjacency
    out: list[tuple[int, ...]] = []

    def grow(members: list[int], frontier: list[int], blocked: set[int]) -> None:
        out.append(tuple(sorted(members)))
        if len(members) == k:
            return
        skipped: list[int] = []
        for u in frontier:
            blocked_here = blocked | set(skipped)
            members.append(u)
            inside = set(members)
            nxt = [w for w in frontier if w not in inside and w not in blocked_here]
            seen = set(nxt)
            for w in adj[u]:
                if (w not in inside and w not in blocked_here and w not in seen
                        and (eligible is None or eligible[w])):
                    nxt.append(w)
                    seen.add(w)
            grow(members, nxt, blocked_here)
            members.pop()
            skipped.append(u)

    start = [w for w in adj[v] if eligible is None or eligible[w]]
    grow([v], start, set())
    out.sort()
    return out


def connected_sets_count_bound(delta: int, k: int) -> float:
    """Upper bound ``(e*delta)^(k-1)`` on connected sets of size k through a vertex."""
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        return (math.e * delta) ** (k - 1)
    except OverflowError:
        return math.inf


def all_connected_sets(g: HostGraph, k: int,
                       eligible: Optional[Sequence[bool]] = None) -> list[tuple[int, ...]]:
    """Every connected set of size <= k, each once (anchored at its minimum vertex)."""
    out = []
    for v in range(g.n):
        if eligible is not None and not eligible[v]:
            continue
        restrict = [w >= v and (eligible is None or eligible[w]) for w in range(g.n)]
        out.extend(connected_sets_at(g, v, k, restrict))
    out.sort()
    return out
