"""Polymer dynamics: the single polymer sampler, one chain step, and the sampling driver.

The chain adds or removes one polymer per step.  Insertions draw from the
sub-probability law ``nu_v`` (mass ``w_gamma`` on each polymer through
``v``) using a geometric size truncation so that only polymers up to a
random size ``k`` are ever enumerated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .polymers import Configuration, Polymer, PolymerModel

DEFAULT_CAP_CONST = 1e6
DEFAULT_THETA = 1 / math.e


class InvalidModelError(ValueError):
    """The model's weights are too large for the geometric truncation to be exact."""


class UniformStream:
    """Buffered uniforms on (0, 1] from a numpy Generator."""

    __slots__ = ("rng", "block", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = (1.0 - self.rng.random(self.block)).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def _as_stream(rng) -> UniformStream:
    if isinstance(rng, UniformStream):
        return rng
    if isinstance(rng, np.random.Generator):
        return UniformStream(rng)
    return UniformStream(np.random.default_rng(rng))


class NuSampler:
    """Exact sampler for ``nu_v`` via the geometric size truncation.

    ``r = tau - 2 - log((q-1) Delta)``; ``tau`` defaults to the model's
    ``tau_hint``.  Raising instead of renormalising when the acceptance
    masses exceed one keeps a violated sampling condition visible.
    """

    def __init__(self, model: PolymerModel, tau: Optional[float] = None,
                 r: Optional[float] = None):
        self.model = model
        if r is None:
            tau = model.tau_hint if tau is None else tau
            if tau is None:
                raise InvalidModelError("model has no tau_hint; pass tau explicitly")
            delta = max(model.host.max_degree, 1)
            r = tau - 2 - math.log(max((model.q - 1) * delta, 1))
        self.tau = tau
        if not r > 0:
            raise InvalidModelError(f"truncation rate r={r:.4g} is not positive")
        self.r = r

    def draw_size(self, u: float) -> int:
        """Geometric ``k`` with ``P(k >= j) = exp(-r j)`` from a uniform on (0, 1]."""
        return int(-math.log(u) / self.r)

    def draw(self, v: int, stream: UniformStream) -> tuple[Optional[Polymer], int]:
        """One draw from ``nu_v``; returns the polymer (or None) and the enumeration count."""
        k = self.draw_size(stream.next())
        if k == 0:
            return None, 0
        m = self.model
        polys = m.polymers_at(v, k)
        u = stream.next()
        acc = 0.0
        chosen = None
        r = self.r
        for p in polys:
            acc += math.exp(m.log_weight(p) + r * p.size)
            if chosen is None and u <= acc:
                chosen = p
        if acc > 1 + 1e-12:
            raise InvalidModelError(
                f"acceptance mass {acc:.6g} > 1 at vertex {v}, k={k}: sampling condition violated")
        if u > acc:
            # u is on (0,1]; the leftover mass is the empty outcome
            chosen = None
        return chosen, len(polys)

    def law(self, v: int) -> tuple[dict[Polymer, float], float]:
        """Output law of :meth:`draw` by summing the geometric mixture over ``k``.

        Returns ``(probabilities per polymer, probability of empty)``.  Sizes
        beyond the model's cap add nothing new, so the tail ``k >= K`` is
        lumped into a single term.
        """
        m = self.model
        r = self.r
        polys = m.polymers_at(v, m.max_size)
        if not polys:
            return {}, 1.0
        K = max(p.size for p in polys)
        pk = [(1 - math.exp(-r)) * math.exp(-r * k) for k in range(K)] + [math.exp(-r * K)]
        mass = {p: math.exp(m.log_weight(p) + r * p.size) for p in polys}
        out = {p: 0.0 for p in polys}
        empty = 0.0
        for k, prob_k in enumerate(pk):
            total = 0.0
            for p in polys:
                if p.size <= k:
                    out[p] += prob_k * mass[p]
                    total += mass[p]
            if total > 1 + 1e-12:
                raise InvalidModelError(f"acceptance mass {total:.6g} > 1 at vertex {v}, k={k}")
            empty += prob_k * (1 - total)
        return out, empty


def sample_nu_v(s: NuSampler, v: int, rng) -> Optional[Polymer]:
    p, _ = s.draw(v, _as_stream(rng))
    return p


def step(c: Configuration, m: PolymerModel, s: NuSampler, rng) -> tuple[Configuration, int]:
    """One polymer-dynamics update of ``c`` in place; returns ``(c, enumerated)``."""
    stream = _as_stream(rng)
    v = min(int(stream.next() * m.n), m.n - 1)
    if stream.next() <= 0.5:
        gamma_v = c.owner.get(v)
        if gamma_v is not None:
            c.remove(gamma_v)
        return c, 0
    p, work = s.draw(v, stream)
    if p is not None:
        c.try_insert(p)
    return c, work


def step_budget(n: int, epsilon: float, theta: float = DEFAULT_THETA) -> int:
    """Path-coupling step count ``ceil(2n/(1-theta) * ln(2n/epsilon))``."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.ceil(2 * n / (1 - theta) * math.log(2 * n / epsilon))


def work_cap(n: int, epsilon: float, cap_const: float = DEFAULT_CAP_CONST) -> float:
    return cap_const * n * math.log(2 * n / epsilon)


@dataclass
class ChainRun:
    steps_taken: int
    work_units: int
    enumerated: int
    truncated: bool
    final: Configuration
    seed: Optional[int]


def run_chain(m: PolymerModel, epsilon: float, seed=None, theta: float = DEFAULT_THETA,
              cap_const: float = DEFAULT_CAP_CONST, sampler: Optional[NuSampler] = None,
              steps: Optional[int] = None) -> ChainRun:
    """Run polymer dynamics from the empty configuration for an epsilon-approximate sample.

    Work is one unit per step plus every polymer enumerated by the
    sampler.  If it exceeds ``cap_const * n * ln(2n/epsilon)`` the run stops
    and returns the empty configuration flagged as truncated.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    s = sampler or NuSampler(m)
    total = step_budget(m.n, epsilon / 2, theta) if steps is None else steps
    cap = work_cap(m.n, epsilon, cap_const)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    stream = UniformStream(rng)
    c = Configuration(m.host)
    work = enumerated = 0
    for t in range(total):
        c, w = step(c, m, s, stream)
        enumerated += w
        work += 1 + w
        if work > cap:
            return ChainRun(t + 1, work, enumerated, True, Configuration(m.host),
                            seed if isinstance(seed, int) else None)
    return ChainRun(total, work, enumerated, False, c, seed if isinstance(seed, int) else None)
