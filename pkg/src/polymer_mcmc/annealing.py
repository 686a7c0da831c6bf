"""Approximate counting of the polymer partition function by simulated annealing.

The weights are tempered by ``exp(-rho |gamma|)`` along the fixed schedule
``rho_i = i/n``.  Each ratio ``Z(rho_{i+1})/Z(rho_i)`` is the mean of
``W_i = exp(-|Gamma_i|/n)`` under the Gibbs law at ``rho_i``, and the product
of ratios telescopes down to ``1/Z(0)`` because ``Z(rho_ell)`` is within
``e^{epsilon/2}`` of one.

Three interchangeable sampling backends produce the ``ell * m`` draws:

``scalar``  one :func:`run_chain` per draw (any graph size)
``batch``   all chains of a stage advanced together with numpy (n <= 64)
``kernel``  the exact output law of the chain after its step budget, from
            the full transition matrix; the summed sizes are then drawn from
            their exact multinomial law.  Same output distribution as the
            other two (ignoring the work cap), at a cost independent of m.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .batch import MAX_BATCH_VERTICES, PolymerCatalogue, run_grouped_batch
from .dynamics import DEFAULT_CAP_CONST, DEFAULT_THETA, NuSampler, run_chain, step_budget
from .polymers import DEFAULT_NODE_BUDGET, Polymer, PolymerModel

log = logging.getLogger(__name__)

MEDIAN_CONST = 12
BATCH_CHUNK = 250_000
BATCH_POLYMER_LIMIT = 20_000
KERNEL_SWITCH_DRAWS = 5e8
KERNEL_STATE_LIMIT = 2000


class DegenerateEstimateError(ArithmeticError):
    """The sample mean of W vanished; reported instead of clamping."""


class TemperedModel(PolymerModel):
    """The base model with every weight multiplied by ``exp(-rho |gamma|)``."""

    def __init__(self, base: PolymerModel, rho: float):
        if rho < 0:
            raise ValueError("rho must be >= 0")
        self.base = base
        self.rho = rho
        self.host = base.host
        self.q = base.q
        self.ground = base.ground
        self.max_size = base.max_size
        self.eligible = base.eligible
        self.tau_hint = None if base.tau_hint is None else base.tau_hint + rho

    def is_allowed(self, p: Polymer) -> bool:
        return self.base.is_allowed(p)

    def log_weight(self, p: Polymer) -> float:
        return self.base.log_weight(p) - self.rho * p.size

    def polymers_at(self, v: int, k: int) -> list[Polymer]:
        return self.base.polymers_at(v, k)

    def all_polymers(self, k=None, budget: int = DEFAULT_NODE_BUDGET) -> list[Polymer]:
        return self.base.all_polymers(k, budget)


def tempered_model(m: PolymerModel, rho: float) -> PolymerModel:
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if rho == 0:
        return m
    return TemperedModel(m, rho)


@dataclass
class AnnealingSchedule:
    n: int
    epsilon: float
    ell: int
    m: int
    q: int
    delta: int

    @classmethod
    def for_model(cls, model: PolymerModel, epsilon: float) -> "AnnealingSchedule":
        return cls.build(model.n, model.q, model.host.max_degree, epsilon)

    @classmethod
    def build(cls, n: int, q: int, delta: int, epsilon: float) -> "AnnealingSchedule":
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if n < 1:
            raise ValueError("need at least one vertex")
        qd = max((q - 1) * max(delta, 1), 1)
        ell = math.ceil(n * math.log(4 * math.e * qd * n / epsilon))
        m = math.ceil(64 / epsilon ** 2)
        return cls(n, epsilon, ell, m, q, delta)

    @property
    def rhos(self) -> np.ndarray:
        return np.arange(self.ell + 1) / self.n

    @property
    def sample_accuracy(self) -> float:
        """Per-draw TV accuracy ``1/(8 ell m)``."""
        return 1.0 / (8 * self.ell * self.m)

    @property
    def chain_steps(self) -> int:
        return step_budget(self.n, self.sample_accuracy / 2, DEFAULT_THETA)

    def as_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "ell": self.ell, "m": self.m,
                "q": self.q, "delta": self.delta}


@dataclass
class EstimateReport:
    log_z_hat: float
    schedule: Optional[AnnealingSchedule]
    seed: Optional[int]
    amplification: int = 1
    failure_budget: Optional[float] = None
    backend: str = "scalar"
    work_units: int = 0
    truncated_runs: int = 0
    trial_logs: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.log_z_hat):
            raise DegenerateEstimateError(f"non-finite log estimate {self.log_z_hat}")

    @property
    def z_hat(self) -> float:
        return math.exp(self.log_z_hat)

    def as_dict(self) -> dict:
        return {"z_hat": self.z_hat, "log_z_hat": self.log_z_hat,
                "schedule": self.schedule.as_dict() if self.schedule else None,
                "seed": self.seed, "amplification": self.amplification,
                "failure_budget": self.failure_budget, "backend": self.backend,
                "work_units": self.work_units, "truncated_runs": self.truncated_runs,
                "warnings": list(self.warnings), **self.extras}


def median_trials(delta: float) -> int:
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.ceil(MEDIAN_CONST * math.log(1 / delta))


# ----------------------------------------------------------------------------
# backends: each returns the per-sample totals S_j = sum_i |Gamma_i^{(j)}|
# (or, for the kernel backend, the multinomial counts of every total)
# ----------------------------------------------------------------------------

def _stage_seeds(seed, ell: int) -> list[np.random.SeedSequence]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(ell)


def _scalar_totals(model, sch, seeds, theta, cap_const):
    totals = np.zeros(sch.m, dtype=np.int64)
    work = trunc = 0
    for i, ss in enumerate(seeds):
        tm = tempered_model(model, i / sch.n)
        sampler = NuSampler(tm)
        for j, child in enumerate(ss.spawn(sch.m)):
            run = run_chain(tm, sch.sample_accuracy, seed=np.random.default_rng(child),
                            theta=theta, cap_const=cap_const, sampler=sampler)
            totals[j] += run.final.total_size()
            work += run.work_units
            trunc += run.truncated
    return totals, work, trunc


def _batch_totals(model, sch, seeds, theta, cap_const):
    """All stages at once: row ``i*m + j`` is sample ``j`` of stage ``i``."""
    polys = model.all_polymers()
    cats = [PolymerCatalogue(tempered_model(model, i / sch.n), polymers=polys)
            for i in range(sch.ell)]
    totals = np.zeros(sch.m, dtype=np.int64)
    work = trunc = 0
    rng = np.random.default_rng(seeds[0])
    per_chunk = max(1, BATCH_CHUNK // sch.ell)
    for start in range(0, sch.m, per_chunk):
        size = min(per_chunk, sch.m - start)
        group = np.repeat(np.arange(sch.ell), size)
        run = run_grouped_batch(cats, group, sch.sample_accuracy, rng, theta, cap_const)
        totals[start:start + size] += run.total_sizes.reshape(sch.ell, size).sum(axis=0)
        work += int(run.work_units.sum())
        trunc += int(run.truncated.sum())
    return totals, work, trunc


def stage_size_law(model: PolymerModel, rho: float, steps: int, state_limit: int = 5000) -> np.ndarray:
    """Exact law of ``|Gamma|`` after ``steps`` chain steps from empty at temperature ``rho``."""
    from .oracle import distribution_after, exact_kernel  # oracle imports this module's deps

    tm = tempered_model(model, rho)
    states, P = exact_kernel(tm, "polymer", state_limit=state_limit)
    x = distribution_after(P, states.index(()), steps)
    sizes = np.array([sum(p.size for p in s) for s in states])
    law = np.bincount(sizes, weights=x, minlength=1)
    return np.clip(law, 0, None) / law.sum()


def total_size_law(model: PolymerModel, sch: AnnealingSchedule, theta: float = DEFAULT_THETA,
                   state_limit: int = 5000) -> np.ndarray:
    """Exact law of ``S = sum_i |Gamma_i|`` for one annealing sample (convolution over stages)."""
    steps = step_budget(sch.n, sch.sample_accuracy / 2, theta)
    law = np.ones(1)
    for i in range(sch.ell):
        law = np.convolve(law, stage_size_law(model, i / sch.n, steps, state_limit))
    return law


def _log_mean_w(totals: np.ndarray, n: int) -> float:
    return float(logsumexp(-totals / n) - math.log(len(totals)))


def estimate_partition(model: PolymerModel, epsilon: float, seed=None, backend: str = "auto",
                       theta: float = DEFAULT_THETA, cap_const: float = DEFAULT_CAP_CONST,
                       schedule: Optional[AnnealingSchedule] = None,
                       size_law: Optional[np.ndarray] = None) -> EstimateReport:
    """Annealing estimate of ``Z(G)``; ``Pr[|log Z_hat - log Z| <= epsilon] >= 3/4``.

    ``size_law`` lets repeated kernel-backend calls share the (deterministic)
    exact law of the summed sizes.
    """
    sch = schedule or AnnealingSchedule.for_model(model, epsilon)
    notes = []
    if model.tau_hint is not None and model.tau_hint < 0:
        notes.append("weights may exceed 1; the endpoint bound on Z(rho_ell) is not guaranteed")
        warnings.warn(notes[-1])
    if model.max_size < 1:
        # no polymers at all: every W_i is exactly one
        return EstimateReport(0.0, sch, seed if isinstance(seed, (int, np.integer)) else None,
                              backend="empty", warnings=notes)
    if backend == "auto":
        backend = _pick_backend(model, sch)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seed_int = seed if isinstance(seed, (int, np.integer)) else None
    if backend == "kernel":
        law = size_law if size_law is not None else total_size_law(model, sch, theta)
        rng = np.random.default_rng(ss)
        counts = rng.multinomial(sch.m, law / law.sum())
        s = np.flatnonzero(counts)
        log_mean = float(logsumexp(np.log(counts[s]) - s / sch.n) - math.log(sch.m))
        steps = sch.chain_steps
        return EstimateReport(-log_mean, sch, seed_int, backend="kernel",
                              work_units=sch.ell * sch.m * steps, warnings=notes)
    seeds = _stage_seeds(ss, sch.ell)
    if backend == "batch":
        totals, work, trunc = _batch_totals(model, sch, seeds, theta, cap_const)
    elif backend == "scalar":
        totals, work, trunc = _scalar_totals(model, sch, seeds, theta, cap_const)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    log_mean = _log_mean_w(totals, sch.n)
    if not math.isfinite(log_mean):
        raise DegenerateEstimateError("mean of W underflowed")
    if trunc:
        notes.append(f"{trunc} chain runs hit the work cap")
    return EstimateReport(-log_mean, sch, seed_int, backend=backend, work_units=work,
                          truncated_runs=trunc, warnings=notes)


def _pick_backend(model: PolymerModel, sch: AnnealingSchedule) -> str:
    """batch for small graphs, kernel when the literal run is huge but Omega is tiny."""
    if model.n > MAX_BATCH_VERTICES:
        return "scalar"
    try:
        count = len(model.all_polymers(budget=BATCH_POLYMER_LIMIT * 4))
    except Exception:
        return "scalar"
    if count > BATCH_POLYMER_LIMIT:
        return "scalar"
    if sch.ell * sch.m * sch.chain_steps > KERNEL_SWITCH_DRAWS:
        from .oracle import OracleSizeError, enumerate_configurations

        try:
            enumerate_configurations(model, budget=KERNEL_STATE_LIMIT)
            return "kernel"
        except OracleSizeError:
            pass
    return "batch"


def estimate_with_median(model: PolymerModel, epsilon: float, delta: float, seed=None,
                         backend: str = "auto", **kwargs) -> EstimateReport:
    """Median of ``ceil(12 ln(1/delta))`` independent estimates (failure probability <= delta)."""
    t = median_trials(delta)
    sch = kwargs.pop("schedule", None) or AnnealingSchedule.for_model(model, epsilon)
    if backend == "auto":
        backend = _pick_backend(model, sch)
    if model.max_size < 1:
        backend = "empty"
    if backend == "kernel" and kwargs.get("size_law") is None:
        kwargs["size_law"] = total_size_law(model, sch, kwargs.get("theta", DEFAULT_THETA))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    reps = [estimate_partition(model, epsilon, child, backend=backend, schedule=sch, **kwargs)
            for child in ss.spawn(t)]
    logs = [r.log_z_hat for r in reps]
    notes = sorted({w for r in reps for w in r.warnings})
    return EstimateReport(float(np.median(logs)), sch,
                          seed if isinstance(seed, (int, np.integer)) else None,
                          amplification=t, failure_budget=delta, backend=backend,
                          work_units=sum(r.work_units for r in reps),
                          truncated_runs=sum(r.truncated_runs for r in reps),
                          trial_logs=logs, warnings=notes)
