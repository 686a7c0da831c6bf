"""Command-line interface.

Every command prints one run record (JSON or ``key: value`` text).  Exit
status: 0 ok, 2 usage, 3 validation failure, 4 hypothesis failure under
``--strict``.  Budget knobs can be overridden through the environment:
``POLYMER_MCMC_CAP_CONST`` (chain work cap constant) and
``POLYMER_MCMC_GLAUBER_CEILING`` (largest default Glauber budget).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import oracle
from .annealing import estimate_partition, estimate_with_median
from .dynamics import DEFAULT_CAP_CONST, InvalidModelError, run_chain
from .glauber import (DEFAULT_CEILING, GlauberBudgetError, hardcore_eta, hc_deviation_model,
                      potts_eta, run_restricted_glauber, truncate)
from .graph import (GraphFormatError, GraphValidationError, HostGraph, MissingBipartitionError,
                    check_bipartite_vertex_expansion, check_edge_expansion, format_graph,
                    generate_random_regular_bipartite, load_graph, save_graph)
from .hardcore import HardcoreParams, count_hardcore, hc_polymer_model, sample_hardcore
from .polymers import (EnumerationBudgetError, HardcoreVertexModel, PolymerModel,
                       check_kotecky_preiss, check_mixing_condition, check_sampling_condition,
                       decay_model, sampling_threshold)
from .potts import PottsParams, count_potts, potts_polymer_model, sample_potts

SCHEMA_VERSION = 1
EXIT_USAGE, EXIT_VALIDATION, EXIT_HYPOTHESIS = 2, 3, 4


class HypothesisFailure(Exception):
    pass


@dataclass
class RunRecord:
    command: str
    params: dict
    seed: Optional[int]
    hypotheses: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0
    work_units: Optional[int] = None
    argv: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=_jsonable)

    def to_text(self) -> str:
        lines = [f"command: {self.command}"]
        for k, v in self.outputs.items():
            lines.append(f"{k}: {_fmt(v)}")
        for k, v in self.hypotheses.items():
            lines.append(f"hypothesis.{k}: {_fmt(v)}")
        if self.work_units is not None:
            lines.append(f"work_units: {self.work_units}")
        lines.append(f"wall_time: {self.wall_time:.3f}s")
        return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v, default=_jsonable)
    return str(v)


def _cap_const() -> float:
    return float(os.environ.get("POLYMER_MCMC_CAP_CONST", DEFAULT_CAP_CONST))


def _glauber_ceiling() -> float:
    return float(os.environ.get("POLYMER_MCMC_GLAUBER_CEILING", DEFAULT_CEILING))


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, graph_required: bool = True) -> None:
    p.add_argument("--graph", required=graph_required, help="graph file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--out", choices=("json", "text"), default="text")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--side", type=int, default=0, choices=(0, 1))
    p.add_argument("--cap", type=int, help="polymer size cap M")
    p.add_argument("--kmax", type=int, default=3)
    p.add_argument("--strict", action="store_true", help="fail (exit 4) when hypotheses fail")
    p.add_argument("--threads", type=int, default=1)


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="potts",
                   choices=("potts", "hardcore", "hardcore-vertex", "deviation", "decay"))
    p.add_argument("--tau", type=float, help="decay rate for --model decay")
    p.add_argument("--ground", type=int, default=0, help="ground colour for --model potts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polymer-mcmc",
                                 description="Polymer-model samplers and approximate counters")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="random regular bipartite graph")
    _common(p, graph_required=False)
    p.add_argument("--n-per-side", type=int, required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--output", help="write the graph file here")

    p = sub.add_parser("check-expansion", help="exact expansion check")
    _common(p)
    p.add_argument("--kind", choices=("edge", "bipartite"), default="edge")

    p = sub.add_parser("check-conditions", help="sampling / Kotecky-Preiss / mixing checks")
    _common(p)
    _model_args(p)
    p.add_argument("--theta", type=float, default=1 / math.e)

    p = sub.add_parser("polymer-sample", help="polymer dynamics sample")
    _common(p)
    _model_args(p)
    p.add_argument("--runs", type=int, default=1)

    p = sub.add_parser("anneal-count", help="annealing estimate of Z")
    _common(p)
    _model_args(p)
    p.add_argument("--delta", type=float, help="median amplification failure budget")
    p.add_argument("--backend", default="auto", choices=("auto", "scalar", "batch", "kernel"))

    for name in ("sample-potts", "count-potts", "sample-hardcore", "count-hardcore"):
        p = sub.add_parser(name)
        _common(p)
        if name.startswith("count"):
            p.add_argument("--backend", default="auto",
                           choices=("auto", "scalar", "batch", "kernel"))

    p = sub.add_parser("glauber", help="restricted Glauber dynamics")
    _common(p)
    p.add_argument("--model", default="potts", choices=("potts", "hardcore"))
    p.add_argument("--steps", type=int, help="override the default step budget")

    p = sub.add_parser("oracle", help="brute-force partition functions")
    _common(p)
    _model_args(p)
    p.add_argument("target", choices=("hardcore", "potts", "polymer"))
    return ap


# ----------------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------------

def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            flag = "--lambda" if n == "lam" else f"--{n}"
            raise ValueError(f"{flag} is required here")


def _potts_params(args) -> PottsParams:
    _need(args, "beta")
    return PottsParams(args.q, args.beta, args.alpha, getattr(args, "ground", 0), args.cap)


def _hc_params(args) -> HardcoreParams:
    _need(args, "lam")
    return HardcoreParams(args.lam, args.alpha)


def build_model(args, g: HostGraph) -> PolymerModel:
    kind = args.model
    if kind == "potts":
        return potts_polymer_model(g, _potts_params(args))
    if kind == "hardcore":
        return hc_polymer_model(g, _hc_params(args), args.side)
    if kind == "hardcore-vertex":
        _need(args, "lam")
        return HardcoreVertexModel(g, args.lam)
    if kind == "deviation":
        m = hc_deviation_model(g, _hc_params(args), args.side)
        return truncate(m, args.cap) if args.cap else m
    if kind == "decay":
        _need(args, "tau")
        return decay_model(g, args.tau, args.q, args.cap)
    raise ValueError(f"unknown model {kind}")


def _model_hypotheses(args, g: HostGraph) -> dict:
    hyp = {}
    if args.alpha is not None:
        if getattr(args, "model", None) in ("hardcore", "deviation") or args.command.endswith("hardcore"):
            rep = check_bipartite_vertex_expansion(g, args.alpha)
        else:
            rep = check_edge_expansion(g, args.alpha)
        hyp["expansion_verified"] = rep.holds if rep.verified == "exact" else None
        if rep.witness is not None:
            hyp["expansion_witness"] = list(rep.witness)
    return hyp


def _config_out(conf) -> list:
    return [[list(p.support), list(p.spins)] for p in conf.key()]


def _polymer_run(payload):
    argv, seed = payload
    args = build_parser().parse_args(argv)
    g = load_graph(args.graph)
    m = build_model(args, g)
    run = run_chain(m, args.epsilon, seed=seed, cap_const=_cap_const())
    return _config_out(run.final), run.work_units, run.truncated


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmd_gen_graph(args, rec: RunRecord) -> None:
    g = generate_random_regular_bipartite(args.n_per_side, args.delta, args.seed)
    if args.output:
        save_graph(g, args.output)
        rec.outputs["path"] = args.output
    rec.outputs["graph"] = format_graph(g)
    rec.outputs.update(n=g.n, edges=g.num_edges, max_degree=g.max_degree)


def cmd_check_expansion(args, rec: RunRecord, g: HostGraph) -> None:
    _need(args, "alpha")
    if args.kind == "edge":
        rep = check_edge_expansion(g, args.alpha)
    else:
        rep = check_bipartite_vertex_expansion(g, args.alpha)
    rec.outputs.update(kind=rep.kind, alpha=rep.alpha, verified=rep.verified,
                       holds=rep.holds, witness=list(rep.witness) if rep.witness else None,
                       witness_side=rep.witness_side)
    rec.hypotheses["expansion_verified"] = rep.holds if rep.verified == "exact" else None


def cmd_check_conditions(args, rec: RunRecord, g: HostGraph) -> None:
    m = build_model(args, g)
    tau = m.tau_hint
    threshold = sampling_threshold(m.q, m.host.max_degree)
    if tau is None:
        tau = threshold
    reports = [check_sampling_condition(m, tau, args.kmax),
               check_kotecky_preiss(m, args.kmax),
               check_mixing_condition(m, args.theta, args.kmax)]
    rec.outputs["tau"] = tau
    rec.outputs["tau_threshold"] = threshold
    rec.outputs["conditions"] = [r.summary() for r in reports]
    rec.hypotheses["tau_above_threshold"] = tau >= threshold
    rec.hypotheses["conditions_hold"] = all(r.ok for r in reports)


def cmd_polymer_sample(args, rec: RunRecord, g: HostGraph) -> None:
    m = build_model(args, g)
    if args.runs == 1:
        run = run_chain(m, args.epsilon, seed=args.seed, cap_const=_cap_const())
        rec.outputs.update(configuration=_config_out(run.final), steps=run.steps_taken,
                           truncated=run.truncated, enumerated=run.enumerated)
        rec.work_units = run.work_units
        return
    seeds = [np.random.default_rng(s) for s in np.random.SeedSequence(args.seed).spawn(args.runs)]
    jobs = [(rec.argv, s) for s in seeds]
    if args.threads > 1:
        with ProcessPoolExecutor(args.threads) as pool:
            results = list(pool.map(_polymer_run, jobs))
    else:
        results = [_polymer_run(j) for j in jobs]
    rec.outputs["configurations"] = [r[0] for r in results]
    rec.outputs["truncated"] = sum(r[2] for r in results)
    rec.work_units = sum(r[1] for r in results)


def _estimate_out(rec: RunRecord, rep) -> None:
    d = rep.as_dict()
    rec.outputs.update({k: v for k, v in d.items() if k not in ("hypotheses", "seed")})
    rec.hypotheses.update(d.get("hypotheses", {}))
    rec.work_units = rep.work_units


def cmd_anneal_count(args, rec: RunRecord, g: HostGraph) -> None:
    m = build_model(args, g)
    if args.delta is not None:
        rep = estimate_with_median(m, args.epsilon, args.delta, args.seed, backend=args.backend,
                                   cap_const=_cap_const())
    else:
        rep = estimate_partition(m, args.epsilon, args.seed, backend=args.backend,
                                 cap_const=_cap_const())
    _estimate_out(rec, rep)


def cmd_sample_potts(args, rec: RunRecord, g: HostGraph) -> None:
    col = sample_potts(g, _potts_params(args), args.epsilon, args.seed)
    rec.outputs["colors"] = list(col.colors)
    meta = dict(col.meta)
    for k in ("alpha", "expansion_verified", "threshold_met"):
        rec.hypotheses[k] = meta.pop(k, None)
    rec.work_units = meta.pop("work_units", None)
    rec.outputs.update(meta)


def cmd_count_potts(args, rec: RunRecord, g: HostGraph) -> None:
    rep = count_potts(g, _potts_params(args), args.epsilon, args.seed, backend=args.backend,
                      diagnostics=True)
    _estimate_out(rec, rep)


def cmd_sample_hardcore(args, rec: RunRecord, g: HostGraph) -> None:
    ind = sample_hardcore(g, _hc_params(args), args.epsilon, args.seed)
    rec.outputs["members"] = list(ind.members)
    rec.outputs["valid"] = ind.is_valid(g)
    meta = dict(ind.meta)
    rec.hypotheses.update(meta.pop("hypotheses", {}))
    rec.outputs.update(meta)


def cmd_count_hardcore(args, rec: RunRecord, g: HostGraph) -> None:
    rep = count_hardcore(g, _hc_params(args), args.epsilon, args.seed, backend=args.backend)
    _estimate_out(rec, rep)
    if g.n <= 24:
        rec.outputs["exact_z"] = float(oracle.brute_hardcore_partition(g, args.lam))
        rec.outputs["relative_gap_log"] = rep.log_z_hat - math.log(rec.outputs["exact_z"])


def cmd_glauber(args, rec: RunRecord, g: HostGraph) -> None:
    if args.model == "potts":
        p = _potts_params(args)
        base = potts_polymer_model(g, p)
        eta = potts_eta(p.beta, g.max_degree)
    else:
        p = _hc_params(args)
        base = hc_deviation_model(g, p, args.side)
        eta = hardcore_eta(p.lam)
    m = truncate(base, args.cap or 1)
    try:
        run = run_restricted_glauber(m, args.epsilon, seed=args.seed, steps=args.steps, eta=eta,
                                     ceiling=_glauber_ceiling())
    except GlauberBudgetError as exc:
        raise ValueError(f"{exc}; pass --steps") from exc
    rec.outputs.update(configuration=_config_out(run.final), steps=run.steps_taken, eta=eta,
                       cap=m.max_size)
    rec.work_units = run.work_units


def cmd_oracle(args, rec: RunRecord, g: HostGraph) -> None:
    if args.target == "hardcore":
        _need(args, "lam")
        rec.outputs["Z"] = float(oracle.brute_hardcore_partition(g, args.lam))
    elif args.target == "potts":
        _need(args, "beta")
        rec.outputs["Z"] = oracle.brute_potts_partition(g, args.q, args.beta)
    else:
        m = build_model(args, g)
        z, dist = oracle.brute_polymer_partition(m)
        rec.outputs["Z"] = z
        rec.outputs["states"] = len(dist.states)


COMMANDS = {
    "check-expansion": cmd_check_expansion,
    "check-conditions": cmd_check_conditions,
    "polymer-sample": cmd_polymer_sample,
    "anneal-count": cmd_anneal_count,
    "sample-potts": cmd_sample_potts,
    "count-potts": cmd_count_potts,
    "sample-hardcore": cmd_sample_hardcore,
    "count-hardcore": cmd_count_hardcore,
    "glauber": cmd_glauber,
    "oracle": cmd_oracle,
}


def run(argv: Sequence[str]) -> tuple[int, RunRecord]:
    """Parse and execute; returns ``(exit status, record)``.  Usage errors raise SystemExit(2)."""
    argv = list(argv)
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "seed", "out", "threads")}
    rec = RunRecord(args.command, params, args.seed, argv=argv)
    t0 = time.perf_counter()
    if args.command == "gen-graph":
        cmd_gen_graph(args, rec)
    else:
        g = load_graph(args.graph)
        rec.hypotheses.update(_model_hypotheses(args, g))
        COMMANDS[args.command](args, rec, g)
    rec.wall_time = time.perf_counter() - t0
    status = 0
    if args.strict and any(v is False for v in rec.hypotheses.values()):
        status = EXIT_HYPOTHESIS
    return status, rec


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        status, rec = run(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    except (GraphFormatError, GraphValidationError, MissingBipartitionError, InvalidModelError,
            EnumerationBudgetError, oracle.OracleSizeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = rec.to_json() if "--out" in argv and argv[argv.index("--out") + 1] == "json" else rec.to_text()
    print(out)
    if status == EXIT_HYPOTHESIS:
        print("error: hypothesis check failed under --strict", file=sys.stderr)
    return status
