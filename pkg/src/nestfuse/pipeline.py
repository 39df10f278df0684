"""Per-query orchestration: universe -> marginals -> chosen fusion method."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import baselines
from .concordance import EPS_THETA, THETA_MAX
from .errors import ConfigError, ContractError, SkipQuery
from .kernels import COPULAS, EPS_P, KERNELS
from .marginals import universe_marginals
from .nested import FusedList, FusionTrace, QueryContext, Route, mean_pairwise_tau, nested_fuse, tau_fallback_gate
from .runs import DocumentUniverse, RunList, all_query_ids, build_universe

log = logging.getLogger(__name__)

NESTED_METHODS = {"nested-clayton": "clayton", "nested-gumbel": "gumbel", "nfc-pf": "pf", "nfc-el": "el"}
BASELINE_METHODS = ("combmnz", "isr", "rbc")
PAIRWISE_PREFIX = "pairwise-avg:"


def method_names() -> list[str]:
    return list(NESTED_METHODS) + list(BASELINE_METHODS) + [PAIRWISE_PREFIX + k for k in KERNELS]


@dataclass(frozen=True)
class FusionConfig:
    method: str
    tau_fallback_threshold: float | None = None
    rbc_phi: float = baselines.DEFAULT_RBC_PHI
    theta_max: float = THETA_MAX
    eps_theta: float = EPS_THETA
    eps_p: float = EPS_P

    def __post_init__(self):
        if self.method not in method_names():
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(method_names())}")
        baselines.check_phi(self.rbc_phi)
        if not self.theta_max > 1.0:
            raise ConfigError(f"theta_max must exceed 1, got {self.theta_max}")
        if not 0.0 < self.eps_theta < self.theta_max:
            raise ConfigError(f"epsilon_theta must lie in (0, theta_max), got {self.eps_theta}")
        if not self.eps_p > 0.0:
            raise ConfigError(f"epsilon_p must be positive, got {self.eps_p}")
        t = self.tau_fallback_threshold
        if t is not None and not -1.0 <= t <= 1.0:
            raise ConfigError(f"tau fallback threshold must lie in [-1, 1], got {t}")

    @property
    def kernel(self) -> str | None:
        if self.method in NESTED_METHODS:
            return NESTED_METHODS[self.method]
        if self.method.startswith(PAIRWISE_PREFIX):
            return self.method[len(PAIRWISE_PREFIX):]
        return None

    @property
    def needs_queries(self) -> bool:
        return self.kernel is not None and self.kernel not in COPULAS


@dataclass(frozen=True)
class QueryOutcome:
    query_id: str
    action: str  # "fused", "fallback-combmnz" or "skipped"
    detail: str
    fused: FusedList | None = None
    trace: FusionTrace | None = None


def fuse_universe(universe: DocumentUniverse, config: FusionConfig, context: QueryContext | None = None) -> QueryOutcome:
    marginals = universe_marginals(universe)
    qid = universe.query_id
    if config.tau_fallback_threshold is not None:
        route = tau_fallback_gate(marginals, config.tau_fallback_threshold)
        if route is Route.USE_LINEAR:
            mean = float(mean_pairwise_tau(marginals))
            return QueryOutcome(
                qid, "fallback-combmnz", f"mean_tau={mean!r}", baselines.comb_mnz(marginals, universe.native)
            )
    params = dict(eps_theta=config.eps_theta, theta_max=config.theta_max, eps_p=config.eps_p)
    m = config.method
    if m in NESTED_METHODS:
        fused, trace = nested_fuse(marginals, NESTED_METHODS[m], context, **params)
        return QueryOutcome(qid, "fused", f"cycles={len(trace.cycles)}", fused, trace)
    if m == "combmnz":
        fused = baselines.comb_mnz(marginals, universe.native)
    elif m == "isr":
        fused = baselines.isr(universe)
    elif m == "rbc":
        fused = baselines.rbc(universe, config.rbc_phi)
    else:
        fused = baselines.pairwise_average(marginals, config.kernel, context, **params)
    return QueryOutcome(qid, "fused", f"lists={universe.n}", fused)


def _fuse_job(args):
    universe, config, context = args
    return fuse_universe(universe, config, context)


def fuse_runs(
    runs: Sequence[RunList],
    config: FusionConfig,
    queries: Mapping[str, str] | None = None,
    term_matches: Mapping[tuple[str, str], int] | None = None,
    jobs: int = 1,
) -> list[QueryOutcome]:
    """Fuse every query found in ``runs``; outcomes come back in query-id order."""
    ids = [r.system_id for r in runs]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"run tags must be unique, got {ids}")
    if config.needs_queries and queries is None:
        raise ConfigError(f"method {config.method} needs a queries file")
    outcomes: dict[str, QueryOutcome] = {}
    work = []
    for qid in all_query_ids(runs):
        try:
            universe = build_universe(runs, qid)
        except SkipQuery as exc:
            outcomes[qid] = QueryOutcome(qid, "skipped", exc.reason)
            continue
        context = None
        if config.needs_queries:
            try:
                context = QueryContext.from_maps(qid, queries, term_matches)
            except ContractError as exc:
                outcomes[qid] = QueryOutcome(qid, "skipped", str(exc))
                continue
        work.append((universe, config, context))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fuse_job, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_fuse_job(w) for w in work]
    for res in results:
        outcomes[res.query_id] = res
    for qid in sorted(outcomes):
        out = outcomes[qid]
        if out.action == "skipped":
            log.warning("query %s skipped: %s", qid, out.detail)
        elif out.action == "fallback-combmnz":
            log.info("query %s fused with CombMNZ instead of %s (%s)", qid, config.method, out.detail)
    return [outcomes[q] for q in sorted(outcomes)]


def format_fused_run(outcomes: Sequence[QueryOutcome], tag: str) -> str:
    lines = []
    for out in outcomes:
        if out.fused is None:
            continue
        for doc_id, score, rank in out.fused.ranked():
            lines.append(f"{out.query_id} Q0 {doc_id} {rank} {score!r} {tag}\n")
    return "".join(lines)


def format_report(outcomes: Sequence[QueryOutcome], unretrieved: Sequence[str] = ()) -> str:
    lines = ["qid\taction\tdetail\n"]
    rows = [(o.query_id, o.action, o.detail) for o in outcomes]
    rows += [(q, "skipped", "judged but retrieved by no run") for q in unretrieved]
    for qid, action, detail in sorted(rows):
        lines.append(f"{qid}\t{action}\t{detail}\n")
    return "".join(lines)
