"""Greedy nested fusion of n lists into one, one query at a time.

Each cycle estimates theta for every pair of current lists from Kendall's
tau, fuses the pair with the largest theta using the chosen kernel, and
puts the fused scores back as a new list. After ``n - 1`` cycles one list
remains. Fused scores are reinserted as they are (no re-normalization);
tau only sees their order, so that is harmless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .concordance import EPS_THETA, THETA_MAX, clamp_theta, list_tau, raw_theta
from .errors import ContractError
from .kernels import BASE_FAMILY, COPULAS, EPS_P, KERNELS, apply_kernel, consistency, modulate_theta
from .marginals import MarginalTable
from .runs import query_length

DEFAULT_TAU_THRESHOLD = 0.4


@dataclass(frozen=True)
class QueryContext:
    """What the relevance estimate needs to know about one query.

    ``match_counts`` maps doc_id to the number of distinct query tokens
    found in the document; missing documents count as 0 matches.
    """

    query_length: int
    match_counts: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_maps(cls, query_id, queries, term_matches=None):
        if query_id not in queries:
            raise ContractError(f"no query text for query {query_id}")
        length = query_length(queries[query_id])
        if length < 1:
            raise ContractError(f"query {query_id} has no tokens")
        counts = {}
        if term_matches:
            counts = {d: c for (q, d), c in term_matches.items() if q == query_id}
        return cls(length, counts)

    def coverage(self, doc_ids) -> np.ndarray:
        counts = np.array([self.match_counts.get(d, 0) for d in doc_ids], dtype=np.float64)
        return counts / self.query_length


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    left: str
    right: str
    fused_id: str
    tau: float
    theta_raw: float
    theta_g: float
    theta_p_min: float
    theta_p_median: float
    theta_p_max: float


@dataclass(frozen=True)
class FusionTrace:
    query_id: str
    kernel: str
    cycles: tuple[CycleRecord, ...]


@dataclass(frozen=True)
class FusedList:
    """Final ranking: ``doc_ids`` best first, ``scores`` aligned."""

    query_id: str
    method: str
    doc_ids: tuple[str, ...]
    scores: np.ndarray

    def __len__(self):
        return len(self.doc_ids)

    def ranked(self) -> list[tuple[str, float, int]]:
        return [(d, float(s), r) for r, (d, s) in enumerate(zip(self.doc_ids, self.scores), start=1)]


def rank_scores(query_id, method, doc_ids, scores) -> FusedList:
    """Sort by score descending, ties by doc_id ascending."""
    scores = np.asarray(scores, dtype=np.float64)
    names = np.asarray(doc_ids, dtype=object)
    by_name = np.argsort(names, kind="stable")
    order = by_name[np.argsort(-scores[by_name], kind="stable")]
    return FusedList(query_id, method, tuple(names[order].tolist()), scores[order])


def _check_tables(marginals: Sequence[MarginalTable]):
    if len(marginals) < 2:
        raise ContractError(f"need at least 2 lists to fuse, got {len(marginals)}")
    first = marginals[0]
    for t in marginals[1:]:
        if t.doc_ids != first.doc_ids:
            raise ContractError("marginal tables do not share the same document universe")
        if t.query_id != first.query_id:
            raise ContractError("marginal tables belong to different queries")
    ids = [t.source for t in marginals]
    if len(set(ids)) != len(ids):
        raise ContractError(f"list ids must be unique, got {ids}")


def nested_fuse(
    marginals: Sequence[MarginalTable],
    kernel: str,
    context: QueryContext | None = None,
    *,
    eps_theta: float = EPS_THETA,
    theta_max: float = THETA_MAX,
    eps_p: float = EPS_P,
    rel_d_override: float | None = None,
) -> tuple[FusedList, FusionTrace]:
    """Fuse ``marginals`` pairwise, most concordant pair first.

    ``context`` is required for the ``pf``/``el`` kernels unless
    ``rel_d_override`` fixes every document's relevance to a constant.
    Equal thetas are resolved by the lexicographically smallest id pair.
    """
    if kernel not in KERNELS:
        raise ContractError(f"unknown kernel {kernel!r}")
    _check_tables(marginals)
    family = BASE_FAMILY[kernel]
    is_copula = kernel in COPULAS
    doc_ids = marginals[0].doc_ids
    query_id = marginals[0].query_id
    if not is_copula and rel_d_override is None:
        if context is None:
            raise ContractError(f"kernel {kernel!r} needs a query context")
        query_cov = context.coverage(doc_ids)

    current = {t.source: np.asarray(t.u, dtype=np.float64) for t in marginals}
    taus: dict[tuple[str, str], Fraction] = {}
    records = []
    cycle = 0
    while len(current) > 1:
        cycle += 1
        best = None
        for a, b in combinations(sorted(current), 2):
            if (a, b) not in taus:
                taus[(a, b)] = list_tau(current[a], current[b])
            theta = raw_theta(taus[(a, b)], family)
            if best is None or theta > best[0]:
                best = (theta, a, b)
        theta_raw, a, b = best
        theta_g = clamp_theta(theta_raw, family, eps_theta, theta_max)
        u, v = current.pop(a), current.pop(b)
        if is_copula:
            theta_p = np.full(u.shape, theta_g)
        else:
            if rel_d_override is not None:
                rel_d = np.full(u.shape, float(rel_d_override))
            else:
                rel_d = query_cov + consistency(u, v)
            theta_p = modulate_theta(theta_g, rel_d, eps_p).theta_p
        fused = apply_kernel(kernel, u, v, theta_g, theta_p)
        fused_id = f"fused:{cycle}"
        current[fused_id] = fused
        records.append(
            CycleRecord(
                cycle=cycle,
                left=a,
                right=b,
                fused_id=fused_id,
                tau=float(taus[(a, b)]),
                theta_raw=theta_raw,
                theta_g=theta_g,
                theta_p_min=float(np.min(theta_p)),
                theta_p_median=float(np.median(theta_p)),
                theta_p_max=float(np.max(theta_p)),
            )
        )
        # taus involving the consumed lists are never needed again
        taus = {k: t for k, t in taus.items() if a not in k and b not in k}

    (final,) = current.values()
    return rank_scores(query_id, kernel, doc_ids, final), FusionTrace(query_id, kernel, tuple(records))


@dataclass(frozen=True)
class ConstraintCheck:
    cycle: int
    inner_theta_g: float
    outer_theta_p: float
    satisfied: bool


@dataclass(frozen=True)
class NestingReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def violations(self) -> list[int]:
        return [c.cycle for c in self.checks if not c.satisfied]


def check_nesting_constraint(trace: FusionTrace) -> NestingReport:
    """Check, for each cycle after the first, that the earlier (inner) cycle's
    theta_g is at least the later cycle's largest theta_p.

    Purely diagnostic: greedy pair selection does not enforce it.
    """
    checks = []
    for inner, outer in zip(trace.cycles, trace.cycles[1:]):
        checks.append(
            ConstraintCheck(
                cycle=outer.cycle,
                inner_theta_g=inner.theta_g,
                outer_theta_p=outer.theta_p_max,
                satisfied=inner.theta_g >= outer.theta_p_max,
            )
        )
    return NestingReport(tuple(checks))


class Route(str, enum.Enum):
    USE_LINEAR = "USE_LINEAR"
    USE_NONLINEAR = "USE_NONLINEAR"


def mean_pairwise_tau(marginals: Sequence[MarginalTable]) -> Fraction:
    _check_tables(marginals)
    taus = [list_tau(a.u, b.u) for a, b in combinations(marginals, 2)]
    return sum(taus, Fraction(0)) / len(taus)


def tau_fallback_gate(marginals: Sequence[MarginalTable], threshold: float = DEFAULT_TAU_THRESHOLD) -> Route:
    """Route a query to linear fusion when its lists agree too little.

    Mean pairwise tau ``<= threshold`` gives :attr:`Route.USE_LINEAR`. The
    comparison is exact, with ``threshold`` read as its shortest decimal
    form (so 0.4 means 2/5).
    """
    mean = mean_pairwise_tau(marginals)
    limit = Fraction(repr(float(threshold)))
    return Route.USE_LINEAR if mean <= limit else Route.USE_NONLINEAR


TRACE_HEADER = "qid\tcycle\tleft\tright\tfused\ttau\ttheta_raw\ttheta_g\ttheta_p_min\ttheta_p_median\ttheta_p_max\n"


def format_trace(traces: Sequence[FusionTrace]) -> str:
    lines = [TRACE_HEADER]
    for tr in traces:
        for c in tr.cycles:
            lines.append(
                f"{tr.query_id}\t{c.cycle}\t{c.left}\t{c.right}\t{c.fused_id}\t{c.tau!r}\t{c.theta_raw!r}\t"
                f"{c.theta_g!r}\t{c.theta_p_min!r}\t{c.theta_p_median!r}\t{c.theta_p_max!r}\n"
            )
    return "".join(lines)
