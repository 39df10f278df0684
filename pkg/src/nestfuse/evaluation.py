"""Retrieval metrics (AP, RR, P@n) and a paired t-test between two runs.

Conventions follow trec_eval: AP divides by the number of relevant
documents in the qrels, relevance is ``grade > 0``, and P@n divides by n
even when fewer documents were retrieved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import ContractError, EvaluationError
from .nested import FusedList
from .runs import RunList

DEFAULT_CUTOFFS = (5, 10, 20)
ALPHA_WEAK = 0.1
ALPHA_STRONG = 0.05


@dataclass(frozen=True)
class QueryMetrics:
    ap: float
    rr: float
    precision: Mapping[int, float]

    def get(self, name: str) -> float:
        name = name.lower()
        if name in ("ap", "map"):
            return self.ap
        if name in ("rr", "mrr"):
            return self.rr
        if name.startswith("p@"):
            return self.precision[int(name[2:])]
        raise KeyError(name)


@dataclass(frozen=True)
class MetricsReport:
    per_query: Mapping[str, QueryMetrics]
    cutoffs: tuple[int, ...]
    skipped: tuple[str, ...] = ()

    @property
    def n_queries(self) -> int:
        return len(self.per_query)

    def mean(self, name: str) -> float:
        return float(np.mean([q.get(name) for q in self.per_query.values()]))

    @property
    def map(self) -> float:
        return self.mean("ap")

    @property
    def mrr(self) -> float:
        return self.mean("rr")

    def precision(self, n: int) -> float:
        return self.mean(f"p@{n}")

    def metric_names(self) -> list[str]:
        return ["map", "mrr"] + [f"P@{n}" for n in self.cutoffs]

    def aggregate(self) -> dict[str, float]:
        out = {"map": self.map, "mrr": self.mrr}
        for n in self.cutoffs:
            out[f"P@{n}"] = self.precision(n)
        return out

    def per_query_vector(self, name: str, query_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.per_query[q].get(name) for q in query_ids])

    def to_tsv(self) -> str:
        lines = ["metric\tqid\tvalue\n"]
        for qid in sorted(self.per_query):
            q = self.per_query[qid]
            lines.append(f"AP\t{qid}\t{q.ap:.6f}\n")
            lines.append(f"RR\t{qid}\t{q.rr:.6f}\n")
            for n in self.cutoffs:
                lines.append(f"P@{n}\t{qid}\t{q.precision[n]:.6f}\n")
        for name, value in self.aggregate().items():
            lines.append(f"{name}\tall\t{value:.6f}\n")
        lines.append(f"num_q\tall\t{self.n_queries}\n")
        return "".join(lines)

    def to_table(self) -> str:
        agg = self.aggregate()
        width = max(len(k) for k in agg)
        rows = [f"{'queries':<{width}}  {self.n_queries}"]
        rows += [f"{k:<{width}}  {v:.4f}" for k, v in agg.items()]
        if self.skipped:
            rows.append(f"(skipped {len(self.skipped)} queries without judgments)")
        return "\n".join(rows)


def _as_rankings(run) -> dict[str, list[str]]:
    if isinstance(run, RunList):
        return {q: run.ranking(q) for q in run.query_ids}
    out = {}
    for qid, ranking in run.items():
        if isinstance(ranking, FusedList):
            out[qid] = list(ranking.doc_ids)
        else:
            out[qid] = list(ranking)
    return out


def query_metrics(ranking: Sequence[str], relevant: set, cutoffs=DEFAULT_CUTOFFS) -> QueryMetrics:
    hits = np.array([d in relevant for d in ranking], dtype=bool)
    positions = np.flatnonzero(hits) + 1
    if relevant and positions.size:
        ap = float(np.sum(np.arange(1, positions.size + 1) / positions) / len(relevant))
        rr = 1.0 / positions[0]
    else:
        ap = 0.0
        rr = 0.0
    precision = {n: float(np.count_nonzero(hits[:n])) / n for n in cutoffs}
    return QueryMetrics(ap, float(rr), precision)


def evaluate(run, qrels: Mapping[tuple[str, str], int], cutoffs=DEFAULT_CUTOFFS) -> MetricsReport:
    """Score ``run`` (RunList or ``{qid: ranking}``) against ``qrels``.

    Queries without any judgment are skipped and listed in the report.
    """
    cutoffs = tuple(int(c) for c in cutoffs)
    if any(c < 1 for c in cutoffs):
        raise ContractError("cutoffs must be positive")
    rankings = _as_rankings(run)
    judged: dict[str, set] = {}
    for (qid, doc_id), grade in qrels.items():
        rel = judged.setdefault(qid, set())
        if grade > 0:
            rel.add(doc_id)
    per_query = {}
    skipped = []
    for qid in sorted(rankings):
        if qid not in judged:
            skipped.append(qid)
            continue
        per_query[qid] = query_metrics(rankings[qid], judged[qid], cutoffs)
    if not per_query:
        raise EvaluationError("run and qrels share no query ids")
    return MetricsReport(per_query, cutoffs, tuple(skipped))


@dataclass(frozen=True)
class SignificanceResult:
    metric: str
    n: int
    mean_difference: float
    t_statistic: float
    p_value: float

    @property
    def significant_weak(self) -> bool:
        return self.p_value < ALPHA_WEAK

    @property
    def significant_strong(self) -> bool:
        return self.p_value < ALPHA_STRONG

    @property
    def marker(self) -> str:
        if self.significant_strong:
            return "‡"
        if self.significant_weak:
            return "†"
        return ""


def paired_t_test(per_query_a, per_query_b, metric: str = "map") -> SignificanceResult:
    """Two-sided paired t-test on ``a - b`` with ``N - 1`` degrees of freedom."""
    a = np.asarray(per_query_a, dtype=np.float64)
    b = np.asarray(per_query_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("paired samples must be 1-d vectors of equal length")
    n = a.size
    if n < 2:
        raise ContractError("paired t-test needs at least 2 pairs")
    diff = a - b
    mean = float(np.mean(diff))
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return SignificanceResult(metric, n, 0.0, 0.0, 1.0)
        return SignificanceResult(metric, n, mean, math.copysign(math.inf, mean), 0.0)
    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return SignificanceResult(metric, n, mean, t, min(p, 1.0))


def compare_reports(a: MetricsReport, b: MetricsReport, metric: str = "map") -> SignificanceResult:
    """Paired t-test over the queries evaluated in both reports."""
    shared = sorted(set(a.per_query) & set(b.per_query))
    if len(shared) < 2:
        raise EvaluationError("need at least 2 queries evaluated in both runs")
    return paired_t_test(a.per_query_vector(metric, shared), b.per_query_vector(metric, shared), metric)
