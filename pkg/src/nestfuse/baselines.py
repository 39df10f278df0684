"""Reference fusion methods: CombMNZ, ISR, RBC and pairwise averaging."""

from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np

from .concordance import EPS_THETA, THETA_MAX, clamp_theta, list_tau, raw_theta
from .errors import ConfigError, ContractError
from .kernels import BASE_FAMILY, COPULAS, EPS_P, KERNELS, apply_kernel, consistency, modulate_theta
from .marginals import MarginalTable
from .nested import FusedList, QueryContext, _check_tables, rank_scores
from .runs import DocumentUniverse

DEFAULT_RBC_PHI = 0.98


def _sorted_rows(ids):
    return sorted(range(len(ids)), key=lambda i: ids[i])


def comb_mnz(marginals: Sequence[MarginalTable], native) -> FusedList:
    """Sum of native normalized scores times the number of lists retrieving the doc.

    ``native`` is a boolean ``(n, m)`` array aligned with ``marginals``;
    padded entries count toward neither factor.
    """
    _check_tables(marginals)
    native = np.asarray(native, dtype=bool)
    if native.shape != (len(marginals), marginals[0].m):
        raise ContractError("native presence mask does not match the marginal tables")
    rows = _sorted_rows([t.source for t in marginals])
    u = np.stack([marginals[i].u for i in rows])
    mask = native[rows]
    total = np.where(mask, u, 0.0).sum(axis=0)
    score = total * mask.sum(axis=0)
    return rank_scores(marginals[0].query_id, "combmnz", marginals[0].doc_ids, score)


def isr(universe: DocumentUniverse) -> FusedList:
    """Inverse square rank: hit count times the sum of ``1/rank**2`` over native lists."""
    if universe.n < 2:
        raise ContractError("need at least 2 lists to fuse")
    rows = _sorted_rows(universe.list_ids)
    ranks = universe.ranks[rows].astype(np.float64)
    mask = universe.native[rows]
    total = np.where(mask, 1.0 / ranks**2, 0.0).sum(axis=0)
    score = total * mask.sum(axis=0)
    return rank_scores(universe.query_id, "isr", universe.doc_ids, score)


def rbc(universe: DocumentUniverse, phi: float = DEFAULT_RBC_PHI) -> FusedList:
    """Rank-biased centroid: ``sum over lists of (1 - phi) * phi**(rank - 1)``.

    Every list contributes, using padded ranks for documents it did not
    retrieve.
    """
    check_phi(phi)
    if universe.n < 2:
        raise ContractError("need at least 2 lists to fuse")
    rows = _sorted_rows(universe.list_ids)
    ranks = universe.ranks[rows].astype(np.float64)
    score = ((1.0 - phi) * phi ** (ranks - 1.0)).sum(axis=0)
    return rank_scores(universe.query_id, "rbc", universe.doc_ids, score)


def check_phi(phi):
    if not 0.0 < phi < 1.0:
        raise ConfigError(f"RBC persistence must lie in (0, 1), got {phi}")


def pairwise_average(
    marginals: Sequence[MarginalTable],
    kernel: str,
    context: QueryContext | None = None,
    *,
    eps_theta: float = EPS_THETA,
    theta_max: float = THETA_MAX,
    eps_p: float = EPS_P,
) -> FusedList:
    """Fuse every pair of lists separately and average the fused scores."""
    if kernel not in KERNELS:
        raise ContractError(f"unknown kernel {kernel!r}")
    _check_tables(marginals)
    family = BASE_FAMILY[kernel]
    tables = sorted(marginals, key=lambda t: t.source)
    if kernel not in COPULAS:
        if context is None:
            raise ContractError(f"kernel {kernel!r} needs a query context")
        query_cov = context.coverage(tables[0].doc_ids)
    total = np.zeros(tables[0].m)
    count = 0
    for left, right in combinations(tables, 2):
        theta_g = clamp_theta(raw_theta(list_tau(left.u, right.u), family), family, eps_theta, theta_max)
        if kernel in COPULAS:
            theta_p = theta_g
        else:
            theta_p = modulate_theta(theta_g, query_cov + consistency(left.u, right.u), eps_p).theta_p
        total += apply_kernel(kernel, left.u, right.u, theta_g, theta_p)
        count += 1
    return rank_scores(tables[0].query_id, f"pairwise-avg:{kernel}", tables[0].doc_ids, total / count)
