"""Rank -> normalized score transform.

A document at rank ``r`` among ``m`` gets ``u = (m + 1 - r) / (m + 1)``:
the empirical distribution function with ``T + 1`` in the denominator,
applied to inverse rank so that the best document gets the largest score.
Scores are never 0 or 1, which keeps the log/power kernels finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .runs import DocumentUniverse


@dataclass(frozen=True)
class MarginalTable:
    """Normalized scores of one (possibly already fused) list for one query.

    ``u`` is aligned with ``doc_ids``. Fused lists reuse this type with
    kernel outputs in ``u``.
    """

    query_id: str
    source: str
    doc_ids: tuple[str, ...]
    u: np.ndarray

    @property
    def m(self) -> int:
        return len(self.doc_ids)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.doc_ids, self.u.tolist()))


def normalize_ranks(ranks) -> np.ndarray:
    """Map a permutation of ``1..m`` to scores ``(m + 1 - r) / (m + 1)``."""
    r = np.asarray(ranks)
    if r.ndim != 1 or r.size == 0:
        raise ContractError("ranks must be a non-empty 1-d vector")
    m = r.size
    if not np.issubdtype(r.dtype, np.integer):
        if not np.all(np.equal(np.mod(r, 1), 0)):
            raise ContractError("ranks must be integers")
        r = r.astype(np.int64)
    if not np.array_equal(np.sort(r), np.arange(1, m + 1)):
        raise ContractError(f"ranks are not a permutation of 1..{m}")
    return (m + 1 - r) / (m + 1.0)


def universe_marginals(universe: DocumentUniverse) -> list[MarginalTable]:
    """One table per list of ``universe``, in the universe's list order."""
    return [
        MarginalTable(universe.query_id, lid, universe.doc_ids, normalize_ranks(universe.ranks[i]))
        for i, lid in enumerate(universe.list_ids)
    ]
