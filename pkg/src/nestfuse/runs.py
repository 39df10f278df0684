"""Reading and assembling retrieval runs, qrels, queries and term matches.

File formats (all UTF-8, blank lines and ``#`` comments ignored):

* run:      ``qid Q0 docid rank score tag`` (whitespace separated)
* qrels:    ``qid 0 docid rel``
* queries:  ``qid<TAB>text``
* matches:  ``qid<TAB>docid<TAB>count``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, SkipQuery, ValidationError


@dataclass(frozen=True)
class RunEntry:
    doc_id: str
    rank: int
    score: float | None = None


@dataclass(frozen=True)
class RunList:
    """One system's rankings, keyed by query id.

    Entries per query are in rank order with ranks exactly ``1..k``.
    """

    system_id: str
    entries: Mapping[str, tuple[RunEntry, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for qid, rows in self.entries.items():
            seen = set()
            for pos, entry in enumerate(rows, start=1):
                if entry.rank != pos:
                    raise ValidationError(
                        f"run {self.system_id}: query {qid} ranks are not 1..{len(rows)}"
                    )
                if entry.doc_id in seen:
                    raise ValidationError(
                        f"run {self.system_id}: duplicate document {entry.doc_id} for query {qid}"
                    )
                seen.add(entry.doc_id)

    @classmethod
    def from_rankings(cls, system_id, rankings, scores=None):
        """Build a run from ``{qid: [doc_id, ...]}`` in best-first order."""
        entries = {}
        for qid, docs in rankings.items():
            qscores = scores.get(qid) if scores else None
            entries[qid] = tuple(
                RunEntry(d, r, None if qscores is None else float(qscores[r - 1]))
                for r, d in enumerate(docs, start=1)
            )
        return cls(system_id, entries)

    @property
    def query_ids(self):
        return sorted(self.entries)

    def ranking(self, query_id) -> list[str]:
        return [e.doc_id for e in self.entries.get(query_id, ())]

    def __contains__(self, query_id):
        return query_id in self.entries


@dataclass(frozen=True)
class DocumentUniverse:
    """Union of documents retrieved for one query, with padded per-list ranks.

    ``doc_ids`` is sorted lexicographically and indexes the columns of
    ``ranks`` (shape ``(n, m)``, each row a permutation of ``1..m``) and
    ``native`` (``True`` where the list actually retrieved the document).
    """

    query_id: str
    list_ids: tuple[str, ...]
    doc_ids: tuple[str, ...]
    ranks: np.ndarray
    native: np.ndarray

    @property
    def m(self) -> int:
        return len(self.doc_ids)

    @property
    def n(self) -> int:
        return len(self.list_ids)

    def padded_order(self, i) -> list[str]:
        """Document ids of list ``i`` in padded rank order."""
        order = np.argsort(self.ranks[i], kind="stable")
        return [self.doc_ids[j] for j in order]

    def native_counts(self) -> np.ndarray:
        return self.native.sum(axis=0)


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield line_no, line.rstrip("\n").rstrip("\r")


def parse_run_file(path) -> RunList:
    """Parse a TREC run file.

    Ranks are only used to order entries; they are re-densified to 1..k
    per query. Ties in the rank column keep file order.
    """
    raw: dict[str, list[tuple[int, int, str, float]]] = {}
    seen: set[tuple[str, str]] = set()
    tag = None
    for line_no, line in _lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields, got {len(parts)}", path, line_no)
        qid, _q0, doc_id, rank_s, score_s, run_tag = parts
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError:
            raise ParseError(f"non-numeric rank or score: {rank_s!r} {score_s!r}", path, line_no) from None
        if (qid, doc_id) in seen:
            raise ValidationError(f"{path}:{line_no}: duplicate entry for query {qid} document {doc_id}")
        seen.add((qid, doc_id))
        if tag is None:
            tag = run_tag
        raw.setdefault(qid, []).append((rank, line_no, doc_id, score))
    if tag is None:
        tag = Path(path).stem
    entries = {}
    for qid, rows in raw.items():
        rows.sort(key=lambda r: (r[0], r[1]))
        entries[qid] = tuple(RunEntry(doc, pos, score) for pos, (_, _, doc, score) in enumerate(rows, start=1))
    return RunList(tag, entries)


def format_run(run: RunList) -> str:
    """Serialize ``run`` in TREC format, queries in sorted order."""
    out = []
    for qid in run.query_ids:
        for e in run.entries[qid]:
            score = e.score if e.score is not None else float(-e.rank)
            out.append(f"{qid} Q0 {e.doc_id} {e.rank} {score!r} {run.system_id}\n")
    return "".join(out)


def write_run_file(run: RunList, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_run(run))


def parse_qrels(path) -> dict[tuple[str, str], int]:
    qrels: dict[tuple[str, str], int] = {}
    for line_no, line in _lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", path, line_no)
        qid, _iter, doc_id, rel_s = parts
        try:
            rel = int(rel_s)
        except ValueError:
            raise ParseError(f"non-integer relevance {rel_s!r}", path, line_no) from None
        if rel < 0:
            # some collections use -1/-2 for "unjudged/spam"; treat as non-relevant
            rel = 0
        if (qid, doc_id) in qrels:
            raise ValidationError(f"{path}:{line_no}: duplicate judgment for query {qid} document {doc_id}")
        qrels[(qid, doc_id)] = rel
    return qrels


def query_length(text: str) -> int:
    return len(text.lower().split())


def parse_queries(path) -> dict[str, str]:
    queries: dict[str, str] = {}
    for line_no, line in _lines(path):
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise ParseError("expected qid<TAB>text", path, line_no)
        qid, text = parts[0].strip(), parts[1].strip()
        if not qid:
            raise ParseError("empty query id", path, line_no)
        if qid in queries:
            raise ValidationError(f"{path}:{line_no}: duplicate query id {qid}")
        queries[qid] = text
    return queries


def parse_term_matches(path, queries: Mapping[str, str] | None = None) -> dict[tuple[str, str], int]:
    """Parse the term-match sidecar.

    When ``queries`` is given, each count is checked against the query's
    token length.
    """
    matches: dict[tuple[str, str], int] = {}
    for line_no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ParseError("expected qid<TAB>docid<TAB>count", path, line_no)
        qid, doc_id, count_s = (p.strip() for p in parts)
        try:
            count = int(count_s)
        except ValueError:
            raise ParseError(f"non-integer match count {count_s!r}", path, line_no) from None
        if count < 0:
            raise ValidationError(f"{path}:{line_no}: negative match count")
        if queries is not None and qid in queries and count > query_length(queries[qid]):
            raise ValidationError(
                f"{path}:{line_no}: match count {count} exceeds length "
                f"{query_length(queries[qid])} of query {qid}"
            )
        if (qid, doc_id) in matches:
            raise ValidationError(f"{path}:{line_no}: duplicate entry for query {qid} document {doc_id}")
        matches[(qid, doc_id)] = count
    return matches


def build_universe(runs: Sequence[RunList], query_id: str) -> DocumentUniverse:
    """Pad every run covering ``query_id`` to the union of retrieved documents.

    Documents a run did not retrieve are appended after its native entries
    in ascending doc_id order. Runs lacking the query are left out; fewer
    than two covering runs raises :class:`SkipQuery`.
    """
    covering = [r for r in runs if query_id in r.entries and r.entries[query_id]]
    if len(covering) < 2:
        raise SkipQuery(query_id, f"covered by {len(covering)} run(s), need at least 2")
    doc_ids = tuple(sorted({e.doc_id for r in covering for e in r.entries[query_id]}))
    col = {d: j for j, d in enumerate(doc_ids)}
    m = len(doc_ids)
    ranks = np.zeros((len(covering), m), dtype=np.int64)
    native = np.zeros((len(covering), m), dtype=bool)
    for i, run in enumerate(covering):
        rows = run.entries[query_id]
        for e in rows:
            ranks[i, col[e.doc_id]] = e.rank
            native[i, col[e.doc_id]] = True
        # doc_ids is sorted, so absent columns are already in padding order
        absent = np.flatnonzero(~native[i])
        ranks[i, absent] = np.arange(len(rows) + 1, m + 1)
    ranks.setflags(write=False)
    native.setflags(write=False)
    return DocumentUniverse(
        query_id=query_id,
        list_ids=tuple(r.system_id for r in covering),
        doc_ids=doc_ids,
        ranks=ranks,
        native=native,
    )


def all_query_ids(runs: Iterable[RunList]) -> list[str]:
    return sorted({q for r in runs for q in r.entries})
