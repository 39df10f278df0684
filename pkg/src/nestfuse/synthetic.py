"""Seeded synthetic test collection: runs, qrels, queries and term matches.

Each query has a latent relevance score per candidate document. Systems
rank candidates by latent score plus system- and query-specific noise, so
queries span a range of inter-system agreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .runs import RunEntry, RunList, write_run_file

_VOCAB = [
    "coastal", "flooding", "europe", "election", "reform", "trade", "tariff", "river",
    "storm", "vaccine", "strike", "rail", "energy", "price", "oil", "bank", "court",
    "ruling", "border", "treaty", "drought", "harvest", "museum", "art", "theft",
]


@dataclass
class SyntheticCollection:
    runs: list[RunList]
    qrels: dict[tuple[str, str], int]
    queries: dict[str, str]
    term_matches: dict[tuple[str, str], int]

    def write(self, directory) -> dict[str, Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {}
        for run in self.runs:
            p = d / f"{run.system_id}.run"
            write_run_file(run, p)
            paths[run.system_id] = p
        with open(d / "qrels.txt", "w", encoding="utf-8") as fh:
            for (q, doc), rel in sorted(self.qrels.items()):
                fh.write(f"{q} 0 {doc} {rel}\n")
        with open(d / "queries.tsv", "w", encoding="utf-8") as fh:
            for q in sorted(self.queries):
                fh.write(f"{q}\t{self.queries[q]}\n")
        with open(d / "matches.tsv", "w", encoding="utf-8") as fh:
            for (q, doc), c in sorted(self.term_matches.items()):
                fh.write(f"{q}\t{doc}\t{c}\n")
        paths.update(qrels=d / "qrels.txt", queries=d / "queries.tsv", matches=d / "matches.tsv")
        return paths


def make_collection(
    n_systems: int = 6,
    n_queries: int = 50,
    depth: int = 1000,
    pool: int | None = None,
    n_relevant: int = 40,
    seed: int = 0,
) -> SyntheticCollection:
    """Generate a collection where each run retrieves ``depth`` docs per query."""
    pool = pool or int(depth * 1.3)
    if n_systems < 2 or n_queries < 1 or depth < 1:
        raise ConfigError("need at least 2 systems, 1 query and depth 1")
    if not depth <= pool or not 0 < n_relevant <= pool:
        raise ConfigError(f"depth and relevant count must not exceed the pool size {pool}")
    rng = np.random.default_rng(seed)
    system_ids = [f"sys{i + 1}" for i in range(n_systems)]
    system_noise = rng.uniform(0.3, 1.5, size=n_systems)
    rankings = {s: {} for s in system_ids}
    scores = {s: {} for s in system_ids}
    qrels, queries, matches = {}, {}, {}
    width = len(str(pool))
    for qi in range(n_queries):
        qid = f"Q{qi + 1:03d}"
        docs = np.array([f"{qid}-D{j:0{width}d}" for j in range(pool)])
        latent = rng.normal(size=pool)
        hardness = rng.uniform(0.2, 3.0)
        for s, noise in zip(system_ids, system_noise):
            observed = latent + hardness * noise * rng.normal(size=pool)
            top = np.argsort(-observed, kind="stable")[:depth]
            rankings[s][qid] = docs[top].tolist()
            scores[s][qid] = observed[top].tolist()
        for j in np.argsort(-latent, kind="stable")[:n_relevant]:
            qrels[(qid, str(docs[j]))] = 1
        for j in rng.choice(pool, size=n_relevant, replace=False):
            qrels.setdefault((qid, str(docs[j])), 0)
        length = int(rng.integers(2, 6))
        queries[qid] = " ".join(rng.choice(_VOCAB, size=length, replace=False))
        # documents with higher latent relevance tend to match more terms
        p_match = 1.0 / (1.0 + np.exp(-latent))
        counts = rng.binomial(length, p_match)
        for j in np.flatnonzero(counts):
            matches[(qid, str(docs[j]))] = int(counts[j])
    runs = [
        RunList(
            s,
            {
                q: tuple(RunEntry(d, r, sc) for r, (d, sc) in enumerate(zip(rankings[s][q], scores[s][q]), start=1))
                for q in rankings[s]
            },
        )
        for s in system_ids
    ]
    return SyntheticCollection(runs, qrels, queries, matches)
