"""Small fixtures shared by the CLI and acceptance tests."""


def write_run(path, system_id, rankings):
    """Write ``{qid: [doc, ...]}`` as a TREC run (scores = -rank)."""
    with open(path, "w", encoding="utf-8") as fh:
        for qid, docs in rankings.items():
            for r, d in enumerate(docs, start=1):
                fh.write(f"{qid} Q0 {d} {r} {-float(r)} {system_id}\n")
    return path
