"""Command-line entry point: ``nestfuse {fuse,eval,compare,tau,synth}``."""

from __future__ import annotations

import argparse
import logging
import sys
from itertools import combinations

from . import __version__
from .concordance import EPS_THETA, THETA_MAX, list_tau
from .errors import ConfigError, NestFuseError, SkipQuery
from .evaluation import DEFAULT_CUTOFFS, compare_reports, evaluate
from .kernels import EPS_P
from .nested import format_trace
from .pipeline import FusionConfig, format_fused_run, format_report, fuse_runs, method_names
from .runs import all_query_ids, build_universe, parse_qrels, parse_queries, parse_run_file, parse_term_matches

log = logging.getLogger("nestfuse")

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_fuse(args) -> int:
    config = FusionConfig(
        method=args.method,
        tau_fallback_threshold=args.tau_fallback,
        rbc_phi=args.rbc_phi,
        theta_max=args.theta_max,
        eps_theta=args.epsilon_theta,
        eps_p=args.epsilon_p,
    )
    if len(args.runs) < 2:
        raise ConfigError("fuse needs at least 2 run files")
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if config.needs_queries and not args.queries:
        raise ConfigError(f"method {config.method} needs --queries (query length enters the relevance estimate)")
    runs = [parse_run_file(p) for p in args.runs]
    queries = parse_queries(args.queries) if args.queries else None
    matches = parse_term_matches(args.matches, queries) if args.matches else None
    outcomes = fuse_runs(runs, config, queries, matches, jobs=args.jobs)
    _write(args.output, format_fused_run(outcomes, config.method))
    if args.trace:
        _write(args.trace, format_trace([o.trace for o in outcomes if o.trace is not None]))
    unretrieved = []
    if args.qrels:
        judged = {q for q, _ in parse_qrels(args.qrels)}
        unretrieved = sorted(judged - {o.query_id for o in outcomes})
        for q in unretrieved:
            log.warning("query %s has judgments but no run retrieved it", q)
    if args.report:
        _write(args.report, format_report(outcomes, unretrieved))
    n_fused = sum(o.fused is not None for o in outcomes)
    n_fallback = sum(o.action == "fallback-combmnz" for o in outcomes)
    log.info("fused %d queries (%d via CombMNZ fallback), skipped %d", n_fused, n_fallback, len(outcomes) - n_fused)
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate(parse_run_file(args.run), parse_qrels(args.qrels), args.cutoffs)
    print(report.to_table())
    if args.tsv:
        _write(args.tsv, report.to_tsv())
    if args.per_query:
        names = ["AP", "RR"] + [f"P@{n}" for n in report.cutoffs]
        lines = ["qid," + ",".join(names) + "\n"]
        for qid in sorted(report.per_query):
            q = report.per_query[qid]
            vals = [q.ap, q.rr] + [q.precision[n] for n in report.cutoffs]
            lines.append(qid + "," + ",".join(f"{v:.6f}" for v in vals) + "\n")
        _write(args.per_query, "".join(lines))
    return EXIT_OK


def cmd_compare(args) -> int:
    qrels = parse_qrels(args.qrels)
    cutoffs = sorted(set(DEFAULT_CUTOFFS) | set(_cutoffs_in(args.metric)))
    rep_a = evaluate(parse_run_file(args.run_a), qrels, cutoffs)
    rep_b = evaluate(parse_run_file(args.run_b), qrels, cutoffs)
    res = compare_reports(rep_a, rep_b, args.metric)
    print(f"metric\t{res.metric}")
    print(f"queries\t{res.n}")
    print(f"mean_a\t{rep_a.mean(args.metric):.6f}")
    print(f"mean_b\t{rep_b.mean(args.metric):.6f}")
    print(f"mean_diff\t{res.mean_difference:.6f}")
    print(f"t\t{res.t_statistic:.6f}")
    print(f"p\t{res.p_value:.6g}")
    print(f"sig_0.1\t{'yes' if res.significant_weak else 'no'}")
    print(f"sig_0.05\t{'yes' if res.significant_strong else 'no'}")
    print(f"marker\t{res.marker or '-'}")
    return EXIT_OK


def _cutoffs_in(metric):
    m = metric.lower()
    return [int(m[2:])] if m.startswith("p@") else []


def cmd_tau(args) -> int:
    runs = [parse_run_file(p) for p in args.runs]
    lines = ["qid\tsystem_a\tsystem_b\ttau\n"]
    for qid in all_query_ids(runs):
        try:
            uni = build_universe(runs, qid)
        except SkipQuery as exc:
            log.warning("query %s skipped: %s", qid, exc.reason)
            continue
        taus = []
        for i, j in combinations(range(uni.n), 2):
            tau = list_tau(uni.ranks[i], uni.ranks[j])
            taus.append(tau)
            lines.append(f"{qid}\t{uni.list_ids[i]}\t{uni.list_ids[j]}\t{float(tau)!r}\n")
        lines.append(f"{qid}\tmean\tmean\t{float(sum(taus) / len(taus))!r}\n")
    _write(args.output, "".join(lines))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import make_collection

    coll = make_collection(args.systems, args.queries, args.depth, n_relevant=args.relevant, seed=args.seed)
    paths = coll.write(args.out)
    for name, p in paths.items():
        log.info("wrote %s -> %s", name, p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nestfuse", description="Nested copula-style rank fusion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse several TREC runs into one")
    p.add_argument("--method", required=True, help=f"one of: {', '.join(method_names())}")
    p.add_argument("--runs", nargs="+", required=True, metavar="RUN")
    p.add_argument("--queries", help="queries TSV (qid<TAB>text); required for nfc-* methods")
    p.add_argument("--matches", help="term-match TSV (qid<TAB>docid<TAB>count)")
    p.add_argument("--qrels", help="qrels, only used to report judged queries left out")
    p.add_argument("-o", "--output", default="-", help="fused run file (default: stdout)")
    p.add_argument("--trace", help="write per-cycle fusion trace TSV")
    p.add_argument("--report", help="write per-query action TSV (fused/fallback/skipped)")
    p.add_argument("--tau-fallback", type=float, default=None, metavar="TAU",
                   help="use CombMNZ for queries whose mean pairwise tau is <= TAU")
    p.add_argument("--rbc-phi", type=float, default=0.98)
    p.add_argument("--theta-max", type=float, default=THETA_MAX)
    p.add_argument("--epsilon-theta", type=float, default=EPS_THETA)
    p.add_argument("--epsilon-p", type=float, default=EPS_P)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("eval", help="MAP, MRR and P@n of a run")
    p.add_argument("run")
    p.add_argument("qrels")
    p.add_argument("--cutoffs", type=int, nargs="+", default=list(DEFAULT_CUTOFFS))
    p.add_argument("--tsv", help="write per-query and aggregate metrics as TSV")
    p.add_argument("--per-query", help="write per-query metrics as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="paired t-test between two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("qrels")
    p.add_argument("--metric", default="map", help="map, mrr or P@n")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tau", help="pairwise Kendall tau between runs, per query")
    p.add_argument("runs", nargs="+")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("synth", help="write a seeded synthetic collection")
    p.add_argument("--out", required=True)
    p.add_argument("--systems", type=int, default=6)
    p.add_argument("--queries", type=int, default=50)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--relevant", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (NestFuseError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
