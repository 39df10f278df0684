"""Unsupervised rank fusion with nested copula and nonlinear function-composition kernels."""

__version__ = "0.1.0"

from ._accel import backend
from .baselines import comb_mnz, isr, pairwise_average, rbc
from .concordance import kendall_tau, theta_from_tau
from .errors import (
    ConfigError,
    ContractError,
    EvaluationError,
    NestFuseError,
    ParseError,
    SkipQuery,
    ValidationError,
)
from .evaluation import evaluate, paired_t_test
from .kernels import KernelParams, clayton, estimate_relevance, f_el, f_pf, gumbel, modulate_theta
from .marginals import MarginalTable, normalize_ranks, universe_marginals
from .nested import (
    FusedList,
    FusionTrace,
    QueryContext,
    Route,
    check_nesting_constraint,
    nested_fuse,
    tau_fallback_gate,
)
from .pipeline import FusionConfig, QueryOutcome, fuse_runs
from .runs import DocumentUniverse, RunList, build_universe, parse_qrels, parse_queries, parse_run_file, parse_term_matches
