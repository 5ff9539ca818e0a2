"""Posterior inference of hidden follow graphs from post/repost traces."""

__version__ = "0.1.0"

from ._kernels import backend_name
from .baselines import InfluenceMatrix, compute_direct_counts, infer_chain, \
    infer_newman_vanilla, infer_saito, infer_star
from .constraints import Constraint, ConstraintSet, FixedAssignments, \
    build_constraints, dump_constraints, fix_singletons, reduce_constraints, \
    remove_dominated
from .em import EMConfig, EMParams, EMResult, QMatrix, compute_q, compute_w, \
    jensen_bound, run_em, threshold_graph, update_alpha, update_beta, \
    update_rho
from .errors import ParseError, SolverError, TraceGraphError, ValidationError
from .evaluation import FeasibilityReport, MetricsReport, \
    check_episode_feasibility, degree_ccdf, feasibility_rate, graph_metrics, \
    precision_recall
from .graph import AdjacencyGraph, read_edges, write_edges, \
    write_pair_table
from .lp import LPProblem, LPStructure, SigmaVector, compute_lambda, \
    solve_sigma_lp, write_lp
from .synth import SynthConfig, generate_graph, generate_trace, \
    relabel_graph, write_ground_truth
from .trace import Episode, EpisodeSet, PairStats, PostRecord, Trace, \
    build_episodes, count_ordered_pairs, parse_trace, preprocess, serialize, \
    summary

__all__ = [
    "__version__", "backend_name",
    "Trace", "PostRecord", "Episode", "EpisodeSet", "PairStats",
    "parse_trace", "preprocess", "serialize", "build_episodes",
    "count_ordered_pairs", "summary",
    "Constraint", "ConstraintSet", "FixedAssignments", "build_constraints",
    "fix_singletons", "remove_dominated", "reduce_constraints",
    "dump_constraints",
    "SigmaVector", "LPProblem", "LPStructure", "compute_lambda",
    "solve_sigma_lp", "write_lp",
    "EMParams", "EMConfig", "EMResult", "QMatrix", "compute_q", "compute_w",
    "update_alpha", "update_beta", "update_rho", "jensen_bound", "run_em",
    "threshold_graph",
    "InfluenceMatrix", "infer_star", "infer_chain", "infer_newman_vanilla",
    "infer_saito", "compute_direct_counts",
    "FeasibilityReport", "MetricsReport", "check_episode_feasibility",
    "feasibility_rate", "graph_metrics", "degree_ccdf", "precision_recall",
    "AdjacencyGraph", "read_edges", "write_edges", "write_pair_table",
    "SynthConfig", "generate_graph", "generate_trace", "relabel_graph",
    "write_ground_truth",
    "TraceGraphError", "ParseError", "ValidationError", "SolverError",
]
