"""Decentralized composite-optimization laboratory.

A simulated network of message-passing agents running a symmetric
ADMM-type splitting over a mixing matrix, a global matrix-form oracle
that replays the same iteration as stacked linear algebra, proximal
baselines (gradient-tracking style primal-dual methods), and checks
that tie the produced trajectories back to the convergence theory.
"""

from .baselines import (
    BaselineDivergence,
    BaselineParams,
    BaselineResult,
    nids_run,
    pg_extra_run,
    sweep_grid,
    sweep_step,
)
from .dsadmm import AgentState, DsAdmmParams, RoundMessage, RunResult, run
from .experiment import (
    ConfigError,
    ExperimentConfig,
    ExperimentSummary,
    build_config,
    load_config,
    run_experiment,
    synth_lasso,
    synth_svm,
)
from .graphs import (
    Graph,
    GraphError,
    MixingMatrix,
    gen_complete,
    gen_erdos_renyi,
    gen_ring,
    metropolis_weights,
    read_edge_list,
    spectral_gap,
    write_edge_list,
)
from .oracle import (
    GlobalIterate,
    GlobalMatrices,
    build_matrices,
    check_contraction,
    check_lemma1,
    check_theorem1,
    global_step,
    lockstep_equivalence,
    rate_constants,
    run_global,
    verification_report,
)
from .problems import (
    CompositeProblem,
    DataError,
    Dataset,
    SolverError,
    dataset_from_dense,
    make_lasso,
    make_svm,
    parse_libsvm,
    partition_even,
    reference_solution,
)
from .records import read_trajectory_csv, write_trajectory_csv

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "BaselineDivergence",
    "BaselineParams",
    "BaselineResult",
    "CompositeProblem",
    "ConfigError",
    "DataError",
    "Dataset",
    "DsAdmmParams",
    "ExperimentConfig",
    "ExperimentSummary",
    "GlobalIterate",
    "GlobalMatrices",
    "Graph",
    "GraphError",
    "MixingMatrix",
    "RoundMessage",
    "RunResult",
    "SolverError",
    "build_config",
    "build_matrices",
    "check_contraction",
    "check_lemma1",
    "check_theorem1",
    "dataset_from_dense",
    "gen_complete",
    "gen_erdos_renyi",
    "gen_ring",
    "global_step",
    "load_config",
    "lockstep_equivalence",
    "make_lasso",
    "make_svm",
    "metropolis_weights",
    "nids_run",
    "parse_libsvm",
    "partition_even",
    "pg_extra_run",
    "rate_constants",
    "read_edge_list",
    "reference_solution",
    "run",
    "run_experiment",
    "run_global",
    "spectral_gap",
    "sweep_grid",
    "sweep_step",
    "synth_lasso",
    "synth_svm",
    "verification_report",
    "write_edge_list",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "__version__",
]
