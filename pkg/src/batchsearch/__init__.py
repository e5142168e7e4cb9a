"""Batch active search over sequence pools, with a benchmark harness.

The package fits a small surrogate network to an observation log, then
selects fixed-size batches of unobserved sequences by one of four
policies: greedy, epsilon-greedy, clustered Thompson sampling over
embedding-space clusters, or batch GP-UCB.  A harness runs seeded
replicated trials and reports top-fraction regret.
"""

from .agents import (
    ArrayModel,
    EpsilonGreedyAgent,
    GPUCBAgent,
    GPUCBConfig,
    GreedyAgent,
    HBBSAgent,
    HBBSConfig,
    OracleAgent,
    epsilon_greedy_act,
    gpucb_act,
    greedy_act,
    hbbs_act,
)
from .bandit import (
    NormalGammaPosterior,
    NormalGammaPrior,
    draw_precision,
    posterior_params,
    sample_cluster_value,
    thompson_select,
)
from .core import (
    DNA,
    PROTEIN,
    AgentInfo,
    Alphabet,
    Environment,
    ObservationLog,
    SequencePool,
    dedupe_sequences,
    initial_log,
    observe,
    validate_environment,
)
from .environments import (
    ClusterEnvConfig,
    ClusterGroundTruth,
    generate_cluster_env,
    load_dataset_env,
    load_env_json,
    rank_normalize,
    save_env_json,
)
from .errors import (
    BatchSearchError,
    ConfigError,
    DatasetParseError,
    EnvironmentInvalid,
    GPNumericalError,
    HarnessError,
    ObservationInvalid,
    SelectionError,
    TrainingError,
)
from .gp import GPConfig, GPModel, fit_gp, gp_predict, refit_sigma
from .harness import (
    AggregateRow,
    RunSpec,
    TrialRecord,
    aggregate,
    build_agent,
    build_environment,
    cumulative_regret,
    expand_agent_grid,
    load_run_config,
    read_results_csv,
    run_benchmark,
    run_trial,
    step_regret,
    top_q_sum,
    trial_seed_sequence,
    write_results_csv,
    write_summary_csv,
)
from .kmeans import ClusterPartition, kmeans
from .surrogate import (
    SurrogateConfig,
    SurrogateModel,
    embed,
    export_embeddings,
    fit_surrogate,
    one_hot_encode,
    predict,
)

__version__ = "0.1.0"

__all__ = [
    "AgentInfo",
    "AggregateRow",
    "Alphabet",
    "ArrayModel",
    "BatchSearchError",
    "ClusterEnvConfig",
    "ClusterGroundTruth",
    "ClusterPartition",
    "ConfigError",
    "DNA",
    "DatasetParseError",
    "Environment",
    "EnvironmentInvalid",
    "EpsilonGreedyAgent",
    "GPConfig",
    "GPModel",
    "GPNumericalError",
    "GPUCBAgent",
    "GPUCBConfig",
    "GreedyAgent",
    "HBBSAgent",
    "HBBSConfig",
    "HarnessError",
    "NormalGammaPosterior",
    "NormalGammaPrior",
    "ObservationInvalid",
    "ObservationLog",
    "OracleAgent",
    "PROTEIN",
    "RunSpec",
    "SelectionError",
    "SequencePool",
    "SurrogateConfig",
    "SurrogateModel",
    "TrainingError",
    "TrialRecord",
    "aggregate",
    "build_agent",
    "build_environment",
    "cumulative_regret",
    "dedupe_sequences",
    "draw_precision",
    "embed",
    "epsilon_greedy_act",
    "expand_agent_grid",
    "export_embeddings",
    "fit_gp",
    "fit_surrogate",
    "generate_cluster_env",
    "gp_predict",
    "gpucb_act",
    "greedy_act",
    "hbbs_act",
    "initial_log",
    "kmeans",
    "load_dataset_env",
    "load_env_json",
    "load_run_config",
    "observe",
    "one_hot_encode",
    "posterior_params",
    "predict",
    "rank_normalize",
    "read_results_csv",
    "refit_sigma",
    "run_benchmark",
    "run_trial",
    "sample_cluster_value",
    "save_env_json",
    "step_regret",
    "thompson_select",
    "top_q_sum",
    "trial_seed_sequence",
    "validate_environment",
    "write_results_csv",
    "write_summary_csv",
]
