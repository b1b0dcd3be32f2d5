"""honet: memory-aware network models from trajectory data.

Builds order-k de Bruijn models of a directed graph from observed
trajectories (or from topology alone), selects the memory order with
nested likelihood-ratio tests, and computes higher-order betweenness,
higher-order PageRank with first-order projection, and multi-order
next-step predictions, evaluated against trajectory-derived ground
truth.
"""

from .analytics import (
    PredictionEvaluation,
    PredictionResult,
    ScoreVector,
    evaluate_prediction,
    ground_truth_frequencies,
    ho_betweenness,
    ho_pagerank,
    predict_next,
    prediction_samples,
    project_pagerank,
)
from .graph import (
    FirstOrderGraph,
    ShortestPathSummary,
    build_graph,
    parse_edge_list_file,
    row_stochastic_transitions,
    single_source_shortest_paths,
    write_edge_list_file,
)
from .hon import (
    IMPOSSIBLE,
    HigherOrderModel,
    build_from_paths,
    build_from_topology,
    corpus_likelihood,
    frequency_graph,
    load_model,
    mle_transition,
    path_likelihood,
    save_model,
    write_model_csv,
)
from .metrics import RankedComparison, compare_to_ground_truth, kendall_tau, kl_divergence
from .multiorder import (
    LrtResult,
    MultiOrderModel,
    OrderDetectionReport,
    build_multi_order,
    degrees_of_freedom,
    detect_optimal_order,
    likelihood_ratio_test,
    multi_order_corpus_likelihood,
    multi_order_path_likelihood,
    order_detection_report,
)
from .synth import (
    PlantedModel,
    generate_corpus,
    random_planted_model,
    random_strongly_connected_graph,
)
from .trajectories import (
    PathLengthStats,
    SubpathCounts,
    Trajectory,
    TrajectoryCorpus,
    parse_ngram_file,
    path_length_stats,
    sliding_windows,
    subpath_counts,
    train_test_split,
    validate_corpus,
    write_ngram_file,
    write_subpath_counts_csv,
)

__version__ = "0.1.0"
