"""Simulation and estimation of average causal effects on noisily observed networks."""

from .estimators import (
    LevelMeans,
    MixingRule,
    MmeResult,
    OutcomeTable,
    RealizedOutcomes,
    contrast,
    degree_estimate,
    ht_estimate,
    load_outcome_table,
    mme_estimate,
    mme_node,
    realize_outcomes,
)
from .exposure import (
    ConfusionInverse,
    ConfusionMatrix,
    ExposureLevel,
    ExposureProbabilities,
    GeneralizedExposureConfig,
    LEVEL_NAMES,
    SingularConfusionError,
    Treatment,
    assign_treatment,
    confusion_matrix,
    exposure_level,
    exposure_level_generalized,
    exposure_levels,
    exposure_levels_generalized,
    exposure_probabilities,
    exposure_probabilities_generalized,
    invert_confusion,
    treated_neighbor_counts,
)
from .graphs import (
    EdgeListError,
    Graph,
    ParetoExpCutoff,
    RoundedContactData,
    ZeroTruncatedPoisson,
    build_graph_configuration,
    align_on_labels,
    build_true_graph_from_rounds,
    common_neighbors,
    load_edge_list,
    load_rounds,
    sample_degree_sequence,
    write_edge_list,
)
from .harness import (
    ESTIMATOR_NAMES,
    EstimateSummary,
    ExperimentConfig,
    ExperimentError,
    LevelSummary,
    bootstrap_ci,
    emit_results,
    resolve_graph,
    run_experiment,
)
from .noise import NoiseParams, perturb, replicate
from .noise_fit import (
    DegenerateMomentsError,
    DivergedError,
    MomentStats,
    NoiseFitError,
    NoiseFitResult,
    fit_alpha_beta,
    moment_stats,
)
from .seeding import derive_seed, make_rng
from .theory import (
    BiasPrediction,
    ConditionDiagnostics,
    ObservedDegreeMoments,
    condition_diagnostics,
    naive_estimator_bias,
    observed_degree_moments,
)

__version__ = "0.1.0"
