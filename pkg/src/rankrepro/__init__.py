"""Finite-sample confidence sets for population ranks via reproduced noise.

The package inverts a model's latent-noise representation into per-population
rank constraints, filters noise draws through an acceptance region of known
probability, and prunes the resulting union of rank boxes with a
discordance-filtered candidate set of rankings.
"""

__version__ = "0.1.0"

from .baselines import BootstrapConfig, bootstrap_rank_intervals
from .bounds import candidate_size_bound, discordance_exceedance_bound
from .candidates import (
    BudgetSpec,
    CandidateSet,
    DiscordanceBudget,
    budget_from_pstar,
    build_candidate_set,
    choose_c_percentile,
    choose_c_snr,
    k_pairs_of,
    manual_budget,
)
from .confsets import (
    PipelineResult,
    RankBox,
    RankConfidenceSet,
    assemble_confidence_set,
    box_from_neighborhoods,
    refine_with_candidate,
)
from .errors import (
    ConvergenceError,
    DataFormatError,
    DegenerateDesignError,
    EstimationError,
    InfeasibleNeighborhoodError,
    InfeasibleProblemError,
    InvalidInputError,
    RankReproError,
)
from .gaussian import (
    GaussianInstance,
    PairwiseThresholds,
    calibrate_acceptance_threshold,
    gaussian_neighborhoods,
    gaussian_pipeline,
    gaussian_theta_star,
)
from .harness import (
    CoverageReport,
    ExperimentConfig,
    SweepRow,
    load_experiment_config,
    run_coverage_experiment,
    run_pstar_sweep,
)
from .io import (
    ResultDocument,
    load_matches_csv,
    load_populations_csv,
    load_trials_csv,
    result_from_pipeline,
)
from .pl import (
    PlInstance,
    TopChoiceTrial,
    pl_band_membership,
    pl_constraint_matrix,
    pl_log_likelihood,
    pl_mle_theta_hat,
    pl_neighborhoods,
    pl_pairwise_indicators,
    pl_pipeline,
    pl_simulate_trials,
    pl_theta_star,
)
from .quantile import (
    BinomialBand,
    QuantileInstance,
    count_acceptance_bands,
    quantile_neighborhoods,
    quantile_pipeline,
    quantile_theta_star,
    success_counts,
)
from .ranks import (
    ASCENDING,
    DESCENDING,
    NeighborhoodSets,
    RankInterval,
    discordance,
    discordance_batch,
    normalized_discordance,
    rank_interval_from_neighborhoods,
    rank_of,
    rank_of_batch,
)
from .regression import (
    RegressionFit,
    RegressionInstance,
    build_design,
    fit_strengths,
    laplace_band_halfwidth,
    ols_theta_hat,
    regression_neighborhoods,
    regression_pipeline,
    regression_theta_star,
    round_robin_matches,
)
from .solvers import (
    QpSolution,
    beta_order_statistic_quantile,
    brent_minimize,
    shortest_binomial_interval,
    solve_min_norm_qp,
)
