"""Functionally-evolving Gaussian graphical models via basis-space
Bayesian shrinkage."""

from .basis import (
    BasisMatrix,
    BasisSpec,
    LosslessReport,
    build_basis,
    check_lossless,
    fit_basis,
    read_basis_csv,
    reconstruct,
    to_basis_space,
)
from .dataset import (
    FunctionalDataset,
    read_binary,
    read_dataset,
    read_long_csv,
    write_binary,
    write_long_csv,
)
from .dataspace import (
    CrossCovFunction,
    EdgeFunction,
    cross_cov_draw,
    lagged_profile,
    select_edges,
    summarize,
    write_edges_csv,
    write_lagprofile_csv,
)
from .errors import (
    AllGridZero,
    ConfigError,
    DataError,
    DegenerateRates,
    DimensionMismatch,
    DomainError,
    FunGraphError,
    IncompatibleGrid,
    LossyRepresentation,
    NotPositiveDefinite,
    RankDeficient,
)
from .graphmodel import (
    BasisGraphState,
    Hyperparameters,
    c_to_rho,
    conditional_cov_pair,
    log_likelihood_k,
    precision,
    rho_to_c,
)
from .hypoexp import (
    Hypoexponential,
    ShrinkageDiagnostic,
    hypo_cdf,
    hypo_moments,
    hypo_pdf,
    induced_rates,
    mass_near_zero,
    perturb_tied_rates,
    posterior_mean_mu,
    predictive_density_component,
    predictive_mixture,
    sample_hypo,
    sample_normal_hypo,
    shrinkage_S,
)
from .sampler import (
    PosteriorDraws,
    SamplerConfig,
    dump_chains,
    pair_list,
    rho_full_conditional_logdensity,
    run_chain,
    sample_lambda,
    sample_rho,
    sample_s,
    slab_rng,
)
from .simgen import (
    ScenarioConfig,
    TruthGraph,
    generate,
    imtpr_imfpr,
    read_truth_csv,
    residual_precisions,
    roc_points,
    scenario_manifest,
    truth_graph,
    write_truth_csv,
)

__version__ = "0.1.0"
