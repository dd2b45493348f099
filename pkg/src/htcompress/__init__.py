"""Heavy-tail weight-matrix compression toolkit.

Splits heavy-tailed matrices into retained spikes plus a Gaussian-substituted
bulk, verifies the concentration and sparsity statements behind that split,
measures network cushion constants, and evaluates the resulting sparsity-count
generalization bound on small fully connected networks.
"""

from .bounds import (
    ConcentrationParams,
    CushionSet,
    GenBoundInput,
    SparsityBoundInput,
    binomial_tail_exact,
    bracket_nonzero_prob,
    concentration_tail,
    contour_grid,
    covering_kappa,
    dudley_integral,
    resilient_path_bound,
    simple_generalization_bound,
    solve_variance_t,
    sparsity_tail_bound,
    spiked_component_expectation,
)
from .errors import (
    DomainError,
    HtcError,
    InfeasibilityError,
    InfeasibleThresholdError,
    InsufficientDataError,
    TrainingDivergedError,
    ValidationError,
    ValidityError,
)
from .fcnn import (
    CompressionResult,
    CushionReport,
    Dataset,
    LayerPlan,
    Network,
    accuracy,
    compress_network,
    empirical_margin_loss,
    forward,
    interlayer_cushion,
    interlayer_jacobian,
    layer_cushion,
    load_network,
    make_blobs,
    measure_cushions,
    save_network,
    softmax,
    train_sgd,
)
from .matrices import (
    CompressedMatrix,
    SparseMatrix,
    ThresholdSplit,
    frobenius_norm,
    gaussian_substitute,
    matvec,
    nnz,
    spectral_norm,
    split_by_threshold,
    stable_rank,
)
from .powerlaw import (
    ParetoParams,
    PowerLawFit,
    StableTailParams,
    fit_alpha_mle,
    sample_pareto,
    stable_tail_constant,
    stable_tail_density,
    tail_probability,
    truncated_second_moment,
)
from .verify import (
    AccuracyRow,
    BoundReport,
    MixtureFit,
    VerificationReport,
    accuracy_experiment,
    end_to_end_bound_report,
    fit_linear_mixture_em,
    make_planted_archive,
    stable_rank_alpha_sweep,
    verify_concentration,
    verify_sparsity,
    verify_spiked_expectation,
)

__version__ = "0.1.0"
