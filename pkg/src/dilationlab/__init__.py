"""Numerical laboratory for free unitary dilations of non-commuting
families of contraction semigroups, and for the time-dependent evolution
and monitoring products they control."""

from .linalg import (
    ConsistencyError,
    SingularMatrixError,
    Spectrum,
    adjoint,
    as_operator,
    expm,
    op_norm,
    point_spectrum,
    psd_sqrt,
    random_contraction,
    random_unitary,
    solve,
)
from .semigroup import (
    ContractionSemigroup,
    ContinuityReport,
    PolyApprox,
    QuadratureError,
    QuadratureSpec,
    YosidaConstants,
    cogenerator,
    continuity_moduli,
    evaluate,
    generator_from_cogenerator,
    poly_apply,
    poly_coeffs,
    random_semigroup,
    random_unitary_group,
    resolvent_via_laplace,
    yosida_generator,
    yosida_semigroup,
)
from .dilation import (
    ContinuousDilation,
    TruncatedDilation,
    compress,
    continuous_dilation,
    embedding_r0,
    embedding_r1,
    intertwine_check,
    nagy_isometry,
    nagy_unitary,
    point_spectrum_transfer,
    verify_continuous_word,
    verify_discrete_word,
    verify_poly_transport,
    weak_approx_pairing,
)
from .words import (
    Letter,
    Word,
    evaluate as evaluate_word,
    expand,
    inverse,
    is_bubble_swap_free,
    is_minimal,
    multiply,
    parse_word,
    reduce,
    verify_algebraic_dilation,
    word,
)
from .evolution import (
    DiagonalSemigroup,
    GeneratorFamily,
    GroupEvolution,
    MonitorFamily,
    MonitoredProcess,
    Partition,
    ScaledPartition,
    chernoff_Q,
    cycle_monitored_system,
    diagonal_block,
    evolution_law_check,
    feynman_analog,
    homogenize,
    is_m_homogeneous,
    monitoring_product,
    pre_evolution_product,
    reduce_pre_evolution,
    refinement_limit,
    scale_partition,
    self_similar_split,
)

__version__ = "0.1.0"
