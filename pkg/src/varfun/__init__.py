"""Variation functions of nonlinear model classes and optimal sampling.

The package computes variation functions (pointwise worst-case squared
amplification of unit-norm model-class elements), the sampling weights they
induce, empirical restricted-isometry diagnostics, weighted least-squares
and iterative hard-thresholding recovery experiments, and numerical checks
of reach-based local bounds for smooth model classes.
"""
from .basis import (
    CoeffTensor,
    LegendreBasis,
    TensorBasis,
    dense_tensor,
    eval_function,
    eval_legendre,
    expand_univariate,
    legendre_table,
    legendre_tensor_basis,
    rank1_tensor,
)
from .geometry import (
    ManifoldChart,
    PointCloud,
    check_hausdorff_rates,
    check_manifold_projection,
    check_tangent_projection,
    circle_chart,
    hausdorff,
    klimit_check,
    kloc_upper,
    lowrank_chart,
    parabola_chart,
    reach_lowrank_ball,
    reach_perturbation_check,
    tangent_lowrank,
    truncated_hausdorff,
)
from .measure import (
    DomainSpec,
    NumericalError,
    SampleBatch,
    WeightFunction,
    ambient_norm,
    chebyshev_points,
    draw_samples,
    empirical_norm,
    from_density_weight,
    gauss_legendre_rule,
    make_rng,
    normalization_defect,
    standard_grid,
    separable_weight,
    tensor_quadrature,
    uniform_weight,
    weighted_sup_norm,
)
from .model import (
    Ball,
    FullSpace,
    LinearSpan,
    LowRankMatrix,
    Rank1Cone,
    Shift,
    TangentLowRank,
    Union,
    WeightedSparse,
    membership_distance,
    project_info,
    sample_unit_element,
    tangent_frame,
    unit_sample_batch,
)
from .rip import (
    RipProbEstimate,
    RipReport,
    rip_delta_linear,
    rip_delta_mc,
    rip_probability,
    wilson_interval,
)
from .solver import (
    TARGET_EXP_SUM,
    TARGET_ONES,
    PhaseCell,
    QuasiOptReport,
    SolveResult,
    phase_diagram,
    quasi_opt_check,
    solve_iht_rank1,
    solve_linear,
)
from .variation import (
    VariationFn,
    VariationNormReport,
    optimal_weight,
    variation_combine,
    variation_complement,
    variation_estimate,
    variation_exact,
    variation_norms,
)

__version__ = "0.1.0"
