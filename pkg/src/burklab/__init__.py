"""burklab: a numerical laboratory for the Burkholder integrand.

The package evaluates the piecewise integrand L(z, w), its p-homogeneous
companion Phi_p and their matrix-side counterpart in closed form, assembles
the exact piecewise-linear energy of complex-valued maps on a triangulated
torus, minimizes it with seeded conjugate-gradient multistarts, and checks
the classical radial and glued-family identities by independent closed
forms and adaptive quadrature.
"""

from .core import (
    Exponent,
    Mat2,
    burkholder,
    burkholder_excess,
    burkholder_gradient,
    burkholder_matrix,
    burkholder_matrix_via_det,
    burkholder_phi,
    wirtinger_pair,
)
from .families import (
    HarmonicReflectionMap,
    PowerReflectionMap,
    RankOneProbe,
    RankOneReport,
    StretchCompositeMap,
    circle_means,
    dilation_identity_L,
    dilation_identity_M,
    harmonic_reflection_integral,
    holomorphic_composite_integral,
    phi_upper_bound_gap,
    power_reflection_integral,
    random_rank_one_probe,
    rank_one_convexity_report,
)
from .mesh import (
    GridFunction,
    Triangle,
    TriangleDerivatives,
    energy,
    energy_gradient,
    grid_from_bytes,
    grid_from_json,
    grid_to_bytes,
    grid_to_json,
    load_grid,
    null_lagrangian,
    phi_energy,
    save_grid,
    triangle_derivatives,
    triangulate,
)
from .optimize import (
    CgOptions,
    FUNCTION_STALLED,
    GRADIENT_SMALL,
    ITERATION_CAP,
    MinimizationResult,
    NonFiniteError,
    RayProfile,
    gradient_check,
    initial_point,
    minimize_cg,
    multistart,
    ray_profile,
    small_ray_bound,
    start_seed,
    torus_objective,
)
from .radial import (
    DominationReport,
    PowerProfile,
    SampledProfile,
    SteepInterval,
    burkholder_integral,
    fixed_point_radius,
    load_profile,
    phi_integral,
    profile_from_json,
    profile_to_json,
    saturation_ratio,
    save_profile,
    slope_domination,
    steep_interval_terms,
    stretch_moduli,
)
from .runner import ExperimentConfig, replay, run

__version__ = "0.1.0"
