"""Numerical laboratory for the Ehrhard-Borell inequality.

Heat-semigroup construction of the Borell function C, its parabolic PDE,
the Feynman-Kac diffusion, degeneracy diagnostics and the equality cases.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .borell import (
    BorellInstance,
    MInstance,
    c_value,
    deficit,
    deficit_m,
    drift_b,
    gaussian_quantile,
    pde_residual,
    rho,
)
from .diffusion import (
    FKEstimate,
    PathEnsemble,
    SimConfig,
    correlated_noise,
    d1_d2_check,
    diagonal_sde_check,
    feynman_kac_estimate,
    lie_bracket_gap,
    minimizer_identities_check,
    simulate_paths,
    support_diagnostics,
    weak_order_study,
)
from .equality import (
    EqualityVerdict,
    classify_equality,
    condition_a_check,
    convex_rescale,
    dual_transform,
    feasible_mu,
    make_equality_instance,
    sup_convolution,
    trivial_case_verdict,
)
from .errors import (
    BorellLabError,
    ConfigurationError,
    ConstructionError,
    DomainError,
    RegimeError,
    TrivialFunctionError,
    UnsupportedGeometryError,
    UnsupportedRepresentationError,
)
from .functions import (
    Box,
    BoxIndicator,
    Complement,
    ConcaveComposite,
    ConcavePWL,
    Constant,
    FunctionSpec,
    GridSampled,
    Halfspace,
    HalfspaceIndicator,
    IntervalIndicator,
    IntervalUnion,
    LinearGaussian,
    Reflect,
    evaluate,
    hypothesis_b_check,
    minkowski_combine,
    phi_inverse_of,
    set_to_indicator,
)
from .gaussian import (
    ExtendedReal,
    QuadratureRule,
    gauss_hermite_rule,
    gaussian_integral,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .heat import heat_apply, heat_apply_bounded, heat_invert_linear, u_grad, u_value

__all__ = [name for name in dir() if not name.startswith("_")]
