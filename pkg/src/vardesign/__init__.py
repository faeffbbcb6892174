"""Sampling designs and IMSE for random processes with variable smoothness ``alpha(t)``."""

__version__ = "0.1.0"

from .errors import AssumptionError, ConfigError, DomainError, NumericalError, VardesignError
from .smoothness import SmoothnessModel, power_law_model, validate_c1_c2, zone_coefficients
from .densities import (
    ExpPower,
    Pareto,
    SingularPower,
    Uniform01,
    check_a1,
    check_a2,
    check_a3,
    density_from_dict,
    dilation,
    pstar,
)
from .designs import (
    Design,
    composite_design,
    dilated_design,
    quasi_regular_design,
    regular_design,
    uniform_tail_design,
)
from .imse import (
    ModelVariogram,
    constant_K,
    constant_K1,
    constant_K2,
    constant_K_star,
    imse,
    interval_error_closed,
    rate_factor,
)
from .rates import extrapolate_limit, gap_detector, prop1_certificate, sweep
from .simulate import FbmKernel, MbmKernel, empirical_imse, fbm_cov, mbm_cov, sample_paths
from .config import RunConfig, load_config
