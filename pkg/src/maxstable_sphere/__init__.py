"""Max-stable innovations on the sphere and the rotating max-autoregressive chain
they drive, with numerical checks of stationarity and geometric ergodicity."""

from .chain import (
    ChainConfig,
    ChainState,
    ConstantField,
    StationaryParams,
    VmfMixtureField,
    coupled_trajectory,
    eval_state,
    initial_state,
    prune,
    run_ensemble,
    state_sup,
    stationary_draw,
    stationary_draws,
    step,
    step_s,
)
from .config import ConfigError, RunConfig, parse_config, parse_config_text
from .ergodicity import (
    DriftParams,
    DriftReport,
    convergence_rate,
    drift_check,
    empirical_coupling_prob,
    lyapunov,
    minorization_alpha,
    minorization_check,
    pl_closed_form,
    pl_monte_carlo,
)
from .estimator import StationaryFieldSampler
from .geometry import (
    Rotation,
    SphericalGrid,
    UnitVec3,
    VmfParams,
    fibonacci_grid,
    rodrigues_matrix,
    uniform_sphere_sample,
    vmf_density,
    vmf_inf,
    vmf_sup,
)
from .reporting import Report
from .rng import RngStream
from .spectral import (
    GRID_EXACT,
    SPHERE_EXACT,
    InnovationField,
    InnovationSpec,
    LowerBoundWarning,
    ResourceLimitError,
    eval_field,
    field_inf_bound,
    field_sup,
    intensity_rate,
    simulate_innovation,
    simulate_innovations,
)
from .validation import (
    KsResult,
    chain_margin_check,
    ks_frechet,
    ks_two_sample,
    max_stability_check,
    rotation_stability_check,
)

__version__ = "0.1.0"
