"""Pseudo-spectral simulation suite for quadratic deep-water wave models,
their rectified variants, a conformal-map water-waves reference solver and a
finite-mode instability toy system."""

__version__ = "0.1.0"

from .errors import ConfigurationError, ConformalBreakdownError, NumericalError
from .spectral import (
    DepthParam,
    Grid,
    Rectifier,
    SpectralField,
    apply_multiplier,
    dealias_project,
    dealiased_product,
    from_coefficients,
    g0_apply,
    gradient,
    inner,
    l2_norm,
    p_apply,
    rectifier_apply,
    to_physical,
    to_spectral,
)
from .models import (
    ModelParams,
    WaveState,
    consistency_residual,
    dtn_quadratic,
    dtn_truncated,
    linear_flow,
    rww2_rhs,
)
from .stepping import IntegrationConfig, integrate, rk4_step
from .diagnostics import (
    energy_functional,
    hamiltonian,
    highband_monitor,
    mass_and_impulse,
    rt_apply,
    rt_coercivity,
)
from .toy import ToyState, alpha, blowup_witness, planewave_growth_rate, toy_integrate, toy_rhs
from .conformal import ConformalState, conformal_init, conformal_rhs, dtn_exact
