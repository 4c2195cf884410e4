"""Pseudo-spectral Galerkin solver for periodic incompressible MHD with
Gevrey-norm diagnostics, analyticity-radius tracking and an a priori
inequality verification harness."""

from .archive import TraceArchive, checkpoint_load, checkpoint_save
from .bounds import (
    INTEGRAL_IDS,
    POINTWISE_IDS,
    BoundReport,
    constants_chain,
    standard_sweep,
    verify_integral,
    verify_pointwise,
    xi_fields,
)
from .config import RunConfig, load_run_config, parse_run_config
from .constants import ConstantsTable, build_table, certified_cp, estimate_Cs, lattice_constant
from .errors import (
    BlowUpError,
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FieldInvariantError,
    GevreyOverflowError,
    MissingConstantError,
    TraceError,
)
from .radius import (
    IntervalCover,
    RadiusEstimate,
    decay_fit,
    guaranteed_intervals,
    lipschitz_check,
    radius_check,
    two_resolution_psi,
)
from .solver import (
    DiagnosticsSpec,
    MhdState,
    SolverConfig,
    full_rhs,
    make_initial,
    simulate,
    step,
)
from .spectral import (
    SpectralField,
    geometry,
    gevrey_norm,
    leray_project,
    lq_norm,
    project_solenoidal,
    shell_spectrum,
    sobolev_norm,
    wiener_norm,
)
from .transform import (
    PhiState,
    delta_max,
    foias_temam_norms,
    q_functional,
    sigma_p,
    solve_phi,
    transform,
    verify_theorem2,
)

__version__ = "0.1.0"
