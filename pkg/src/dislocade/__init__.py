"""Numerical laboratory for nonlocal dislocation dynamics.

Components: periodic well potentials, a fractional-order nonlocal operator on
tailed grids, heteroclinic layer profiles and their correctors, signed
interacting-particle systems, a mesoscale phase evolver with envelope
(super/subsolution) assemblies, decay-law fitting, and scenario drivers with
a verification battery.
"""

from ._kernels import HAS_NUMBA, backend
from .errors import (
    ConfigError,
    DislocadeError,
    InsufficientData,
    InvalidData,
    InvalidParameter,
    IoError,
    NoConvergence,
    NotApplicableError,
    OutOfDomain,
    PreconditionViolated,
    ScenarioAnomaly,
    ShapeMismatch,
    SingularConfiguration,
    SolverDiverged,
    StepFailure,
    StiffnessFailure,
)
from .grids import GridFunction, TailModel
from .potential import PeriodicPotential, make_analytic_potential, make_cosine_potential, validate_potential
from .fracop import DEFAULT_CONFIG, FracOperator, QuadratureConfig, frac_laplacian, frac_laplacian_field
from .layer import Corrector, LayerProfile, layer_tail_coefficient, solve_corrector, solve_layer
from .particles import (
    DEFAULT_CONTROL,
    CollisionEvent,
    DriftModel,
    ExpansionFit,
    MidpointDriftReport,
    ParticleSystem,
    StepControl,
    StressModel,
    TrajectoryRecord,
    ZERO_STRESS,
    analytic_stress,
    collision_time_bound,
    constant_stress,
    expansion_fit,
    integrate,
    midpoint_drift_check,
    ode_rhs,
)
from .evolver import (
    BarrierSchedule,
    BarrierSpec,
    EvolutionResult,
    InitialDatumSpec,
    PDEState,
    build_barrier,
    build_initial_datum,
    default_dt,
    default_schedule,
    evolve,
    half_integer_crossings,
    make_corrected_barrier,
    make_expanding_barrier,
    make_exponential_barrier,
    step,
)
from .analysis import (
    AsymptoticReport,
    DecayFit,
    ResidualReport,
    SearchReport,
    TrackComparison,
    compare_pde_ode,
    fit_exponential,
    fit_power,
    stationary_search,
    supersolution_residual,
)
from .serialize import canonical_dumps, format_float
from .scenarios import (
    CollisionRecord,
    Scenario,
    ScenarioResult,
    Verdict,
    VerificationReport,
    clear_caches,
    reference_corrector,
    reference_layer,
    run_criterion,
    run_scenario,
    standard_scenario,
    verify_suite,
)

__version__ = "0.1.0"
