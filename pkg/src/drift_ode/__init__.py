"""Large-time structure of y' = lambda*rho(t)*y + b(t).

With a periodic rate shape rho and a forcing b whose period-T increments
are themselves periodic, the solutions develop a clean asymptotic
anatomy: a unique distinguished solution, a periodic drift function
describing its per-period growth, and geometrically decaying transients.
This package computes all of it from one-period quadratures, checks
every closed form against an independent RK4 integrator, extends the
scalar theory to diagonalizable compartment systems, and diagnoses when
perturbed-periodic coefficients still admit a periodic limit.
"""

from .asymptotic import (
    AsymptoticSolution,
    ProblemInstance,
    approximate_at,
    asymptotic_solution,
    drift_gamma,
    drift_relation_residual,
    exact_solution,
    limit_initial_value,
    transient,
)
from .compartments import (
    CompartmentSystem,
    ModalDecomposition,
    SystemAnalysis,
    analyze_system,
    demo_system,
    diagonalize,
    simulate,
)
from .config import ScenarioConfig, load_scenario
from .errors import (
    ComplexSpectrum,
    ConditionsNotVerified,
    ConfigError,
    DefectiveMatrix,
    DomainError,
    DriftOdeError,
    ExpressionSyntaxError,
    MathDomainError,
    NonContracting,
    NonFiniteSample,
    NonNegativeEigenvalue,
    PeriodicityViolation,
    SubdivisionLimit,
    UnboundVariable,
    UnknownIdentifier,
)
from .numerics import (
    DEFAULT_QUAD,
    IntegratorConfig,
    QuadratureConfig,
    Trajectory,
    integrate,
    integrate_gauss,
    rk4_solve,
    rk4_solve_vector,
)
from .perturbed import (
    CauchyDiagnostics,
    PerturbationFamily,
    PeriodicLimitSolution,
    SeriesDiagnostics,
    alpha_hat,
    beta_hat,
    cauchy_diagnostics,
    check_conditions,
    iterate_initial_values,
    limit_periodic_solution,
    product_coefficients,
    product_sum_initial_values,
    rk4_window_initial_values,
    window_solution,
)
from .signal import (
    DriftedSignal,
    ExponentCache,
    PeriodicityReport,
    PeriodicSignal,
    decompose_drift,
    exponent,
    period_exponent,
    reconstruct_drift,
    verify_periodicity,
)

__version__ = "0.1.0"
