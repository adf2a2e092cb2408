"""Averaging analysis of analytically perturbed rank-2 Poisson systems.

Pipeline: reduce to Darboux form and the Lagrange standard form
(:mod:`.reduction`), average over the angle (:mod:`.averaging`), find and
classify simple zeros (:mod:`.rootfind`) and certify the predicted periodic
orbits by shooting (:mod:`.verify`).
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .averaging import AveragedMap, QuadratureConfig
from .errors import (
    ConfigurationError,
    DegenerateChartError,
    DomainError,
    IntegrationError,
    InversionError,
    NumericalError,
    PoissonAveragingError,
    PolarSingularityError,
    QuadratureError,
    RankDegeneracyError,
    SlowAngleError,
)
from .integrate import IntegratorConfig, dopri45
from .jets import Jet, ScalarField, VectorField, jet_eval, seed
from .poisson import PerturbedSpec, PoissonSpec, darboux_matrix, validate_poisson
from .poly import SparsePoly, poly_eval, poly_partial_at_zero
from .reduction import (
    DarbouxChart,
    StandardForm,
    build_chart,
    chart_checks,
    chart_inverse_jet,
    invert_chart,
    standard_form,
    transformed_perturbation,
)
from .rootfind import (
    SearchBox,
    Stability,
    ZeroReport,
    classify_stability,
    find_zeros,
    local_small_amplitude_scan,
)
from .scenarios import (
    Scenario,
    cross_check,
    make_duffing,
    make_harmonic_potential,
    make_scenario,
    make_zero_hopf,
)
from .verify import (
    OrbitCertificate,
    continuation_in_epsilon,
    integrate_standard_form,
    map_orbit_back,
    poincare_shoot,
)
