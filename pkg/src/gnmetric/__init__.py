"""Generalized n-metric spaces: constructions, axiom checks, sequence diagnostics and certified fixed-point solvers."""

__version__ = "0.1.0"

from .axiom_checker import (
    AxiomReport,
    Verdict,
    Witness,
    check_ball_inclusion,
    check_g_axioms,
    check_inequality_prop,
    check_k_axioms,
    check_metric_axioms,
    reevaluate,
)
from .exceptions import (
    ArityError,
    CommutationError,
    ConfigError,
    GnMetricError,
    PlanError,
    PointError,
    PreimageResidualError,
    SolverError,
    SpaceValidationError,
)
from .fixed_point import (
    IterationTrace,
    SelfMap,
    SolverConfig,
    continuity_at_fixed_point,
    estimate_contraction_factor,
    register_map,
    solve_common_fixed_point,
    solve_quasi_contraction,
    uniqueness_probe,
    verify_fixed_point,
)
from .metric_core import (
    FiniteSpace,
    GnMetric,
    Kind,
    RealSpace,
    derived_metric,
    gn_max_pairwise,
    gn_sum_pairwise,
    k_cyclic_max,
    k_cyclic_perimeter_avg,
)
from .sampling import SamplePlan
from .sequence_analysis import (
    SequencePrefix,
    cauchy_report,
    continuity_probe,
    convergence_report,
)
