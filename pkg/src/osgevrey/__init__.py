"""Orr-Sommerfeld resolvent, semigroup and Gevrey-stability checks for boundary-layer shear flows."""
from .errors import (ConfigError, ConsistencyError, DegenerateCorrectorError, DomainError,
                     HypothesisViolation, MethodError, NearSingularError, SchemaVersionError,
                     ShapeError)
from .numerics import (GevreyNormParams, HalfLineGrid, WeightSpec, build_grid,
                       check_interpolation, gevrey_norm, norm)
from .profiles import ShearProfile, check_sc, load_profile_csv, make_builtin_profile
from .reports import EstimateReport, summarize
from .specfun import a0, airy
from .ossolve import (ModeContext, RhsSpec, assemble_nonslip, build_corrector, make_context,
                      solve_os_navier, solve_os_nonslip, solve_rayleigh)
from .resolvent import (INEQUALITY_IDS, admissible_sweep, classify, evaluate_display,
                        in_resolvent_region, resolvent_norm, verify_inequality)
from .semigroup import (ModeGenerator, apply_semigroup, build_contour, check_stokes,
                        verify_semigroup_bounds)
from .nonlinear import (SimState, ZNormParams, check_convolution_bound, nonlinear_term,
                        simulate)
from .harness import aggregate, run_scenario

__version__ = "0.1.0"
