"""Random normed modules over finite probability spaces.

Stratified lattice algebra on L0, concrete random normed modules and their
random conjugates, an atomwise intermediate value solver, the modulus of
random convexity with its pair constructions, and the derived L^p spaces.
"""

from .convexity import (
    FiberEstimate,
    ModulusQuery,
    SearchConfig,
    Variant,
    direct_search,
    equalize_pair,
    euclid_modulus_oracle,
    fiber_modulus,
    halfbound_check,
    modulus_estimate,
    prescribe_gap,
    rotate_pair,
)
from .dual import (
    RandomFunctional,
    dual_norm,
    dual_witness,
    eval_functional,
    norm_attaining,
    norming_vector,
    sup_formula_check,
)
from .errors import (
    ConvergenceError,
    DomainError,
    ExprError,
    ParseError,
    PreconditionError,
    RandConvexError,
    SamplingError,
    SchemaError,
    UnboundNameError,
    UnknownFunctionError,
)
from .expr import eval_expr, parse_expr, to_text
from .ivt import LocalFunction, locality_audit, solve_ivt
from .lp import lp_modulus_estimate, lp_modulus_report, lp_norm, uniform_convexity_audit
from .measure import (
    EventSet,
    FiniteProbSpace,
    L0Real,
    indicator,
    kyfan_distance,
    lattice_extrema,
    leq_on,
    strata_pos,
)
from .module import (
    FiberNorm,
    ModuleElement,
    RnModuleSpec,
    glue,
    module_distance,
    module_scale,
    random_norm,
    restrict,
    sphere_membership,
    supports,
    unit_section,
)
from .rank import companion, fibers_independent, grand_stratum, independent_part, is_independent

__version__ = "0.1.0"
