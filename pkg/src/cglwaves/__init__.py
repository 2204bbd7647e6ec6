"""
cglwaves: meromorphic traveling waves of the cubic-quintic complex
Ginzburg-Landau equation.

Laurent singularity analysis, subequation fitting, elliptic closed forms in
rational, zeta-sum and product representations, the Landen link between the
two lattices involved, and a verification harness tying them together.
"""

__version__ = "0.1.0"

from .elliptic import (EllipticInvariants, eval_sigma, eval_wp, eval_zeta,
                       invariants_from_periods, periods_from_invariants)
from .errors import CglError, NumericalError
from .landen import LandenPair, landen_descend, landen_relations
from .laurent import (LaurentFamily, LeadingBehavior, expand_pole_family,
                      expand_zero_family, fuchs_determinant, leading_orders)
from .model import (CglParams, PhysicalParams, StatePoint, reduce_params,
                    residual_order3, residual_system)
from .solutions import (EllipticSliceParams, eval_A_product, eval_dlogA_wp,
                        eval_M_product, eval_M_sigma_product, eval_M_wp,
                        eval_M_zeta_sum, eval_psi_wp, pole_affixes)
from .subequation import FitReport, SubequationAnsatz, fit_subequation, reference_f4
from .verify import VerificationReport, verify_slice, verify_subequation_pipeline

__all__ = [
    "__version__",
    "EllipticInvariants", "eval_sigma", "eval_wp", "eval_zeta",
    "invariants_from_periods", "periods_from_invariants",
    "CglError", "NumericalError",
    "LandenPair", "landen_descend", "landen_relations",
    "LaurentFamily", "LeadingBehavior", "expand_pole_family", "expand_zero_family",
    "fuchs_determinant", "leading_orders",
    "CglParams", "PhysicalParams", "StatePoint", "reduce_params",
    "residual_order3", "residual_system",
    "EllipticSliceParams", "eval_A_product", "eval_dlogA_wp", "eval_M_product",
    "eval_M_sigma_product", "eval_M_wp", "eval_M_zeta_sum", "eval_psi_wp", "pole_affixes",
    "FitReport", "SubequationAnsatz", "fit_subequation", "reference_f4",
    "VerificationReport", "verify_slice", "verify_subequation_pipeline",
]
