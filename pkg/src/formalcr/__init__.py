"""Exact invariants, symmetry decisions and normal forms for formal real hypersurfaces in C^2."""

from .series import BeyondTruncation, GaussRat, MultiSeries
from .hypersurface import (FormalMap, PhiForm, QForm, check_map, complete_transversal, phi_to_q,
                           pullback, q_to_phi, validate_phi, validate_q)
from .invariants import invariant_pairs, lambda_set, profile, tensor_coeff
from .symmetry import (cardinality_N, finiteness_decision, group_D, group_N, triviality_decision)
from .normalform import equivalence, is_normal_form, normalize, prelim_normalize
from .parser import format_expr, parse_expr

__all__ = [
    "BeyondTruncation", "GaussRat", "MultiSeries",
    "FormalMap", "PhiForm", "QForm", "check_map", "complete_transversal", "phi_to_q", "pullback",
    "q_to_phi", "validate_phi", "validate_q",
    "invariant_pairs", "lambda_set", "profile", "tensor_coeff",
    "cardinality_N", "finiteness_decision", "group_D", "group_N", "triviality_decision",
    "equivalence", "is_normal_form", "normalize", "prelim_normalize",
    "format_expr", "parse_expr",
]
__version__ = "0.1.0"
