"""Unrolled quantum sl(2|1) at odd roots of unity: modules, ribbon structure,
modified trace, tangle evaluation and relative modularity checks."""

from __future__ import annotations

from .modularity import (
    DegreeError,
    KirbyColor,
    coev_ev,
    delta_pm,
    f_ij,
    kirby_color,
    meridian_endo,
    verify_relative_modularity,
)
from .mtrace import module_modified_dim, modified_dim, mtrace, sprime_diagrammatic, sprime_formula
from .repmod import (
    ModuleError,
    ModuleObject,
    Morphism,
    MorphismError,
    Weight,
    check_algebra_relations,
    dual_module,
    eps_module,
    tensor_module,
    typical_module,
    unit_module,
)
from .ribbon import braiding, braiding_inv, coev_left, coev_right, ev_left, ev_right, ptr_right, twist
from .scalar import Context, ScalarError, bracket, qfactorial, qnum, xi_pow
from .tangle import Diagram, DiagramError, evaluate, evaluate_renormalized
from .verify import run_suite

__version__ = "0.1.0"

__all__ = [
    "Context", "ScalarError", "xi_pow", "bracket", "qnum", "qfactorial",
    "Weight", "ModuleObject", "ModuleError", "Morphism", "MorphismError", "typical_module", "eps_module",
    "unit_module", "dual_module", "tensor_module", "check_algebra_relations",
    "braiding", "braiding_inv", "ev_left", "coev_left", "ev_right", "coev_right", "ptr_right", "twist",
    "modified_dim", "module_modified_dim", "mtrace", "sprime_formula", "sprime_diagrammatic",
    "Diagram", "DiagramError", "evaluate", "evaluate_renormalized",
    "KirbyColor", "DegreeError", "kirby_color", "meridian_endo", "f_ij", "coev_ev", "delta_pm", "verify_relative_modularity",
    "run_suite",
]
