"""Softening of hard-typed LF formalizations into soft-typed ones."""
from .kernel import (
    KIND,
    TYPE,
    App,
    Const,
    Context,
    FuelExhausted,
    KindSort,
    Lam,
    LFError,
    Pi,
    TypeCheckError,
    TypeSort,
    Var,
    check_type,
    infer_type,
    normalize,
)
from .logrel import apply_logrel, apply_logrel_context, check_logrel, lr_extend_diagram, lr_extend_theory
from .modsys import CheckError, Diagram, LogicalRelation, ModuleError, Morphism, Theory, check_diagram, check_theory
from .morphisms import apply_morphism, apply_morphism_context, check_morphism, pushout_diagram, pushout_theory
from .paramdrop import ArgPosition, arity, choose_positions, cleaned_pushout, is_unused, remove_positions
from .soften import SoftenResult, load, soften_diagram, soften_morphism, soften_theory
from .syntax import ParseError, parse_diagram, parse_expr, print_diagram, show_expr

__version__ = "0.1.0"
