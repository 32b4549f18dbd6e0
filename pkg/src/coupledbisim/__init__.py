"""Bounded checking of coupled logical bisimulations for the pure lambda calculus."""

from .bisim import CheckConfig, Report, Verdict, check_applicative_bisim, check_clb, check_clb_upto, check_logical_bisim
from .closures import CoupledRelation
from .semantics import CBN, CBV, Converged, FuelExhausted, Strategy, evaluate, step
from .terms import FiniteRelation, Term, fill, parse_context, parse_term

__all__ = [
    "CBN",
    "CBV",
    "CheckConfig",
    "Converged",
    "CoupledRelation",
    "FiniteRelation",
    "FuelExhausted",
    "Report",
    "Strategy",
    "Term",
    "Verdict",
    "check_applicative_bisim",
    "check_clb",
    "check_clb_upto",
    "check_logical_bisim",
    "evaluate",
    "fill",
    "parse_context",
    "parse_term",
    "step",
]
