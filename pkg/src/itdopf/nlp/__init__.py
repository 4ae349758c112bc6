from .kkt import kkt_residuals
from .model import ConstraintBlock, ModelBuilder, NlpModel, QuadraticObjective, TermSet
from .solver import Solution, SolverOptions, Status, solve, solve_linear

__all__ = [
    "ConstraintBlock",
    "ModelBuilder",
    "NlpModel",
    "QuadraticObjective",
    "Solution",
    "SolverOptions",
    "Status",
    "TermSet",
    "kkt_residuals",
    "solve",
    "solve_linear",
]
