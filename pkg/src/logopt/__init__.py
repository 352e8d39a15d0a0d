"""Exact solvers linking logic and optimization: probability-logic LPs,
clausal inference and cutting planes, decision diagrams, and logic-based
Benders decomposition."""

from .lp import LinearConstraint, LpProblem, lp_solve, milp_solve

__all__ = ["LinearConstraint", "LpProblem", "lp_solve", "milp_solve"]
__version__ = "0.1.0"
