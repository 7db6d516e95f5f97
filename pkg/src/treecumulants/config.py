"""Numerical tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Tolerance record.

    Attributes
    ----------
    zero : float
        Magnitudes below this are treated as exact zeros (covariance zero
        patterns, degenerate margins).
    simplex : float
        Slack allowed when validating probability tables.
    constraint : float
        Slack allowed in the linear inequalities defining the parameter
        polytope.
    consistency : float
        Relative disagreement allowed between two admissible recovery
        formulas before the input is declared off-model.
    model : float
        Absolute disagreement allowed when re-evaluating recovered parameters
        against the observed tree cumulants.
    """

    zero: float = 1e-9
    simplex: float = 1e-9
    constraint: float = 1e-12
    consistency: float = 1e-8
    model: float = 1e-9


DEFAULT = Tolerances()

# Dense subset-indexed tables are 2**n long.
MAX_DENSE_LEAVES = 16
# Exhaustive edge-subset enumeration per spanned subtree.
MAX_POSET_EDGES = 20
# Full joint tables over all nodes are 2**|V| long.
MAX_JOINT_NODES = 20
MAX_SET_PARTITION = 10
MAX_SINGULAR_ELEMENTS = 20
