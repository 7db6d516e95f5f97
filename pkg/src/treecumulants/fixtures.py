"""Reference trees and parameter points used by tests, the self-test and the docs."""

from __future__ import annotations

from fractions import Fraction

from .params import OmegaParams, ThetaParams
from .tree import TreeTopology, parse_newick

QUARTET_NEWICK = "(1,2,(3,4)a)r;"
TRIPOD_NEWICK = "(1,2,3)h;"
SEVEN_LEAF_NEWICK = "((1,2)a,3,((4,5)d,(6,7)e)c)b;"

# Reference four-decimal table for the quartet: pattern, p, lambda, kappa.
# Patterns list leaf 1 first.
QUARTET_TABLE = (
    ("0000", 0.0444, 1.0000, 0.0),
    ("0001", 0.0307, 0.5800, 0.0),
    ("0010", 0.0307, 0.5800, 0.0),
    ("0011", 0.0403, 0.3700, 0.0336),
    ("0100", 0.0346, 0.6200, 0.0),
    ("0101", 0.0323, 0.3724, 0.0128),
    ("0110", 0.0323, 0.3724, 0.0128),
    ("0111", 0.0547, 0.2422, -0.0020),
    ("1000", 0.0482, 0.7000, 0.0),
    ("1001", 0.0491, 0.4220, 0.0160),
    ("1010", 0.0491, 0.4220, 0.0160),
    ("1011", 0.0875, 0.2750, -0.0026),
    ("1100", 0.0828, 0.4660, 0.0320),
    ("1101", 0.0979, 0.2853, -0.0038),
    ("1110", 0.0979, 0.2853, -0.0038),
    ("1111", 0.1875, 0.1875, 0.0006),
)

# Reference (eta_r1, eta_r2, eta_ra, eta_a3, eta_a4, mu_bar_r, mu_bar_a) list for
# the quartet fiber. The fourth tuple is inconsistent with the sign-switch
# orbit; ``QUARTET_FIBER_FOURTH`` is the orbit point it stands for.
QUARTET_FIBER_REFERENCE = (
    (0.5, 0.4, 0.5, 0.4, 0.4, -0.6, -0.4),
    (-0.5, -0.4, -0.5, 0.4, 0.4, 0.6, -0.4),
    (0.5, 0.4, -0.5, -0.4, -0.4, -0.6, 0.4),
    (-0.5, -0.4, 0.5, -0.4, -0.4, -0.6, -0.4),
)
QUARTET_FIBER_FOURTH = (-0.5, -0.4, 0.5, -0.4, -0.4, 0.6, 0.4)
QUARTET_LEAF_MU_BAR = (-0.4, -0.24, -0.16, -0.16)

# Pairs with non-zero covariance in the seven-leaf zero pattern.
SEVEN_LEAF_NONZERO_PAIRS = ((1, 2), (1, 3), (2, 3), (4, 5))
SEVEN_LEAF_ISOLATED = (("b", "c"), ("c", "d"), ("c", "e"), ("e", "6"), ("e", "7"))
SEVEN_LEAF_ACTIVE_CLASSES = (
    (("1", "a"),),
    (("2", "a"),),
    (("a", "b"), ("b", "3")),
    (("d", "4"), ("d", "5")),
)


def quartet_tree() -> TreeTopology:
    return parse_newick(QUARTET_NEWICK)


def quartet_theta(exact: bool = False) -> ThetaParams:
    """
    Quartet parameters reproducing the reference pattern table.

    Edges ``(r,1)`` and ``(r,a)`` have ``(theta_10, theta_11) = (0.3, 0.8)``;
    the other three edges ``(0.3, 0.7)``; the root has ``P(X_r = 1) = 0.8``.
    With ``exact`` the values are :class:`Fraction` objects.
    """
    t = quartet_tree()
    num = (lambda s: Fraction(s)) if exact else float
    r, a = t.resolve("r"), t.resolve("a")
    strong = (num("0.3"), num("0.8"))
    weak = (num("0.3"), num("0.7"))
    cond = {(r, 1): strong, (r, a): strong, (r, 2): weak, (a, 3): weak, (a, 4): weak}
    return ThetaParams(t, num("0.8"), cond)


def quartet_point(values=QUARTET_FIBER_REFERENCE[0]) -> OmegaParams:
    """Omega point from a ``(eta_r1, eta_r2, eta_ra, eta_a3, eta_a4, mu_r, mu_a)`` tuple."""
    t = quartet_tree()
    r, a = t.resolve("r"), t.resolve("a")
    e_r1, e_r2, e_ra, e_a3, e_a4, m_r, m_a = values
    mu_bar = dict(zip((1, 2, 3, 4), QUARTET_LEAF_MU_BAR))
    mu_bar.update({r: m_r, a: m_a})
    eta = {(r, 1): e_r1, (r, 2): e_r2, (r, a): e_ra, (a, 3): e_a3, (a, 4): e_a4}
    return OmegaParams(t, mu_bar, eta)


def quartet_tuple(omega: OmegaParams) -> tuple[float, ...]:
    """Inverse of :func:`quartet_point`."""
    t = omega.tree
    r, a = t.resolve("r"), t.resolve("a")
    e = omega.eta
    return (e[(r, 1)], e[(r, 2)], e[(r, a)], e[(a, 3)], e[(a, 4)], omega.mu_bar[r], omega.mu_bar[a])


def seven_leaf_point() -> OmegaParams:
    """A model point on the seven-leaf tree realizing its reference zero pattern."""
    t = parse_newick(SEVEN_LEAF_NEWICK)
    mu_bar = {v: 0.1 * (v % 5) - 0.2 for v in t.nodes}
    eta = {e: 0.5 for e in t.directed_edges()}
    for u, v in SEVEN_LEAF_ISOLATED:
        eta[t.orient((t.resolve(u), t.resolve(v)))] = 0.0
    return OmegaParams(t, mu_bar, eta)


def quartet_manifold_point() -> OmegaParams:
    """Quartet point with the inner edge switched off (both inner nodes of degree two)."""
    values = list(QUARTET_FIBER_REFERENCE[0])
    values[2] = 0.0
    return quartet_point(tuple(values))


def six_leaf_manifold_point() -> OmegaParams:
    """
    Six-leaf point whose active path classes have inner endpoints.

    Node ``m`` joins ``u`` (over leaves 1, 2), ``v`` (over leaves 3, 4) and
    ``x`` (over leaves 5, 6); the edge ``(m, x)`` carries no covariance, so
    ``u - m - v`` and ``5 - x - 6`` are the active paths.
    """
    t = parse_newick("((1,2)u,(3,4)v,(5,6)x)m;")
    mu_bar = {v: 0.05 * ((3 * v) % 7) - 0.15 for v in t.nodes}
    eta = {e: 0.45 for e in t.directed_edges()}
    eta[(t.resolve("m"), t.resolve("v"))] = -0.35
    eta[(t.resolve("m"), t.resolve("x"))] = 0.0
    return OmegaParams(t, mu_bar, eta)
