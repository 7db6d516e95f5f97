"""
Parameter charts of the binary latent tree model and the maps between them.

Three charts describe the same model:

* ``ThetaParams``: root probability and per-edge conditional probabilities
  ``(P(X_v=1 | X_u=0), P(X_v=1 | X_u=1))``.
* ``OmegaParams``: node mean offsets ``mu_bar_v = 1 - 2 P(X_v=1)`` and edge
  regression coefficients ``eta_uv``.
* ``RhoParams``: standardized versions ``rho_bar_v`` and ``rho_uv``.

Edges are always keyed ``(parent, child)`` under the tree's root.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from types import MappingProxyType
from typing import Mapping, Union

import numpy as np

from .config import DEFAULT, MAX_JOINT_NODES
from .moments import ProbabilityTable, TreeCumulants, leaves_of
from .tree import Edge, TreeError, TreeTopology, edge_key, spanning_subtree, trivalent_expansion

__all__ = [
    "ConstraintError",
    "Violation",
    "ThetaParams",
    "OmegaParams",
    "RhoParams",
    "FullJoint",
    "markov_joint",
    "model_forward",
    "theta_to_omega",
    "omega_to_theta",
    "psi",
    "psi_direct",
    "psi_contracted",
    "omega_to_rho",
    "rho_to_omega",
    "rho_monomials",
    "check_constraints",
]


class ConstraintError(ValueError):
    """Parameters outside the model's parameter space."""

    def __init__(self, violations: list["Violation"]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class Violation:
    """One failed inequality; ``where`` is a node or an edge."""

    where: Union[int, Edge]
    inequality: str
    slack: float

    def __str__(self) -> str:
        return f"{self.where}: {self.inequality} violated by {-self.slack:.3g}"


def _directed(tree: TreeTopology, mapping: Mapping) -> dict[Edge, object]:
    out = {}
    for key, value in mapping.items():
        edge = tree.orient(tuple(key))
        if edge in out:
            raise ValueError(f"edge {edge} given twice")
        out[edge] = value
    missing = set(tree.directed_edges()) - set(out)
    if missing:
        raise ValueError(f"missing edge parameters for {sorted(missing)}")
    return out


def _node_map(tree: TreeTopology, mapping: Mapping) -> dict[int, object]:
    out = dict(mapping)
    if set(out) != set(tree.nodes):
        raise ValueError("node parameters must cover exactly the tree's nodes")
    return out


@dataclass(frozen=True, eq=False)
class ThetaParams:
    """Root probability ``P(X_r = 1)`` and per-edge ``(theta_10, theta_11)``."""

    tree: TreeTopology
    root_p1: float
    edge_cond: Mapping[Edge, tuple[float, float]]

    def __post_init__(self):
        if self.tree.root is None:
            raise TreeError("theta parameters need a rooted tree")
        cond = {e: tuple(v) for e, v in _directed(self.tree, self.edge_cond).items()}
        if any(len(v) != 2 for v in cond.values()):
            raise ValueError("each edge needs two conditional probabilities")
        tol = DEFAULT.constraint
        bad = [Violation(e, "0 <= theta <= 1", -1.0)
               for e, v in cond.items() if any(not -tol <= x <= 1 + tol for x in v)]
        if not -tol <= self.root_p1 <= 1 + tol:
            bad.append(Violation(self.tree.root, "0 <= theta_root <= 1", -1.0))
        if bad:
            raise ConstraintError(bad)
        object.__setattr__(self, "edge_cond", MappingProxyType(cond))


@dataclass(frozen=True, eq=False)
class OmegaParams:
    """Mean offsets ``mu_bar`` per node and regression coefficients ``eta`` per edge."""

    tree: TreeTopology
    mu_bar: Mapping[int, float]
    eta: Mapping[Edge, float]

    def __post_init__(self):
        if self.tree.root is None:
            raise TreeError("omega parameters need a rooted tree")
        object.__setattr__(self, "mu_bar", MappingProxyType(_node_map(self.tree, self.mu_bar)))
        object.__setattr__(self, "eta", MappingProxyType(_directed(self.tree, self.eta)))

    def eta_of(self, u: int, v: int):
        return self.eta[self.tree.orient((u, v))]

    def vector(self) -> tuple[float, ...]:
        """Edge values in directed-edge order, then node values in id order."""
        return tuple(self.eta[e] for e in self.tree.directed_edges()) + \
            tuple(self.mu_bar[v] for v in sorted(self.tree.nodes))


@dataclass(frozen=True, eq=False)
class RhoParams:
    """Standardized node offsets ``rho_bar`` and edge correlations ``rho``."""

    tree: TreeTopology
    rho_bar: Mapping[int, float]
    rho_edge: Mapping[Edge, float]

    def __post_init__(self):
        if self.tree.root is None:
            raise TreeError("rho parameters need a rooted tree")
        object.__setattr__(self, "rho_bar", MappingProxyType(_node_map(self.tree, self.rho_bar)))
        object.__setattr__(self, "rho_edge", MappingProxyType(_directed(self.tree, self.rho_edge)))

    @property
    def t(self) -> dict[int, float]:
        """``t_v = sqrt(1 + rho_bar_v^2 / 4) + rho_bar_v / 2``, always positive."""
        return {v: sqrt(1 + x * x / 4) + x / 2 for v, x in self.rho_bar.items()}


# ---------------------------------------------------------------------- #
# forward maps


@dataclass(frozen=True, eq=False)
class FullJoint:
    """Distribution over all nodes; bit ``k`` of the index is ``nodes[k]``."""

    nodes: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.shape != (1 << len(self.nodes),):
            raise ValueError("joint table length must be 2**len(nodes)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def leaf_marginal(self, n: int) -> ProbabilityTable:
        """Marginal over ``nodes[:n]`` (the leaves when nodes are sorted)."""
        if self.nodes[:n] != tuple(range(1, n + 1)):
            raise ValueError("the first n nodes must be the leaves 1..n")
        return ProbabilityTable(n, self.values.reshape(-1, 1 << n).sum(axis=0))


def _cap_joint(tree: TreeTopology):
    if len(tree.nodes) > MAX_JOINT_NODES:
        raise ValueError(f"{len(tree.nodes)} nodes exceed the joint-table cap {MAX_JOINT_NODES}")


def markov_joint(theta: ThetaParams) -> FullJoint:
    """Joint distribution of all nodes, vectorized over the 2**|V| states."""
    tree = theta.tree
    _cap_joint(tree)
    nodes = tuple(sorted(tree.nodes))
    pos = {v: k for k, v in enumerate(nodes)}
    idx = np.arange(1 << len(nodes))
    state = {v: (idx >> pos[v]) & 1 for v in nodes}
    p = np.where(state[tree.root] == 1, theta.root_p1, 1 - theta.root_p1).astype(float)
    for (u, v), (t10, t11) in theta.edge_cond.items():
        on = np.where(state[u] == 1, t11, t10)
        p *= np.where(state[v] == 1, on, 1 - on)
    return FullJoint(nodes, p)


def model_forward(theta: ThetaParams) -> ProbabilityTable:
    """
    Leaf distribution of the tree model by leaf-to-root elimination.

    Each subtree is summarized by a ``(2, 2**k)`` table: rows index the state
    of its top node, columns the states of the ``k`` leaves below it.
    """
    tree = theta.tree
    n = tree.require_model_tree()
    exact = not isinstance(theta.root_p1, (float, int, np.floating))
    dtype = object if exact else float
    summary: dict[int, tuple[np.ndarray, list[int]]] = {}
    for v in reversed(tree.preorder()):
        kids = tree.children(v)
        if tree.is_leaf(v) and v != tree.root:
            table = np.array([[1, 0], [0, 1]], dtype=dtype)
            summary[v] = (table, [v])
            continue
        table = np.ones((2, 1), dtype=dtype)
        labels: list[int] = []
        if tree.is_leaf(v):
            # a leaf root observes its own state
            table = np.array([[1, 0], [0, 1]], dtype=dtype)
            labels = [v]
        for c in kids:
            t10, t11 = theta.edge_cond[(v, c)]
            sub, sub_labels = summary.pop(c)
            msg = np.array([[1 - t10, t10], [1 - t11, t11]], dtype=dtype) @ sub
            table = (table[:, :, None] * msg[:, None, :]).reshape(2, -1)
            labels += sub_labels
        summary[v] = (table, labels)
    table, labels = summary[tree.root]
    r1 = theta.root_p1
    flat = (1 - r1) * table[0] + r1 * table[1]
    # order axes so that leaf 1 varies fastest
    arr = flat.reshape((2,) * n)
    order = [labels.index(leaf) for leaf in range(n, 0, -1)]
    return ProbabilityTable(n, np.transpose(arr, order).reshape(-1))


def theta_to_omega(theta: ThetaParams) -> OmegaParams:
    """``eta = theta_11 - theta_10`` and ``mu_bar = 1 - 2 P(X_v = 1)``."""
    tree = theta.tree
    lam = {tree.root: theta.root_p1}
    eta = {}
    for v in tree.preorder():
        for c in tree.children(v):
            t10, t11 = theta.edge_cond[(v, c)]
            lam[c] = lam[v] * t11 + (1 - lam[v]) * t10
            eta[(v, c)] = t11 - t10
    return OmegaParams(tree, {v: 1 - 2 * x for v, x in lam.items()}, eta)


def omega_to_theta(omega: OmegaParams, tol: float = DEFAULT.constraint) -> ThetaParams:
    """
    Conditional probabilities of an ``omega`` point.

    Raises
    ------
    ConstraintError
        Listing every violated inequality when ``omega`` lies outside the
        parameter space.
    """
    bad = check_constraints(omega, tol)
    if bad:
        raise ConstraintError(bad)
    mb = omega.mu_bar
    cond = {}
    for (u, v), e in omega.eta.items():
        base = (1 - mb[v]) / 2
        cond[(u, v)] = (_clip(base - e * (1 - mb[u]) / 2), _clip(base + e * (1 + mb[u]) / 2))
    return ThetaParams(omega.tree, _clip((1 - mb[omega.tree.root]) / 2), cond)


def _clip(x):
    # absorb rounding just outside [0, 1]; exact values pass through
    if isinstance(x, float):
        return min(1.0, max(0.0, x))
    return x


def _psi_entries(tree: TreeTopology, mu_bar: Mapping[int, float], eta: Mapping[Edge, float], n: int):
    kappa = [0] * (1 << n)
    for mask in range(1 << n):
        leaves = leaves_of(mask)
        if len(leaves) < 2:
            continue
        sub, top = spanning_subtree(tree, leaves)
        value = (1 - mu_bar[top] ** 2) / 4
        for v in sub.nodes:
            if v not in leaves:
                d = sub.degree(v) - 2
                if d:
                    value = value * mu_bar[v] ** d
        for u, v in sub.edges:
            value = value * eta[tree.orient((u, v))]
        kappa[mask] = value
    return kappa


def _psi_output(tree: TreeTopology, omega: OmegaParams, kappa) -> TreeCumulants:
    n = tree.require_model_tree()
    means = [(1 - omega.mu_bar[i]) / 2 for i in range(1, n + 1)]
    dtype = object if any(not isinstance(x, (float, int)) for x in kappa) else float
    return TreeCumulants(tree, n, np.array(means, dtype=dtype), np.array(kappa, dtype=dtype))


def psi(tree: TreeTopology, omega: OmegaParams) -> TreeCumulants:
    """
    Tree cumulants of an ``omega`` point on a tree with inner degrees <= 3.

    Raises
    ------
    ValueError
        If some inner node has degree above three; use :func:`psi_contracted`.
    """
    high = [v for v in tree.inner_nodes if tree.degree(v) > 3]
    if high:
        raise ValueError(f"inner nodes {high} have degree above 3; use psi_contracted")
    return psi_direct(tree, omega)


def psi_direct(tree: TreeTopology, omega: OmegaParams) -> TreeCumulants:
    """The monomial formula evaluated directly, with degrees taken in ``T(I)``."""
    if omega.tree != tree:
        raise ValueError("parameters belong to a different tree")
    n = tree.require_model_tree()
    return _psi_output(tree, omega, _psi_entries(tree, omega.mu_bar, omega.eta, n))


def psi_contracted(tree: TreeTopology, omega: OmegaParams) -> TreeCumulants:
    """
    Tree cumulants for arbitrary inner degrees via a trivalent refinement.

    The refinement gets ``eta = 1`` on its new edges and copies ``mu_bar``
    across each group of nodes that contracts to one original node.

    Returns
    -------
    TreeCumulants
        Tied to the refinement, because the values are tree cumulants of the
        refined tree (its edge-partition lattice is finer than the original
        one). For trees with inner degrees <= 3 this is the input tree.
    """
    if omega.tree != tree:
        raise ValueError("parameters belong to a different tree")
    n = tree.require_model_tree()
    star, new_edges = trivalent_expansion(tree)
    if not new_edges:
        return psi(tree, omega)
    owner = {v: v for v in star.nodes}
    pending = set(new_edges)
    while pending:
        for u, v in sorted(pending):
            if owner[u] in tree.nodes or owner[v] in tree.nodes:
                a = owner[u] if owner[u] in tree.nodes else owner[v]
                owner[u] = owner[v] = a
                pending.discard((u, v))
                break
        else:  # pragma: no cover - every new node hangs off an original one
            raise TreeError("trivalent refinement is not anchored")
    mu_bar = {v: omega.mu_bar[owner[v]] for v in star.nodes}
    one = 1 if any(not isinstance(x, float) for x in omega.eta.values()) else 1.0
    eta = {}
    for u, v in star.directed_edges():
        if edge_key(u, v) in new_edges:
            eta[(u, v)] = one
        else:
            eta[(u, v)] = omega.eta_of(owner[u], owner[v])
    kappa = _psi_entries(star, mu_bar, eta, n)
    return _psi_output(star, omega, kappa)


# ---------------------------------------------------------------------- #
# rho chart


def omega_to_rho(omega: OmegaParams) -> RhoParams:
    """
    Standardized chart.

    Raises
    ------
    ValueError
        If some node has ``mu_bar_v^2 >= 1``.
    """
    scale = {}
    for v, x in omega.mu_bar.items():
        if not x * x < 1:
            raise ValueError(f"node {omega.tree.node_name(v)} is degenerate (mu_bar = {x})")
        scale[v] = sqrt(1 - x * x)
    rho_bar = {v: 2 * x / scale[v] for v, x in omega.mu_bar.items()}
    rho = {(u, v): scale[u] / scale[v] * e for (u, v), e in omega.eta.items()}
    return RhoParams(omega.tree, rho_bar, rho)


def rho_to_omega(rho: RhoParams) -> OmegaParams:
    """Inverse of :func:`omega_to_rho`."""
    mu_bar = {v: x / sqrt(4 + x * x) for v, x in rho.rho_bar.items()}
    rb = rho.rho_bar
    eta = {(u, v): sqrt((4 + rb[u] ** 2) / (4 + rb[v] ** 2)) * r for (u, v), r in rho.rho_edge.items()}
    return OmegaParams(rho.tree, mu_bar, eta)


def rho_monomials(tree: TreeTopology, rho: RhoParams) -> dict[int, float]:
    """``rho_I`` for every ``|I| >= 2`` as a product over ``T(I)`` (keyed by bitmask)."""
    n = tree.require_model_tree()
    out = {}
    for mask in range(1 << n):
        leaves = leaves_of(mask)
        if len(leaves) < 2:
            continue
        sub, _ = spanning_subtree(tree, leaves)
        value = 1.0
        for v in sub.nodes:
            if v not in leaves:
                value *= rho.rho_bar[v] ** (sub.degree(v) - 2)
        for u, v in sub.edges:
            value *= rho.rho_edge[tree.orient((u, v))]
        out[mask] = value
    return out


# ---------------------------------------------------------------------- #


def check_constraints(params: Union[OmegaParams, RhoParams], tol: float = DEFAULT.constraint) -> list[Violation]:
    """
    Violated inequalities of the parameter space (empty when valid).

    For ``OmegaParams`` the root needs ``-1 <= mu_bar_r <= 1`` and every edge
    ``(u, v)`` needs ``-(1 + mu_bar_v) <= (1 - mu_bar_u) eta <= 1 - mu_bar_v``
    and ``-(1 - mu_bar_v) <= (1 + mu_bar_u) eta <= 1 + mu_bar_v``. For
    ``RhoParams`` the same region is written with ``t_v``.
    """
    out: list[Violation] = []

    def need(where, text, slack):
        if slack < -tol:
            out.append(Violation(where, text, float(slack)))

    if isinstance(params, OmegaParams):
        mb = params.mu_bar
        r = params.tree.root
        need(r, "mu_bar_root >= -1", mb[r] + 1)
        need(r, "mu_bar_root <= 1", 1 - mb[r])
        for (u, v), e in params.eta.items():
            need((u, v), "(1-mu_u)*eta >= -(1+mu_v)", (1 - mb[u]) * e + (1 + mb[v]))
            need((u, v), "(1-mu_u)*eta <= 1-mu_v", (1 - mb[v]) - (1 - mb[u]) * e)
            need((u, v), "(1+mu_u)*eta >= -(1-mu_v)", (1 + mb[u]) * e + (1 - mb[v]))
            need((u, v), "(1+mu_u)*eta <= 1+mu_v", (1 + mb[v]) - (1 + mb[u]) * e)
        return out
    if isinstance(params, RhoParams):
        t = params.t
        for (u, v), x in params.rho_edge.items():
            need((u, v), "rho >= -t_u*t_v", x + t[u] * t[v])
            need((u, v), "rho <= t_u/t_v", t[u] / t[v] - x)
            need((u, v), "rho >= -1/(t_u*t_v)", x + 1 / (t[u] * t[v]))
            need((u, v), "rho <= t_v/t_u", t[v] / t[u] - x)
        return out
    raise TypeError(f"cannot check constraints of {type(params).__name__}")
