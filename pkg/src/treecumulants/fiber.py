"""
Identifiability of the tree model from its low-order moments.

Given the pairwise and triple central moments of the leaves, this module
locates the edges that carry no covariance, classifies the set of parameter
points (the fiber) that reproduce the moments, recovers the identifiable
squared parameters in closed form, fixes their signs, and enumerates finite
fibers with local sign switches.

Throughout, ``Var_v = (1 - mu_bar_v^2) / 4`` is the variance of node ``v``.
For a tripod centred at ``u`` the identity
``mu_ijk^2 + 4 mu_ij mu_ik mu_jk = Var_u^2 (b_i b_j b_k)^2`` (with ``b`` the
regression coefficients of the leaves on ``Y_u``) underlies every recovery
formula below.
"""

from __future__ import annotations

import itertools
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

import numpy as np

from .config import DEFAULT, MAX_SINGULAR_ELEMENTS
from .moments import CentralMoments, TreeCumulants, kappa_to_mu, mu_to_kappa
from .params import OmegaParams, check_constraints, psi_contracted
from .tree import Edge, Forest, TreeTopology, edge_key, path_edges, remove_edges, spanning_subtree

__all__ = [
    "OffModelError",
    "DegenerateMarginError",
    "CovarianceSummary",
    "FiniteSmooth",
    "ManifoldWithCorners",
    "Singular",
    "DeepestSingularity",
    "PathInvariant",
    "RecoveredSquares",
    "SignAssignment",
    "FiberReport",
    "covariance_summary",
    "isolated_edges",
    "edge_classes",
    "p_forest_and_degenerates",
    "classify_fiber",
    "recover_tripod",
    "recover_parameters",
    "path_invariant_choices",
    "solve_signs",
    "consistent_sign_assignment",
    "local_sign_switch",
    "enumerate_fiber",
    "deepest_singularity",
    "analyze_fiber",
]


class OffModelError(ValueError):
    """The moments cannot come from the tree model (within tolerance)."""

    def __init__(self, message: str, check: str = ""):
        super().__init__(message)
        self.check = check


class DegenerateMarginError(ValueError):
    """A leaf variable is almost surely constant."""


# ---------------------------------------------------------------------- #
# covariance summary


@dataclass(frozen=True)
class CovarianceSummary:
    """
    Leaf means with all pairwise and triple central moments.

    Attributes
    ----------
    n : int
        Number of leaves.
    mu1 : tuple
        Leaf means ``P(X_i = 1)``.
    mu2, mu3 : Mapping
        Central moments keyed by sorted leaf tuples; values with magnitude
        below ``zero_tol`` are stored as exact zeros.
    zero_tol : float
        Snapping threshold.
    warnings : tuple of str
        Values whose magnitude lies in ``[zero_tol, 10 * zero_tol)``.
    """

    n: int
    mu1: tuple
    mu2: Mapping[tuple[int, int], float]
    mu3: Mapping[tuple[int, int, int], float]
    zero_tol: float
    warnings: tuple[str, ...] = ()

    def pair(self, i: int, j: int):
        return self.mu2[(i, j) if i < j else (j, i)]

    def triple(self, i: int, j: int, k: int):
        return self.mu3[tuple(sorted((i, j, k)))]

    def mu_bar(self, i: int):
        return 1 - 2 * self.mu1[i - 1]

    def var(self, i: int):
        return self.mu1[i - 1] * (1 - self.mu1[i - 1])

    def zero_pairs(self) -> list[tuple[int, int]]:
        return sorted(k for k, v in self.mu2.items() if v == 0)


def covariance_summary(m: Union[CentralMoments, TreeCumulants], eps: float = DEFAULT.zero) -> CovarianceSummary:
    """
    Extract pairwise and triple moments, snapping ``|x| < eps`` to zero.

    Tree cumulants are accepted as well, since they coincide with central
    moments on sets of at most three leaves.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    table = m.mu if isinstance(m, CentralMoments) else m.kappa
    n = m.n
    notes = []

    def snap(key, x):
        if abs(x) < eps:
            return 0
        if eps and abs(x) < 10 * eps:
            notes.append(f"moment {''.join(map(str, key))} = {float(x):.3g} is within 10*eps of zero")
        return x

    mu2 = {}
    mu3 = {}
    for key in itertools.combinations(range(1, n + 1), 2):
        mu2[key] = snap(key, table[(1 << (key[0] - 1)) | (1 << (key[1] - 1))])
    for key in itertools.combinations(range(1, n + 1), 3):
        mask = sum(1 << (i - 1) for i in key)
        mu3[key] = snap(key, table[mask])
    return CovarianceSummary(n, tuple(m.means), mu2, mu3, eps, tuple(notes))


# ---------------------------------------------------------------------- #
# report types


@dataclass(frozen=True)
class FiniteSmooth:
    count: int
    tag = "finite"


@dataclass(frozen=True)
class ManifoldWithCorners:
    dimension: int
    degree_two_nodes: tuple[int, ...]
    tag = "manifold"


@dataclass(frozen=True)
class DeepestSingularity:
    """
    Common intersection of the fiber's components.

    ``eta = 0`` on every edge of ``zero_edges`` and ``mu_bar^2 = 1`` on every
    node of ``unit_nodes``. ``minimal_pairs`` lists the inclusion-minimal
    ``(nodes, edges)`` choices that already force every observed zero
    covariance.
    """

    zero_edges: frozenset[Edge]
    unit_nodes: frozenset[int]
    minimal_pairs: tuple[tuple[frozenset[int], frozenset[Edge]], ...]

    def constraints(self, tree: Optional[TreeTopology] = None) -> list[str]:
        name = tree.node_name if tree is not None else str
        edges = sorted(tree.orient(e) for e in self.zero_edges) if tree is not None else sorted(self.zero_edges)
        out = [f"1 - mu_bar[{name(v)}]^2 = 0" for v in sorted(self.unit_nodes)]
        out += [f"eta[{name(u)},{name(v)}] = 0" for u, v in edges]
        return out


@dataclass(frozen=True)
class Singular:
    deepest: DeepestSingularity
    tag = "singular"


Classification = Union[FiniteSmooth, ManifoldWithCorners, Singular]


@dataclass(frozen=True)
class PathInvariant:
    """
    Identifiable quantities of one active edge class (a path from ``ends[0]`` to ``ends[1]``).

    ``ends[0]`` is the endpoint nearest the root. ``mu_sq`` is the squared
    covariance of the endpoint variables, ``eta_sq`` its square divided by
    ``Var(ends[0])^2`` and ``rho_sq`` the squared correlation.
    """

    edges: tuple[Edge, ...]
    ends: tuple[int, int]
    mu_sq: float
    eta_sq: float
    rho_sq: float
    choice: tuple[int, ...]


@dataclass(frozen=True)
class RecoveredSquares:
    """Closed-form recovery results; edges keyed ``(parent, child)``."""

    leaf_mu_bar: Mapping[int, float]
    mu_bar_sq: Mapping[int, float]
    eta_sq: Mapping[Edge, float]
    paths: tuple[PathInvariant, ...]
    checks: tuple[str, ...] = ()


@dataclass(frozen=True)
class SignAssignment:
    edge_signs: Mapping[Edge, int]
    node_signs: Mapping[int, int]


@dataclass(frozen=True)
class FiberReport:
    tree: TreeTopology
    isolated: frozenset[Edge]
    forest: Forest
    classes_isolated: tuple[tuple[Edge, ...], ...]
    classes_active: tuple[tuple[Edge, ...], ...]
    degenerate_nodes: frozenset[int]
    classification: Classification
    recovered: Optional[RecoveredSquares] = None
    points: tuple[OmegaParams, ...] = ()
    warnings: tuple[str, ...] = field(default=())


# ---------------------------------------------------------------------- #
# zero pattern


def _side(t: TreeTopology, edge: Edge) -> tuple[frozenset[int], frozenset[int]]:
    """Leaves on each side of ``edge`` (first side contains ``edge[0]``)."""
    u, v = edge
    seen = {v, u}
    stack = [v]
    leaves = set()
    while stack:
        x = stack.pop()
        if t.is_leaf(x):
            leaves.add(x)
        for y in t.neighbors(x):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    other = frozenset(t.leaves) - leaves
    return other, frozenset(leaves)


def isolated_edges(t: TreeTopology, c: CovarianceSummary) -> frozenset[Edge]:
    """Edges all of whose crossing leaf pairs have zero covariance."""
    out = set()
    for e in t.edges:
        a, b = _side(t, e)
        if all(c.pair(i, j) == 0 for i in a for j in b):
            out.add(e)
    return frozenset(out)


def _dsu_classes(edges: Iterable[Edge], links: Iterable[tuple[Edge, Edge]]) -> list[list[Edge]]:
    rep = {e: e for e in edges}

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for a, b in links:
        rep[find(a)] = find(b)
    groups: dict[Edge, list[Edge]] = {}
    for e in sorted(rep):
        groups.setdefault(find(e), []).append(e)
    return sorted(groups.values())


def _path_order(t: TreeTopology, cls: list[Edge]) -> tuple[Edge, ...]:
    ends = _path_ends(t, cls)
    if ends is None:
        return tuple(sorted(cls))
    start = ends[0]
    order = []
    left = set(cls)
    x = start
    while left:
        e = next(e for e in left if x in e)
        left.remove(e)
        order.append(e)
        x = e[0] if e[1] == x else e[1]
    return tuple(order)


def _path_ends(t: TreeTopology, cls: Iterable[Edge]) -> Optional[tuple[int, int]]:
    """Endpoints of a path-shaped edge set, root-nearest first; ``None`` if not a path."""
    deg: dict[int, int] = {}
    for u, v in cls:
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    ends = [v for v, d in deg.items() if d == 1]
    if len(ends) != 2 or any(d > 2 for d in deg.values()):
        return None
    depth = {v: len(t.path_nodes(t.root, v)) if t.root is not None else 0 for v in ends}
    ends.sort(key=lambda v: (depth[v], v))
    return ends[0], ends[1]


def edge_classes(t: TreeTopology, isolated: Iterable[Edge]) -> tuple[tuple[tuple[Edge, ...], ...], tuple[tuple[Edge, ...], ...]]:
    """
    Equivalence classes of isolated and of active edges.

    Two edges of the same kind are linked when they share a node at which
    every other incident edge is isolated. Isolated classes are sorted edge
    tuples; active classes are listed along their path, starting at the
    endpoint nearest the root.
    """
    iso = {edge_key(*e) for e in isolated}
    links_iso, links_act = [], []
    for w in t.nodes:
        inc = sorted(edge_key(w, x) for x in t.neighbors(w))
        for a, b in itertools.combinations(inc, 2):
            others = [e for e in inc if e != a and e != b]
            if not all(e in iso for e in others):
                continue
            if a in iso and b in iso:
                links_iso.append((a, b))
            elif a not in iso and b not in iso:
                links_act.append((a, b))
    c_iso = tuple(tuple(c) for c in _dsu_classes(iso, links_iso))
    c_act = tuple(_path_order(t, c) for c in _dsu_classes(t.edges - iso, links_act))
    return c_iso, c_act


def p_forest_and_degenerates(t: TreeTopology, isolated: Iterable[Edge]) -> tuple[Forest, frozenset[int]]:
    """The forest without isolated edges and the inner nodes of degree below two in it."""
    forest = remove_edges(t, isolated)
    deg = {v: 0 for v in t.nodes}
    for u, v in forest.edges:
        deg[u] += 1
        deg[v] += 1
    return forest, frozenset(v for v in t.inner_nodes if deg[v] < 2)


def _check_margins(c: CovarianceSummary):
    for i in range(1, c.n + 1):
        if c.var(i) == 0 or abs(c.mu_bar(i)) >= 1:
            raise DegenerateMarginError(f"leaf {i} is degenerate (P(X_{i}=1) = {c.mu1[i - 1]})")


def classify_fiber(t: TreeTopology, c: CovarianceSummary) -> FiberReport:
    """
    Classify the fiber from the zero pattern of the covariances.

    Returns a report without recovered values or points.

    Raises
    ------
    DegenerateMarginError
        If some leaf is almost surely constant.
    """
    n = t.require_model_tree()
    if n != c.n:
        raise ValueError("tree and moments disagree on the number of leaves")
    _check_margins(c)
    iso = isolated_edges(t, c)
    c_iso, c_act = edge_classes(t, iso)
    forest, degenerate = p_forest_and_degenerates(t, iso)
    if degenerate:
        cls: Classification = Singular(deepest_singularity(t, iso, degenerate, c))
    else:
        deg2 = tuple(v for v in t.inner_nodes if forest.degree(v) == 2)
        if deg2:
            cls = ManifoldWithCorners(2 * len(deg2), deg2)
        else:
            cls = FiniteSmooth(2 ** (len(t.nodes) - n))
    return FiberReport(t, iso, forest, c_iso, c_act, degenerate, cls, warnings=c.warnings)


# ---------------------------------------------------------------------- #
# closed-form recovery


def _rel_close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def recover_tripod(c: CovarianceSummary, i: int, j: int, k: int) -> tuple[float, float, float, float]:
    """
    Squared parameters of the tripod through leaves ``i, j, k``.

    Returns ``(mu_bar_h^2, eta_hi^2, eta_hj^2, eta_hk^2)`` for the node ``h``
    separating the three leaves, with each ``eta`` the regression
    coefficient of the leaf on ``Y_h``.

    Raises
    ------
    ValueError
        If some pairwise covariance is zero.
    OffModelError
        If ``mu_ij mu_ik mu_jk < 0``.
    """
    mij, mik, mjk = c.pair(i, j), c.pair(i, k), c.pair(j, k)
    prod = mij * mik * mjk
    if prod == 0:
        raise ValueError(f"leaves {i},{j},{k}: a pairwise covariance is zero")
    if prod < 0:
        raise OffModelError(f"mu_{i}{j} mu_{i}{k} mu_{j}{k} < 0 is impossible under the model", "tripod sign")
    m3 = c.triple(i, j, k)
    top = m3 * m3 + 4 * prod
    return (m3 * m3 / top, top / mjk ** 2, top / mik ** 2, top / mij ** 2)


def _forest_adj(t: TreeTopology, isolated: frozenset[Edge]) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {v: set() for v in t.nodes}
    for u, v in t.edges - isolated:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def _branches(t: TreeTopology, adj, u: int, skip: Optional[int] = None) -> list[list[int]]:
    """Leaves reachable in the forest through each neighbour of ``u`` except ``skip``."""
    out = []
    for w in sorted(adj[u]):
        if w == skip:
            continue
        seen = {u, w}
        stack = [w]
        leaves = []
        while stack:
            x = stack.pop()
            if t.is_leaf(x):
                leaves.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if leaves:
            out.append(sorted(leaves))
    return out


def _triples(branches: list[list[int]]):
    where = {x: b for b, leaves in enumerate(branches) for x in leaves}
    for trip in itertools.combinations(sorted(where), 3):
        if len({where[x] for x in trip}) == 3:
            yield trip


def _ordered_pairs(branches: list[list[int]]):
    where = {x: b for b, leaves in enumerate(branches) for x in leaves}
    for a, b in itertools.permutations(sorted(where), 2):
        if where[a] != where[b]:
            yield a, b


def _unordered_pairs(branches: list[list[int]]):
    where = {x: b for b, leaves in enumerate(branches) for x in leaves}
    for a, b in itertools.combinations(sorted(where), 2):
        if where[a] != where[b]:
            yield a, b


class _Recovery:
    """Shared state for recovering one tree's identifiable squares."""

    def __init__(self, t: TreeTopology, c: CovarianceSummary, isolated: frozenset[Edge], tol: float):
        self.t, self.c, self.tol = t, c, tol
        self.adj = _forest_adj(t, isolated)
        self.checks: list[str] = []
        self._mu_sq: dict[int, float] = {}

    def node_mu_bar_sq(self, v: int) -> float:
        if self.t.is_leaf(v):
            return self.c.mu_bar(v) ** 2
        if v not in self._mu_sq:
            trips = itertools.islice(_triples(_branches(self.t, self.adj, v)), 2)
            values = [(trip, recover_tripod(self.c, *trip)[0]) for trip in trips]
            if not values:
                raise ValueError(f"no admissible leaf triple around node {self.t.node_name(v)}")
            if len(values) > 1:
                self._cross_check(f"mu_bar[{self.t.node_name(v)}]^2", values)
            self._mu_sq[v] = values[0][1]
        return self._mu_sq[v]

    def var(self, v: int) -> float:
        return (1 - self.node_mu_bar_sq(v)) / 4

    def _cross_check(self, what: str, values):
        (c1, a), (c2, b) = values[0], values[1]
        if not _rel_close(a, b, self.tol):
            raise OffModelError(f"{what}: choice {c1} gives {a:.12g} but {c2} gives {b:.12g}", what)
        self.checks.append(f"{what}: {c1} vs {c2} agree")

    def path_choices(self, ends: tuple[int, int], first_steps: tuple[int, int]):
        """Every admissible estimate of ``Cov(Y_u, Y_v)^2`` for the path ``u .. v``."""
        t, c = self.t, self.c
        u, v = ends
        su, sv = first_steps  # neighbours of u and v along the path
        u_leaf, v_leaf = t.is_leaf(u), t.is_leaf(v)
        if u_leaf and v_leaf:
            yield (u, v), c.pair(u, v) ** 2
            return
        if not u_leaf and not v_leaf:
            bu, bv = _branches(t, self.adj, u, su), _branches(t, self.adj, v, sv)
            var_u = self.var(u)
            for i, j in _ordered_pairs(bu):
                for k, l in _ordered_pairs(bv):
                    num = c.triple(i, j, k) ** 2 + 4 * c.pair(i, j) * c.pair(i, k) * c.pair(j, k)
                    den = c.triple(i, k, l) ** 2 + 4 * c.pair(i, k) * c.pair(i, l) * c.pair(k, l)
                    beta_sq = c.pair(i, l) ** 2 / c.pair(i, j) ** 2 * num / den
                    yield (i, j, k, l), beta_sq * var_u ** 2
            return
        centre, leaf, skip = (v, u, sv) if u_leaf else (u, v, su)
        var_c = self.var(centre)
        for j, k in _unordered_pairs(_branches(t, self.adj, centre, skip)):
            beta_sq = recover_tripod(c, leaf, j, k)[1]
            yield (leaf, j, k), beta_sq * var_c ** 2

    def path_invariant(self, cls: tuple[Edge, ...]) -> PathInvariant:
        t = self.t
        ends = _path_ends(t, cls)
        if ends is None:
            raise ValueError(f"edge class {cls} is not a path")
        u, v = ends
        su = next(x for e in cls if u in e for x in e if x != u)
        sv = next(x for e in cls if v in e for x in e if x != v)
        choices = list(itertools.islice(self.path_choices((u, v), (su, sv)), 2))
        if not choices:
            raise ValueError(f"no admissible leaves for the path {t.node_name(u)}..{t.node_name(v)}")
        if len(choices) > 1:
            self._cross_check(f"cov[{t.node_name(u)},{t.node_name(v)}]^2", choices)
        choice, mu_sq = choices[0]
        var_u, var_v = self.var(u), self.var(v)
        return PathInvariant(tuple(cls), (u, v), mu_sq, mu_sq / var_u ** 2, mu_sq / (var_u * var_v), choice)


def recover_parameters(t: TreeTopology, c: CovarianceSummary, report: Optional[FiberReport] = None,
                       tol: float = DEFAULT.consistency) -> RecoveredSquares:
    """
    Recover every identifiable squared parameter.

    In the finite case this gives ``mu_bar_v^2`` for every inner node and
    ``eta_uv^2`` for every edge (zero on isolated edges). In the manifold
    case only the endpoints of active classes get ``mu_bar^2`` and each class
    gets a :class:`PathInvariant`; single-edge classes also fill ``eta_sq``.

    Leaves are chosen in lexicographic order and the first estimate is
    compared against the next admissible choice when one exists.

    Raises
    ------
    ValueError
        For singular fibers, or when no admissible leaves exist.
    OffModelError
        When two admissible choices disagree beyond ``tol`` (relative).
    """
    report = report or classify_fiber(t, c)
    if isinstance(report.classification, Singular):
        raise ValueError("closed-form recovery needs a non-singular fiber")
    rec = _Recovery(t, c, report.isolated, tol)
    paths = tuple(rec.path_invariant(cls) for cls in report.classes_active)
    eta_sq: dict[Edge, float] = {t.orient(e): 0 for e in report.isolated}
    for p in paths:
        if len(p.edges) == 1:
            parent, child = t.orient(p.edges[0])
            # eta on a single edge is relative to the parent's variance
            eta_sq[(parent, child)] = p.mu_sq / rec.var(parent) ** 2
    mu_sq = {}
    for v in t.inner_nodes:
        if report.forest.degree(v) >= 3:
            mu_sq[v] = rec.node_mu_bar_sq(v)
    leaf_mu = {i: c.mu_bar(i) for i in t.leaves}
    order = {e: k for k, e in enumerate(t.directed_edges())}
    return RecoveredSquares(leaf_mu, dict(sorted(mu_sq.items())),
                            dict(sorted(eta_sq.items(), key=lambda kv: order[kv[0]])),
                            paths, tuple(rec.checks))


def path_invariant_choices(t: TreeTopology, c: CovarianceSummary, cls: Iterable[Edge],
                           report: Optional[FiberReport] = None) -> list[tuple[tuple[int, ...], float]]:
    """All admissible ``(leaf choice, Cov(Y_u, Y_v)^2)`` estimates for one active class."""
    report = report or classify_fiber(t, c)
    cls = tuple(cls)
    rec = _Recovery(t, c, report.isolated, DEFAULT.consistency)
    u, v = _path_ends(t, cls)
    su = next(x for e in cls if u in e for x in e if x != u)
    sv = next(x for e in cls if v in e for x in e if x != v)
    return list(rec.path_choices((u, v), (su, sv)))


# ---------------------------------------------------------------------- #
# signs


def _gf2_solve(rows: list[tuple[int, int]], nvars: int) -> Optional[int]:
    """
    Solve ``parity(mask & x) = rhs`` over GF(2).

    Pivots are taken at the highest set bit so that low-index variables stay
    free; free variables are set to zero. Returns ``None`` when inconsistent.
    """
    basis: dict[int, tuple[int, int]] = {}
    for mask, rhs in rows:
        while mask:
            top = mask.bit_length() - 1
            if top not in basis:
                basis[top] = (mask, rhs)
                break
            bm, br = basis[top]
            mask ^= bm
            rhs ^= br
        else:
            if rhs:
                return None
    x = 0
    for top in sorted(basis):
        mask, rhs = basis[top]
        rest = mask & ~(1 << top) & x
        if (bin(rest).count("1") & 1) ^ rhs:
            x |= 1 << top
    return x


def _median(t: TreeTopology, trip) -> Optional[int]:
    sub, _ = spanning_subtree(t, trip)
    for v in sub.nodes:
        if sub.degree(v) == 3:
            return v
    return None


def solve_signs(t: TreeTopology, k: Union[TreeCumulants, CovarianceSummary], squares: RecoveredSquares) -> SignAssignment:
    """
    Signs of ``eta`` and inner ``mu_bar`` matching the observed cumulant signs.

    Pairwise cumulants fix the parity of edge signs along each path; triple
    cumulants additionally involve the sign of the median node. Among all
    solutions the one with the earliest edges (in preorder) positive is
    returned.

    Raises
    ------
    OffModelError
        If the sign constraints are inconsistent.
    """
    c = k if isinstance(k, CovarianceSummary) else covariance_summary(k)
    edges = [e for e in t.directed_edges() if squares.eta_sq.get(e, 0) != 0]
    nodes = [v for v in sorted(t.inner_nodes) if squares.mu_bar_sq.get(v, 0) != 0]
    col = {e: b for b, e in enumerate(edges)}
    col.update({v: len(edges) + b for b, v in enumerate(nodes)})
    rows = []

    def equation(path: Iterable[Edge], extra: int, value):
        # cumulants through an edge with eta = 0 vanish and carry no sign
        mask = extra
        for e in path:
            de = t.orient(e)
            if de not in col:
                return
            mask |= 1 << col[de]
        rows.append((mask, int(value < 0)))

    for i, j in itertools.combinations(range(1, c.n + 1), 2):
        if c.pair(i, j) != 0:
            equation(path_edges(t, i, j), 0, c.pair(i, j))
    for trip in itertools.combinations(range(1, c.n + 1), 3):
        x = c.triple(*trip)
        mid = _median(t, trip)
        if x != 0 and mid in col:
            equation(spanning_subtree(t, trip)[0].edges, 1 << col[mid], x)
    sol = _gf2_solve(rows, len(col))
    if sol is None:
        raise OffModelError("no sign pattern reproduces the signs of the observed cumulants", "signs")
    edge_signs = {e: (0 if squares.eta_sq.get(e, 0) == 0 else (-1 if e in col and sol >> col[e] & 1 else 1))
                  for e in t.directed_edges()}
    node_signs = {v: (-1 if v in col and sol >> col[v] & 1 else 1) for v in t.inner_nodes}
    return SignAssignment(edge_signs, node_signs)


def consistent_sign_assignment(t: TreeTopology, k: TreeCumulants, squares: RecoveredSquares,
                               tol: float = DEFAULT.model) -> OmegaParams:
    """
    One fiber point: square roots of ``squares`` with consistent signs.

    Raises
    ------
    ValueError
        If ``squares`` does not determine every parameter (non-finite fiber).
    OffModelError
        If no sign pattern works, the point leaves the parameter space, or its
        tree cumulants differ from ``k`` by more than ``tol``.
    """
    missing = [v for v in t.inner_nodes if v not in squares.mu_bar_sq]
    missing += [e for e in t.directed_edges() if e not in squares.eta_sq]
    if missing:
        raise ValueError(f"parameters not identified: {missing}")
    signs = solve_signs(t, k, squares)
    mu_bar = {i: float(x) for i, x in squares.leaf_mu_bar.items()}
    for v, sq in squares.mu_bar_sq.items():
        mu_bar[v] = signs.node_signs[v] * float(sq) ** 0.5
    eta = {e: signs.edge_signs[e] * float(sq) ** 0.5 for e, sq in squares.eta_sq.items()}
    omega = OmegaParams(t, mu_bar, eta)
    bad = check_constraints(omega, 1e-9)
    if bad:
        raise OffModelError(f"recovered point violates the parameter space: {bad[0]}", "constraints")
    fitted = psi_contracted(t, omega)
    if fitted.tree == k.tree:
        gap = max(abs(float(a) - float(b)) for a, b in zip(fitted.kappa, k.kappa))
    else:
        # different edge-partition lattices; compare the central moments instead
        gap = float(np.max(np.abs(kappa_to_mu(fitted).mu - kappa_to_mu(k).mu)))
    if gap > tol:
        raise OffModelError(f"recovered point misses the tree cumulants by {gap:.3g}", "model")
    return omega


def local_sign_switch(omega: OmegaParams, h: int) -> OmegaParams:
    """Negate ``mu_bar_h`` and ``eta`` on every edge at inner node ``h``."""
    t = omega.tree
    if h not in t.nodes:
        raise ValueError(f"unknown node {h}")
    if t.is_leaf(h):
        raise ValueError(f"node {t.node_name(h)} is a leaf")
    mu_bar = dict(omega.mu_bar)
    mu_bar[h] = -mu_bar[h]
    eta = {e: (-x if h in e else x) for e, x in omega.eta.items()}
    return OmegaParams(t, mu_bar, eta)


def enumerate_fiber(omega: OmegaParams) -> list[OmegaParams]:
    """
    Orbit of ``omega`` under all compositions of local sign switches.

    Switch sets are visited in increasing bitmask order over the sorted inner
    nodes; duplicates are dropped.
    """
    inner = sorted(omega.tree.inner_nodes)
    out, seen = [], set()
    for mask in range(1 << len(inner)):
        point = omega
        for b, h in enumerate(inner):
            if mask >> b & 1:
                point = local_sign_switch(point, h)
        key = point.vector()
        if key not in seen:
            seen.add(key)
            out.append(point)
    return out


# ---------------------------------------------------------------------- #
# singular fibers


def deepest_singularity(t: TreeTopology, isolated: Iterable[Edge], degenerates: Iterable[int],
                        c: CovarianceSummary) -> DeepestSingularity:
    """
    Deepest-singularity constraints and the minimal ``(nodes, edges)`` pairs.

    A pair ``(V0, E0)`` forces ``mu_ij = 0`` when the path between ``i`` and
    ``j`` meets ``V0`` or uses an edge of ``E0``: inside the parameter space a
    node with ``mu_bar^2 = 1`` cuts every covariance through it.

    Raises
    ------
    ValueError
        If there is nothing degenerate, or the search space exceeds the cap.
    OffModelError
        If some zero covariance cannot be explained by any choice.
    """
    iso = sorted(edge_key(*e) for e in isolated)
    deg = sorted(degenerates)
    if not deg:
        raise ValueError("deepest singularity needs degenerate nodes")
    items: list[Union[int, Edge]] = list(deg) + list(iso)
    if len(items) > MAX_SINGULAR_ELEMENTS:
        raise ValueError(f"{len(items)} candidate constraints exceed the cap {MAX_SINGULAR_ELEMENTS}")
    bit = {x: 1 << b for b, x in enumerate(items)}
    hits = []
    for i, j in c.zero_pairs():
        nodes = t.path_nodes(i, j)
        m = sum(bit[v] for v in nodes if v in bit)
        m |= sum(bit[edge_key(*e)] for e in path_edges(t, i, j) if edge_key(*e) in bit)
        if not m:
            raise OffModelError(f"zero covariance of leaves {i},{j} has no explanation on this tree", "zero pattern")
        hits.append(m)
    minimal: list[int] = []
    for m in sorted(range(1 << len(items)), key=lambda m: (bin(m).count("1"), m)):
        if any(m & h == 0 for h in hits):
            continue
        if any(k & m == k for k in minimal):
            continue
        minimal.append(m)

    def unpack(m):
        nodes = frozenset(x for x in deg if m & bit[x])
        edges = frozenset(x for x in iso if m & bit[x])
        return nodes, edges

    pairs = tuple(unpack(m) for m in minimal)
    return DeepestSingularity(frozenset(iso), frozenset(deg), pairs)


# ---------------------------------------------------------------------- #


def analyze_fiber(t: TreeTopology, k: Union[TreeCumulants, CentralMoments], eps: float = DEFAULT.zero,
                  tol: float = DEFAULT.consistency) -> FiberReport:
    """
    Classification plus recovery; finite fibers also get all their points.

    Raises
    ------
    OffModelError
        When recovery or sign fixing shows the moments are not from the model.
    """
    c = covariance_summary(k, eps)
    report = classify_fiber(t, c)
    for note in c.warnings:
        _warnings.warn(note, RuntimeWarning, stacklevel=2)
    if isinstance(report.classification, Singular):
        return report
    squares = recover_parameters(t, c, report, tol)
    points: tuple[OmegaParams, ...] = ()
    if isinstance(report.classification, FiniteSmooth):
        if isinstance(k, CentralMoments):
            k = mu_to_kappa(t, k)
        base = consistent_sign_assignment(t, k, squares)
        points = tuple(enumerate_fiber(base))
    return FiberReport(report.tree, report.isolated, report.forest, report.classes_isolated,
                       report.classes_active, report.degenerate_nodes, report.classification,
                       squares, points, report.warnings)
