"""
Brute-force reference implementations.

Everything here is computed straight from definitions, with no shared code
paths with the fast routines it validates: joints by explicit enumeration,
moments by expectation sums, Möbius values by inverting the zeta matrix, edge
partitions by trying every removal set, and (conditional) independence both
through moment identities and through conditioning.
"""

from __future__ import annotations

import itertools
from typing import Iterable

import numpy as np

from .config import MAX_JOINT_NODES
from .params import FullJoint, ThetaParams
from .tree import Edge, TreeTopology, edge_key

__all__ = [
    "FullJoint",
    "joint_by_enumeration",
    "leaf_table_by_enumeration",
    "moments_by_definition",
    "node_central_moment",
    "check_independence",
    "independence_by_definition",
    "check_conditional_independence",
    "conditional_independence_by_conditioning",
    "global_markov_check",
    "edge_partitions_by_brute_force",
    "mobius_by_zeta_inverse",
    "tree_cumulants_by_brute_force",
    "classical_cumulant_by_recursion",
    "edge_classes_by_closure",
]

_TOL = 1e-12


def joint_by_enumeration(theta: ThetaParams) -> FullJoint:
    """Joint over all nodes, one assignment at a time."""
    tree = theta.tree
    if len(tree.nodes) > MAX_JOINT_NODES:
        raise ValueError(f"{len(tree.nodes)} nodes exceed the joint-table cap {MAX_JOINT_NODES}")
    nodes = tuple(sorted(tree.nodes))
    values = []
    for states in itertools.product((0, 1), repeat=len(nodes)):
        y = dict(zip(reversed(nodes), states))  # first node = lowest bit
        prob = theta.root_p1 if y[tree.root] else 1 - theta.root_p1
        for v in nodes:
            u = tree.parent(v)
            if u is None:
                continue
            t10, t11 = theta.edge_cond[(u, v)]
            on = t11 if y[u] else t10
            prob *= on if y[v] else 1 - on
        values.append(prob)
    # itertools.product varies the last position fastest, i.e. nodes[0]
    return FullJoint(nodes, np.array(values))


def leaf_table_by_enumeration(theta: ThetaParams) -> np.ndarray:
    """Leaf distribution by summing the enumerated joint over hidden states."""
    joint = joint_by_enumeration(theta)
    n = theta.tree.require_model_tree()
    out = np.zeros(1 << n)
    for index, prob in enumerate(joint.values):
        out[index & ((1 << n) - 1)] += prob
    return out


def moments_by_definition(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Non-central and central moment tables of a leaf distribution by expectation sums."""
    p = np.asarray(p, dtype=float)
    size = len(p)
    n = size.bit_length() - 1
    means = [sum(p[a] for a in range(size) if a >> i & 1) for i in range(n)]
    lam = np.zeros(size)
    mu = np.zeros(size)
    for mask in range(size):
        members = [i for i in range(n) if mask >> i & 1]
        for a in range(size):
            lam[mask] += p[a] * all(a >> i & 1 for i in members)
            term = p[a]
            for i in members:
                term *= (a >> i & 1) - means[i]
            mu[mask] += term
    return lam, mu


# ---------------------------------------------------------------------- #
# independence


def _states(joint: FullJoint) -> dict[int, np.ndarray]:
    idx = np.arange(len(joint.values))
    return {v: (idx >> k) & 1 for k, v in enumerate(joint.nodes)}


def node_central_moment(joint: FullJoint, nodes: Iterable[int]) -> float:
    """``E[prod_{v in nodes} (Y_v - E Y_v)]``."""
    st = _states(joint)
    p = joint.values
    term = p.copy()
    for v in nodes:
        term = term * (st[v] - np.dot(p, st[v]))
    return float(term.sum())


def _nonempty_subsets(items):
    items = sorted(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def _check_disjoint(*sets):
    seen: set[int] = set()
    for s in sets:
        if seen & set(s):
            raise ValueError("node sets must be disjoint")
        seen |= set(s)


def check_independence(joint: FullJoint, a: Iterable[int], b: Iterable[int], tol: float = _TOL) -> bool:
    """``Y_A`` independent of ``Y_B`` via ``mu_IJ = mu_I mu_J`` for all non-empty ``I, J``."""
    a, b = sorted(a), sorted(b)
    _check_disjoint(a, b)
    for i in _nonempty_subsets(a):
        mi = node_central_moment(joint, i)
        for j in _nonempty_subsets(b):
            if abs(node_central_moment(joint, i + j) - mi * node_central_moment(joint, j)) > tol:
                return False
    return True


def _marginal(joint: FullJoint, nodes) -> dict[tuple, float]:
    pos = {v: k for k, v in enumerate(joint.nodes)}
    out: dict[tuple, float] = {}
    for index, prob in enumerate(joint.values):
        key = tuple(index >> pos[v] & 1 for v in nodes)
        out[key] = out.get(key, 0.0) + prob
    return out


def independence_by_definition(joint: FullJoint, a: Iterable[int], b: Iterable[int], tol: float = _TOL) -> bool:
    """``P(y_A, y_B) = P(y_A) P(y_B)`` for every pattern."""
    a, b = sorted(a), sorted(b)
    _check_disjoint(a, b)
    pab, pa, pb = _marginal(joint, a + b), _marginal(joint, a), _marginal(joint, b)
    for ya in itertools.product((0, 1), repeat=len(a)):
        for yb in itertools.product((0, 1), repeat=len(b)):
            if abs(pab.get(ya + yb, 0.0) - pa.get(ya, 0.0) * pb.get(yb, 0.0)) > tol:
                return False
    return True


def check_conditional_independence(joint: FullJoint, a: Iterable[int], b: Iterable[int], h: int,
                                   tol: float = _TOL) -> bool:
    """
    ``Y_A`` independent of ``Y_B`` given ``Y_h`` through moment identities.

    With ``eta_I = E[U_I U_h] / Var(Y_h)`` both
    ``mu_IJ = mu_I mu_J + Var_h eta_I eta_J`` and
    ``eta_IJ = mu_I eta_J + eta_I mu_J + (1 - 2 E Y_h) eta_I eta_J``
    must hold for all non-empty ``I ⊆ A``, ``J ⊆ B``.

    Raises
    ------
    ValueError
        If the sets overlap or ``Y_h`` is degenerate.
    """
    a, b = sorted(a), sorted(b)
    _check_disjoint(a, b, [h])
    st = _states(joint)
    lam = float(np.dot(joint.values, st[h]))
    var = lam * (1 - lam)
    if var <= tol:
        raise ValueError(f"conditioning variable {h} is degenerate")

    def mu(s):
        return node_central_moment(joint, s)

    def eta(s):
        return node_central_moment(joint, tuple(s) + (h,)) / var

    for i in _nonempty_subsets(a):
        mi, ei = mu(i), eta(i)
        for j in _nonempty_subsets(b):
            mj, ej = mu(j), eta(j)
            if abs(mu(i + j) - mi * mj - var * ei * ej) > tol:
                return False
            if abs(eta(i + j) - mi * ej - ei * mj - (1 - 2 * lam) * ei * ej) > tol:
                return False
    return True


def conditional_independence_by_conditioning(joint: FullJoint, a: Iterable[int], b: Iterable[int],
                                             given: Iterable[int], tol: float = _TOL) -> bool:
    """``P(y_A, y_B, y_C) P(y_C) = P(y_A, y_C) P(y_B, y_C)`` for every pattern."""
    a, b, c = sorted(a), sorted(b), sorted(given)
    _check_disjoint(a, b, c)
    pabc = _marginal(joint, a + b + c)
    pac, pbc, pc = _marginal(joint, a + c), _marginal(joint, b + c), _marginal(joint, c)
    for ya in itertools.product((0, 1), repeat=len(a)):
        for yb in itertools.product((0, 1), repeat=len(b)):
            for yc in itertools.product((0, 1), repeat=len(c)):
                lhs = pabc.get(ya + yb + yc, 0.0) * pc.get(yc, 0.0)
                rhs = pac.get(ya + yc, 0.0) * pbc.get(yb + yc, 0.0)
                if abs(lhs - rhs) > tol:
                    return False
    return True


def _components_without(t: TreeTopology, removed: set[int]) -> list[list[int]]:
    seen = set(removed)
    comps = []
    for start in sorted(t.nodes):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in t.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def global_markov_check(t: TreeTopology, joint: FullJoint, tol: float = 1e-12) -> bool:
    """
    Whether ``joint`` satisfies every separation statement of ``t``.

    For each separator ``C`` the components of ``T - C`` must be mutually
    independent given ``Y_C`` (which covers every ``A ⊥ B | C``). All
    separators are tried when ``|V| <= 8``; otherwise single nodes and the
    full set of inner nodes.
    """
    if set(joint.nodes) != set(t.nodes):
        raise ValueError("joint and tree have different nodes")
    nodes = sorted(t.nodes)
    if len(nodes) <= 8:
        separators = [set(c) for r in range(1, len(nodes)) for c in itertools.combinations(nodes, r)]
    else:
        separators = [{v} for v in nodes] + [set(t.inner_nodes)]
    for c in separators:
        comps = _components_without(t, c)
        for k in range(len(comps) - 1):
            rest = [v for comp in comps[k + 1:] for v in comp]
            if not conditional_independence_by_conditioning(joint, comps[k], rest, c, tol):
                return False
    return True


# ---------------------------------------------------------------------- #
# combinatorics


def _blocks(t_nodes, kept_edges, leaf_set) -> tuple[frozenset[int], ...]:
    adj = {v: [] for v in t_nodes}
    for u, v in kept_edges:
        adj[u].append(v)
        adj[v].append(u)
    seen, out = set(), []
    for i in sorted(leaf_set):
        if i in seen:
            continue
        comp, stack = {i}, [i]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    stack.append(y)
        seen |= comp
        out.append(frozenset(comp & set(leaf_set)))
    return tuple(sorted(out, key=min))


def edge_partitions_by_brute_force(t: TreeTopology, leaf_set: Iterable[int]) -> dict[tuple, frozenset[Edge]]:
    """
    Every partition induced by removing edges of ``T(I)``, with its maximal removal set.

    The maximal set is the union of all removal sets inducing the partition.
    """
    leaf_set = set(leaf_set)
    # edges of T(I): those with leaves of I on both sides
    span_edges = []
    for e in sorted(t.edges):
        rest = t.edges - {e}
        sides = _blocks(t.nodes, rest, leaf_set)
        if len(sides) > 1:
            span_edges.append(e)
    span_nodes = {v for e in span_edges for v in e} | leaf_set
    out: dict[tuple, set[Edge]] = {}
    for r in range(len(span_edges) + 1):
        for removed in itertools.combinations(span_edges, r):
            kept = [e for e in span_edges if e not in removed]
            key = _blocks(span_nodes, kept, leaf_set)
            out.setdefault(key, set()).update(removed)
    return {k: frozenset(v) for k, v in out.items()}


def mobius_by_zeta_inverse(leq: np.ndarray) -> np.ndarray:
    """Möbius matrix as the inverse of the zeta matrix ``leq``."""
    inv = np.linalg.inv(np.asarray(leq, dtype=float))
    return np.rint(inv).astype(np.int64)


def tree_cumulants_by_brute_force(t: TreeTopology, mu: np.ndarray) -> np.ndarray:
    """
    Tree cumulants from brute-force partitions and an inverted zeta matrix.

    Uses ``kappa_I = sum_pi m(pi, top) prod_B mu_B`` with the partial order
    read off the maximal removal sets.
    """
    mu = np.asarray(mu, dtype=float)
    n = len(mu).bit_length() - 1
    out = np.zeros(len(mu))
    for mask in range(len(mu)):
        leaves = [i + 1 for i in range(n) if mask >> i & 1]
        if len(leaves) < 2:
            continue
        parts = edge_partitions_by_brute_force(t, leaves)
        keys = list(parts)
        leq = np.array([[parts[q] <= parts[p] for q in keys] for p in keys])
        mob = mobius_by_zeta_inverse(leq)
        top = keys.index((frozenset(leaves),))
        total = 0.0
        for k, blocks in enumerate(keys):
            term = float(mob[k, top])
            for blk in blocks:
                term *= mu[sum(1 << (i - 1) for i in blk)]
            total += term
        out[mask] = total
    return out


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def classical_cumulant_by_recursion(mu: np.ndarray, leaf_set: Iterable[int]) -> float:
    """
    Classical cumulant from ``mu_I = sum_pi prod_B cum_B`` solved recursively.

    Singleton cumulants of centred variables are zero.
    """
    memo: dict[frozenset, float] = {}

    def cum(block: frozenset) -> float:
        if len(block) == 1:
            return 0.0
        if block not in memo:
            total = mu[sum(1 << (i - 1) for i in block)]
            for part in _set_partitions(sorted(block)):
                if len(part) > 1:
                    term = 1.0
                    for b in part:
                        term *= cum(frozenset(b))
                    total -= term
            memo[block] = float(total)
        return memo[block]

    return cum(frozenset(leaf_set))


def edge_classes_by_closure(t: TreeTopology, isolated: Iterable[Edge]) -> set[frozenset[Edge]]:
    """Edge classes via a boolean transitive closure of the linking relation."""
    iso = {edge_key(*e) for e in isolated}
    edges = sorted(t.edges)
    k = len(edges)
    rel = np.eye(k, dtype=bool)
    for x, e in enumerate(edges):
        for y, f in enumerate(edges):
            shared = set(e) & set(f)
            if x == y or not shared or (e in iso) != (f in iso):
                continue
            w = shared.pop()
            others = {edge_key(w, z) for z in t.neighbors(w)} - {e, f}
            rel[x, y] = all(o in iso for o in others)
    for m in range(k):
        rel |= rel[:, [m]] & rel[[m], :]
    return {frozenset(edges[y] for y in range(k) if rel[x, y]) for x in range(k)}
