"""Random trees, parameters and distributions for property runs."""

from __future__ import annotations

import numpy as np

from .moments import ProbabilityTable
from .params import ThetaParams
from .tree import TreeTopology, parse_newick


def random_tree(n: int, rng: np.random.Generator, trivalent: bool = False) -> TreeTopology:
    """
    Random tree with leaves ``1..n`` rooted at an inner node.

    Leaves are attached one at a time, either by subdividing a random edge
    or (unless ``trivalent``) by joining an existing inner node.
    """
    if n < 2:
        raise ValueError("need at least two leaves")
    if n == 2:
        return parse_newick("(1,2);")
    order = [int(x) + 1 for x in rng.permutation(n)]
    adj: dict[int, set[int]] = {-1: set(order[:3])}
    for leaf in order[:3]:
        adj[leaf] = {-1}
    next_inner = -2
    for leaf in order[3:]:
        inner = [v for v in adj if v < 0]
        edges = sorted((u, v) for u in adj for v in adj[u] if u < v)
        if not trivalent and rng.random() < 0.3:
            host = inner[rng.integers(len(inner))]
            adj[host].add(leaf)
            adj[leaf] = {host}
            continue
        u, v = edges[rng.integers(len(edges))]
        w = next_inner
        next_inner -= 1
        adj[u].discard(v)
        adj[v].discard(u)
        adj[w] = {u, v, leaf}
        adj[u].add(w)
        adj[v].add(w)
        adj[leaf] = {w}
    inner = sorted(v for v in adj if v < 0)
    root = inner[rng.integers(len(inner))]

    def render(v, parent):
        if v > 0:
            return str(v)
        return "(" + ",".join(render(w, v) for w in sorted(adj[v]) if w != parent) + ")"

    return parse_newick(render(root, None) + ";")


def random_theta(tree: TreeTopology, rng: np.random.Generator, low: float = 0.02, high: float = 0.98) -> ThetaParams:
    """Conditional probabilities drawn uniformly from ``[low, high]``."""
    cond = {e: (float(rng.uniform(low, high)), float(rng.uniform(low, high))) for e in tree.directed_edges()}
    return ThetaParams(tree, float(rng.uniform(low, high)), cond)


def random_table(n: int, rng: np.random.Generator) -> ProbabilityTable:
    """Dirichlet(1, ..., 1) distribution on ``{0,1}^n``."""
    return ProbabilityTable(n, rng.dirichlet(np.ones(1 << n)))


def product_table(n: int, first: list[int], rng: np.random.Generator) -> ProbabilityTable:
    """
    Random distribution making the leaves in ``first`` independent of the rest.

    Each side gets its own Dirichlet table; the joint is their product.
    """
    first = sorted(first)
    second = [i for i in range(1, n + 1) if i not in first]
    pa = rng.dirichlet(np.ones(1 << len(first)))
    pb = rng.dirichlet(np.ones(1 << len(second)))
    out = np.zeros(1 << n)
    for mask in range(1 << n):
        ia = sum(1 << k for k, i in enumerate(first) if mask >> (i - 1) & 1)
        ib = sum(1 << k for k, i in enumerate(second) if mask >> (i - 1) & 1)
        out[mask] = pa[ia] * pb[ib]
    return ProbabilityTable(n, out)
