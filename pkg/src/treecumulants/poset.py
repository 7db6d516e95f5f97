"""
Edge-partition lattices of trees and the classical set-partition lattice.

For a leaf set ``I`` of a tree ``T`` the lattice ``Pi_T(I)`` consists of the
partitions of ``I`` obtained by deleting edges of the spanned subtree ``T(I)``
and reading off connected components. Each partition ``pi`` is stored with its
maximal inducing edge set ``E_pi``; the order is ``pi <= nu`` iff
``E_pi`` contains ``E_nu``.

Construction enumerates edge subsets. Runs of edges joined by degree-two
nodes outside ``I`` always induce the same split, so they are enumerated as a
single unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator

import numpy as np

from .config import MAX_POSET_EDGES, MAX_SET_PARTITION
from .tree import Edge, TreeError, TreeTopology, edge_key, spanning_subtree


class PosetSizeError(ValueError):
    """Raised when an enumeration cap would be exceeded."""


def _fmt_block(block: Iterable[int]) -> str:
    items = sorted(block)
    sep = "" if all(x < 10 for x in items) else ","
    return sep.join(str(x) for x in items)


def canonical_blocks(blocks: Iterable[Iterable[int]]) -> tuple[frozenset[int], ...]:
    """Blocks as frozensets sorted by their smallest element."""
    return tuple(sorted((frozenset(b) for b in blocks if b), key=min))


@dataclass(frozen=True)
class EdgePartition:
    """A partition of the leaf set together with its maximal inducing edge set."""

    blocks: tuple[frozenset[int], ...]
    max_edge_set: frozenset[Edge]

    def __str__(self) -> str:
        return "|".join(_fmt_block(b) for b in self.blocks)

    def restrict(self, block: Iterable[int]) -> tuple[frozenset[int], ...]:
        """Blocks lying inside ``block`` (only meaningful when this partition refines it)."""
        block = frozenset(block)
        return tuple(b for b in self.blocks if b <= block)


@dataclass(frozen=True)
class SetPartition:
    blocks: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "|".join(_fmt_block(b) for b in self.blocks)


# ---------------------------------------------------------------------- #


def _components(nodes: Iterable[int], edges: Iterable[Edge]) -> dict[int, int]:
    rep = {v: v for v in nodes}

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for u, v in edges:
        rep[find(u)] = find(v)
    return {v: find(v) for v in rep}


def _blocks_after_removal(sub: TreeTopology, leaf_set: frozenset[int], kept: Iterable[Edge]):
    comp = _components(sub.nodes, kept)
    groups: dict[int, set[int]] = {}
    for i in leaf_set:
        groups.setdefault(comp[i], set()).add(i)
    return canonical_blocks(groups.values())


def _closure_edges(sub: TreeTopology, blocks) -> frozenset[Edge]:
    # Edges that can be removed without changing the partition are exactly
    # those outside every spanned block subtree.
    keep: set[Edge] = set()
    for b in blocks:
        if len(b) > 1:
            keep |= spanning_subtree(sub, b)[0].edges
    return frozenset(sub.edges - keep)


def induced_partition(t: TreeTopology, leaf_set: Iterable[int], removed: Iterable[tuple[int, int]]) -> EdgePartition:
    """
    Partition of ``leaf_set`` induced by deleting ``removed`` from ``T(I)``.

    Raises
    ------
    TreeError
        If an edge of ``removed`` is not an edge of ``T(I)``.
    """
    leaf_set = frozenset(leaf_set)
    sub, _ = spanning_subtree(t, leaf_set)
    removed = {edge_key(*e) for e in removed}
    outside = removed - sub.edges
    if outside:
        raise TreeError(f"edges outside the spanned subtree: {sorted(outside)}")
    blocks = _blocks_after_removal(sub, leaf_set, sub.edges - removed)
    return EdgePartition(blocks, _closure_edges(sub, blocks))


class EdgePartitionPoset:
    """
    The lattice of edge partitions of ``leaf_set`` in ``T(leaf_set)``.

    Elements are sorted so that larger removed edge sets come first; this is a
    linear extension of the order (the bottom element is first, the top
    element last). Möbius values are exact integers, memoized by row.
    """

    def __init__(self, t: TreeTopology, leaf_set: Iterable[int]):
        leaf_set = frozenset(leaf_set)
        if len(leaf_set) < 1:
            raise ValueError("leaf set must be non-empty")
        sub, _ = spanning_subtree(t, leaf_set)
        self.tree = sub
        self.leaf_set = leaf_set

        edges = sorted(sub.edges)
        bit = {e: 1 << k for k, e in enumerate(edges)}
        # Group edges into runs through degree-2 nodes outside the leaf set.
        joints = [v for v in sub.nodes if v not in leaf_set and sub.degree(v) == 2]
        run_of = _components(edges, [tuple(sorted((edge_key(v, w) for w in sub.neighbors(v))))
                                     for v in joints])
        runs: dict[Edge, list[Edge]] = {}
        for e in edges:
            runs.setdefault(run_of[e], []).append(e)
        run_list = sorted(runs.values())
        if len(run_list) > MAX_POSET_EDGES:
            raise PosetSizeError(
                f"spanned subtree has {len(run_list)} independent edges (cap {MAX_POSET_EDGES})")
        self._run_masks = [sum(bit[e] for e in r) for r in run_list]
        self._edge_bit = bit
        self._edges = edges

        leaves = sorted(leaf_set)
        path_mask = {(a, b): sum(bit[edge_key(x, y)] for x, y in zip(p, p[1:]))
                     for a in leaves for b in leaves if a < b
                     for p in [sub.path_nodes(a, b)]}

        def closure(blocks) -> int:
            # edges outside every spanned block subtree
            used = 0
            for blk in blocks:
                first, *rest = sorted(blk)
                for b in rest:
                    used |= path_mask[first, b]
            return full & ~used

        full = (1 << len(edges)) - 1
        found: dict[tuple, int] = {}
        elements: list[EdgePartition] = []
        masks: list[int] = []
        by_subset = np.empty(1 << len(run_list), dtype=np.int64)
        for s in range(1 << len(run_list)):
            cut = 0
            for k, rm in enumerate(self._run_masks):
                if s >> k & 1:
                    cut |= rm
            kept = [e for e in edges if not cut & bit[e]]
            blocks = _blocks_after_removal(sub, leaf_set, kept)
            idx = found.get(blocks)
            if idx is None:
                cmask = closure(blocks)
                idx = len(elements)
                found[blocks] = idx
                elements.append(EdgePartition(blocks, frozenset(e for e in edges if cmask & bit[e])))
                masks.append(cmask)
            by_subset[s] = idx

        order = sorted(range(len(elements)), key=lambda k: (-bin(masks[k]).count("1"), masks[k]))
        rank = {old: new for new, old in enumerate(order)}
        self.elements: tuple[EdgePartition, ...] = tuple(elements[k] for k in order)
        self._masks = np.array([masks[k] for k in order], dtype=np.int64)
        self._by_subset = np.array([rank[int(k)] for k in by_subset], dtype=np.int64)
        self._index = {p.blocks: k for k, p in enumerate(self.elements)}
        m = self._masks
        # leq[i, j]  <=>  element i <= element j  <=>  E_j is a subset of E_i
        self._leq = (m[None, :] & ~m[:, None]) == 0
        self._rows: dict[int, np.ndarray] = {}
        self._to_top: np.ndarray | None = None

    # ------------------------------------------------------------------ #

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[EdgePartition]:
        return iter(self.elements)

    def __contains__(self, p) -> bool:
        return self._key(p) in self._index

    @property
    def bottom(self) -> EdgePartition:
        return self.elements[0]

    @property
    def top(self) -> EdgePartition:
        return self.elements[-1]

    @staticmethod
    def _key(p):
        if isinstance(p, EdgePartition):
            return p.blocks
        return canonical_blocks(p)

    def index(self, p) -> int:
        """Position of ``p`` (an EdgePartition or an iterable of blocks)."""
        try:
            return self._index[self._key(p)]
        except KeyError:
            raise ValueError(f"{p} is not an element of this poset") from None

    def element(self, blocks) -> EdgePartition:
        return self.elements[self.index(blocks)]

    def leq(self, p, q) -> bool:
        return bool(self._leq[self.index(p), self.index(q)])

    def _from_edge_mask(self, mask: int) -> int:
        s = 0
        for k, rm in enumerate(self._run_masks):
            if mask & rm:
                s |= 1 << k
        return int(self._by_subset[s])

    def meet(self, p, q) -> EdgePartition:
        """Greatest lower bound: remove the union of both maximal edge sets."""
        i, j = self.index(p), self.index(q)
        return self.elements[self._from_edge_mask(int(self._masks[i] | self._masks[j]))]

    def join(self, p, q) -> EdgePartition:
        """Least upper bound: remove the intersection of both maximal edge sets."""
        i, j = self.index(p), self.index(q)
        return self.elements[self._from_edge_mask(int(self._masks[i] & self._masks[j]))]

    def meet_index(self, i: int, j: int) -> int:
        return self._from_edge_mask(int(self._masks[i] | self._masks[j]))

    def leq_matrix(self) -> np.ndarray:
        return self._leq.copy()

    # ------------------------------------------------------------------ #
    # Möbius function

    def _row(self, i: int) -> np.ndarray:
        row = self._rows.get(i)
        if row is None:
            leq = self._leq.astype(np.int64)
            row = np.zeros(len(self), dtype=np.int64)
            row[i] = 1
            for k in range(i + 1, len(self)):
                if self._leq[i, k]:
                    # m(pi, nu) = -sum_{pi <= delta < nu} m(pi, delta)
                    row[k] = -int(row @ leq[:, k])
            self._rows[i] = row
        return row

    def mobius(self, p, q) -> int:
        """Möbius value ``m(p, q)``; zero unless ``p <= q``."""
        return int(self._row(self.index(p))[self.index(q)])

    def mobius_to_top(self) -> np.ndarray:
        """
        Vector of ``m(pi, top)`` over all elements, in element order.

        Uses the dual recursion ``m(pi, top) = -sum_{pi < delta <= top} m(delta, top)``,
        which is independent of the row recursion behind :meth:`mobius`.
        """
        if self._to_top is None:
            leq = self._leq.astype(np.int64)
            col = np.zeros(len(self), dtype=np.int64)
            col[-1] = 1
            for k in range(len(self) - 2, -1, -1):
                col[k] = -int(leq[k] @ col)
            self._to_top = col
        return self._to_top.copy()

    def mobius_matrix(self) -> np.ndarray:
        return np.array([self._row(i) for i in range(len(self))])

    # ------------------------------------------------------------------ #

    def covers(self) -> list[tuple[EdgePartition, EdgePartition]]:
        """All cover relations ``(lower, upper)``."""
        leq = self._leq
        out = []
        for i in range(len(self)):
            ups = [j for j in range(len(self)) if j != i and leq[i, j]]
            for j in ups:
                if not any(leq[k, j] for k in ups if k != j):
                    out.append((self.elements[i], self.elements[j]))
        return out

    def hasse_lines(self) -> list[str]:
        """Line-based Hasse diagram dump, one ``lower < upper`` cover per line."""
        return [f"{lo} < {hi}" for lo, hi in self.covers()]


@lru_cache(maxsize=4096)
def _cached_poset(t: TreeTopology, leaf_set: frozenset[int]) -> EdgePartitionPoset:
    return EdgePartitionPoset(t, leaf_set)


def build_poset(t: TreeTopology, leaf_set: Iterable[int]) -> EdgePartitionPoset:
    """
    The lattice of edge partitions of ``leaf_set`` in the spanned subtree.

    Raises
    ------
    ValueError
        If ``leaf_set`` has fewer than two elements.
    PosetSizeError
        If the spanned subtree is too large to enumerate.
    """
    leaf_set = frozenset(leaf_set)
    if len(leaf_set) < 2:
        raise ValueError("edge-partition posets need at least two leaves")
    return _cached_poset(t, leaf_set)


# ---------------------------------------------------------------------- #
# classical partitions


def enumerate_set_partitions(leaf_set: Iterable[int]) -> list[SetPartition]:
    """All set partitions in restricted-growth-string order."""
    items = sorted(leaf_set)
    if len(items) > MAX_SET_PARTITION:
        raise PosetSizeError(f"set partitions of {len(items)} elements exceed the cap {MAX_SET_PARTITION}")
    if not items:
        return [SetPartition(())]
    out = []

    def grow(k: int, labels: list[int], top: int):
        if k == len(items):
            groups: list[list[int]] = [[] for _ in range(top + 1)]
            for x, g in zip(items, labels):
                groups[g].append(x)
            out.append(SetPartition(canonical_blocks(groups)))
            return
        for g in range(top + 2):
            labels.append(g)
            grow(k + 1, labels, max(top, g))
            labels.pop()

    grow(1, [0], 0)
    return out


def classical_mobius_top(p: SetPartition | int) -> int:
    """``(-1)**(k-1) * (k-1)!`` for a partition with ``k`` blocks."""
    k = p if isinstance(p, int) else len(p)
    return (-1) ** (k - 1) * factorial(k - 1)
