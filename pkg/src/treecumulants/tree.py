"""
Tree topologies and structural operations.

Nodes are small integers. Trees read from Newick text follow a fixed
numbering: the leaf carrying label ``i`` is node ``i`` (so labels and node ids
coincide on leaves) and inner nodes are numbered ``n+1, n+2, ...`` in preorder,
the root being ``n+1``. Inner-node Newick labels are kept only as display
names.

Edges are stored undirected as sorted pairs. Rooting is metadata: the parent
function is derived by orienting edges away from ``root``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

Edge = tuple[int, int]


class TreeError(ValueError):
    """Raised for structurally invalid trees or operations on them."""


class NewickError(ValueError):
    """Newick syntax or labelling error, with the offending character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def edge_key(u: int, v: int) -> Edge:
    """Canonical undirected form of the edge ``{u, v}``."""
    return (u, v) if u < v else (v, u)


class TreeTopology:
    """
    An immutable tree with explicit adjacency and an optional root.

    Parameters
    ----------
    nodes : iterable of int
    edges : iterable of pairs
        Undirected; orientation of each pair is ignored.
    root : int, optional
    names : dict, optional
        Display names for (some) nodes.

    Leaves are the nodes of degree at most one. For trees describing a model
    the leaves are exactly ``1..n`` (see :meth:`require_model_tree`); subtrees
    spanned on leaf subsets keep the ids of the parent tree.
    """

    __slots__ = ("_nodes", "_edges", "_adj", "_root", "_names", "_parent", "_depth", "_order")

    def __init__(self, nodes: Iterable[int], edges: Iterable[tuple[int, int]],
                 root: Optional[int] = None, names: Optional[dict[int, str]] = None):
        node_set = frozenset(int(v) for v in nodes)
        if not node_set:
            raise TreeError("a tree needs at least one node")
        edge_set = set()
        adj: dict[int, set[int]] = {v: set() for v in node_set}
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise TreeError(f"self-loop at node {u}")
            if u not in node_set or v not in node_set:
                raise TreeError(f"edge ({u}, {v}) uses an unknown node")
            e = edge_key(u, v)
            if e in edge_set:
                raise TreeError(f"duplicate edge {e}")
            edge_set.add(e)
            adj[u].add(v)
            adj[v].add(u)
        if len(edge_set) != len(node_set) - 1:
            raise TreeError("a tree on k nodes has exactly k - 1 edges")
        if root is not None and root not in node_set:
            raise TreeError(f"root {root} is not a node")

        self._nodes = node_set
        self._edges = frozenset(edge_set)
        self._adj = {v: frozenset(ns) for v, ns in adj.items()}
        self._root = root
        self._names = {v: str(s) for v, s in (names or {}).items() if v in node_set and s}

        # BFS from the root (or the smallest node) gives parents, depths and
        # a preorder; it doubles as the connectivity check.
        anchor = root if root is not None else min(node_set)
        parent = {anchor: None}
        depth = {anchor: 0}
        order = [anchor]
        queue = deque([anchor])
        while queue:
            u = queue.popleft()
            for w in sorted(self._adj[u]):
                if w not in parent:
                    parent[w] = u
                    depth[w] = depth[u] + 1
                    order.append(w)
                    queue.append(w)
        if len(parent) != len(node_set):
            raise TreeError("graph is not connected")
        self._parent = parent
        self._depth = depth
        self._order = tuple(order)

    # ------------------------------------------------------------------ #
    # basic accessors

    @property
    def nodes(self) -> frozenset[int]:
        return self._nodes

    @property
    def edges(self) -> frozenset[Edge]:
        return self._edges

    @property
    def root(self) -> Optional[int]:
        return self._root

    @property
    def names(self) -> dict[int, str]:
        return dict(self._names)

    def neighbors(self, v: int) -> frozenset[int]:
        try:
            return self._adj[v]
        except KeyError:
            raise TreeError(f"unknown node {v}") from None

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(sorted(v for v in self._nodes if len(self._adj[v]) <= 1))

    @property
    def inner_nodes(self) -> tuple[int, ...]:
        return tuple(sorted(v for v in self._nodes if len(self._adj[v]) > 1))

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def is_leaf(self, v: int) -> bool:
        return self.degree(v) <= 1

    def parent(self, v: int) -> Optional[int]:
        """Parent of ``v`` when edges are directed away from the root."""
        self._require_root()
        if v not in self._parent:
            raise TreeError(f"unknown node {v}")
        return self._parent[v]

    def children(self, v: int) -> tuple[int, ...]:
        p = self.parent(v)
        return tuple(sorted(w for w in self._adj[v] if w != p))

    def preorder(self) -> tuple[int, ...]:
        """Breadth-first order from the root (or from the smallest node)."""
        return self._order

    def orient(self, edge: tuple[int, int]) -> Edge:
        """Return ``edge`` as ``(parent, child)``."""
        self._require_root()
        u, v = edge
        if edge_key(u, v) not in self._edges:
            raise TreeError(f"({u}, {v}) is not an edge")
        return (u, v) if self._parent.get(v) == u else (v, u)

    def directed_edges(self) -> tuple[Edge, ...]:
        """All edges as ``(parent, child)`` in preorder of the child."""
        self._require_root()
        return tuple((self._parent[v], v) for v in self._order if self._parent[v] is not None)

    def _require_root(self):
        if self._root is None:
            raise TreeError("operation needs a rooted tree")

    # ------------------------------------------------------------------ #
    # names

    def node_name(self, v: int) -> str:
        if v not in self._nodes:
            raise TreeError(f"unknown node {v}")
        if v in self._names:
            return self._names[v]
        if self.is_leaf(v):
            return str(v)
        return f"#{v}"

    def resolve(self, ref) -> int:
        """Map a display name or a node id to the node id."""
        if isinstance(ref, (int,)) and not isinstance(ref, bool):
            if ref in self._nodes:
                return ref
            raise TreeError(f"unknown node {ref}")
        ref = str(ref)
        for v in sorted(self._nodes):
            if self.node_name(v) == ref:
                return v
        if ref.lstrip("#").isdigit() and int(ref.lstrip("#")) in self._nodes:
            return int(ref.lstrip("#"))
        raise TreeError(f"unknown node {ref!r}")

    # ------------------------------------------------------------------ #
    # derived trees

    def with_root(self, root: Optional[int]) -> "TreeTopology":
        return TreeTopology(self._nodes, self._edges, root, self._names)

    def require_model_tree(self) -> int:
        """Check that the leaves are exactly ``1..n`` and return ``n``."""
        leaves = self.leaves
        n = len(leaves)
        if n < 2 or leaves != tuple(range(1, n + 1)):
            raise TreeError(f"leaves must be labelled 1..n with n >= 2, got {leaves}")
        return n

    # ------------------------------------------------------------------ #
    # paths

    def path_nodes(self, u: int, v: int) -> list[int]:
        """Nodes on the unique path from ``u`` to ``v`` (inclusive)."""
        for x in (u, v):
            if x not in self._nodes:
                raise TreeError(f"unknown node {x}")
        up, down = [u], [v]
        a, b = u, v
        while self._depth[a] > self._depth[b]:
            a = self._parent[a]
            up.append(a)
        while self._depth[b] > self._depth[a]:
            b = self._parent[b]
            down.append(b)
        while a != b:
            a = self._parent[a]
            b = self._parent[b]
            up.append(a)
            down.append(b)
        down.pop()
        return up + down[::-1]

    def __eq__(self, other):
        if not isinstance(other, TreeTopology):
            return NotImplemented
        return (self._nodes, self._edges, self._root) == (other._nodes, other._edges, other._root)

    def __hash__(self):
        return hash((self._nodes, self._edges, self._root))

    def __repr__(self):
        return f"TreeTopology({to_newick(self)!r})"


@dataclass(frozen=True)
class Forest:
    """The forest left after deleting some edges of a tree."""

    nodes: frozenset[int]
    edges: frozenset[Edge]
    components: tuple[TreeTopology, ...]

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def component_of(self, v: int) -> TreeTopology:
        for c in self.components:
            if v in c.nodes:
                return c
        raise TreeError(f"unknown node {v}")


def remove_edges(t: TreeTopology, removed: Iterable[tuple[int, int]]) -> Forest:
    """The forest ``T \\ E'``; components inherit names but no root."""
    gone = {edge_key(*e) for e in removed}
    unknown = gone - t.edges
    if unknown:
        raise TreeError(f"edges not in tree: {sorted(unknown)}")
    kept = t.edges - gone
    adj: dict[int, list[int]] = {v: [] for v in t.nodes}
    for u, v in kept:
        adj[u].append(v)
        adj[v].append(u)
    seen: set[int] = set()
    comps = []
    for start in sorted(t.nodes):
        if start in seen:
            continue
        block = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in block:
                    block.add(y)
                    stack.append(y)
        seen |= block
        comp_edges = [e for e in kept if e[0] in block]
        comps.append(TreeTopology(block, comp_edges, None, t.names))
    return Forest(t.nodes, frozenset(kept), tuple(comps))


# ---------------------------------------------------------------------- #
# Newick


_DELIMS = set("(),:;")


class _NewickReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: Optional[int] = None):
        raise NewickError(message, self.pos if pos is None else pos)

    def skip(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":
                end = text.find("]", self.pos)
                if end < 0:
                    self.error("unterminated comment")
                self.pos = end + 1
            else:
                break

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def label(self) -> tuple[str, int]:
        self.skip()
        start = self.pos
        text = self.text
        if self.pos < len(text) and text[self.pos] == "'":
            end = text.find("'", self.pos + 1)
            if end < 0:
                self.error("unterminated quoted label")
            self.pos = end + 1
            return text[start + 1:end], start
        while self.pos < len(text) and text[self.pos] not in _DELIMS and text[self.pos] not in "[" \
                and not text[self.pos].isspace():
            self.pos += 1
        return text[start:self.pos], start

    def branch_length(self):
        if self.peek() == ":":
            self.pos += 1
            value, start = self.label()
            try:
                float(value)
            except ValueError:
                self.error(f"bad branch length {value!r}", start)

    def subtree(self):
        if self.peek() == "(":
            self.pos += 1
            children = [self.subtree()]
            while self.peek() == ",":
                self.pos += 1
                children.append(self.subtree())
            if self.peek() != ")":
                self.error("expected ',' or ')'")
            self.pos += 1
            name, _ = self.label()
            self.branch_length()
            return ("inner", name, children)
        name, start = self.label()
        if not name:
            self.error("expected a leaf label or '('")
        self.branch_length()
        return ("leaf", name, start)


def parse_newick(text: str) -> TreeTopology:
    """
    Parse a rooted Newick string whose leaf labels are the integers ``1..n``.

    Branch lengths and ``[...]`` comments are accepted and ignored. The
    outermost group becomes the root.

    Raises
    ------
    NewickError
        On syntax errors, non-integer, duplicate or missing leaf labels, or
        fewer than two leaves.
    """
    reader = _NewickReader(text)
    if reader.peek() != "(":
        reader.error("a tree must start with '('")
    ast = reader.subtree()
    if reader.peek() != ";":
        reader.error("expected ';'")
    reader.pos += 1
    if reader.peek():
        reader.error("trailing characters after ';'")

    labels: dict[int, int] = {}

    def collect(node):
        kind = node[0]
        if kind == "leaf":
            name, start = node[1], node[2]
            if not name.isdigit() or int(name) < 1:
                raise NewickError(f"leaf label {name!r} is not a positive integer", start)
            if int(name) in labels:
                raise NewickError(f"duplicate leaf label {name}", start)
            labels[int(name)] = start
        else:
            for c in node[2]:
                collect(c)

    collect(ast)
    n = len(labels)
    if n < 2:
        raise NewickError("a tree needs at least two leaves", 0)
    missing = sorted(set(range(1, n + 1)) - set(labels))
    if missing:
        raise NewickError(f"leaf labels must be 1..{n}; missing {missing}", len(text))
    if len(ast[2]) == 1:
        raise NewickError("the root has a single child", 0)

    edges = []
    names: dict[int, str] = {}
    next_id = n + 1
    # Preorder numbering of inner nodes.
    queue = deque([(ast, None)])
    while queue:
        node, parent = queue.popleft()
        if node[0] == "leaf":
            vid = int(node[1])
        else:
            vid = next_id
            next_id += 1
            if node[1]:
                names[vid] = node[1]
            for c in node[2]:
                queue.append((c, vid))
        if parent is not None:
            edges.append((parent, vid))
    nodes = range(1, next_id)
    return TreeTopology(nodes, edges, n + 1, names)


def _min_leaf_below(t: TreeTopology, root: int) -> dict[int, int]:
    """Smallest leaf id in the subtree hanging below each node."""
    parent = {root: None}
    order = [root]
    for x in order:
        for y in sorted(t.neighbors(x)):
            if y not in parent:
                parent[y] = x
                order.append(y)
    low: dict[int, float] = {}
    for x in reversed(order):
        kids = [low[y] for y in t.neighbors(x) if parent.get(y) == x]
        own = x if (t.is_leaf(x) and x != root) else float("inf")
        low[x] = min([own] + kids)
    return low


def to_newick(t: TreeTopology, names: bool = True) -> str:
    """Canonical Newick text: children in ascending order of their smallest leaf."""
    root = t.root
    if root is None:
        inner = t.inner_nodes
        root = inner[0] if inner else min(t.nodes)
    low = _min_leaf_below(t, root)

    def render(v: int, parent: Optional[int]) -> str:
        kids = sorted((w for w in t.neighbors(v) if w != parent), key=lambda w: (low[w], w))
        if not kids:
            return str(v) if v not in t.names else t.names[v]
        if t.is_leaf(v):
            label = str(v)
        else:
            label = t.names.get(v, "") if names else ""
        return "(" + ",".join(render(w, v) for w in kids) + ")" + label

    return render(root, None) + ";"


# ---------------------------------------------------------------------- #
# structural operations


def path_edges(t: TreeTopology, u: int, v: int) -> list[Edge]:
    """Edges of the ``u``-``v`` path as consecutive ``(x, y)`` steps."""
    if u == v:
        raise TreeError("path endpoints must differ")
    p = t.path_nodes(u, v)
    return list(zip(p[:-1], p[1:]))


def spanning_nodes(t: TreeTopology, w: Iterable[int]) -> set[int]:
    """Node set of the minimal subtree containing ``w``."""
    w = list(w)
    if not w:
        raise TreeError("cannot span an empty node set")
    for x in w:
        if x not in t.nodes:
            raise TreeError(f"unknown node {x}")
    first = w[0]
    out = {first}
    for x in w[1:]:
        out.update(t.path_nodes(first, x))
    return out


def spanning_subtree(t: TreeTopology, w: Iterable[int]) -> tuple[TreeTopology, Optional[int]]:
    """
    The subtree ``T(W)`` spanned on ``w`` together with its local root.

    The local root is the node of ``T(W)`` nearest to the root of ``t``
    (``None`` when ``t`` is unrooted).
    """
    vs = spanning_nodes(t, w)
    es = [e for e in t.edges if e[0] in vs and e[1] in vs]
    local_root = None
    if t.root is not None:
        local_root = min(vs, key=lambda x: (t._depth[x], x))
    return TreeTopology(vs, es, local_root, t.names), local_root


def contract_edges(t: TreeTopology, es: Iterable[tuple[int, int]]) -> TreeTopology:
    """
    The tree ``T/E'`` with the endpoints of every edge in ``es`` identified.

    A merged class keeps the id of its leaf if it has one, otherwise of the
    root if it contains it, otherwise its smallest id.

    Raises
    ------
    TreeError
        If an edge is not in ``t``, if two leaves would be merged, or if a
        leaf would end up as an inner node.
    """
    es = {edge_key(*e) for e in es}
    unknown = es - t.edges
    if unknown:
        raise TreeError(f"edges not in tree: {sorted(unknown)}")
    rep = {v: v for v in t.nodes}

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    for u, v in es:
        rep[find(u)] = find(v)
    classes: dict[int, list[int]] = {}
    for v in t.nodes:
        classes.setdefault(find(v), []).append(v)

    leaves = set(t.leaves) if len(t.nodes) > 1 else set()
    label = {}
    for members in classes.values():
        lv = [v for v in members if v in leaves]
        if len(lv) > 1:
            raise TreeError(f"contraction would merge leaves {sorted(lv)}")
        if lv:
            keep = lv[0]
        elif t.root is not None and t.root in members:
            keep = t.root
        else:
            keep = min(members)
        for v in members:
            label[v] = keep

    new_edges = [(label[u], label[v]) for u, v in t.edges if (u, v) not in es]
    names = {}
    for members in classes.values():
        keep = label[members[0]]
        named = [t.names[v] for v in sorted(members, key=lambda x: (x != keep, x)) if v in t.names]
        if named and keep not in leaves:
            names[keep] = named[0]
    root = label[t.root] if t.root is not None else None
    out = TreeTopology(set(label.values()), new_edges, root, names)
    for v in leaves:
        if v in out.nodes and out.degree(v) != 1:
            raise TreeError(f"contraction would turn leaf {v} into an inner node")
    return out


def suppress_degree_two(t: TreeTopology) -> TreeTopology:
    """Suppress every inner node of degree two, one contraction at a time."""
    while True:
        deg2 = [v for v in t.inner_nodes if t.degree(v) == 2]
        if not deg2:
            return t
        v = deg2[0]
        nbrs = sorted(t.neighbors(v))
        inner = [w for w in nbrs if not t.is_leaf(w)]
        if t.root is not None and t.root != v and not t.is_leaf(t.parent(v)):
            target = t.parent(v)
        elif inner:
            target = inner[0]
        else:
            target = nbrs[0]
        t = contract_edges(t, [(v, target)])


def trivalent_expansion(t: TreeTopology) -> tuple[TreeTopology, frozenset[Edge]]:
    """
    Refine ``t`` so that every inner node has degree at most three.

    A node with too many children repeatedly hands its two children with the
    smallest leaves below them to a new node. Returns the expanded tree and
    the set ``E'`` of new edges, so that contracting ``E'`` gives back ``t``.
    """
    root = t.root
    if root is None:
        inner = t.inner_nodes
        root = inner[0] if inner else min(t.nodes)
    low = _min_leaf_below(t, root)
    parent = {root: None}
    for x in _bfs(t, root):
        for y in t.neighbors(x):
            if y not in parent:
                parent[y] = x

    kids = {v: sorted((w for w in t.neighbors(v) if parent.get(w) == v), key=lambda w: (low[w], w))
            for v in t.nodes}
    first_new = next_id = max(t.nodes) + 1
    for v in sorted(t.nodes):
        budget = 3 if v == root else 2
        while len(kids[v]) > budget:
            a, b = kids[v][0], kids[v][1]
            w = next_id
            next_id += 1
            kids[w] = [a, b]
            low[w] = min(low[a], low[b])
            rest = kids[v][2:] + [w]
            kids[v] = sorted(rest, key=lambda x: (low[x], x))
    if next_id == first_new:
        return t, frozenset()
    edges = [(v, w) for v, ws in kids.items() for w in ws]
    new_edges = {edge_key(v, w) for v, w in edges if w >= first_new}
    nodes = set(kids)
    out = TreeTopology(nodes, edges, t.root, t.names)
    return out, frozenset(new_edges)


def _bfs(t: TreeTopology, start: int) -> list[int]:
    seen = {start}
    order = [start]
    for x in order:
        for y in sorted(t.neighbors(x)):
            if y not in seen:
                seen.add(y)
                order.append(y)
    return order


def separates(t: TreeTopology, a: Iterable[int], b: Iterable[int], c: Iterable[int]) -> bool:
    """True iff every path from a node of ``a`` to a node of ``b`` meets ``c``."""
    a, b, c = set(a), set(b), set(c)
    if a & b or a & c or b & c:
        raise TreeError("node sets must be pairwise disjoint")
    for x in a | b | c:
        if x not in t.nodes:
            raise TreeError(f"unknown node {x}")
    seen = set(a)
    stack = list(a)
    while stack:
        x = stack.pop()
        if x in b:
            return False
        for y in t.neighbors(x):
            if y not in seen and y not in c:
                seen.add(y)
                stack.append(y)
    return True


def _shape(t: TreeTopology, v: int, parent: Optional[int]):
    kids = [_shape(t, w, v) for w in t.neighbors(v) if w != parent]
    if not kids:
        return v
    return tuple(sorted(kids, key=repr))


def is_isomorphic(s: TreeTopology, t: TreeTopology) -> bool:
    """Leaf-labelled isomorphism, ignoring inner ids, names and roots."""
    if s.leaves != t.leaves or len(s.nodes) != len(t.nodes):
        return False
    anchor = s.leaves[0]
    return _shape(s, anchor, None) == _shape(t, anchor, None)
