"""Parse graphs and their summary trees.

A parse graph holds typed nodes, functional edges (head -> complement,
labelled with a grammatical function), parent-of edges, a left-to-right
member order for every phrase head, and undirected coreference links.
The same class doubles as the template representation used by rule
patterns and addenda, where node ids are local to the template.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

INTERNAL = "internal"
LEXICAL = "lexical"
GAP = "gap"
KINDS = (INTERNAL, LEXICAL, GAP)

INHERIT = "&"
GAP_ATOM = "Gap"
LEXEME_ATOM = "Lexeme"

Label = frozenset


class GraphError(Exception):
    """Raised for structurally unusable graphs (unrooted, disconnected, unknown ids)."""


def make_label(atoms: str | Iterable[str]) -> frozenset:
    """Build a label from ``"N,P,S"`` or an iterable of atoms."""
    if isinstance(atoms, str):
        atoms = [a.strip() for a in atoms.split(",")]
    return frozenset(a for a in atoms if a)


def format_label(label: Iterable[str]) -> str:
    return ",".join(sorted(label))


@dataclass(frozen=True)
class Node:
    id: int
    label: frozenset
    kind: str = INTERNAL
    spelling: str | None = None
    head: bool = False

    @property
    def terminal(self) -> bool:
        """Lexical nodes and gaps both end a path (gaps are empty lexemes)."""
        return self.kind != INTERNAL


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: tuple = ()

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass
class _Index:
    out_func: dict
    out_parent: dict
    incoming: dict
    coref_adj: dict


@dataclass
class SummaryTree:
    root: int
    parent: dict
    children: dict
    frontier: list

    def ancestors(self, node: int) -> list[int]:
        """Tree ancestors of ``node``, nearest first."""
        out = []
        cur = self.parent.get(node)
        while cur is not None:
            out.append(cur)
            cur = self.parent.get(cur)
        return out

    def position(self) -> dict:
        return {n: i for i, n in enumerate(self.frontier)}


class ParseGraph:
    """Mutable graph store; equality is exact and includes node ids.

    ``next_id`` is the monotone id allocator. It is deliberately excluded
    from equality so that undo restores an equal graph without ever
    handing out an id twice.
    """

    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {}
        self.functional: set[tuple[int, int, str]] = set()
        self.parent_edges: set[tuple[int, int]] = set()
        self.order: dict[int, list[int]] = {}
        self.corefs: set[tuple[int, int, str]] = set()
        self.root: int | None = None
        self.next_id = 0
        self._version = 0
        self._cache: dict = {}

    # -- construction -------------------------------------------------
    def new_node(self, label, kind: str = INTERNAL, spelling: str | None = None,
                 head: bool = False) -> int:
        node = Node(self.next_id, make_label(label), kind, spelling, head)
        self.add_node(node)
        return node.id

    def add_node(self, node: Node) -> None:
        if node.id in self.nodes:
            raise GraphError(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        self.next_id = max(self.next_id, node.id + 1)
        self._touch()

    def remove_node(self, nid: int) -> Node:
        node = self.nodes.pop(nid)
        if self.root == nid:
            self.root = None
        self._touch()
        return node

    def add_func(self, head: int, comp: int, fn: str) -> None:
        self.functional.add((head, comp, fn))
        self._touch()

    def remove_func(self, head: int, comp: int, fn: str) -> None:
        self.functional.remove((head, comp, fn))
        self._touch()

    def add_parent(self, parent: int, child: int) -> None:
        self.parent_edges.add((parent, child))
        self._touch()

    def remove_parent(self, parent: int, child: int) -> None:
        self.parent_edges.remove((parent, child))
        self._touch()

    def set_order(self, head: int, members: list[int] | None) -> list[int] | None:
        old = self.order.pop(head, None)
        if members is not None:
            self.order[head] = list(members)
        self._touch()
        return old

    def add_coref(self, a: int, b: int, kind: str) -> None:
        self.corefs.add(_coref_key(a, b, kind))
        self._touch()

    def remove_coref(self, a: int, b: int, kind: str) -> None:
        self.corefs.remove(_coref_key(a, b, kind))
        self._touch()

    def set_root(self, nid: int | None) -> int | None:
        old, self.root = self.root, nid
        self._touch()
        return old

    def _touch(self) -> None:
        self._version += 1
        self._cache.clear()

    # -- value semantics ----------------------------------------------
    def copy(self) -> "ParseGraph":
        g = ParseGraph()
        g.nodes = dict(self.nodes)
        g.functional = set(self.functional)
        g.parent_edges = set(self.parent_edges)
        g.order = {h: list(m) for h, m in self.order.items()}
        g.corefs = set(self.corefs)
        g.root = self.root
        g.next_id = self.next_id
        return g

    def _key(self):
        return (self.nodes, self.functional, self.parent_edges, self.order,
                self.corefs, self.root)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParseGraph):
            return NotImplemented
        return self._key() == other._key()

    __hash__ = None

    def __repr__(self) -> str:
        return (f"ParseGraph(nodes={len(self.nodes)}, functional={len(self.functional)}, "
                f"parent={len(self.parent_edges)}, corefs={len(self.corefs)}, root={self.root})")

    # -- indexes ------------------------------------------------------
    def _index(self) -> _Index:
        idx = self._cache.get("index")
        if idx is None:
            out_func: dict = {}
            out_parent: dict = {}
            incoming: dict = {}
            coref_adj: dict = {}
            for h, c, fn in sorted(self.functional):
                out_func.setdefault(h, {}).setdefault(fn, c)
                incoming.setdefault(c, []).append(("f", h, fn))
            for p, c in sorted(self.parent_edges):
                out_parent.setdefault(p, []).append(c)
                incoming.setdefault(c, []).append(("p", p, None))
            for a, b, k in sorted(self.corefs):
                coref_adj.setdefault(a, []).append((b, k))
                coref_adj.setdefault(b, []).append((a, k))
            idx = self._cache["index"] = _Index(out_func, out_parent, incoming, coref_adj)
        return idx

    def functions(self, head: int) -> dict:
        """Outgoing functional edges of ``head`` as ``{function: complement}``."""
        return self._index().out_func.get(head, {})

    def child(self, parent: int) -> int | None:
        kids = self._index().out_parent.get(parent)
        return kids[0] if kids else None

    def incoming(self, nid: int) -> tuple | None:
        """The incoming edge of ``nid``: ``("f", head, fn)`` or ``("p", parent, None)``."""
        edges = self._index().incoming.get(nid)
        return edges[0] if edges else None

    def coref_links(self, nid: int) -> list:
        return self._index().coref_adj.get(nid, [])

    def is_dangling(self, nid: int) -> bool:
        node = self.nodes[nid]
        return node.kind == INTERNAL and self.child(nid) is None

    def _require(self, nid: int) -> None:
        if nid not in self.nodes:
            raise GraphError(f"unknown node id {nid}")

    # -- derived structure --------------------------------------------
    def summary_tree(self) -> SummaryTree:
        tree = self._cache.get("tree")
        if tree is None:
            tree = self._cache["tree"] = summary_tree(self)
        return tree

    def frontier(self) -> list[int]:
        return self.summary_tree().frontier

    def positions(self) -> dict:
        pos = self._cache.get("positions")
        if pos is None:
            pos = self._cache["positions"] = self.summary_tree().position()
        return pos

    def is_complete(self, at: int | None = None) -> bool:
        return is_complete(self, at)

    def coref_class(self, nid: int, kind: str | None = None) -> set[int]:
        return coref_class(self, nid, kind)


def _coref_key(a: int, b: int, kind: str) -> tuple[int, int, str]:
    return (a, b, kind) if a <= b else (b, a, kind)


def summary_tree(g: ParseGraph) -> SummaryTree:
    """Project ``g`` onto its summary tree.

    A parent-of edge p -> c contributes tree edges from p to every member
    of c's phrase (c itself when c heads no phrase), in phrase order.
    """
    if g.root is None or g.root not in g.nodes:
        raise GraphError("graph has no root")
    idx = g._index()

    def expand(c: int) -> list[int]:
        return list(g.order[c]) if c in g.order else [c]

    children: dict[int, list[int]] = {}
    for n in g.nodes:
        kids: list[int] = []
        for c in idx.out_parent.get(n, ()):
            kids.extend(expand(c))
        children[n] = kids
    root = g.root
    if root in g.order:
        # A root that heads a phrase: its complements hang off the root,
        # with the root's own parent-of subtree at the root's slot.
        own = children[root]
        children[root] = [x for m in g.order[root] for x in (own if m == root else [m])]

    parent: dict[int, int] = {}
    frontier: list[int] = []
    seen = {root}
    stack = [root]
    while stack:
        n = stack.pop()
        kids = children[n]
        if not kids:
            frontier.append(n)
            continue
        for c in kids:
            if c in seen or c not in g.nodes:
                raise GraphError(f"node {c} reached twice or unknown while building summary tree")
            seen.add(c)
            parent[c] = n
        stack.extend(reversed(kids))
    if len(seen) != len(g.nodes):
        missing = sorted(set(g.nodes) - seen)
        raise GraphError(f"graph is disconnected; unreachable nodes {missing}")
    return SummaryTree(root, parent, children, frontier)


def is_complete(g: ParseGraph, at: int | None = None) -> bool:
    """True when every internal node reachable from ``at`` has a parent-of child.

    Equivalently no dangling node occurs below ``at``; gaps count as
    terminals.
    """
    start = g.root if at is None else at
    if start is None:
        raise GraphError("graph has no root")
    g._require(start)
    idx = g._index()
    seen = {start}
    queue = deque([start])
    while queue:
        n = queue.popleft()
        node = g.nodes[n]
        kids = idx.out_parent.get(n, [])
        if node.kind == INTERNAL and not kids:
            return False
        nxt = list(kids) + list(idx.out_func.get(n, {}).values())
        for c in nxt:
            if c not in seen:
                seen.add(c)
                queue.append(c)
    return True


def linear_successor_frontier(g: ParseGraph, node: int) -> list[int]:
    """Immediate successor of a frontier node under strict ordering."""
    g._require(node)
    frontier = g.frontier()
    pos = g.positions()
    if node not in pos:
        raise GraphError(f"node {node} is not on the frontier")
    i = pos[node]
    return frontier[i + 1:i + 2]


def coref_class(g: ParseGraph, node: int, kind: str | None = None) -> set[int]:
    """Equivalence class of ``node`` under the closure of its coreference links."""
    g._require(node)
    out = {node}
    queue = deque([node])
    while queue:
        n = queue.popleft()
        for m, k in g.coref_links(n):
            if (kind is None or k == kind) and m not in out:
                out.add(m)
                queue.append(m)
    return out


def check_invariants(g: ParseGraph, coreferentialities: Mapping[str, str] | None = None) -> list[Violation]:
    """Report every violated structural invariant of ``g``."""
    out: list[Violation] = []
    nodes = g.nodes

    for h, c, fn in sorted(g.functional):
        for n in (h, c):
            if n not in nodes:
                out.append(Violation("unknown-node", f"functional edge {h}-{fn}->{c} mentions unknown node {n}", (h, c)))
    for p, c in sorted(g.parent_edges):
        for n in (p, c):
            if n not in nodes:
                out.append(Violation("unknown-node", f"parent-of edge {p}->{c} mentions unknown node {n}", (p, c)))
    if out:
        return out

    seen_fn: dict = {}
    for h, c, fn in sorted(g.functional):
        key = (h, fn)
        if key in seen_fn:
            out.append(Violation("invariant-1", f"phrase of {h} has two '{fn}' edges (to {seen_fn[key]} and {c})", (h,)))
        else:
            seen_fn[key] = c

    incoming: dict[int, int] = {n: 0 for n in nodes}
    for _, c, _ in g.functional:
        incoming[c] += 1
    for _, c in g.parent_edges:
        incoming[c] += 1
    for n, k in sorted(incoming.items()):
        if n == g.root:
            if k:
                out.append(Violation("invariant-2", f"root {n} has {k} incoming edges", (n,)))
        elif k != 1:
            out.append(Violation("invariant-2", f"node {n} has {k} incoming edges", (n,)))

    out_parent: dict[int, int] = {}
    for p, _ in g.parent_edges:
        out_parent[p] = out_parent.get(p, 0) + 1
    for p, k in sorted(out_parent.items()):
        if k > 1:
            out.append(Violation("invariant-3", f"node {p} has {k} outgoing parent-of edges", (p,)))

    heads = {h for h, _, _ in g.functional}
    for n, node in sorted(nodes.items()):
        if not node.label:
            out.append(Violation("label", f"node {n} has an empty label", (n,)))
        if INHERIT in node.label:
            out.append(Violation("label", f"node {n} carries an unresolved inheritance marker", (n,)))
        if node.kind not in KINDS:
            out.append(Violation("kind", f"node {n} has unknown kind {node.kind!r}", (n,)))
        if (node.kind == LEXICAL) != (node.spelling is not None):
            out.append(Violation("spelling", f"node {n}: spelling present iff lexical", (n,)))
        if node.kind == LEXICAL:
            if n in heads or n in out_parent:
                out.append(Violation("principle-1", f"lexical node {n} has outgoing edges", (n,)))
            if any(c == n for _, c, _ in g.functional):
                out.append(Violation("principle-1", f"lexical node {n} is reached by a functional edge", (n,)))
        if n in heads and not node.head:
            out.append(Violation("head-flag", f"non-head node {n} has outgoing functional edges", (n,)))

    for h in sorted(heads | set(g.order)):
        expected = {h} | {c for hh, c, _ in g.functional if hh == h}
        members = g.order.get(h, [])
        if len(members) != len(set(members)) or set(members) != expected:
            out.append(Violation("phrase-order", f"phrase order of {h} is {members}, members are {sorted(expected)}", (h,)))

    for a, b, kind in sorted(g.corefs):
        if a not in nodes or b not in nodes:
            out.append(Violation("coref", f"coreference link {a}~{b} mentions unknown node", (a, b)))
            continue
        if coreferentialities is not None:
            atom = coreferentialities.get(kind)
            if atom is None:
                out.append(Violation("coref", f"undeclared coreferentiality {kind!r}", (a, b)))
            elif atom not in nodes[a].label or atom not in nodes[b].label:
                out.append(Violation("coref", f"link {a}~{b} of kind {kind} joins nodes lacking atom {atom}", (a, b)))

    if g.root is None or g.root not in nodes:
        out.append(Violation("root", "graph has no root"))
    else:
        try:
            summary_tree(g)
        except GraphError as exc:
            out.append(Violation("connectivity", str(exc)))
        if _has_cycle(g):
            out.append(Violation("cycle", "graph contains a directed cycle"))
    return out


def _has_cycle(g: ParseGraph) -> bool:
    succ: dict[int, list[int]] = {n: [] for n in g.nodes}
    for h, c, _ in g.functional:
        succ[h].append(c)
    for p, c in g.parent_edges:
        succ[p].append(c)
    state: dict[int, int] = {}
    for start in g.nodes:
        if start in state:
            continue
        stack = [(start, iter(succ[start]))]
        state[start] = 1
        while stack:
            n, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[n] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                return True
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(succ[nxt])))
    return False


def dangling_before(g: ParseGraph, node: int) -> list[int]:
    """Dangling frontier nodes that linearly precede ``node``."""
    out = []
    for n in g.frontier():
        if n == node:
            return out
        if g.is_dangling(n):
            out.append(n)
    raise GraphError(f"node {node} is not on the frontier")


__all__ = [
    "INTERNAL", "LEXICAL", "GAP", "INHERIT", "GAP_ATOM", "LEXEME_ATOM",
    "GraphError", "Node", "ParseGraph", "SummaryTree", "Violation",
    "make_label", "format_label", "summary_tree", "is_complete",
    "linear_successor_frontier", "coref_class", "check_invariants", "dangling_before",
]
