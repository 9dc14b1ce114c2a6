"""Composition rules: context patterns, addenda, priorities, static checks."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .graph import INHERIT, INTERNAL, LEXICAL, ParseGraph, Violation


class Location(str, Enum):
    ANCESTOR = "ancestor"
    IMMEDIATE = "immediate-successor"
    SUCCESSOR = "successor"


@dataclass(frozen=True)
class Anchor:
    node: int
    location: Location


@dataclass
class ContextPattern:
    graph: ParseGraph
    anchors: list[Anchor]


@dataclass(frozen=True)
class Interpolation:
    """One anchor's share of a rule application.

    ``source == destination`` is an insertion; both ``None`` is a pure
    coreference attachment that substitutes nothing.
    """

    anchor: int
    source: int | None = None
    destination: int | None = None

    @property
    def substitutes(self) -> bool:
        return self.source is not None


ADDENDUM = "addendum"
CONTEXT = "context"


@dataclass(frozen=True)
class CorefDirective:
    """Link two nodes on application; each end is ``(ADDENDUM|CONTEXT, template id)``."""

    a: tuple[str, int]
    b: tuple[str, int]
    kind: str


@dataclass
class Addendum:
    graph: ParseGraph
    lexeme: int
    interpolations: list[Interpolation]
    corefs: list[CorefDirective] = field(default_factory=list)
    _frontier: list | None = field(default=None, compare=False, repr=False)

    def frontier(self) -> list[int]:
        """Template frontier: the lexeme's component first, then the others."""
        if self._frontier is None:
            self._frontier = addendum_frontier(self)
        return self._frontier

    def successor_template(self) -> list[int]:
        """Template nodes that follow the lexeme and await material."""
        fr = self.frontier()
        if self.lexeme not in fr:
            return []
        after = fr[fr.index(self.lexeme) + 1:]
        return [n for n in after if self.graph.nodes[n].kind == INTERNAL]


@dataclass
class Rule:
    pattern: ContextPattern
    addendum: Addendum
    priority: int = 0

    @property
    def spelling(self) -> str:
        return self.addendum.graph.nodes[self.addendum.lexeme].spelling

    @property
    def id(self) -> str:
        return f"{self.spelling}#{self.priority}"

    def __repr__(self) -> str:
        return f"Rule({self.id})"


@dataclass
class Grammar:
    start: frozenset
    rules: dict[str, list[Rule]]
    coreferentialities: dict[str, str] = field(default_factory=dict)
    name: str = ""

    @classmethod
    def from_rules(cls, start, rules: Iterable[Rule], coreferentialities=None, name: str = "") -> "Grammar":
        table: dict[str, list[Rule]] = {}
        for r in rules:
            table.setdefault(r.spelling, []).append(r)
        for lst in table.values():
            lst.sort(key=lambda r: r.priority)
        return cls(frozenset(start), table, dict(coreferentialities or {}), name)

    def rules_for(self, token: str) -> list[Rule]:
        return self.rules.get(token, [])

    def all_rules(self) -> list[Rule]:
        return [r for lst in self.rules.values() for r in lst]

    def rule(self, rule_id: str) -> Rule:
        spelling, _, prio = rule_id.rpartition("#")
        for r in self.rules.get(spelling, []):
            if str(r.priority) == prio:
                return r
        raise KeyError(rule_id)


class GrammarValidationError(Exception):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations)
        super().__init__(f"grammar has {len(self.violations)} violation(s):\n{lines}")


def label_subsumes(anchor_label: frozenset, node_label: frozenset) -> bool:
    """True iff the node carries at least the anchor's atoms."""
    return anchor_label <= node_label


# -- template geometry ------------------------------------------------

def template_roots(g: ParseGraph) -> list[int]:
    """Nodes without incoming edges, in id order."""
    targets = {c for _, c, _ in g.functional} | {c for _, c in g.parent_edges}
    return [n for n in sorted(g.nodes) if n not in targets]


def subtree_frontier(g: ParseGraph, root: int) -> list[int]:
    """Frontier of the summary subtree below ``root`` (no connectivity demands)."""
    out: list[int] = []
    seen: set[int] = set()

    def visit(n: int) -> None:
        if n in seen:
            return
        seen.add(n)
        kids: list[int] = []
        for p, c in sorted(g.parent_edges):
            if p == n:
                kids.extend(g.order.get(c, [c]))
        if n == root and n in g.order:
            # A dangling root head keeps its own slot in the phrase.
            own = kids or [n]
            kids = [x for m in g.order[n] for x in (own if m == n else [m])]
            if kids == [n]:
                kids = []
        if not kids:
            out.append(n)
        for k in kids:
            if k == n:
                out.append(n)
            else:
                visit(k)

    visit(root)
    return out


def component_root(g: ParseGraph, node: int) -> int:
    cur = node
    seen = set()
    while cur not in seen:
        seen.add(cur)
        inc = [p for p, c in g.parent_edges if c == cur] + [h for h, c, _ in g.functional if c == cur]
        if not inc:
            return cur
        cur = inc[0]
    return cur


def addendum_frontier(add: Addendum) -> list[int]:
    g = add.graph
    roots = template_roots(g)
    first = component_root(g, add.lexeme)
    ordered = [first]
    for it in add.interpolations:
        if it.substitutes:
            r = component_root(g, it.source)
            if r not in ordered:
                ordered.append(r)
    ordered += [r for r in roots if r not in ordered]
    out: list[int] = []
    for r in ordered:
        out.extend(n for n in subtree_frontier(g, r) if n not in out)
    return out


def oriented_path(g: ParseGraph, src: int, dst: int) -> list[int] | None:
    """Node sequence of the directed path src -> dst, or None."""
    succ: dict[int, list[int]] = {}
    for h, c, _ in g.functional:
        succ.setdefault(h, []).append(c)
    for p, c in g.parent_edges:
        succ.setdefault(p, []).append(c)
    prev = {src: None}
    queue = deque([src])
    while queue:
        n = queue.popleft()
        if n == dst:
            path = [n]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for c in sorted(succ.get(n, ())):
            if c not in prev:
                prev[c] = n
                queue.append(c)
    return None


def inheriting_anchor(add: Addendum, it: Interpolation) -> int:
    """The addendum anchor that receives the context anchor's parent-of edge."""
    g = add.graph
    has_child = any(p == it.source for p, _ in g.parent_edges)
    return it.destination if has_child else it.source


# -- validation -------------------------------------------------------

def validate_rule(rule: Rule, coreferentialities: Mapping[str, str] | None = None) -> list[Violation]:
    """Static well-formedness diagnostics for one rule."""
    rid = rule.id if _has_lexeme(rule) else "<rule>"
    out: list[Violation] = []

    def bad(code: str, msg: str) -> None:
        out.append(Violation(code, f"{rid}: {msg}", (rid,)))

    pat, add = rule.pattern, rule.addendum
    pg, ag = pat.graph, add.graph

    lexicals = [n for n, node in ag.nodes.items() if node.kind == LEXICAL]
    if len(lexicals) != 1:
        bad("lexical-count", f"addendum must contain exactly one lexical node, found {len(lexicals)}")
    if add.lexeme not in ag.nodes or ag.nodes[add.lexeme].kind != LEXICAL:
        bad("unresolved", "addendum lexeme does not name a lexical node")
        return out
    if not any(c == add.lexeme for _, c in ag.parent_edges):
        bad("principle-1", "addendum lexeme is not the destination of a parent-of edge")

    for g, where in ((pg, "pattern"), (ag, "addendum")):
        for n, node in sorted(g.nodes.items()):
            if not node.label:
                bad("label", f"{where} node {n} has an empty label")

    if not pat.anchors:
        bad("anchor-location", "context pattern has no anchor")
    for i, a in enumerate(pat.anchors):
        if a.node not in pg.nodes:
            bad("unresolved", f"context anchor {i} names unknown pattern node {a.node}")
        if i > 0 and a.location is not Location.SUCCESSOR:
            bad("anchor-location", f"secondary anchor {i} must use successor location")
    if out:
        return out

    anchor_nodes = set()
    for it in add.interpolations:
        if not 0 <= it.anchor < len(pat.anchors):
            bad("unresolved", f"interpolation names unknown anchor {it.anchor}")
            continue
        if (it.source is None) != (it.destination is None):
            bad("unresolved", "interpolation needs both source and destination, or neither")
            continue
        if not it.substitutes:
            continue
        if it.source not in ag.nodes or it.destination not in ag.nodes:
            bad("unresolved", "interpolation endpoint is not an addendum node")
            continue
        anchor_nodes |= {it.source, it.destination}
        if oriented_path(ag, it.source, it.destination) is None:
            bad("path", f"no oriented path from {it.source} to {it.destination}")
        ctx_head = pg.nodes[pat.anchors[it.anchor].node].head
        for end in (it.source, it.destination):
            if ag.nodes[end].head != ctx_head:
                bad("principle-4", f"addendum anchor {end} head status differs from context anchor {it.anchor}")
    if not add.interpolations:
        bad("unresolved", "addendum declares no interpolation")
    used = {it.anchor for it in add.interpolations}
    for i in range(len(pat.anchors)):
        if i not in used:
            bad("unresolved", f"context anchor {i} has no interpolation")

    for n, node in sorted(ag.nodes.items()):
        if INHERIT in node.label and n not in anchor_nodes:
            bad("inheritance-marker", f"'&' on non-anchor addendum node {n}")
    for n, node in sorted(pg.nodes.items()):
        if INHERIT in node.label:
            bad("inheritance-marker", f"'&' in context pattern node {n}")

    _check_anchor_locations(rule, bad)
    _check_no_dangling_before_anchor(rule, bad)

    if not _connected_with_corefs(pg):
        bad("pattern-connectivity", "context pattern is not connected")

    links = [(("context", a), ("context", b), k, "pattern") for a, b, k in sorted(pg.corefs)]
    links += [(d.a, d.b, d.kind, "addendum") for d in add.corefs]
    for a, b, kind, where in links:
        for side, n in (a, b):
            g = pg if side == CONTEXT else ag
            if n not in g.nodes:
                bad("unresolved", f"{where} coreference names unknown {side} node {n}")
                return out
        if coreferentialities is None:
            continue
        atom = coreferentialities.get(kind)
        if atom is None:
            bad("coreferentiality", f"undeclared coreferentiality {kind!r}")
            continue
        for side, n in (a, b):
            label = (pg if side == CONTEXT else ag).nodes[n].label
            if INHERIT not in label and atom not in label:
                bad("coreferentiality", f"{side} node {n} lacks atom {atom!r} required by {kind!r}")
    return out


def _has_lexeme(rule: Rule) -> bool:
    node = rule.addendum.graph.nodes.get(rule.addendum.lexeme)
    return node is not None and node.spelling is not None


def _locating(rule: Rule) -> Interpolation | None:
    for it in rule.addendum.interpolations:
        if it.anchor == 0 and it.substitutes:
            return it
    return None


def _check_anchor_locations(rule: Rule, bad) -> None:
    it = _locating(rule)
    if it is None:
        return
    add = rule.addendum
    fr = add.frontier()
    lex = fr.index(add.lexeme) if add.lexeme in fr else None
    if lex is None:
        return
    follows = any(e in fr and fr.index(e) < lex for e in (it.source, it.destination))
    loc = rule.pattern.anchors[0].location
    if follows and loc is not Location.ANCESTOR:
        bad("principle-6", "lexeme follows an interpolation endpoint, so the anchor must be an ancestor")
    elif not follows and loc is Location.ANCESTOR:
        bad("principle-6", "lexeme follows neither endpoint, so the anchor must be the immediate successor")


def _check_no_dangling_before_anchor(rule: Rule, bad) -> None:
    add = rule.addendum
    for it in add.interpolations:
        if not it.substitutes:
            continue
        target = inheriting_anchor(add, it)
        # Components of a multi-anchor addendum land in unrelated places,
        # so precedence is only meaningful inside the target's component.
        fr = subtree_frontier(add.graph, component_root(add.graph, target))
        if target not in fr:
            continue
        anchors = {it.source, it.destination}
        for n in fr[:fr.index(target)]:
            node = add.graph.nodes[n]
            if node.kind == INTERNAL and n not in anchors:
                bad("principle-8", f"dangling addendum node {n} precedes anchor {target}")


def _connected_with_corefs(g: ParseGraph) -> bool:
    if not g.nodes:
        return True
    adj: dict[int, set[int]] = {n: set() for n in g.nodes}
    for h, c, _ in g.functional:
        adj[h].add(c)
        adj[c].add(h)
    for p, c in g.parent_edges:
        adj[p].add(c)
        adj[c].add(p)
    for a, b, _ in g.corefs:
        adj[a].add(b)
        adj[b].add(a)
    start = min(g.nodes)
    seen = {start}
    queue = deque([start])
    while queue:
        for m in adj[queue.popleft()]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return len(seen) == len(g.nodes)


def validate_grammar(g: Grammar) -> list[Violation]:
    out: list[Violation] = []
    if not g.start:
        out.append(Violation("start-label", "grammar start label is empty"))
    if INHERIT in g.start:
        out.append(Violation("start-label", "start label may not carry '&'"))
    rules = g.all_rules()
    if not rules:
        out.append(Violation("no-rules", "grammar contains no rules"))
    for kind, atom in sorted(g.coreferentialities.items()):
        if not atom:
            out.append(Violation("coreferentiality", f"coreferentiality {kind!r} has no required atom"))
    for spelling, lst in sorted(g.rules.items()):
        seen: dict[int, Rule] = {}
        for r in lst:
            if _has_lexeme(r) and r.spelling != spelling:
                out.append(Violation("unresolved", f"rule {r.id} filed under spelling {spelling!r}"))
            if r.priority in seen:
                out.append(Violation("priority", f"rules for {spelling!r} share priority {r.priority}", (spelling,)))
            seen[r.priority] = r
    for r in rules:
        out.extend(validate_rule(r, g.coreferentialities))
    return out
