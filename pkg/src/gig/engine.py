"""Incremental parsing: context matching, interpolation, undo and the backtracking loop.

States are mutated in place; every mutation goes through a journal so
that ``undo_interpolate`` restores the previous graph exactly, node ids
included. Callers that need the old value take ``state.graph.copy()``.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .graph import (INHERIT, LEXICAL, GraphError, Node, ParseGraph,
                    dangling_before, is_complete)
from .rules import (ADDENDUM, CONTEXT, Grammar, Interpolation, Location, Rule,
                    label_subsumes)

log = logging.getLogger(__name__)

DEFAULT_MAX_BACKTRACKS = 10_000
DEFAULT_MAX_STEPS = 100_000


class InterpolationError(Exception):
    code = "interpolation"


class RedundancyError(InterpolationError):
    code = "redundancy"


class DanglingPrecedenceError(InterpolationError):
    code = "principle-7"


class HeadStatusError(InterpolationError):
    code = "principle-4"


class UndoOrderError(Exception):
    pass


class ReplayDivergence(Exception):
    pass


@dataclass(frozen=True)
class Binding:
    assignment: tuple
    anchors: tuple
    rank: tuple

    def mapping(self) -> dict:
        return dict(self.assignment)


@dataclass
class UndoRecord:
    journal: list
    idmap: dict
    first_id: int
    substituted: tuple
    added_successors: frozenset
    restored_successors: frozenset
    resolved_labels: dict
    prev_lexeme: int | None
    pos: int


@dataclass
class Step:
    rule: Rule
    binding: Binding
    undo: UndoRecord
    token_index: int


@dataclass
class ParserState:
    graph: ParseGraph
    successors: set
    initial: int
    pos: int = 0
    prev_lexeme: int | None = None
    steps: list = field(default_factory=list)

    @property
    def lexeme(self) -> int | None:
        return self.prev_lexeme


def initial_state(grammar: Grammar) -> ParserState:
    g = ParseGraph()
    n = g.new_node(grammar.start)
    g.set_root(n)
    # The initial node counts as following the (absent) previous lexeme.
    return ParserState(g, {n}, n)


class _Journal:
    """Applies graph mutations and remembers how to reverse them."""

    def __init__(self, g: ParseGraph):
        self.g = g
        self.ops: list = []

    def add_node(self, node: Node) -> None:
        self.g.add_node(node)
        self.ops.append(("remove_node", node.id))

    def remove_node(self, nid: int) -> None:
        node = self.g.remove_node(nid)
        self.ops.append(("add_node", node))

    def add_func(self, h, c, fn) -> None:
        self.g.add_func(h, c, fn)
        self.ops.append(("remove_func", h, c, fn))

    def remove_func(self, h, c, fn) -> None:
        self.g.remove_func(h, c, fn)
        self.ops.append(("add_func", h, c, fn))

    def add_parent(self, p, c) -> None:
        self.g.add_parent(p, c)
        self.ops.append(("remove_parent", p, c))

    def remove_parent(self, p, c) -> None:
        self.g.remove_parent(p, c)
        self.ops.append(("add_parent", p, c))

    def set_order(self, h, members) -> None:
        old = self.g.set_order(h, members)
        self.ops.append(("set_order", h, old))

    def add_coref(self, a, b, k) -> None:
        if (min(a, b), max(a, b), k) in self.g.corefs:
            return
        self.g.add_coref(a, b, k)
        self.ops.append(("remove_coref", a, b, k))

    def remove_coref(self, a, b, k) -> None:
        self.g.remove_coref(a, b, k)
        self.ops.append(("add_coref", a, b, k))

    def set_root(self, nid) -> None:
        old = self.g.set_root(nid)
        self.ops.append(("set_root", old))


def _rollback(g: ParseGraph, ops: list) -> None:
    for name, *args in reversed(ops):
        getattr(g, name)(*args)


# -- matching ---------------------------------------------------------

def _pattern_plan(rule: Rule) -> list:
    """Visit order for pattern nodes, each reached from an earlier one."""
    plan = getattr(rule.pattern, "_plan", None)
    if plan is not None:
        return plan
    pg = rule.pattern.graph
    adj: dict[int, list] = {n: [] for n in pg.nodes}
    for h, c, fn in sorted(pg.functional):
        adj[h].append((c, ("fout", fn)))
        adj[c].append((h, ("fin", fn)))
    for p, c in sorted(pg.parent_edges):
        adj[p].append((c, ("pout", None)))
        adj[c].append((p, ("pin", None)))
    for a, b, k in sorted(pg.corefs):
        adj[a].append((b, ("coref", k)))
        adj[b].append((a, ("coref", k)))
    start = rule.pattern.anchors[0].node
    plan = []
    seen = {start}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        for p, rel in adj[q]:
            if p not in seen:
                seen.add(p)
                plan.append((p, q, rel))
                queue.append(p)
    rule.pattern._plan = plan
    return plan


def _candidates(g: ParseGraph, c: int, rel: tuple) -> list[int]:
    kind, arg = rel
    if kind == "fout":
        x = g.functions(c).get(arg)
        return [x] if x is not None else []
    if kind == "pout":
        x = g.child(c)
        return [x] if x is not None else []
    if kind in ("fin", "pin"):
        inc = g.incoming(c)
        if inc is None:
            return []
        if kind == "fin" and inc[0] == "f" and inc[2] == arg:
            return [inc[1]]
        if kind == "pin" and inc[0] == "p":
            return [inc[1]]
        return []
    return sorted(g.coref_class(c, arg))


def _locate(state: ParserState, rule: Rule, prev_pos: int) -> list[tuple[int, tuple]]:
    g = state.graph
    pat = rule.pattern
    anchor = pat.anchors[0]
    pnode = pat.graph.nodes[anchor.node]
    pos = g.positions()
    out = []

    def fits(n: int) -> bool:
        node = g.nodes[n]
        return node.head == pnode.head and label_subsumes(pnode.label, node.label)

    if anchor.location is Location.ANCESTOR:
        if state.prev_lexeme is None:
            return []
        tree = g.summary_tree()
        for depth, n in enumerate(tree.ancestors(state.prev_lexeme), 1):
            if fits(n) and is_complete(g, n):
                out.append((n, (depth,)))
    elif anchor.location is Location.IMMEDIATE:
        frontier = g.frontier()
        limit = len(frontier)
        for i in range(prev_pos + 1, len(frontier)):
            if g.is_dangling(frontier[i]):
                limit = i
                break
        for n in state.successors:
            p = pos.get(n)
            if p is not None and prev_pos < p <= limit and fits(n):
                out.append((n, (p,)))
    else:
        for n in g.frontier()[prev_pos + 1:]:
            if fits(n):
                out.append((n, (pos[n],)))
    out.sort(key=lambda x: x[1])
    return out


def match_context(state: ParserState, rule: Rule) -> list[Binding]:
    """All bindings of ``rule``'s context pattern, best first."""
    g = state.graph
    pat = rule.pattern
    pg = pat.graph
    pos = g.positions()
    prev_pos = pos[state.prev_lexeme] if state.prev_lexeme is not None else -1
    plan = _pattern_plan(rule)
    anchor_loc = {a.node: a for a in pat.anchors}
    coref_pairs = {frozenset((a, b)) for a, b, _ in pg.corefs}

    def node_ok(p: int, c: int, assign: dict) -> bool:
        pn, cn = pg.nodes[p], g.nodes[c]
        if not label_subsumes(pn.label, cn.label):
            return False
        if pn.kind == LEXICAL and (cn.kind != LEXICAL or (pn.spelling and pn.spelling != cn.spelling)):
            return False
        a = anchor_loc.get(p)
        if a is not None:
            if pn.head != cn.head:
                return False
            if a.location is Location.SUCCESSOR and pos.get(c, -1) <= prev_pos:
                return False
        for q, bound in assign.items():
            if bound == c and frozenset((p, q)) not in coref_pairs:
                return False
        return True

    def structure_ok(assign: dict) -> bool:
        for h, c, fn in pg.functional:
            if (assign[h], assign[c], fn) not in g.functional:
                return False
        for p, c in pg.parent_edges:
            if (assign[p], assign[c]) not in g.parent_edges:
                return False
        for a, b, k in pg.corefs:
            if assign[a] not in g.coref_class(assign[b], k):
                return False
        for h, members in pg.order.items():
            ctx = g.order.get(assign[h], [assign[h]])
            idx = [ctx.index(assign[m]) if assign[m] in ctx else -1 for m in members]
            if -1 in idx or idx != sorted(idx):
                return False
        return True

    results: list[Binding] = []
    for c0, key in _locate(state, rule, prev_pos):
        assign = {pat.anchors[0].node: c0}

        def extend(i: int) -> None:
            if i == len(plan):
                if structure_ok(assign):
                    anchors = tuple(assign[a.node] for a in pat.anchors)
                    rest = tuple(pos.get(x, len(pos)) for x in anchors[1:])
                    items = tuple(sorted(assign.items()))
                    results.append(Binding(items, anchors, (key, rest, items)))
                return
            p, q, rel = plan[i]
            for c in _candidates(g, assign[q], rel):
                if node_ok(p, c, assign):
                    assign[p] = c
                    extend(i + 1)
                    del assign[p]

        extend(0)
    results.sort(key=lambda b: b.rank)
    return results


# -- interpolation ----------------------------------------------------

def update_successor_set(prev: Iterable[int], anchors: Iterable[int], addendum_successors: Iterable[int]) -> set:
    """Successors of the new lexeme: the addendum's own, plus the old ones minus the anchors."""
    return (set(prev) - set(anchors)) | set(addendum_successors)


def interpolate(state: ParserState, rule: Rule, binding: Binding) -> tuple[ParserState, UndoRecord]:
    """Apply ``rule`` at ``binding``; the state is updated in place and returned."""
    g = state.graph
    add = rule.addendum
    ag = add.graph
    assign = binding.mapping()
    subs = [it for it in add.interpolations if it.substitutes]

    endpoint_anchor: dict[int, int] = {}
    for it in subs:
        a = binding.anchors[it.anchor]
        for end in (it.source, it.destination):
            if ag.nodes[end].head != g.nodes[a].head:
                raise HeadStatusError(f"{rule.id}: anchor {a} head status not matched by addendum node {end}")
            endpoint_anchor[end] = a

    j = _Journal(g)
    first_id = g.next_id
    idmap: dict[int, int] = {}
    resolved: dict[int, frozenset] = {}
    try:
        for t in sorted(ag.nodes):
            tn = ag.nodes[t]
            label = tn.label
            if INHERIT in label:
                label = (label - {INHERIT}) | g.nodes[endpoint_anchor[t]].label
                resolved[t] = label
            nid = g.next_id
            j.add_node(Node(nid, label, tn.kind, tn.spelling, tn.head))
            idmap[t] = nid
        for h, c, fn in sorted(ag.functional):
            j.add_func(idmap[h], idmap[c], fn)
        for p, c in sorted(ag.parent_edges):
            j.add_parent(idmap[p], idmap[c])
        for h, members in sorted(ag.order.items()):
            j.set_order(idmap[h], [idmap[m] for m in members])

        replaced: dict[int, int] = {}
        for it in subs:
            a = binding.anchors[it.anchor]
            _substitute(j, rule, it, a, idmap)
            replaced[a] = idmap[it.source]

        for d in add.corefs:
            ends = []
            for side, n in (d.a, d.b):
                if side == ADDENDUM:
                    ends.append(idmap[n])
                else:
                    c = assign[n]
                    ends.append(replaced.get(c, c))
            if ends[0] != ends[1]:
                j.add_coref(ends[0], ends[1], d.kind)

        lex = idmap[add.lexeme]
        before = dangling_before(g, lex)
        if before:
            raise DanglingPrecedenceError(f"{rule.id}: dangling nodes {before} precede the new lexeme")
    except (InterpolationError, GraphError) as exc:
        _rollback(g, j.ops)
        if isinstance(exc, GraphError):
            raise InterpolationError(f"{rule.id}: {exc}") from exc
        raise

    anchors = tuple(binding.anchors[it.anchor] for it in subs)
    added = frozenset(idmap[t] for t in add.successor_template())
    restored = frozenset(a for a in anchors if a in state.successors)
    undo = UndoRecord(j.ops, idmap, first_id, anchors, added, restored, resolved,
                      state.prev_lexeme, state.pos)
    state.successors = update_successor_set(state.successors, anchors, added)
    state.steps.append(Step(rule, binding, undo, state.pos))
    state.pos += 1
    state.prev_lexeme = lex
    return state, undo


def _substitute(j: _Journal, rule: Rule, it: Interpolation, a: int, idmap: dict) -> None:
    """Replace context anchor ``a`` by the addendum path of ``it``."""
    g = j.g
    ag = rule.addendum.graph
    s, d = idmap[it.source], idmap[it.destination]
    src_fns = {fn for h, _, fn in ag.functional if h == it.source}
    src_has_child = any(p == it.source for p, _ in ag.parent_edges)
    src_coref_kinds = {c.kind for c in rule.addendum.corefs if (ADDENDUM, it.source) in (c.a, c.b)}

    inc = g.incoming(a)
    if inc is not None:
        kind, other, fn = inc
        if kind == "f":
            j.remove_func(other, a, fn)
            j.add_func(other, s, fn)
            if other in g.order:
                j.set_order(other, [s if m == a else m for m in g.order[other]])
        else:
            j.remove_parent(other, a)
            j.add_parent(other, s)
    if g.root == a:
        j.set_root(s)

    moved: dict[int, int] = {}
    for fn, c in sorted(g.functions(a).items()):
        target = d if fn in src_fns else s
        if fn in g.functions(target):
            raise RedundancyError(f"{rule.id}: node {target} would receive a second '{fn}' edge")
        j.remove_func(a, c, fn)
        j.add_func(target, c, fn)
        moved[c] = target
    c = g.child(a)
    if c is not None:
        target = d if src_has_child else s
        if g.child(target) is not None:
            raise RedundancyError(f"{rule.id}: node {target} would receive a second parent-of edge")
        j.remove_parent(a, c)
        j.add_parent(target, c)

    if a in g.order:
        ctx_order = list(g.order[a])
        i = ctx_order.index(a)
        for target in dict.fromkeys((s, d)):
            left = [m for m in ctx_order[:i] if moved.get(m) == target]
            right = [m for m in ctx_order[i + 1:] if moved.get(m) == target]
            if left or right:
                j.set_order(target, left + list(g.order.get(target, [target])) + right)
        j.set_order(a, None)

    for m, k in list(g.coref_links(a)):
        target = d if k in src_coref_kinds else s
        j.remove_coref(a, m, k)
        if m != target:
            j.add_coref(target, m, k)
    j.remove_node(a)


def undo_interpolate(state: ParserState, undo: UndoRecord) -> ParserState:
    """Reverse the most recent interpolation exactly."""
    if not state.steps or state.steps[-1].undo is not undo:
        raise UndoOrderError("undo record is not the most recent unreversed step")
    state.steps.pop()
    _rollback(state.graph, undo.journal)
    state.successors = (set(state.successors) - undo.added_successors) | undo.restored_successors
    state.pos = undo.pos
    state.prev_lexeme = undo.prev_lexeme
    return state


def replay_successors(state: ParserState) -> set:
    """Recompute the successor set from scratch over the step stack."""
    succ = {state.initial}
    for step in state.steps:
        add = step.rule.addendum
        anchors = [step.binding.anchors[it.anchor] for it in add.interpolations if it.substitutes]
        added = [step.undo.idmap[t] for t in add.successor_template()]
        succ = update_successor_set(succ, anchors, added)
    return succ


# -- search -----------------------------------------------------------

@dataclass
class StepRecord:
    token_index: int
    spelling: str
    rule_id: str
    anchors: tuple
    priority: int
    first_node_id: int
    binding: tuple = ()

    def to_json(self) -> dict:
        return {
            "tokenIndex": self.token_index,
            "spelling": self.spelling,
            "ruleId": self.rule_id,
            "anchorNodeIds": list(self.anchors),
            "priorityRank": self.priority,
            "firstNodeId": self.first_node_id,
            "binding": [list(p) for p in self.binding],
        }

    @classmethod
    def from_json(cls, d: dict) -> "StepRecord":
        return cls(d["tokenIndex"], d["spelling"], d["ruleId"], tuple(d["anchorNodeIds"]),
                   d["priorityRank"], d["firstNodeId"], tuple(tuple(p) for p in d.get("binding", ())))


@dataclass
class Backtrack:
    at_step: int
    token_index: int
    spelling: str
    reason: str

    def to_json(self) -> dict:
        return {"atStep": self.at_step, "tokenIndex": self.token_index,
                "spelling": self.spelling, "reason": self.reason}


@dataclass
class Trace:
    tokens: list
    outcome: str = "failure"
    steps: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    final_graph: ParseGraph | None = None
    reason: str | None = None
    applications: int = 0
    deepest: int = 0

    @property
    def ok(self) -> bool:
        return self.outcome == "success"

    def to_json(self) -> dict:
        from .export import graph_to_json
        out = {
            "outcome": self.outcome,
            "tokens": list(self.tokens),
            "steps": [s.to_json() for s in self.steps],
            "backtracks": [b.to_json() for b in self.backtracks],
        }
        if self.final_graph is not None:
            out["finalGraph"] = graph_to_json(self.final_graph)
        if self.reason is not None:
            out["reason"] = self.reason
        return out


Hook = Callable[[str, ParserState], None]


def _alternatives(state: ParserState, grammar: Grammar, tokens: Sequence[str]) -> deque:
    if state.pos >= len(tokens):
        return deque()
    alts = deque()
    for rule in grammar.rules_for(tokens[state.pos]):
        for b in match_context(state, rule):
            alts.append((rule, b))
    return alts


def _record(step: Step) -> StepRecord:
    return StepRecord(step.token_index, step.rule.spelling, step.rule.id, step.binding.anchors,
                      step.rule.priority, step.undo.first_id, step.binding.assignment)


def parse(grammar: Grammar, tokens: Iterable[str], max_backtracks: int = DEFAULT_MAX_BACKTRACKS,
          max_steps: int = DEFAULT_MAX_STEPS, hook: Hook | None = None) -> Trace:
    """Chronological depth-first search over rule priority, then binding rank."""
    tokens = list(tokens)
    trace = Trace(tokens)
    state = initial_state(grammar)
    if not tokens:
        trace.reason = "incomplete initial context"
        return trace

    frames = [_alternatives(state, grammar, tokens)]
    stuck_at = (0, None)
    while True:
        if state.pos == len(tokens) and is_complete(state.graph):
            trace.outcome = "success"
            trace.steps = [_record(s) for s in state.steps]
            trace.final_graph = state.graph.copy()
            return trace
        advanced = False
        alts = frames[-1]
        while alts:
            rule, b = alts.popleft()
            try:
                interpolate(state, rule, b)
            except InterpolationError as exc:
                log.debug("rejected %s: %s", rule.id, exc)
                continue
            trace.applications += 1
            if hook:
                hook("apply", state)
            if trace.applications > max_steps:
                trace.outcome = "limit"
                trace.reason = f"step limit {max_steps} exceeded"
                return trace
            frames.append(_alternatives(state, grammar, tokens))
            advanced = True
            break
        if advanced:
            if state.pos > trace.deepest:
                trace.deepest = state.pos
            continue

        if state.pos < len(tokens):
            why = f"no rule applies to {tokens[state.pos]!r} at token {state.pos}"
        else:
            why = "input exhausted with an incomplete parse graph"
        if state.pos >= stuck_at[0]:
            stuck_at = (state.pos, why)
        if not state.steps:
            trace.reason = f"no derivation; deepest configuration consumed {trace.deepest} of {len(tokens)} tokens ({stuck_at[1]})"
            return trace
        step = state.steps[-1]
        undo_interpolate(state, step.undo)
        frames.pop()
        if hook:
            hook("undo", state)
        trace.backtracks.append(Backtrack(len(state.steps), step.token_index, step.rule.spelling, why))
        if len(trace.backtracks) > max_backtracks:
            trace.outcome = "limit"
            trace.reason = f"backtrack limit {max_backtracks} exceeded"
            return trace


def replay(trace: Trace, grammar: Grammar, upto: int | None = None) -> ParseGraph:
    """Re-execute the recorded derivation and return the resulting graph."""
    state = initial_state(grammar)
    records = trace.steps if upto is None else trace.steps[:upto]
    for k, rec in enumerate(records):
        if rec.token_index != state.pos or trace.tokens[rec.token_index] != rec.spelling:
            raise ReplayDivergence(f"step {k}: token mismatch")
        try:
            rule = grammar.rule(rec.rule_id)
        except KeyError:
            raise ReplayDivergence(f"step {k}: unknown rule {rec.rule_id}") from None
        chosen = None
        for b in match_context(state, rule):
            if b.anchors == tuple(rec.anchors) and (not rec.binding or b.assignment == tuple(rec.binding)):
                chosen = b
                break
        if chosen is None:
            raise ReplayDivergence(f"step {k}: recorded binding {rec.anchors} is not available")
        if rec.first_node_id < state.graph.next_id:
            raise ReplayDivergence(f"step {k}: node id {rec.first_node_id} already allocated")
        state.graph.next_id = rec.first_node_id
        try:
            interpolate(state, rule, chosen)
        except InterpolationError as exc:
            raise ReplayDivergence(f"step {k}: {exc}") from exc
    if upto is None and trace.final_graph is not None and state.graph != trace.final_graph:
        raise ReplayDivergence("replayed graph differs from the recorded outcome")
    return state.graph
