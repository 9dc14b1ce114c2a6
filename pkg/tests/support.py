"""Instrumentation and derivation drivers shared by the test modules."""
from __future__ import annotations

import random

from gig.engine import (InterpolationError, initial_state, interpolate, match_context,
                        replay_successors, undo_interpolate)
from gig.graph import LEXICAL, check_invariants, dangling_before

ACCEPTANCE_LINES: list[str] = []


class Monitor:
    """Parse hook that checks structural invariants and the successor set after every move."""

    def __init__(self, grammar):
        self.grammar = grammar
        self.events = 0
        self.problems: list[str] = []
        self.successor_problems: list[str] = []

    def __call__(self, event, state):
        self.events += 1
        g = state.graph
        for v in check_invariants(g, self.grammar.coreferentialities):
            self.problems.append(f"{event}@{state.pos}: {v}")
        if event == "apply":
            before = dangling_before(g, state.prev_lexeme)
            if before:
                self.problems.append(f"apply@{state.pos}: dangling {before} before the new lexeme")
        expected = replay_successors(state)
        if set(state.successors) != expected:
            self.successor_problems.append(
                f"{event}@{state.pos}: successors {sorted(state.successors)} != {sorted(expected)}")


def snapshot(state):
    return state.graph.copy(), frozenset(state.successors), state.pos, state.prev_lexeme


def same(state, snap) -> bool:
    return snapshot(state)[1:] == snap[1:] and state.graph == snap[0]


def random_walk(grammar, rng: random.Random, max_depth: int, monitor: Monitor | None = None) -> dict:
    """Apply random applicable rules, then undo everything, comparing each level exactly."""
    state = initial_state(grammar)
    spellings = sorted(grammar.rules)
    levels = [snapshot(state)]
    mismatches = []
    for _ in range(rng.randint(1, max_depth)):
        options = [(r, b) for sp in spellings for r in grammar.rules_for(sp) for b in match_context(state, r)]
        rng.shuffle(options)
        for rule, binding in options:
            try:
                interpolate(state, rule, binding)
            except InterpolationError:
                if not same(state, levels[-1]):
                    mismatches.append(f"rejected {rule.id} left residue")
                continue
            if monitor:
                monitor("apply", state)
            levels.append(snapshot(state))
            break
        else:
            break
    depth = len(state.steps)
    while state.steps:
        undo_interpolate(state, state.steps[-1].undo)
        if monitor:
            monitor("undo", state)
        levels.pop()
        if not same(state, levels[-1]):
            mismatches.append(f"undo to depth {len(state.steps)} not exact")
    if state.successors != {state.initial}:
        mismatches.append("successor set not restored")
    return {"depth": depth, "mismatches": mismatches}


def words_under(g, n: int) -> str:
    """Spellings of the lexemes below ``n`` in the summary tree, left to right."""
    tree = g.summary_tree()
    out = []

    def walk(x):
        node = g.nodes[x]
        if node.kind == LEXICAL:
            out.append(node.spelling)
        for c in tree.children.get(x, []):
            walk(c)

    walk(n)
    return " ".join(out)
