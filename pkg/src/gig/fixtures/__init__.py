"""Bundled grammars, addressable by name."""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..graph import LEXICAL, ParseGraph
from ..rules import Grammar

FIXTURES = ("expr-cfg", "expr-subtyped", "english-mini", "dutch-csd")


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return resources.files(__name__).joinpath(f"{name}.gig").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def builtin_grammar(name: str) -> Grammar:
    from ..frames import load_grammar
    return load_grammar(fixture_text(name))


def expression_fold(g: ParseGraph) -> str:
    """Render an expression parse as a fully parenthesized string.

    Unary chains collapse, ``( X )`` phrases yield ``X`` and binary
    operator phrases yield ``(a+b)``, so ``0 + 0 + 0`` gives ``((0+0)+0)``.
    """
    tree = g.summary_tree()

    def fold(n: int) -> str:
        node = g.nodes[n]
        if node.kind == LEXICAL:
            return node.spelling
        kids = tree.children.get(n, [])
        if len(kids) == 1:
            return fold(kids[0])
        parts = [fold(k) for k in kids]
        if len(parts) == 3 and parts[0] == "(" and parts[2] == ")":
            return parts[1]
        if len(parts) == 3 and parts[1] in ("+", "*"):
            return f"({parts[0]}{parts[1]}{parts[2]})"
        raise ValueError(f"node {n} is not an expression phrase: {parts}")

    return fold(tree.root)
