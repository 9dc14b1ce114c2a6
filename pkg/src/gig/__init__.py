"""Incremental parsing with graph interpolation grammars."""
from .engine import Trace, interpolate, match_context, parse, replay, undo_interpolate
from .fixtures import FIXTURES, builtin_grammar
from .frames import load_grammar, serialize_grammar
from .graph import ParseGraph, check_invariants, is_complete, summary_tree
from .rules import Grammar, Rule, validate_grammar

__all__ = [
    "FIXTURES", "Grammar", "ParseGraph", "Rule", "Trace", "builtin_grammar", "check_invariants",
    "interpolate", "is_complete", "load_grammar", "match_context", "parse", "replay",
    "serialize_grammar", "summary_tree", "undo_interpolate", "validate_grammar",
]
