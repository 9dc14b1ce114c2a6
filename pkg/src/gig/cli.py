"""Command-line front end: ``gig parse``, ``gig check``, ``gig export``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import engine
from .export import dumps, graph_to_dot, graph_to_json
from .fixtures import FIXTURES, builtin_grammar, fixture_text
from .frames import FrameError, load_grammar
from .rules import GrammarValidationError, validate_grammar

EXIT_OK, EXIT_PARSE, EXIT_USAGE, EXIT_GRAMMAR = 0, 1, 2, 3
BUILTIN = "builtin:"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _grammar_text(source: str) -> str:
    if source.startswith(BUILTIN):
        name = source[len(BUILTIN):]
        if name not in FIXTURES:
            raise CliError(f"unknown builtin grammar {name!r} (have: {', '.join(FIXTURES)})", EXIT_USAGE)
        return fixture_text(name)
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read grammar {source}: {exc.strerror}", EXIT_USAGE) from None


def load(source: str):
    if source.startswith(BUILTIN) and source[len(BUILTIN):] in FIXTURES:
        return builtin_grammar(source[len(BUILTIN):])
    try:
        return load_grammar(_grammar_text(source))
    except (FrameError, GrammarValidationError) as exc:
        raise CliError(f"invalid grammar {source}: {exc}", EXIT_GRAMMAR) from None


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _sentences(args) -> list[str]:
    if args.sentences:
        return list(args.sentences)
    return [line.rstrip("\n") for line in sys.stdin]


def _summary(sentence: str, trace: engine.Trace) -> str:
    if trace.ok:
        from .fixtures import expression_fold
        try:
            shape = expression_fold(trace.final_graph)
        except ValueError:
            shape = _fold(trace.final_graph)
        return f"ok\t{sentence}\t{shape}\tbacktracks={len(trace.backtracks)}"
    return f"{trace.outcome}\t{sentence}\t{trace.reason}"


def _fold(g) -> str:
    """Bracketed rendering of the summary tree, gaps omitted."""
    tree = g.summary_tree()

    def fold(n: int) -> str:
        node = g.nodes[n]
        if node.spelling is not None:
            return node.spelling
        parts = [fold(k) for k in tree.children.get(n, [])]
        parts = [p for p in parts if p]
        if len(parts) == 1:
            return parts[0]
        return "(" + " ".join(parts) + ")" if parts else ""

    return fold(tree.root)


def cmd_parse(args) -> int:
    grammar = load(args.grammar)
    status = EXIT_OK
    for sentence in _sentences(args):
        trace = engine.parse(grammar, sentence.split(), args.max_backtracks, args.max_steps)
        if not trace.ok:
            status = EXIT_PARSE
        if args.format == "json":
            print(dumps(trace.to_json()))
        elif args.format == "dot":
            if trace.ok:
                print(graph_to_dot(trace.final_graph), end="")
            else:
                print(f"// {trace.outcome}: {trace.reason}")
        else:
            print(_summary(sentence, trace))
            if args.trace:
                for b in trace.backtracks:
                    print(f"  backtrack at step {b.at_step}: token {b.token_index} {b.spelling!r} ({b.reason})")
    return status


def cmd_check(args) -> int:
    text = _grammar_text(args.grammar)
    try:
        grammar = load_grammar(text, validate=False)
    except FrameError as exc:
        print(f"{args.grammar}: {exc}")
        return EXIT_GRAMMAR
    problems = validate_grammar(grammar)
    for v in problems:
        print(f"{args.grammar}: {v}")
    if problems:
        return EXIT_GRAMMAR
    count = len(grammar.all_rules())
    print(f"{args.grammar}: ok ({count} rules)")
    return EXIT_OK


def cmd_export(args) -> int:
    grammar = load(args.grammar)
    trace = engine.parse(grammar, args.sentence.split(), args.max_backtracks, args.max_steps)
    if not trace.ok:
        print(f"{trace.outcome}: {trace.reason}", file=sys.stderr)
        return EXIT_PARSE
    if args.format == "dot":
        text = graph_to_dot(trace.final_graph)
    else:
        text = dumps(graph_to_json(trace.final_graph)) + "\n"
    if args.output:
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc.strerror}", EXIT_USAGE) from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gig", description="Incremental graph-interpolation parser.")
    sub = p.add_subparsers(dest="command", required=True)

    def limits(sp) -> None:
        sp.add_argument("--max-backtracks", type=_positive, default=engine.DEFAULT_MAX_BACKTRACKS)
        sp.add_argument("--max-steps", type=_positive, default=engine.DEFAULT_MAX_STEPS)

    sp = sub.add_parser("parse", help="parse sentences (arguments, or stdin one per line)")
    sp.add_argument("--grammar", required=True, help="grammar file or builtin:NAME")
    sp.add_argument("sentences", nargs="*")
    sp.add_argument("--format", choices=("json", "dot", "summary"), default="summary")
    sp.add_argument("--trace", action="store_true", help="list backtracks in summary output")
    limits(sp)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("check", help="validate a grammar")
    sp.add_argument("grammar", help="grammar file or builtin:NAME")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("export", help="write the parse graph of one sentence")
    sp.add_argument("--grammar", required=True)
    sp.add_argument("sentence")
    sp.add_argument("--format", choices=("dot", "json"), default="dot")
    sp.add_argument("-o", "--output")
    limits(sp)
    sp.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gig: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
