"""Reader and writer for the slot-frame grammar syntax.

A document is a sequence of slots. A slot is either a leaf
(``name value...;``) or a block (``name { slot... };``). Paths such as
``../phrases/1/subj`` are resolved starting at the block that contains
the slot holding the path; ``..`` moves up one block.

Grammar documents carry ``name``, ``start``, ``coreferentialities`` and
``rules`` slots. A document holding a single ``addendum`` block can be
read on its own with :func:`load_addendum`. The full syntax is written
down in ``docs/grammar-format.md``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .graph import (GAP, GAP_ATOM, INHERIT, INTERNAL, LEXEME_ATOM, LEXICAL,
                    ParseGraph, format_label, make_label)
from .rules import (ADDENDUM, CONTEXT, Addendum, Anchor, ContextPattern,
                    CorefDirective, Grammar, GrammarValidationError,
                    Interpolation, Location, Rule, validate_grammar)

RESERVED = {"parent", "head", "headed"}


class FrameError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class FrameSyntaxError(FrameError):
    pass


class UnresolvedPathError(FrameError):
    pass


@dataclass
class Slot:
    name: str
    values: list | None = None  # leaf: list of (text, quoted)
    children: list | None = None
    line: int = 0
    col: int = 0
    parent: "Slot | None" = field(default=None, repr=False, compare=False)

    @property
    def is_block(self) -> bool:
        return self.children is not None

    def find(self, name: str) -> "Slot | None":
        for c in self.children or ():
            if c.name == name:
                return c
        return None

    def text(self) -> str:
        if self.values is None or len(self.values) != 1:
            raise FrameSyntaxError(f"slot '{self.name}' expects a single value", self.line, self.col)
        return self.values[0][0]


def leaf(name: str, value: str, quoted: bool = False) -> Slot:
    return Slot(name, values=[(value, quoted)])


def block(name: str, children: list) -> Slot:
    return Slot(name, children=list(children))


# -- lexing and parsing -----------------------------------------------

_TOKEN = re.compile(r'(?P<ws>\s+)|(?P<comment>//[^\n]*)|(?P<punct>[{};])|"(?P<str>(?:[^"\\\n]|\\.)*)"|(?P<word>[^\s{};"]+)')


def _tokens(text: str):
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FrameSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = pos - line_start + 1
        kind = m.lastgroup
        if kind == "punct":
            yield ("punct", m.group("punct"), line, col)
        elif kind == "str":
            yield ("str", re.sub(r"\\(.)", r"\1", m.group("str")), line, col)
        elif kind == "word":
            yield ("word", m.group("word"), line, col)
        chunk = m.group(0)
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    yield ("eof", "", line, pos - line_start + 1)


def parse_frames(text: str) -> Slot:
    """Parse frame text into a root block holding the top-level slots."""
    toks = list(_tokens(text))
    i = 0
    root = Slot("", children=[], line=1, col=1)

    def items(parent: Slot, closing: bool) -> None:
        nonlocal i
        while True:
            kind, val, line, col = toks[i]
            if kind == "eof":
                if closing:
                    raise FrameSyntaxError(f"block '{parent.name}' is not closed", parent.line, parent.col)
                return
            if kind == "punct" and val == "}":
                if not closing:
                    raise FrameSyntaxError("unexpected '}'", line, col)
                return
            if kind != "word":
                raise FrameSyntaxError(f"expected a slot name, found {val!r}", line, col)
            i += 1
            slot = Slot(val, line=line, col=col, parent=parent)
            parent.children.append(slot)
            k2, v2, l2, c2 = toks[i]
            if k2 == "punct" and v2 == "{":
                i += 1
                slot.children = []
                items(slot, True)
                i += 1  # the closing brace
                if toks[i][0] == "punct" and toks[i][1] == ";":
                    i += 1
                continue
            slot.values = []
            while toks[i][0] in ("word", "str"):
                slot.values.append((toks[i][1], toks[i][0] == "str"))
                i += 1
            if not slot.values:
                raise FrameSyntaxError(f"slot '{val}' has no value", l2, c2)
            if not (toks[i][0] == "punct" and toks[i][1] == ";"):
                _, v3, l3, c3 = toks[i]
                raise FrameSyntaxError(f"expected ';' after slot '{val}', found {v3!r}", l3, c3)
            i += 1

    items(root, False)
    return root


def format_frames(slots: list) -> str:
    """Canonical text: two-space indent, single-leaf blocks on one line."""
    out: list[str] = []

    def values(s: Slot) -> str:
        return " ".join('"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"' if q else v
                        for v, q in s.values)

    def emit(s: Slot, depth: int) -> None:
        pad = "  " * depth
        end = ";" if depth else ""
        if not s.is_block:
            out.append(f"{pad}{s.name} {values(s)};")
        elif len(s.children) == 1 and not s.children[0].is_block:
            c = s.children[0]
            out.append(f"{pad}{s.name} {{ {c.name} {values(c)}; }}{end}")
        else:
            out.append(f"{pad}{s.name} {{")
            for c in s.children:
                emit(c, depth + 1)
            out.append(f"{pad}}}{end}")

    for s in slots:
        emit(s, 0)
    return "\n".join(out) + "\n"


# -- loading ----------------------------------------------------------

def _numbered(s: Slot) -> list[Slot]:
    kids = s.children or []
    for c in kids:
        if not c.name.isdigit():
            raise FrameSyntaxError(f"'{s.name}' entries must have numeric names, found '{c.name}'", c.line, c.col)
    names = [c.name for c in kids]
    if len(set(names)) != len(names):
        raise FrameSyntaxError(f"duplicate entry in '{s.name}'", s.line, s.col)
    return sorted(kids, key=lambda c: int(c.name))


def _require_block(s: Slot | None, name: str, parent: Slot) -> Slot:
    if s is None:
        raise FrameSyntaxError(f"missing '{name}' block", parent.line, parent.col)
    if not s.is_block:
        raise FrameSyntaxError(f"'{name}' must be a block", s.line, s.col)
    return s


def _label(s: Slot, allow_inherit: bool) -> frozenset:
    text = s.text()
    label = make_label(text)
    for atom in label:
        if atom == INHERIT:
            if not allow_inherit:
                raise FrameSyntaxError("'&' is only allowed in addendum labels", s.line, s.col)
        elif not re.fullmatch(r"[A-Za-z][A-Za-z0-9-]*", atom):
            raise FrameSyntaxError(f"bad label atom {atom!r}", s.line, s.col)
    if not label:
        raise FrameSyntaxError("empty label", s.line, s.col)
    return label


class _Loader:
    """Shared state while turning slots into templates; maps slots to nodes."""

    def __init__(self) -> None:
        self.nodes: dict[int, tuple[str, int]] = {}

    def resolve(self, s: Slot, depth: int = 0) -> tuple[str, int]:
        """Node designated by leaf ``s``, whose value is a path."""
        if depth > 32:
            raise UnresolvedPathError("reference cycle", s.line, s.col)
        path = s.text()
        cur = s.parent
        for part in path.split("/"):
            if part == "..":
                cur = cur.parent if cur is not None else None
            elif part in ("", "."):
                continue
            else:
                cur = cur.find(part) if cur is not None and cur.is_block else None
            if cur is None:
                raise UnresolvedPathError(f"path {path!r} does not resolve", s.line, s.col)
        if id(cur) in self.nodes:
            return self.nodes[id(cur)]
        if cur.is_block or cur is s:
            raise UnresolvedPathError(f"path {path!r} does not name a node", s.line, s.col)
        return self.resolve(cur, depth + 1)

    def phrases(self, owner: Slot, side: str, allow_inherit: bool) -> ParseGraph:
        g = ParseGraph()
        ph_block = owner.find("phrases")
        if ph_block is None:
            return g
        _require_block(ph_block, "phrases", owner)
        parents = []
        for ph in _numbered(ph_block):
            if not ph.is_block:
                raise FrameSyntaxError("a phrase must be a block", ph.line, ph.col)
            head = None
            members, funcs = [], []
            headed = None
            for s in ph.children:
                if s.is_block:
                    raise FrameSyntaxError(f"unexpected block '{s.name}' in phrase", s.line, s.col)
                if s.name == "parent":
                    parents.append(s)
                    continue
                if s.name == "headed":
                    if s.text() not in ("yes", "no"):
                        raise FrameSyntaxError("'headed' takes yes or no", s.line, s.col)
                    headed = s.text() == "yes"
                    continue
                label = _label(s, allow_inherit)
                n = g.new_node(label, GAP if GAP_ATOM in label else INTERNAL)
                self.nodes[id(s)] = (side, n)
                members.append(n)
                if s.name == "head":
                    if head is not None:
                        raise FrameSyntaxError("phrase has two head slots", s.line, s.col)
                    head = n
                else:
                    if any(fn == s.name for fn, _ in funcs):
                        raise FrameSyntaxError(f"duplicate function '{s.name}'", s.line, s.col)
                    funcs.append((s.name, n))
            if head is None:
                raise FrameSyntaxError("phrase block has no head slot", ph.line, ph.col)
            flag = bool(funcs) if headed is None else headed
            if funcs and not flag:
                raise FrameSyntaxError("a phrase with complements must be headed", ph.line, ph.col)
            g.nodes[head] = replace(g.nodes[head], head=flag)
            g._touch()
            for fn, c in funcs:
                g.add_func(head, c, fn)
            if flag:
                g.set_order(head, members)
            self.nodes[id(ph)] = (side, head)
        for s in parents:
            pside, p = self.resolve(s)
            if pside != side:
                raise UnresolvedPathError("parent must lie in the same graph", s.line, s.col)
            g.add_parent(p, self.nodes[id(s.parent)][1])
        return g

    def coref_list(self, owner: Slot, coreferentialities, labels) -> list[tuple]:
        cb = owner.find("coreferences")
        if cb is None:
            return []
        _require_block(cb, "coreferences", owner)
        out = []
        for entry in _numbered(cb):
            if not entry.is_block:
                raise FrameSyntaxError("a coreference must be a block", entry.line, entry.col)
            ends = [c for c in entry.children if c.name in ("0", "1")]
            if len(ends) != 2 or len(entry.children) - len(ends) > 1:
                raise FrameSyntaxError("a coreference names ends 0 and 1 and an optional kind", entry.line, entry.col)
            ends.sort(key=lambda c: c.name)
            a, b = self.resolve(ends[0]), self.resolve(ends[1])
            kind_slot = entry.find("kind")
            if kind_slot is not None:
                kind = kind_slot.text()
            else:
                kind = _infer_kind([labels(a), labels(b)], coreferentialities)
                if kind is None and coreferentialities:
                    raise FrameSyntaxError("cannot infer the coreference kind; add a 'kind' slot",
                                           entry.line, entry.col)
            out.append((a, b, kind))
        return out


def _infer_kind(labels: list, coreferentialities) -> str | None:
    if not coreferentialities:
        return None
    fits = [k for k, atom in sorted(coreferentialities.items())
            if all(atom in lab or INHERIT in lab for lab in labels)]
    return fits[0] if len(fits) == 1 else None


def _load_addendum_block(ld: _Loader, ab: Slot, pattern: ContextPattern | None,
                         coreferentialities) -> Addendum:
    g = ld.phrases(ab, ADDENDUM, allow_inherit=True)
    lex_blocks = [s for s in ab.children if s.name == "lexeme"]
    _require_block(lex_blocks[0] if lex_blocks else None, "lexeme", ab)
    lexemes = []
    for lex in lex_blocks:
        _require_block(lex, "lexeme", ab)
        sp = lex.find("spelling")
        par = lex.find("parent")
        if sp is None or par is None:
            raise FrameSyntaxError("lexeme needs 'parent' and 'spelling'", lex.line, lex.col)
        n = g.new_node({LEXEME_ATOM}, LEXICAL, sp.text())
        ld.nodes[id(lex)] = (ADDENDUM, n)
        side, p = ld.resolve(par)
        if side != ADDENDUM:
            raise UnresolvedPathError("lexeme parent must be an addendum node", par.line, par.col)
        g.add_parent(p, n)
        lexemes.append(n)
    # Extra lexeme blocks stay in the graph so validation reports them.
    lexeme = lexemes[0]

    def addendum_node(s: Slot) -> int:
        side, n = ld.resolve(s)
        if side != ADDENDUM:
            raise UnresolvedPathError("interpolation endpoints must be addendum nodes", s.line, s.col)
        return n

    interps: list[Interpolation] = []
    anchors = ab.find("anchors")
    if anchors is not None:
        _require_block(anchors, "anchors", ab)
        src, dst = anchors.find("source"), anchors.find("destination")
        if src is None or dst is None:
            raise FrameSyntaxError("anchors need 'source' and 'destination'", anchors.line, anchors.col)
        interps.append(Interpolation(0, addendum_node(src), addendum_node(dst)))
    ib = ab.find("interpolations")
    if ib is not None:
        if anchors is not None:
            raise FrameSyntaxError("use either 'anchors' or 'interpolations'", ib.line, ib.col)
        for entry in _numbered(_require_block(ib, "interpolations", ab)):
            a = entry.find("anchor")
            if a is None or not a.text().isdigit():
                raise FrameSyntaxError("interpolation needs a numeric 'anchor'", entry.line, entry.col)
            src, dst = entry.find("source"), entry.find("destination")
            if (src is None) != (dst is None):
                raise FrameSyntaxError("give both 'source' and 'destination', or neither", entry.line, entry.col)
            if src is None:
                interps.append(Interpolation(int(a.text())))
            else:
                interps.append(Interpolation(int(a.text()), addendum_node(src), addendum_node(dst)))

    def labels(ref):
        side, n = ref
        graph = g if side == ADDENDUM else pattern.graph
        return graph.nodes[n].label

    corefs = [CorefDirective(a, b, k) for a, b, k in ld.coref_list(ab, coreferentialities, labels)]
    return Addendum(g, lexeme, interps, corefs)


def _load_context(ld: _Loader, cb: Slot, coreferentialities) -> ContextPattern:
    g = ld.phrases(cb, CONTEXT, allow_inherit=False)
    anchors = []
    ab = _require_block(cb.find("anchors"), "anchors", cb)
    for entry in _numbered(ab):
        node, loc = entry.find("node"), entry.find("location")
        if node is None or loc is None:
            raise FrameSyntaxError("context anchor needs 'node' and 'location'", entry.line, entry.col)
        try:
            location = Location(loc.text())
        except ValueError:
            raise FrameSyntaxError(f"unknown anchor location {loc.text()!r}", loc.line, loc.col) from None
        side, n = ld.resolve(node)
        if side != CONTEXT:
            raise UnresolvedPathError("context anchors must be pattern nodes", node.line, node.col)
        anchors.append(Anchor(n, location))
    for a, b, k in ld.coref_list(cb, coreferentialities, lambda ref: g.nodes[ref[1]].label):
        if k is None:
            raise FrameSyntaxError("pattern coreferences need a kind", cb.line, cb.col)
        g.add_coref(a[1], b[1], k)
    return ContextPattern(g, anchors)


def load_grammar(text: str, validate: bool = True) -> Grammar:
    """Read a grammar document; by default reject grammars with violations."""
    root = parse_frames(text)
    name = root.find("name")
    start = root.find("start")
    if start is None:
        raise FrameSyntaxError("grammar has no 'start' slot", 1, 1)
    corefs: dict[str, str] = {}
    cr = root.find("coreferentialities")
    if cr is not None:
        for s in _require_block(cr, "coreferentialities", root).children:
            corefs[s.name] = s.text()
    rules_block = _require_block(root.find("rules"), "rules", root)
    rules: list[Rule] = []
    per_spelling: dict[str, int] = {}
    for rb in _numbered(rules_block):
        if not rb.is_block:
            raise FrameSyntaxError("a rule must be a block", rb.line, rb.col)
        ld = _Loader()
        pattern = _load_context(ld, _require_block(rb.find("context"), "context", rb), corefs)
        add = _load_addendum_block(ld, _require_block(rb.find("addendum"), "addendum", rb), pattern, corefs)
        spelling = add.graph.nodes[add.lexeme].spelling
        prio = rb.find("priority")
        if prio is not None:
            if not prio.text().lstrip("-").isdigit():
                raise FrameSyntaxError("priority must be an integer", prio.line, prio.col)
            priority = int(prio.text())
        else:
            priority = per_spelling.get(spelling, 0)
        per_spelling[spelling] = priority + 1
        rules.append(Rule(pattern, add, priority))
    g = Grammar.from_rules(_label(start, False), rules, corefs, name.text() if name else "")
    if validate:
        problems = validate_grammar(g)
        if problems:
            raise GrammarValidationError(problems)
    return g


def load_grammar_file(path: str | Path, validate: bool = True) -> Grammar:
    return load_grammar(Path(path).read_text(encoding="utf-8"), validate)


def load_addendum(text: str, coreferentialities: dict | None = None) -> Addendum:
    """Read a document whose only top-level slot is an ``addendum`` block."""
    root = parse_frames(text)
    ab = _require_block(root.find("addendum"), "addendum", root)
    return _load_addendum_block(_Loader(), ab, None, coreferentialities)


# -- writing ----------------------------------------------------------

def _phrase_blocks(g: ParseGraph) -> tuple[list[Slot], dict]:
    comp = {c: (h, fn) for h, c, fn in g.functional}
    heads = sorted(n for n, node in g.nodes.items() if n not in comp and node.kind != LEXICAL)
    where: dict[int, tuple[int, str]] = {}
    for k, h in enumerate(heads):
        where[h] = (k, "head")
        for fn, c in g.functions(h).items():
            if g.functions(c):
                raise ValueError(f"complement {c} heads its own phrase; not expressible")
            if fn in RESERVED or fn.isdigit():
                raise ValueError(f"function name {fn!r} clashes with a reserved slot name")
            where[c] = (k, fn)
    parent_of = {c: p for p, c in g.parent_edges}
    blocks = []
    for k, h in enumerate(heads):
        items = []
        if h in parent_of:
            pk, pslot = where[parent_of[h]]
            items.append(leaf("parent", f"../{pk}/{pslot}"))
        members = g.order.get(h) or [h] + [c for _, c in sorted(g.functions(h).items())]
        for m in members:
            name = "head" if m == h else comp[m][1]
            if m != h and g.nodes[m].head:
                raise ValueError(f"complement {m} carries a head flag; not expressible")
            items.append(leaf(name, format_label(g.nodes[m].label)))
        if g.nodes[h].head != bool(g.functions(h)):
            items.append(leaf("headed", "yes" if g.nodes[h].head else "no"))
        blocks.append(block(str(k), items))
    return blocks, where


def _ref(where: dict, n: int, prefix: str, phrase_only: bool = False) -> str:
    k, slot = where[n]
    if phrase_only and slot == "head":
        return f"{prefix}phrases/{k}"
    return f"{prefix}phrases/{k}/{slot}"


def _addendum_slots(add: Addendum, ctx_where: dict | None, coreferentialities,
                    ctx_graph: ParseGraph | None) -> list[Slot]:
    g = add.graph
    phrases, where = _phrase_blocks(g)
    parent_of = {c: p for p, c in g.parent_edges}
    items = [block("phrases", phrases)]
    lex = g.nodes[add.lexeme]
    items.append(block("lexeme", [leaf("parent", _ref(where, parent_of[add.lexeme], "../")),
                                  leaf("spelling", lex.spelling, quoted=True)]))
    subs = add.interpolations
    if len(subs) == 1 and subs[0].anchor == 0 and subs[0].substitutes:
        it = subs[0]
        dst = "source" if it.destination == it.source else _ref(where, it.destination, "../", True)
        items.append(block("anchors", [leaf("source", _ref(where, it.source, "../", True)),
                                       leaf("destination", dst)]))
    else:
        entries = []
        for i, it in enumerate(subs):
            kids = [leaf("anchor", str(it.anchor))]
            if it.substitutes:
                kids.append(leaf("source", _ref(where, it.source, "../../", True)))
                kids.append(leaf("destination", "source" if it.destination == it.source
                                 else _ref(where, it.destination, "../../", True)))
            entries.append(block(str(i), kids))
        items.append(block("interpolations", entries))
    if add.corefs:
        entries = []
        for i, d in enumerate(add.corefs):
            kids, labels = [], []
            for end, (side, n) in zip("01", (d.a, d.b)):
                if side == ADDENDUM:
                    kids.append(leaf(end, _ref(where, n, "../../")))
                    labels.append(g.nodes[n].label)
                else:
                    kids.append(leaf(end, _ref(ctx_where, n, "../../../context/")))
                    labels.append(ctx_graph.nodes[n].label)
            if d.kind is not None and _infer_kind(labels, coreferentialities) != d.kind:
                kids.append(leaf("kind", d.kind))
            entries.append(block(str(i), kids))
        items.append(block("coreferences", entries))
    return items


def serialize_addendum(add: Addendum, coreferentialities: dict | None = None) -> str:
    return format_frames([block("addendum", _addendum_slots(add, None, coreferentialities, None))])


def _context_slots(pat: ContextPattern) -> tuple[list[Slot], dict]:
    g = pat.graph
    phrases, where = _phrase_blocks(g)
    items = [block("phrases", phrases)]
    items.append(block("anchors", [
        block(str(i), [leaf("node", _ref(where, a.node, "../../")), leaf("location", a.location.value)])
        for i, a in enumerate(pat.anchors)]))
    if g.corefs:
        items.append(block("coreferences", [
            block(str(i), [leaf("0", _ref(where, a, "../../")), leaf("1", _ref(where, b, "../../")),
                           leaf("kind", k)])
            for i, (a, b, k) in enumerate(sorted(g.corefs))]))
    return items, where


def serialize_grammar(g: Grammar) -> str:
    """Canonical text; ``load_grammar`` of the result rebuilds an equal grammar."""
    top = []
    if g.name:
        top.append(leaf("name", g.name, quoted=True))
    top.append(leaf("start", format_label(g.start)))
    if g.coreferentialities:
        top.append(block("coreferentialities",
                         [leaf(k, v) for k, v in sorted(g.coreferentialities.items())]))
    entries = []
    for spelling in g.rules:
        for ordinal, r in enumerate(sorted(g.rules[spelling], key=lambda r: r.priority)):
            kids = []
            if r.priority != ordinal:
                kids.append(leaf("priority", str(r.priority)))
            ctx, where = _context_slots(r.pattern)
            kids.append(block("context", ctx))
            kids.append(block("addendum", _addendum_slots(r.addendum, where, g.coreferentialities,
                                                         r.pattern.graph)))
            entries.append(block(str(len(entries)), kids))
    top.append(block("rules", entries))
    return format_frames(top)
