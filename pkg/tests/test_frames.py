import pytest

from gig.fixtures import FIXTURES, builtin_grammar, fixture_text
from gig.frames import (FrameSyntaxError, UnresolvedPathError, format_frames, load_addendum, load_grammar,
                        parse_frames, serialize_addendum, serialize_grammar)
from gig.graph import GAP, LEXICAL
from gig.rules import GrammarValidationError
from test_acceptance import WEALTHY_ADDENDUM


def test_slot_tree():
    root = parse_frames('a x; b { c "q r"; d 1 2; }; // note\n')
    a, b = root.children
    assert (a.name, a.text()) == ("a", "x")
    assert b.is_block and [c.name for c in b.children] == ["c", "d"]
    assert b.find("c").text() == "q r"


def test_formatting_is_stable():
    text = format_frames(parse_frames(WEALTHY_ADDENDUM).children)
    assert text == WEALTHY_ADDENDUM
    assert format_frames(parse_frames(text).children) == text


def test_addendum_block():
    add = load_addendum(WEALTHY_ADDENDUM)
    g = add.graph
    assert g.nodes[add.lexeme].kind == LEXICAL and g.nodes[add.lexeme].spelling == "wealthy"
    assert [n.kind for n in g.nodes.values()].count(GAP) == 1
    assert serialize_addendum(add) == WEALTHY_ADDENDUM


@pytest.mark.parametrize("text,line,col", [
    ("a { b x; ", 1, 1),
    ("a x", 1, 4),
    ("a { b x; }; }", 1, 13),
    ('a x;\n  b "q;', 2, 5),
    ("a;", 1, 2),
])
def test_syntax_errors_carry_positions(text, line, col):
    with pytest.raises(FrameSyntaxError) as exc:
        parse_frames(text)
    assert (exc.value.line, exc.value.col) == (line, col)


def test_unresolved_path():
    bad = WEALTHY_ADDENDUM.replace("parent ../0/head;", "parent ../9/head;")
    with pytest.raises(UnresolvedPathError) as exc:
        load_addendum(bad)
    assert exc.value.line == 5


def test_empty_rule_set_is_invalid():
    with pytest.raises(GrammarValidationError) as exc:
        load_grammar("start S; rules { };")
    assert "no-rules" in {v.code for v in exc.value.violations}
    assert load_grammar("start S; rules { };", validate=False).all_rules() == []


def test_inheritance_marker_outside_addendum():
    with pytest.raises(FrameSyntaxError):
        load_grammar("start &; rules { };", validate=False)


def test_priority_defaults_to_file_order_and_round_trips():
    g = builtin_grammar("english-mini")
    assert [r.priority for r in g.rules_for("gave")] == [0, 1]
    again = load_grammar(serialize_grammar(g))
    assert [r.priority for r in again.rules_for("gave")] == [0, 1]


def test_kind_inference():
    g = builtin_grammar("english-mini")
    rule = g.rules_for("wealthy")[0]
    assert {c.kind for c in rule.addendum.corefs} == {"noun"}
    ambiguous = WEALTHY_ADDENDUM.replace("head N;", "head N,NP;").replace("subj N;", "subj N,NP;")
    with pytest.raises(FrameSyntaxError):
        load_addendum(ambiguous, {"noun": "N", "np": "NP"})
    explicit = ambiguous.replace("1 ../../phrases/1/subj;", "1 ../../phrases/1/subj;\n      kind np;")
    (c,) = load_addendum(explicit, {"noun": "N", "np": "NP"}).corefs
    assert c.kind == "np"


def test_headed_override():
    g = builtin_grammar("dutch-csd")
    (zag,) = g.rules_for("zag")
    assert any(n.head for n in zag.addendum.graph.nodes.values())


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name):
    g = builtin_grammar(name)
    text = serialize_grammar(g)
    assert serialize_grammar(load_grammar(text)) == text
    assert len(load_grammar(text).all_rules()) == len(load_grammar(fixture_text(name)).all_rules())
