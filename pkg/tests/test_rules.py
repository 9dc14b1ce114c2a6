import pytest

from gig.fixtures import builtin_grammar
from gig.frames import load_grammar
from gig.graph import INHERIT
from gig.rules import Grammar, Location, label_subsumes, validate_grammar, validate_rule

INSERT_X = """
name "t";
start S;
coreferentialities { noun N; };
rules {
  0 {
    context {
      phrases { 0 { head S; }; };
      anchors { 0 { node ../../phrases/0/head; location %(loc)s; }; };
    };
    addendum {
      phrases { %(phrases)s };
      lexeme { parent ../phrases/%(lexparent)s; spelling "x"; };
      anchors { source ../phrases/0; destination %(dest)s; };
      %(extra)s
    };
  };
};
"""


def grammar(loc="immediate-successor", phrases="0 { head S; };", lexparent="0/head", dest="source", extra=""):
    return load_grammar(INSERT_X % dict(loc=loc, phrases=phrases, lexparent=lexparent, dest=dest, extra=extra),
                        validate=False)


def codes(g):
    return {v.code for v in validate_grammar(g)}


def test_minimal_insertion_is_valid():
    assert validate_grammar(grammar()) == []


def test_label_subsumption():
    assert label_subsumes(frozenset({"N"}), frozenset({"N", "P", "S"}))
    assert not label_subsumes(frozenset({"N", "P"}), frozenset({"N"}))


def test_two_lexical_nodes():
    g = grammar()
    rule = g.all_rules()[0]
    rule.addendum.graph.new_node("Lexeme", "lexical", "y")
    assert "lexical-count" in {v.code for v in validate_rule(rule)}


def test_head_status_mismatch():
    g = grammar(phrases="0 { head S; headed yes; };")
    assert "principle-4" in codes(g)


def test_anchor_location_must_follow_lexeme_order():
    # Lexeme precedes nothing, so an ancestor anchor is wrong here.
    assert "principle-6" in codes(grammar(loc="ancestor"))
    # Lexeme after the destination demands an ancestor anchor.
    proper = "0 { head S; }; 1 { parent ../0/head; left S; head Op; };"
    assert "principle-6" in codes(grammar(phrases=proper, lexparent="1/head", dest="../phrases/1/left"))
    assert validate_grammar(grammar(loc="ancestor", phrases=proper, lexparent="1/head",
                                    dest="../phrases/1/left")) == []


def test_dangling_node_before_inheriting_anchor():
    phrases = "0 { head S; }; 1 { parent ../0/head; pre X; left S; head Op; };"
    g = grammar(loc="ancestor", phrases=phrases, lexparent="1/head", dest="../phrases/1/left")
    assert "principle-8" in codes(g)


def test_destination_must_lie_below_source():
    phrases = "0 { head S; }; 1 { head S; };"
    assert "path" in codes(grammar(phrases=phrases, dest="../phrases/1"))


def test_inheritance_marker_only_on_anchors():
    phrases = "0 { head S; }; 1 { parent ../0/head; head &; };"
    assert "inheritance-marker" in codes(grammar(phrases=phrases, lexparent="1/head"))
    assert validate_grammar(grammar(phrases="0 { head &; };")) == []


def test_coreference_needs_declared_atom():
    phrases = "0 { head S; }; 1 { parent ../0/head; head Adj; subj S; };"
    extra = "coreferences { 0 { 0 ../../phrases/0/head; 1 ../../phrases/1/subj; kind noun; }; };"
    g = grammar(phrases=phrases, lexparent="1/head", dest="../phrases/1/subj", extra=extra)
    assert "coreferentiality" in codes(g)


def test_grammar_level_checks():
    g = grammar()
    rule = g.all_rules()[0]
    assert "no-rules" in codes(Grammar(frozenset({"S"}), {}))
    assert "start-label" in codes(Grammar(frozenset({INHERIT}), {"x": [rule]}))
    assert "priority" in codes(Grammar(frozenset({"S"}), {"x": [rule, rule]}))


@pytest.mark.parametrize("name", ["expr-cfg", "expr-subtyped", "english-mini", "dutch-csd"])
def test_fixtures_validate(name):
    assert validate_grammar(builtin_grammar(name)) == []


def test_expr_cfg_rule_inventory():
    g = builtin_grammar("expr-cfg")
    for spelling in ("0", "1", "("):
        cats = [r.pattern.graph.nodes[r.pattern.anchors[0].node].label for r in g.rules_for(spelling)]
        assert sorted("".join(c) for c in cats) == ["E", "F", "T"]


def test_expr_subtyped_numbers_inherit():
    g = builtin_grammar("expr-subtyped")
    for spelling in ("0", "1"):
        (rule,) = g.rules_for(spelling)
        (it,) = rule.addendum.interpolations
        assert INHERIT in rule.addendum.graph.nodes[it.source].label


def test_dutch_has_a_double_interpolation():
    g = builtin_grammar("dutch-csd")
    doubles = [r for r in g.all_rules() if sum(it.substitutes for it in r.addendum.interpolations) == 2]
    assert doubles
    assert all(r.pattern.anchors[1].location is Location.SUCCESSOR for r in doubles)


def test_successor_template_lists_pending_nodes():
    g = builtin_grammar("expr-cfg")
    paren = g.rules_for("(")[0]
    labels = [paren.addendum.graph.nodes[n].label for n in paren.addendum.successor_template()]
    assert labels == [frozenset({"E"}), frozenset({"RPar"})]
