import pytest
from hypothesis import given, settings, strategies as st

from gig.graph import (GAP, LEXICAL, GraphError, ParseGraph, check_invariants, coref_class,
                       dangling_before, format_label, is_complete, linear_successor_frontier,
                       make_label, summary_tree)


def robin_graph():
    """NP over a Det phrase [Det, noun N]; "a" under Det, "robin" under N."""
    g = ParseGraph()
    np_ = g.new_node("NP")
    det = g.new_node("Det", head=True)
    n = g.new_node("N")
    a = g.new_node("Lexeme", LEXICAL, "a")
    robin = g.new_node("Lexeme", LEXICAL, "robin")
    g.set_root(np_)
    g.add_parent(np_, det)
    g.add_func(det, n, "noun")
    g.set_order(det, [det, n])
    g.add_parent(det, a)
    g.add_parent(n, robin)
    return g, (np_, det, n, a, robin)


def test_labels():
    assert make_label("N,P,S") == frozenset({"N", "P", "S"})
    assert make_label(["S", "N"]) == make_label("N, S")
    assert format_label({"S", "N", "P"}) == "N,P,S"


def test_summary_tree_expands_phrases():
    g, (np_, det, n, a, robin) = robin_graph()
    t = summary_tree(g)
    assert t.children[np_] == [det, n]
    assert t.frontier == [a, robin]
    assert t.ancestors(robin) == [n, np_]
    assert t.parent[det] == np_


def test_root_heading_a_phrase():
    g = ParseGraph()
    v = g.new_node("V", head=True)
    subj = g.new_node("NP")
    lex = g.new_node("Lexeme", LEXICAL, "runs")
    g.set_root(v)
    g.add_func(v, subj, "subj")
    g.set_order(v, [subj, v])
    g.add_parent(v, lex)
    assert summary_tree(g).frontier == [subj, lex]


def test_completeness_and_dangling():
    g, (np_, det, n, a, robin) = robin_graph()
    assert is_complete(g)
    g.remove_parent(n, robin)
    g.remove_node(robin)
    assert not is_complete(g)
    assert is_complete(g, det) is False
    assert g.is_dangling(n)
    assert dangling_before(g, a) == []
    assert g.frontier() == [a, n]
    assert linear_successor_frontier(g, a) == [n]


def test_gaps_are_terminal():
    g = ParseGraph()
    r = g.new_node("N")
    gap = g.new_node("Gap", GAP)
    g.set_root(r)
    g.add_parent(r, gap)
    assert is_complete(g)
    assert not g.is_dangling(gap)


def test_coref_closure_is_kind_specific():
    g = ParseGraph()
    a, b, c, d = (g.new_node("N,V") for _ in range(4))
    g.add_coref(a, b, "noun")
    g.add_coref(c, b, "noun")
    g.add_coref(c, d, "verb")
    assert coref_class(g, a, "noun") == {a, b, c}
    assert coref_class(g, a) == {a, b, c, d}
    assert coref_class(g, d, "noun") == {d}


def test_equality_ignores_allocator():
    g, _ = robin_graph()
    h = g.copy()
    h.next_id += 10
    assert g == h
    h.add_coref(1, 2, "x")
    assert g != h


@pytest.mark.parametrize("breakage,code", [
    (lambda g, ids: g.add_func(ids[1], ids[3], "noun"), "invariant-1"),
    (lambda g, ids: g.add_parent(ids[0], ids[2]), "invariant-2"),
    (lambda g, ids: g.add_parent(ids[2], ids[3]), "invariant-3"),
    (lambda g, ids: g.add_parent(ids[3], g.new_node("X")), "principle-1"),
    (lambda g, ids: g.set_order(ids[1], [ids[2], ids[1], ids[2]]), "phrase-order"),
    (lambda g, ids: g.add_coref(ids[0], ids[2], "noun"), "coref"),
    (lambda g, ids: g.new_node("Stray"), "connectivity"),
    (lambda g, ids: g.set_root(None), "root"),
])
def test_invariant_violations_are_named(breakage, code):
    g, ids = robin_graph()
    assert check_invariants(g, {"noun": "N"}) == []
    breakage(g, ids)
    assert code in {v.code for v in check_invariants(g, {"noun": "N"})}


def test_summary_tree_needs_a_root():
    with pytest.raises(GraphError):
        summary_tree(ParseGraph())


@st.composite
def random_trees(draw):
    """Random well-formed graphs: phrases hang below parent-of edges."""
    g = ParseGraph()
    root = g.new_node("X")
    g.set_root(root)
    open_nodes = [root]
    for _ in range(draw(st.integers(0, 12))):
        p = draw(st.sampled_from(open_nodes))
        open_nodes.remove(p)
        width = draw(st.integers(0, 2))
        h = g.new_node("H", head=width > 0)
        comps = [g.new_node("C") for _ in range(width)]
        for i, c in enumerate(comps):
            g.add_func(h, c, f"f{i}")
        if width:
            pos = draw(st.integers(0, width))
            g.set_order(h, comps[:pos] + [h] + comps[pos:])
        g.add_parent(p, h)
        open_nodes += [h] + comps
        if not open_nodes:
            break
    return g


@settings(max_examples=150, deadline=None)
@given(random_trees())
def test_summary_tree_covers_every_node_once(g):
    t = summary_tree(g)
    assert check_invariants(g) == []
    covered = {t.root} | set(t.parent)
    assert covered == set(g.nodes)
    assert set(t.frontier) == {n for n in g.nodes if not t.children[n]}
    assert is_complete(g) == (not any(g.is_dangling(n) for n in g.nodes))
