"""JSON and DOT renderings of parse graphs."""
from __future__ import annotations

import json

from .graph import GAP, LEXICAL, Node, ParseGraph, format_label


def graph_to_json(g: ParseGraph) -> dict:
    """Plain-data form with every collection in a canonical order."""
    return {
        "nodes": [
            {"id": n.id, "label": sorted(n.label), "kind": n.kind, "spelling": n.spelling, "head": n.head}
            for _, n in sorted(g.nodes.items())
        ],
        "functionalEdges": [{"head": h, "complement": c, "function": fn}
                            for h, c, fn in sorted(g.functional)],
        "parentEdges": [{"parent": p, "child": c} for p, c in sorted(g.parent_edges)],
        "phraseOrder": {str(h): list(m) for h, m in sorted(g.order.items())},
        "corefLinks": [{"nodes": [a, b], "kind": k} for a, b, k in sorted(g.corefs)],
        "root": g.root,
    }


def graph_from_json(data: dict) -> ParseGraph:
    g = ParseGraph()
    for d in data["nodes"]:
        g.add_node(Node(d["id"], frozenset(d["label"]), d["kind"], d.get("spelling"), d.get("head", False)))
    for e in data["functionalEdges"]:
        g.add_func(e["head"], e["complement"], e["function"])
    for e in data["parentEdges"]:
        g.add_parent(e["parent"], e["child"])
    for h, m in data["phraseOrder"].items():
        g.set_order(int(h), m)
    for e in data["corefLinks"]:
        g.add_coref(*e["nodes"], e["kind"])
    g.set_root(data["root"])
    return g


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def graph_to_dot(g: ParseGraph, name: str = "parse") -> str:
    """DOT digraph; coreference links are dashed and undirected."""
    lines = [f"digraph {_quote(name)} {{", "  node [fontname=Helvetica];"]
    for nid, n in sorted(g.nodes.items()):
        if n.kind == LEXICAL:
            attrs = f"label={_quote(n.spelling)}, shape=plaintext"
        else:
            attrs = f"label={_quote(format_label(n.label))}"
            if n.kind == GAP:
                attrs += ", shape=box"
            if n.head:
                attrs += ", peripheries=2"
        lines.append(f"  n{nid} [{attrs}];")
    for p, c in sorted(g.parent_edges):
        lines.append(f"  n{p} -> n{c};")
    for h, c, fn in sorted(g.functional):
        lines.append(f"  n{h} -> n{c} [label={_quote(fn)}];")
    for a, b, k in sorted(g.corefs):
        lines.append(f"  n{a} -> n{b} [style=dashed, dir=none, label={_quote(k)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
