"""Plain-text linearizations of a sample for unmodified language models.

``tuple`` renders nodes and ``(s, p, o)`` triplets; ``csv`` renders indexed
node and edge blocks. Node indices in the csv form are the node ordinals.
"""

from __future__ import annotations

from typing import Literal

from nag.graph import TextGraph
from nag.synth.tasks import TaskSample

Template = Literal["tuple", "csv"]

CONSTRAINT = "Please provide a direct answer to the question."


def _tuple_header(directed: bool) -> str:
    kind = "a directed" if directed else "an undirected"
    edge = "a directed" if directed else "an undirected"
    return f"In {kind} graph, (s, p, o) means that node s and node o are connected with {edge} edge of type p."


CSV_HEADER = (
    "In a directed graph G:\n"
    "node_id, node_attr means the node index and its attribute in the graph.\n"
    'example: 1, "attribute text"\n'
    "src, edge_attr, dst means that node src and node dst are connected with a directed edge of type edge_attr.\n"
    'example: 5, "relation", 10'
)


def _tuple_description(g: TextGraph) -> str:
    names = {n.id: n.text for n in g.nodes}
    nodes = ", ".join(n.text for n in g.nodes)
    edges = ", ".join(f"({names[e.src]}, {e.text}, {names[e.dst]})" for e in g.edges)
    return f"{_tuple_header(g.directed)}\nG describes a graph among nodes: {nodes}\nThe edges in G are: {edges}"


def _csv_description(g: TextGraph) -> str:
    index = g.node_index()
    node_lines = "\n".join(f'{i}, "{n.text}"' for i, n in enumerate(g.nodes))
    edge_lines = "\n".join(f'{index[e.src]}, "{e.text}", {index[e.dst]}' for e in g.edges)
    return (
        f"{CSV_HEADER}\n\n"
        f"The nodes, and its attributes in G are:\nnode_id,node_attr\n{node_lines}\n\n"
        f"The edges in G are:\nsrc,edge_attr,dst\n{edge_lines}"
    )


def linearize_graph(g: TextGraph, template: Template = "tuple") -> str:
    if template == "tuple":
        return _tuple_description(g)
    if template == "csv":
        return _csv_description(g)
    raise ValueError(f"unknown template {template!r}")


def linearize_prompt(sample: TaskSample, template: Template = "tuple") -> str:
    # the csv layout separates its blocks, and the question, by blank lines
    gap = "\n\n" if template == "csv" else "\n"
    return (
        f"Graph Description:\n{linearize_graph(sample.graph, template)}{gap}"
        f"Question:\n{sample.question}\n\n"
        f"Constraint:\n{CONSTRAINT}\n\n"
        f"Answer:"
    )
