"""Text-graph data model: nodes and edges that carry raw text.

A :class:`TextGraph` is an immutable value. Construction does not validate;
call :func:`validate_graph` (or go through :func:`parse_graph_json`, which
rejects malformed documents) before handing a graph to the flattener.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Literal, Union

ElementKind = Literal["node", "edge"]
ElementOrder = Literal["as-given", "random", "bfs"]


class GraphError(ValueError):
    """Raised for structurally unusable graphs."""


class GraphParseError(GraphError):
    """A graph JSON document does not match the schema.

    ``path`` is a JSON-pointer-like location (``$.edges[2].src``) or ``None``
    for syntax errors, in which case ``offset`` holds the byte offset.
    """

    def __init__(self, message: str, path: str | None = None, offset: int | None = None):
        where = path if path is not None else f"byte {offset}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.offset = offset


@dataclass(frozen=True)
class Node:
    id: str
    text: str


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    text: str

    @property
    def is_self_loop(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class TextGraph:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...] = ()
    directed: bool = False

    def __post_init__(self) -> None:
        # accept lists but freeze them
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def num_elements(self) -> int:
        return len(self.nodes) + len(self.edges)

    def node_index(self) -> dict[str, int]:
        """Map from node id to its position in ``nodes`` (first occurrence wins)."""
        index: dict[str, int] = {}
        for i, node in enumerate(self.nodes):
            index.setdefault(node.id, i)
        return index

    def node_by_id(self, node_id: str) -> Node:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def neighbors(self, node_id: str) -> list[str]:
        """Ids adjacent to ``node_id``, ignoring direction, in edge order."""
        out: list[str] = []
        for e in self.edges:
            if e.src == node_id:
                out.append(e.dst)
            elif e.dst == node_id:
                out.append(e.src)
        return out

    def with_texts(self, node_texts: Iterable[str], edge_texts: Iterable[str]) -> "TextGraph":
        nodes = tuple(Node(n.id, t) for n, t in zip(self.nodes, node_texts, strict=True))
        edges = tuple(Edge(e.src, e.dst, t) for e, t in zip(self.edges, edge_texts, strict=True))
        return TextGraph(nodes, edges, self.directed)


@dataclass(frozen=True)
class UnifiedElement:
    """One member of the unified element set (a node or an edge).

    ``ordinal`` is the element's slot in the flattening order, ``index`` is
    its position inside ``graph.nodes`` or ``graph.edges``.
    """

    kind: ElementKind
    ordinal: int
    index: int
    source: Union[Node, Edge]

    @property
    def key(self) -> tuple[str, int]:
        return (self.kind, self.index)

    @property
    def text(self) -> str:
        return self.source.text


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Violation, ...] = ()
    warnings: tuple[Violation, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> list[str]:
        return [v.code for v in self.errors]


def validate_graph(g: TextGraph) -> ValidationReport:
    """Collect every invariant violation of ``g``.

    Errors: duplicate node ids, dangling edge endpoints, empty texts.
    Warnings: self-loops (accepted, but flagged).
    """
    errors: list[Violation] = []
    warnings: list[Violation] = []
    seen: set[str] = set()
    for i, node in enumerate(g.nodes):
        if node.id in seen:
            errors.append(Violation("duplicate-node-id", f"$.nodes[{i}].id", f"duplicate node id {node.id!r}"))
        seen.add(node.id)
        if not node.text.strip():
            errors.append(Violation("empty-text", f"$.nodes[{i}].text", "node text is empty"))
    for i, edge in enumerate(g.edges):
        for end in ("src", "dst"):
            ref = getattr(edge, end)
            if ref not in seen:
                errors.append(
                    Violation("dangling-endpoint", f"$.edges[{i}].{end}", f"edge references missing node {ref!r}")
                )
        if not edge.text.strip():
            errors.append(Violation("empty-text", f"$.edges[{i}].text", "edge text is empty"))
        if edge.is_self_loop:
            warnings.append(Violation("self-loop", f"$.edges[{i}]", f"self-loop on {edge.src!r}"))
    return ValidationReport(tuple(errors), tuple(warnings))


def unified_elements(g: TextGraph, order: ElementOrder = "as-given", seed: int | None = None) -> list[UnifiedElement]:
    """Enumerate V ∪ E in the requested serialization order.

    ``as-given`` lists nodes then edges. ``random`` is a seeded shuffle of
    that list. ``bfs`` walks from the first node; each visited node is
    followed by its not-yet-emitted incident edges, and unreached components
    are started from their first node in input order.
    """
    base: list[tuple[ElementKind, int, Union[Node, Edge]]] = [("node", i, n) for i, n in enumerate(g.nodes)]
    base += [("edge", i, e) for i, e in enumerate(g.edges)]

    if order == "as-given":
        ordered = base
    elif order == "random":
        ordered = list(base)
        random.Random(seed).shuffle(ordered)
    elif order == "bfs":
        if not g.nodes:
            raise GraphError("bfs order needs at least one node")
        ordered = _bfs_order(g)
    else:
        raise ValueError(f"unknown element order {order!r}")
    return [UnifiedElement(kind, k, idx, src) for k, (kind, idx, src) in enumerate(ordered)]


def _bfs_order(g: TextGraph) -> list[tuple[ElementKind, int, Union[Node, Edge]]]:
    index = g.node_index()
    incident: dict[int, list[int]] = {i: [] for i in range(len(g.nodes))}
    for ei, e in enumerate(g.edges):
        incident[index[e.src]].append(ei)
        if e.dst != e.src:
            incident[index[e.dst]].append(ei)

    out: list[tuple[ElementKind, int, Union[Node, Edge]]] = []
    seen_nodes: set[int] = set()
    seen_edges: set[int] = set()
    for root in range(len(g.nodes)):
        if root in seen_nodes:
            continue
        seen_nodes.add(root)
        queue = deque([root])
        while queue:
            ni = queue.popleft()
            out.append(("node", ni, g.nodes[ni]))
            for ei in incident[ni]:
                if ei in seen_edges:
                    continue
                seen_edges.add(ei)
                out.append(("edge", ei, g.edges[ei]))
                e = g.edges[ei]
                for other in (index[e.src], index[e.dst]):
                    if other not in seen_nodes:
                        seen_nodes.add(other)
                        queue.append(other)
    return out


# -- JSON -------------------------------------------------------------------


def graph_to_dict(g: TextGraph) -> dict:
    return {
        "directed": g.directed,
        "nodes": [{"id": n.id, "text": n.text} for n in g.nodes],
        "edges": [{"src": e.src, "dst": e.dst, "text": e.text} for e in g.edges],
    }


def serialize_graph_json(g: TextGraph) -> bytes:
    return json.dumps(graph_to_dict(g), ensure_ascii=False).encode("utf-8")


def _expect(value, kind: type, path: str):
    if kind is str and not isinstance(value, str):
        raise GraphParseError(f"expected string, got {type(value).__name__}", path)
    if kind is bool and not isinstance(value, bool):
        raise GraphParseError(f"expected boolean, got {type(value).__name__}", path)
    if kind is list and not isinstance(value, list):
        raise GraphParseError(f"expected array, got {type(value).__name__}", path)
    if kind is dict and not isinstance(value, dict):
        raise GraphParseError(f"expected object, got {type(value).__name__}", path)
    return value


def graph_from_dict(doc, path: str = "$") -> TextGraph:
    """Build a graph from an already-decoded JSON value, checking the schema."""
    _expect(doc, dict, path)
    for key in ("directed", "nodes", "edges"):
        if key not in doc:
            raise GraphParseError(f"missing required key {key!r}", path)
    directed = _expect(doc["directed"], bool, f"{path}.directed")
    nodes: list[Node] = []
    ids: set[str] = set()
    for i, raw in enumerate(_expect(doc["nodes"], list, f"{path}.nodes")):
        p = f"{path}.nodes[{i}]"
        _expect(raw, dict, p)
        for key in ("id", "text"):
            if key not in raw:
                raise GraphParseError(f"missing required key {key!r}", p)
        node = Node(_expect(raw["id"], str, f"{p}.id"), _expect(raw["text"], str, f"{p}.text"))
        if node.id in ids:
            raise GraphParseError(f"duplicate node id {node.id!r}", f"{p}.id")
        if not node.text.strip():
            raise GraphParseError("node text is empty", f"{p}.text")
        ids.add(node.id)
        nodes.append(node)
    edges: list[Edge] = []
    for i, raw in enumerate(_expect(doc["edges"], list, f"{path}.edges")):
        p = f"{path}.edges[{i}]"
        _expect(raw, dict, p)
        for key in ("src", "dst", "text"):
            if key not in raw:
                raise GraphParseError(f"missing required key {key!r}", p)
        edge = Edge(
            _expect(raw["src"], str, f"{p}.src"),
            _expect(raw["dst"], str, f"{p}.dst"),
            _expect(raw["text"], str, f"{p}.text"),
        )
        for end in ("src", "dst"):
            if getattr(edge, end) not in ids:
                raise GraphParseError(f"unknown node {getattr(edge, end)!r}", f"{p}.{end}")
        if not edge.text.strip():
            raise GraphParseError("edge text is empty", f"{p}.text")
        edges.append(edge)
    return TextGraph(tuple(nodes), tuple(edges), directed)


def parse_graph_json(data: bytes | str) -> TextGraph:
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphParseError("invalid UTF-8", offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise GraphParseError(exc.msg, offset=offset) from exc
    return graph_from_dict(doc)
