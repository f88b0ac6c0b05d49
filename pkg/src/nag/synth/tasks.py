"""The nine topological reasoning tasks, their exact oracles and question text."""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Union

from nag.graph import TextGraph, graph_from_dict, graph_to_dict
from nag.synth.encodings import TextEncodingScheme, scheme_vocab


class TaskKind(str, enum.Enum):
    NODE_COUNT = "node-count"
    EDGE_COUNT = "edge-count"
    CYCLE_CHECK = "cycle-check"
    TRIANGLE_COUNT = "triangle-count"
    NODE_DEGREE = "node-degree"
    CONNECTED_NODES = "connected-nodes"
    REACHABILITY = "reachability"
    EDGE_EXISTENCE = "edge-existence"
    SHORTEST_PATH = "shortest-path"


ALL_TASKS = tuple(TaskKind)

INTEGER_TASKS = frozenset(
    {TaskKind.NODE_COUNT, TaskKind.EDGE_COUNT, TaskKind.TRIANGLE_COUNT, TaskKind.NODE_DEGREE, TaskKind.SHORTEST_PATH}
)
BOOLEAN_TASKS = frozenset({TaskKind.CYCLE_CHECK, TaskKind.REACHABILITY, TaskKind.EDGE_EXISTENCE})
SET_TASKS = frozenset({TaskKind.CONNECTED_NODES})
_ONE_NODE = frozenset({TaskKind.NODE_DEGREE, TaskKind.CONNECTED_NODES})
_TWO_NODES = frozenset({TaskKind.REACHABILITY, TaskKind.EDGE_EXISTENCE, TaskKind.SHORTEST_PATH})

NO_PATH = "no path"

OracleAnswer = Union[int, bool, tuple, None]


class FocusError(ValueError):
    """The task cannot be posed on this graph (missing or unsatisfiable focus)."""


def focus_arity(task: TaskKind | str) -> int:
    task = TaskKind(task)
    return 1 if task in _ONE_NODE else 2 if task in _TWO_NODES else 0


# -- oracles ---------------------------------------------------------------


def _undirected_adjacency(g: TextGraph) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {n.id: set() for n in g.nodes}
    for e in g.edges:
        adj[e.src].add(e.dst)
        adj[e.dst].add(e.src)
    return adj


def _successors(g: TextGraph) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = {n.id: [] for n in g.nodes}
    for e in g.edges:
        succ[e.src].append(e.dst)
        if not g.directed:
            succ[e.dst].append(e.src)
    return succ


def _bfs_distance(g: TextGraph, src: str, dst: str) -> int | None:
    succ = _successors(g)
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            return dist[u]
        for v in succ[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return None


def _has_cycle(g: TextGraph) -> bool:
    if g.directed:
        succ = _successors(g)
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(u: str) -> bool:
            state[u] = 1
            for v in succ[u]:
                s = state.get(v, 0)
                if s == 1 or (s == 0 and visit(v)):
                    return True
            state[u] = 2
            return False

        return any(state.get(n.id, 0) == 0 and visit(n.id) for n in g.nodes)

    parent = {n.id: n.id for n in g.nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        a, b = find(e.src), find(e.dst)
        if a == b:
            return True
        parent[a] = b
    return False


def _triangles(g: TextGraph) -> int:
    adj = _undirected_adjacency(g)
    ids = [n.id for n in g.nodes]
    return sum(1 for a, b, c in combinations(ids, 3) if b in adj[a] and c in adj[a] and c in adj[b])


def _require_focus(task: TaskKind, focus, g: TextGraph) -> tuple[str, ...]:
    need = focus_arity(task)
    focus = tuple(focus or ())
    if len(focus) != need:
        raise FocusError(f"{task.value} needs {need} focus node(s), got {len(focus)}")
    ids = {n.id for n in g.nodes}
    for f in focus:
        if f not in ids:
            raise FocusError(f"focus node {f!r} not in graph")
    return focus


def solve_task(g: TextGraph, task: TaskKind | str, focus=()) -> OracleAnswer:
    """Exact answer for ``task`` on ``g``.

    Integers for counting tasks (``None`` for an unreachable shortest-path
    pair), booleans for yes/no tasks, and a sorted tuple of node *texts* for
    connected-nodes.
    """
    task = TaskKind(task)
    focus = _require_focus(task, focus, g)
    if task is TaskKind.NODE_COUNT:
        return len(g.nodes)
    if task is TaskKind.EDGE_COUNT:
        return len(g.edges)
    if task is TaskKind.CYCLE_CHECK:
        return _has_cycle(g)
    if task is TaskKind.TRIANGLE_COUNT:
        return _triangles(g)
    if task is TaskKind.NODE_DEGREE:
        (a,) = focus
        return sum((e.src == a) + (e.dst == a) for e in g.edges)
    if task is TaskKind.CONNECTED_NODES:
        (a,) = focus
        adj = _undirected_adjacency(g)
        return tuple(sorted(g.node_by_id(v).text for v in adj[a] if v != a))
    a, b = focus
    if task is TaskKind.REACHABILITY:
        return _bfs_distance(g, a, b) is not None
    if task is TaskKind.EDGE_EXISTENCE:
        if g.directed:
            return any(e.src == a and e.dst == b for e in g.edges)
        return any({e.src, e.dst} == {a, b} for e in g.edges)
    if task is TaskKind.SHORTEST_PATH:
        return _bfs_distance(g, a, b)
    raise ValueError(task)


def render_answer(value: OracleAnswer) -> str:
    if value is None:
        return NO_PATH
    if isinstance(value, bool):
        return "Yes" if value else "No"
    if isinstance(value, int):
        return str(value)
    return ", ".join(sorted(value))


# -- questions -------------------------------------------------------------

TEMPLATES: dict[TaskKind, tuple[str, str, str]] = {
    TaskKind.NODE_COUNT: (
        "How many {nouns} are in the graph?",
        "Count the {nouns} in this graph.",
        "What is the total number of {nouns}?",
    ),
    TaskKind.EDGE_COUNT: (
        "How many {relations} are in the graph?",
        "Count the {relations} in this graph.",
        "What is the total number of {relations}?",
    ),
    TaskKind.CYCLE_CHECK: (
        "Is there a cycle in the graph?",
        "Does the graph contain a cycle?",
        "Do the {relations} form a cycle?",
    ),
    TaskKind.TRIANGLE_COUNT: (
        "How many triangles are in the graph?",
        "Count the triangles formed by the {relations}.",
        "What is the number of triangles?",
    ),
    TaskKind.NODE_DEGREE: (
        "What is the degree of {a}?",
        "How many {relations} does {a} have?",
        "How many {nouns} are linked to {a}?",
    ),
    TaskKind.CONNECTED_NODES: (
        "Which {nouns} are connected to {a}?",
        "List all neighbors of {a}.",
        "Who shares {a_relation} with {a}?",
    ),
    TaskKind.REACHABILITY: (
        "Is there a path from {a} to {b}?",
        "Can {a} reach {b}?",
        "Is {b} reachable from {a}?",
    ),
    TaskKind.EDGE_EXISTENCE: (
        "Is there {a_relation} between {a} and {b}?",
        "Are {a} and {b} directly connected?",
        "Does {a_relation} link {a} and {b}?",
    ),
    TaskKind.SHORTEST_PATH: (
        "What is the length of the shortest path from {a} to {b}?",
        "How many {relations} are on the shortest path between {a} and {b}?",
        "What is the distance between {a} and {b}?",
    ),
}


def render_question(g: TextGraph, task: TaskKind, scheme: TextEncodingScheme | str, focus, template: int) -> str:
    vocab = scheme_vocab(scheme)
    names = [g.node_by_id(f).text for f in focus]
    article = "an" if vocab.relation[0] in "aeiou" else "a"
    slots = {
        "nouns": vocab.nouns,
        "noun": vocab.noun,
        "relation": vocab.relation,
        "a_relation": f"{article} {vocab.relation}",
        "relations": vocab.relations,
    }
    if names:
        slots["a"] = names[0]
    if len(names) > 1:
        slots["b"] = names[1]
    return TEMPLATES[TaskKind(task)][template].format(**slots)


@dataclass(frozen=True)
class TaskSample:
    id: str
    task: TaskKind
    graph: TextGraph
    question: str
    answer: str
    focus: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "task": self.task.value,
            "graph": graph_to_dict(self.graph),
            "question": self.question,
            "answer": self.answer,
            "focus": list(self.focus),
        }
        if self.meta:
            d["meta"] = self.meta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSample":
        return cls(
            id=d["id"],
            task=TaskKind(d["task"]),
            graph=graph_from_dict(d["graph"], "$.graph"),
            question=d["question"],
            answer=d["answer"],
            focus=tuple(d.get("focus", ())),
            meta=d.get("meta", {}),
        )


def _pick_focus(g: TextGraph, task: TaskKind, rng: random.Random, target: bool | None, allow_disconnected: bool):
    ids = [n.id for n in g.nodes]
    arity = focus_arity(task)
    if arity == 0:
        return ()
    if not ids:
        raise FocusError(f"{task.value} needs a focus node but the graph is empty")
    if arity == 1:
        if task is TaskKind.CONNECTED_NODES:
            non_isolated = [v for v in ids if any(e.src == v or e.dst == v for e in g.edges)]
            if non_isolated:
                return (rng.choice(non_isolated),)
        return (rng.choice(ids),)
    pairs = [(a, b) for a in ids for b in ids if a != b]
    if not pairs:
        raise FocusError(f"{task.value} needs two distinct nodes")
    if task is TaskKind.SHORTEST_PATH and not allow_disconnected:
        pairs = [p for p in pairs if _bfs_distance(g, *p) is not None]
    elif target is not None and task in BOOLEAN_TASKS:
        pairs = [p for p in pairs if solve_task(g, task, p) == target]
    if not pairs:
        raise FocusError(f"no node pair satisfies {task.value} (target={target})")
    return rng.choice(pairs)


def make_sample(
    g: TextGraph,
    task: TaskKind | str,
    scheme: TextEncodingScheme | str,
    seed: int,
    *,
    sample_id: str = "",
    target: bool | None = None,
    allow_disconnected: bool = False,
    meta: dict | None = None,
) -> TaskSample:
    """Pose ``task`` on an already-encoded graph.

    ``target`` asks the focus sampler for a pair whose yes/no answer equals
    it (reachability, edge-existence); a :class:`FocusError` signals that no
    such pair exists. Shortest-path pairs are connected unless
    ``allow_disconnected`` is set.
    """
    task = TaskKind(task)
    rng = random.Random(seed)
    focus = tuple(_pick_focus(g, task, rng, target, allow_disconnected))
    template = rng.randrange(3)
    question = render_question(g, task, scheme, focus, template)
    answer = render_answer(solve_task(g, task, focus))
    return TaskSample(sample_id, task, g, question, answer, focus, dict(meta or {}))
