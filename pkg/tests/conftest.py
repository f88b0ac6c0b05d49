from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest
import torch

sys.path.insert(0, str(Path(__file__).parent))

from nag.flatten import Vocabulary  # noqa: E402
from nag.graph import Edge, Node, TextGraph  # noqa: E402

NAMES = ["Ann", "Bob", "Cid", "Dee", "Eve", "Fay", "Gus", "Hal", "Ivy", "Jon", "Kim", "Lou", "Max", "Ned", "Oli"]
NAMES += ["Pam", "Quin", "Ray", "Sue", "Tom", "Uma", "Val", "Wes", "Xia"]
RELATIONS = ["knows", "likes", "works with", "met"]


def random_graph(rng: random.Random, n_lo: int = 5, n_hi: int = 20, directed: bool | None = None) -> TextGraph:
    """Random multigraph with multi-word texts, possibly isolated nodes and self-loops."""
    n = rng.randint(n_lo, n_hi)
    names = rng.sample(NAMES, n)
    nodes = [Node(f"v{i}", names[i] if rng.random() < 0.7 else f"{names[i]} {rng.choice(names)}") for i in range(n)]
    m = rng.randint(0, min(3 * n, 40))
    edges = []
    for _ in range(m):
        a, b = rng.randrange(n), rng.randrange(n)
        edges.append(Edge(f"v{a}", f"v{b}", rng.choice(RELATIONS)))
    if directed is None:
        directed = rng.random() < 0.5
    return TextGraph(nodes, edges, directed)


def graph_vocab(*graphs: TextGraph, extra: tuple[str, ...] = ()) -> Vocabulary:
    texts = [n.text for g in graphs for n in g.nodes] + [e.text for g in graphs for e in g.edges]
    return Vocabulary.build(texts + list(extra) + ["how many people are there ?", "Yes", "No"] + [str(i) for i in range(50)])


@pytest.fixture
def py_rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def matrix_graph() -> TextGraph:
    return TextGraph(
        [Node("m", "The Matrix"), Node("k", "Keanu Reeves"), Node("w", "Lana Wachowski")],
        [Edge("k", "m", "starred in"), Edge("w", "m", "directed")],
        directed=True,
    )


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)
    yield


# -- acceptance reporting ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
