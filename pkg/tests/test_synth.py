from __future__ import annotations

import random
from collections import Counter

import networkx as nx
import pytest
from oracles import brute_triangles

from nag.graph import Node, TextGraph
from nag.synth import (
    ALL_TOPOLOGIES,
    NO_PATH,
    DatasetConfig,
    FocusError,
    GeneratorParamError,
    NamePoolExhausted,
    TaskKind,
    apply_text_encoding,
    generate_dataset,
    generate_graph,
    make_sample,
    render_answer,
    solve_task,
    split_sizes,
    verify_samples,
    write_dataset,
)
from nag.synth.encodings import scheme_vocab


def degrees(g):
    deg = Counter()
    for e in g.edges:
        deg[e.src] += 1
        deg[e.dst] += 1
    return [deg[n.id] for n in g.nodes]


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(n.id for n in g.nodes)
    h.add_edges_from((e.src, e.dst) for e in g.edges)
    return h


# -- generators --------------------------------------------------------------


def test_complete_five():
    g = generate_graph("complete", {"n": 5}, seed=0)
    assert (len(g.nodes), len(g.edges)) == (5, 10)


def test_star_six():
    g = generate_graph("star", {"n": 6}, seed=0)
    assert (len(g.nodes), len(g.edges)) == (6, 5)
    assert sorted(degrees(g)) == [1, 1, 1, 1, 1, 5]


def test_path_eight_is_acyclic():
    g = generate_graph("path", {"n": 8}, seed=0)
    assert (len(g.nodes), len(g.edges)) == (8, 7)
    assert solve_task(g, "cycle-check") is False


@pytest.mark.parametrize("kind", [t.value for t in ALL_TOPOLOGIES])
def test_generators_are_deterministic_and_bounded(kind):
    for seed in range(15):
        a = generate_graph(kind, None, seed)
        assert a == generate_graph(kind, None, seed)
        assert 5 <= len(a.nodes) <= 20 and 0 <= len(a.edges) <= 200
        assert not a.directed
        assert all(e.src != e.dst for e in a.edges)


@pytest.mark.parametrize(
    "kind,params",
    [
        ("erdos-renyi", {"n": 4, "p": 0.3}),
        ("erdos-renyi", {"n": 10, "p": 1.5}),
        ("barabasi-albert", {"n": 10, "m": 10}),
        ("watts-strogatz", {"n": 6, "k": 6, "p": 0.1}),
        ("stochastic-block", {"n": 10, "sizes": [3, 3]}),
        ("complete", {"n": 21}),
    ],
)
def test_bad_params_rejected(kind, params):
    with pytest.raises(GeneratorParamError):
        generate_graph(kind, params, seed=0)


# -- encodings ----------------------------------------------------------------


def test_adjacency_scheme_uses_ordinals():
    g = apply_text_encoding(generate_graph("path", {"n": 5}, 0), "adjacency", seed=3)
    assert [n.text for n in g.nodes[:3]] == ["0", "1", "2"]


def test_friendship_relation_phrase():
    g = apply_text_encoding(generate_graph("complete", {"n": 6}, 0), "friendship", seed=1)
    assert all("friend" in e.text for e in g.edges)


def test_seeds_permute_names_but_keep_topology():
    base = generate_graph("erdos-renyi", {"n": 12, "p": 0.3}, 4)
    a = apply_text_encoding(base, "got", seed=1)
    b = apply_text_encoding(base, "got", seed=2)
    assert [n.text for n in a.nodes] != [n.text for n in b.nodes]
    rename = {n.text: m.text for n, m in zip(a.nodes, b.nodes)}
    text_id_a = {n.id: n.text for n in a.nodes}
    text_id_b = {n.id: n.text for n in b.nodes}
    edges_a = {frozenset((rename[text_id_a[e.src]], rename[text_id_a[e.dst]])) for e in a.edges}
    edges_b = {frozenset((text_id_b[e.src], text_id_b[e.dst])) for e in b.edges}
    assert edges_a == edges_b


@pytest.mark.parametrize("scheme", ["expert", "friendship", "got", "politician", "social-network", "south-park"])
def test_names_unique_within_graph(scheme):
    g = apply_text_encoding(generate_graph("complete", {"n": 20}, 0), scheme, seed=9)
    assert len({n.text for n in g.nodes}) == 20
    assert len(scheme_vocab(scheme).names) >= 20


def test_name_pool_exhausted():
    g = TextGraph([Node(f"x{i}", "x") for i in range(30)], [])
    with pytest.raises(NamePoolExhausted):
        apply_text_encoding(g, "got", seed=0)


# -- oracles -------------------------------------------------------------------


def test_triangles_on_complete_five():
    assert solve_task(generate_graph("complete", {"n": 5}, 0), "triangle-count") == 10


def test_shortest_path_endpoints_of_path():
    g = generate_graph("path", {"n": 8}, 0)
    ends = [n.id for n, d in zip(g.nodes, degrees(g)) if d == 1]
    assert solve_task(g, "shortest-path", tuple(ends)) == 7


def test_star_has_no_cycle():
    assert solve_task(generate_graph("star", {"n": 6}, 0), "cycle-check") is False


def test_oracles_agree_with_networkx():
    rng = random.Random(0)
    for i in range(60):
        kind = ALL_TOPOLOGIES[i % len(ALL_TOPOLOGIES)]
        g = generate_graph(kind, None, rng.getrandbits(32))
        h = to_nx(g)
        a, b = rng.sample([n.id for n in g.nodes], 2)
        assert solve_task(g, "triangle-count") == brute_triangles(g) == sum(nx.triangles(h).values()) // 3
        assert solve_task(g, "cycle-check") == (len(nx.cycle_basis(h)) > 0)
        assert solve_task(g, "reachability", (a, b)) == nx.has_path(h, a, b)
        assert solve_task(g, "edge-existence", (a, b)) == h.has_edge(a, b)
        dist = nx.shortest_path_length(h, a, b) if nx.has_path(h, a, b) else None
        assert solve_task(g, "shortest-path", (a, b)) == dist
        assert solve_task(g, "node-degree", (a,)) == h.degree(a)


def test_disconnected_shortest_path_renders_no_path():
    g = generate_graph("stochastic-block", {"n": 6, "sizes": [3, 3], "p_intra": 1.0, "p_inter": 0.0}, 0)
    ids = [n.id for n in g.nodes]
    assert solve_task(g, "shortest-path", (ids[0], ids[5])) is None
    assert render_answer(None) == NO_PATH


def test_focus_arity_enforced():
    g = generate_graph("path", {"n": 5}, 0)
    with pytest.raises(FocusError):
        solve_task(g, "edge-existence", ("0",))


# -- samples --------------------------------------------------------------------


def test_node_count_sample():
    g = apply_text_encoding(generate_graph("erdos-renyi", {"n": 12, "p": 0.2}, 1), "expert", seed=0)
    s = make_sample(g, "node-count", "expert", seed=0)
    assert s.answer == "12"


def test_connected_nodes_on_star_center():
    g = apply_text_encoding(generate_graph("star", {"n": 6}, 0), "friendship", seed=0)
    center = next(n for n, d in zip(g.nodes, degrees(g)) if d == 5)
    for seed in range(20):
        s = make_sample(g, "connected-nodes", "friendship", seed=seed)
        if s.focus == (center.id,):
            break
    else:
        pytest.fail("star center never drawn as focus")
    leaves = sorted(n.text for n in g.nodes if n.id != center.id)
    assert s.answer == ", ".join(leaves)


def test_edge_existence_non_adjacent_is_no():
    g = apply_text_encoding(generate_graph("path", {"n": 6}, 0), "adjacency", seed=0)
    s = make_sample(g, "edge-existence", "adjacency", seed=2, target=False)
    assert s.answer == "No"
    assert not any({e.src, e.dst} == set(s.focus) for e in g.edges)


def test_focus_task_on_empty_graph_errors():
    with pytest.raises(FocusError):
        make_sample(TextGraph([], []), "node-degree", "adjacency", seed=0)


def test_questions_mention_focus_names():
    g = apply_text_encoding(generate_graph("erdos-renyi", {"n": 9, "p": 0.4}, 3), "politician", seed=0)
    for task in ("node-degree", "reachability", "shortest-path"):
        s = make_sample(g, task, "politician", seed=5)
        for f in s.focus:
            assert g.node_by_id(f).text in s.question


# -- datasets -------------------------------------------------------------------


def test_split_arithmetic():
    assert split_sizes(900) == (720, 90, 90)
    cfg = DatasetConfig(per_task=900)
    assert tuple(9 * x for x in split_sizes(cfg.per_task)) == (6480, 810, 810)


def test_dataset_is_deterministic_and_verified(tmp_path):
    cfg = DatasetConfig(per_task=30)
    a, b = tmp_path / "a", tmp_path / "b"
    write_dataset(generate_dataset(cfg, seed=4), a, cfg, 4)
    write_dataset(generate_dataset(cfg, seed=4), b, cfg, 4)
    for name in ("train.jsonl", "val.jsonl", "test.jsonl", "config.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    splits = generate_dataset(cfg, seed=4)
    assert [len(splits[k]) for k in ("train", "val", "test")] == [9 * 24, 9 * 3, 9 * 3]
    everything = splits["train"] + splits["val"] + splits["test"]
    assert len({s.id for s in everything}) == len(everything)
    assert verify_samples(everything) == []


def test_worker_count_does_not_change_output():
    cfg = DatasetConfig(tasks=("edge-count", "shortest-path"), per_task=70)
    assert generate_dataset(cfg, 2, workers=1) == generate_dataset(cfg, 2, workers=2)


def test_mixture_is_equal_proportion():
    cfg = DatasetConfig(tasks=("node-count",), per_task=98)
    samples = [s for split in generate_dataset(cfg, 0).values() for s in split]
    assert set(Counter(s.meta["topology"] for s in samples).values()) == {14}
    assert set(Counter(s.meta["encoding"] for s in samples).values()) == {14}


def test_mean_node_count_in_range():
    cfg = DatasetConfig(tasks=("node-count",), per_task=1000)
    samples = [s for split in generate_dataset(cfg, 0).values() for s in split]
    mean = sum(len(s.graph.nodes) for s in samples) / len(samples)
    assert 5 <= mean <= 20
    assert abs(mean - 12.11) < 2.0


def test_cycle_check_is_balanced():
    cfg = DatasetConfig(tasks=("cycle-check",), per_task=200)
    samples = [s for split in generate_dataset(cfg, 0).values() for s in split]
    yes = sum(s.answer == "Yes" for s in samples)
    assert 80 <= yes <= 120


def test_tasks_enum_has_nine_members():
    assert len(TaskKind) == 9
