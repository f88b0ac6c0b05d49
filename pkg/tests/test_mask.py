from __future__ import annotations

import random

import numpy as np
import pytest
from conftest import graph_vocab, random_graph
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import mask_oracle

from nag.flatten import Vocabulary, flatten
from nag.graph import Edge, GraphError, Node, TextGraph, unified_elements
from nag.mask import TopoMask, compose_mask, global_mask, inter_mask, intra_mask, query_mask


def knows_graph(directed: bool):
    # hubs: A at 3, B at 6, knows at 9
    g = TextGraph([Node("a", "A"), Node("b", "B")], [Edge("a", "b", "knows")], directed)
    vocab = Vocabulary.build(["A", "B", "knows", "q"])
    return g, flatten(g, unified_elements(g), "q", vocab)


def bits(m):
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(m))}


def test_intra_block_is_lower_triangular(matrix_graph):
    vocab = graph_vocab(matrix_graph)
    seq = flatten(matrix_graph, unified_elements(matrix_graph), "q", vocab)
    m = intra_mask(seq)
    a, b = seq.element_spans[0]
    assert np.array_equal(m[a : b + 1, a : b + 1], np.tri(b - a + 1, dtype=bool))
    a2, b2 = seq.element_spans[1]
    assert not m[a2:b2 + 1, a:b + 1].any()
    for s, e in seq.element_spans:
        assert m[np.arange(s, e + 1), np.arange(s, e + 1)].all()


def test_inter_directed_hand_layout():
    g, seq = knows_graph(True)
    assert seq.node_hub == {0: 3, 1: 6} and seq.edge_hub == {0: 9}
    assert bits(inter_mask(seq, g)) == {(9, 3), (6, 9)}


def test_inter_undirected_hand_layout():
    g, seq = knows_graph(False)
    assert bits(inter_mask(seq, g)) == {(9, 3), (6, 9), (9, 6), (3, 9)}


def test_inter_zero_edges():
    g = TextGraph([Node("a", "A"), Node("b", "B")], [])
    seq = flatten(g, unified_elements(g), "q", Vocabulary.build(["A", "B", "q"]))
    assert not inter_mask(seq, g).any()


def test_inter_missing_endpoint_errors():
    g, seq = knows_graph(True)
    other = TextGraph(g.nodes, [Edge("a", "zz", "knows")], True)
    with pytest.raises(GraphError):
        inter_mask(seq, other)


def test_self_loop_links_hub_both_ways():
    g = TextGraph([Node("a", "A")], [Edge("a", "a", "r")], directed=True)
    seq = flatten(g, unified_elements(g), "q", Vocabulary.build(["A", "r", "q"]))
    he, hv = seq.edge_hub[0], seq.node_hub[0]
    assert bits(inter_mask(seq, g)) == {(he, hv), (hv, he)}


def test_global_row_counts(py_rng):
    g = TextGraph([Node(str(i), f"n{i}") for i in range(3)], [Edge("0", "1", "r"), Edge("1", "2", "r")])
    seq = flatten(g, unified_elements(g), "q", graph_vocab(g, extra=("q",)))
    m = global_mask(seq)
    assert m[seq.graph_hub].sum() == 5 + 1
    assert m[:, seq.graph_start].all()
    hubs = list(seq.hub_index)
    others = [i for i in range(len(seq)) if i != seq.graph_hub]
    assert not m[np.ix_(others, hubs)].any()


def test_query_sparse_first_token():
    g = TextGraph([Node(str(i), f"n{i}") for i in range(3)], [Edge("0", "1", "r"), Edge("1", "2", "r")])
    seq = flatten(g, unified_elements(g), "how many", graph_vocab(g, extra=("how many",)))
    m = query_mask(seq, "sparse")
    q0 = seq.query_span[0]
    assert bits(m[q0 : q0 + 1]) == {(0, h) for h in seq.hub_index} | {(0, q0)}
    assert not m[q0, seq.graph_start] and not m[q0, seq.graph_hub]
    content = [i for s, e in seq.element_spans for i in range(s, e)]
    assert not m[q0:, content].any()


def test_query_full_first_token_sees_all_earlier():
    g = TextGraph([Node("a", "A"), Node("b", "B")], [Edge("a", "b", "r")])
    seq = flatten(g, unified_elements(g), "q w", Vocabulary.build(["A", "B", "r", "q w"]))
    q0 = seq.query_span[0]
    assert q0 == 11
    assert query_mask(seq, "full")[q0].sum() == 12


def test_single_node_single_query_hand_matrix():
    g = TextGraph([Node("a", "A")], [])
    seq = flatten(g, unified_elements(g), "q", Vocabulary.build(["A", "q"]))
    # rows/cols: <g> <n> A </n> </g> q
    expected = np.array(
        [
            [1, 0, 0, 0, 0, 0],
            [1, 1, 0, 0, 0, 0],
            [1, 1, 1, 0, 0, 0],
            [1, 1, 1, 1, 0, 0],
            [1, 0, 0, 1, 0, 0],
            [1, 0, 0, 1, 0, 1],
        ],
        dtype=bool,
    )
    assert np.array_equal(compose_mask(seq, g, "sparse").bits, expected)


def test_graph_hub_flag_adds_only_that_column():
    rng = random.Random(8)
    g = random_graph(rng)
    seq = flatten(g, unified_elements(g), "how many", graph_vocab(g, extra=("how many",)))
    a = compose_mask(seq, g, "sparse").bits
    b = compose_mask(seq, g, "sparse", sees_graph_hub=True).bits
    diff = bits(a ^ b)
    assert diff == {(i, seq.graph_hub) for i in seq.query_indices}


def _check_invariants(seq, g, mode):
    mask = compose_mask(seq, g, mode, keep_levels=True)
    m = mask.bits
    levels = mask.levels
    assert np.array_equal(m, levels["intra"] | levels["inter"] | levels["global"] | levels["query"])
    for lv in levels.values():
        assert not (lv & ~m).any()
    assert m.any(axis=1).all()
    q0, q1 = seq.query_span
    block = m[q0 : q1 + 1, q0 : q1 + 1]
    assert not np.triu(block, 1).any()
    hubs = set(seq.hub_index)
    for s, e in seq.element_spans:
        for i in range(s, e + 1):
            if i in hubs:
                continue
            allowed = set(range(s, e + 1)) | {seq.graph_start}
            assert set(np.nonzero(m[i])[0]) <= allowed
    return m


@pytest.mark.parametrize("mode", ["sparse", "full"])
def test_compose_matches_oracle_random(mode):
    rng = random.Random(17)
    for _ in range(100):
        g = random_graph(rng)
        vocab = graph_vocab(g)
        seq = flatten(g, unified_elements(g, "random", seed=rng.randrange(1000)), "how many people ?", vocab, answer="3")
        m = _check_invariants(seq, g, mode)
        assert np.array_equal(m, mask_oracle(seq, g, vocab, mode))


def test_full_is_superset_of_sparse():
    rng = random.Random(23)
    for _ in range(30):
        g = random_graph(rng)
        seq = flatten(g, unified_elements(g, "random", seed=1), "how many ?", graph_vocab(g))
        sparse = compose_mask(seq, g, "sparse").bits
        full = compose_mask(seq, g, "full").bits
        assert not (sparse & ~full).any()


def test_permutation_covariance():
    rng = random.Random(31)
    for _ in range(20):
        g = random_graph(rng)
        vocab = graph_vocab(g)
        a = flatten(g, unified_elements(g, "random", seed=1), "how many ?", vocab)
        b = flatten(g, unified_elements(g, "random", seed=2), "how many ?", vocab)
        # token permutation induced by aligning elements by identity
        perm = list(range(len(a)))
        spans_b = dict(zip(b.element_keys, b.element_spans))
        for key, (s, e) in zip(a.element_keys, a.element_spans):
            sb, _ = spans_b[key]
            for off in range(e - s + 1):
                perm[s + off] = sb + off
        ma, mb = compose_mask(a, g, "sparse").bits, compose_mask(b, g, "sparse").bits
        p = np.array(perm)
        assert np.array_equal(ma, mb[np.ix_(p, p)])


def test_bits_and_pgm_export(matrix_graph):
    vocab = graph_vocab(matrix_graph)
    seq = flatten(matrix_graph, unified_elements(matrix_graph), "q", vocab)
    mask = compose_mask(seq, matrix_graph, "full")
    back = TopoMask.from_bits_file(mask.to_bits_file())
    assert back.mode == "full" and np.array_equal(back.bits, mask.bits)
    data = mask.to_bits_file()
    assert int.from_bytes(data[:4], "little") == len(seq) and data[4] == 1
    pgm = mask.to_pgm()
    header = f"P5\n{len(seq)} {len(seq)}\n255\n".encode()
    assert pgm.startswith(header)
    body = np.frombuffer(pgm[len(header) :], dtype=np.uint8).reshape(len(seq), len(seq))
    assert np.array_equal(body == 255, mask.bits) and set(np.unique(body)) <= {0, 255}


def test_masks_are_read_only(matrix_graph):
    vocab = graph_vocab(matrix_graph)
    seq = flatten(matrix_graph, unified_elements(matrix_graph), "q", vocab)
    with pytest.raises(ValueError):
        compose_mask(seq, matrix_graph).bits[0, 0] = True


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 6),
    edges=st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=8),
    directed=st.booleans(),
    mode=st.sampled_from(["sparse", "full"]),
    flag=st.booleans(),
    seed=st.integers(0, 50),
)
def test_oracle_property(n, edges, directed, mode, flag, seed):
    g = TextGraph([Node(str(i), f"w{i}") for i in range(n)], [Edge(str(a % n), str(b % n), "r s") for a, b in edges], directed)
    vocab = graph_vocab(g, extra=("q r",))
    seq = flatten(g, unified_elements(g, "random", seed=seed), "q r", vocab)
    got = compose_mask(seq, g, mode, sees_graph_hub=flag).bits
    assert np.array_equal(got, mask_oracle(seq, g, vocab, mode, flag))
