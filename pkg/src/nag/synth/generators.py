"""Seeded random-graph generators over seven classic topologies."""

from __future__ import annotations

import enum
import random
from typing import Any

import networkx as nx

from nag.graph import Edge, Node, TextGraph

MIN_NODES = 5
MAX_NODES = 20
MAX_EDGES = 200

# stochastic-block defaults; the SBM is resampled while it exceeds MAX_EDGES
SBM_P_INTRA = 0.6
SBM_P_INTER = 0.1
_SBM_MAX_RESAMPLES = 50


class TopologyKind(str, enum.Enum):
    ERDOS_RENYI = "erdos-renyi"
    BARABASI_ALBERT = "barabasi-albert"
    STOCHASTIC_BLOCK = "stochastic-block"
    WATTS_STROGATZ = "watts-strogatz"
    COMPLETE = "complete"
    STAR = "star"
    PATH = "path"


ALL_TOPOLOGIES = tuple(TopologyKind)


class GeneratorParamError(ValueError):
    pass


def sample_params(kind: TopologyKind, rng: random.Random, n_range: tuple[int, int] = (MIN_NODES, MAX_NODES)) -> dict[str, Any]:
    """Draw a parameter set for ``kind`` with ``n`` uniform in ``n_range``."""
    kind = TopologyKind(kind)
    lo, hi = n_range
    n = rng.randint(lo, hi)
    params: dict[str, Any] = {"n": n}
    if kind is TopologyKind.ERDOS_RENYI:
        params["p"] = round(rng.uniform(0.1, 0.6), 4)
    elif kind is TopologyKind.BARABASI_ALBERT:
        params["m"] = rng.randint(1, min(4, n - 1))
    elif kind is TopologyKind.STOCHASTIC_BLOCK:
        params["sizes"] = [n // 2, n - n // 2]
        params["p_intra"] = SBM_P_INTRA
        params["p_inter"] = SBM_P_INTER
    elif kind is TopologyKind.WATTS_STROGATZ:
        params["k"] = rng.choice([k for k in (2, 4, 6) if k < n])
        params["p"] = round(rng.uniform(0.0, 0.5), 4)
    return params


def _check_params(kind: TopologyKind, params: dict[str, Any]) -> None:
    n = params.get("n")
    if not isinstance(n, int) or not MIN_NODES <= n <= MAX_NODES:
        raise GeneratorParamError(f"node budget n must be an int in [{MIN_NODES}, {MAX_NODES}], got {n!r}")
    for key in ("p", "p_intra", "p_inter"):
        if key in params and not 0.0 <= float(params[key]) <= 1.0:
            raise GeneratorParamError(f"{key} must lie in [0, 1], got {params[key]!r}")
    if kind is TopologyKind.ERDOS_RENYI and "p" not in params:
        raise GeneratorParamError("erdos-renyi needs edge probability p")
    if kind is TopologyKind.BARABASI_ALBERT:
        m = params.get("m")
        if not isinstance(m, int) or not 1 <= m < n:
            raise GeneratorParamError(f"barabasi-albert needs 1 <= m < n, got m={m!r}")
    if kind is TopologyKind.STOCHASTIC_BLOCK:
        sizes = params.get("sizes")
        if not sizes or sum(sizes) != n or min(sizes) < 1:
            raise GeneratorParamError(f"block sizes {sizes!r} must be positive and sum to n={n}")
    if kind is TopologyKind.WATTS_STROGATZ:
        k = params.get("k")
        if not isinstance(k, int) or not 2 <= k < n:
            raise GeneratorParamError(f"watts-strogatz needs 2 <= k < n, got k={k!r}")
        if "p" not in params:
            raise GeneratorParamError("watts-strogatz needs rewire probability p")


def _build(kind: TopologyKind, params: dict[str, Any], rng: random.Random) -> nx.Graph:
    n = params["n"]
    if kind is TopologyKind.ERDOS_RENYI:
        return nx.gnp_random_graph(n, params["p"], seed=rng)
    if kind is TopologyKind.BARABASI_ALBERT:
        return nx.barabasi_albert_graph(n, params["m"], seed=rng)
    if kind is TopologyKind.STOCHASTIC_BLOCK:
        sizes = list(params["sizes"])
        p_in, p_out = params.get("p_intra", SBM_P_INTRA), params.get("p_inter", SBM_P_INTER)
        probs = [[p_in if a == b else p_out for b in range(len(sizes))] for a in range(len(sizes))]
        for _ in range(_SBM_MAX_RESAMPLES):
            g = nx.stochastic_block_model(sizes, probs, seed=rng)
            if g.number_of_edges() <= MAX_EDGES:
                return g
        raise GeneratorParamError("stochastic-block graph kept exceeding the edge cap")
    if kind is TopologyKind.WATTS_STROGATZ:
        return nx.watts_strogatz_graph(n, params["k"], params["p"], seed=rng)
    if kind is TopologyKind.COMPLETE:
        return nx.complete_graph(n)
    if kind is TopologyKind.STAR:
        return nx.star_graph(n - 1)
    if kind is TopologyKind.PATH:
        return nx.path_graph(n)
    raise GeneratorParamError(f"unknown topology {kind!r}")


def generate_graph(kind: TopologyKind | str, params: dict[str, Any] | None, seed: int) -> TextGraph:
    """Generate an undirected graph with placeholder texts.

    Node ids and texts are ``"0" .. "n-1"``; every edge text is ``"edge"``.
    Missing entries of ``params`` are drawn from the seeded defaults of
    :func:`sample_params`.
    """
    kind = TopologyKind(kind)
    rng = random.Random(seed)
    params = dict(params or {})
    n = params.get("n")
    n_range = (n, n) if isinstance(n, int) and MIN_NODES <= n <= MAX_NODES else (MIN_NODES, MAX_NODES)
    full = sample_params(kind, rng, n_range)
    full.update(params)
    _check_params(kind, full)
    nxg = _build(kind, full, rng)
    if nxg.number_of_edges() > MAX_EDGES:
        raise GeneratorParamError(f"{kind.value} produced {nxg.number_of_edges()} edges (> {MAX_EDGES})")
    nodes = tuple(Node(str(v), str(v)) for v in sorted(nxg.nodes))
    edges = tuple(Edge(str(u), str(v), "edge") for u, v in sorted(tuple(sorted(e)) for e in nxg.edges))
    return TextGraph(nodes, edges, directed=False)
