"""Topology-aware attention masks.

Rows are attending tokens, columns attended tokens. Four levels are built
independently and OR-ed:

* intra:  causal attention inside each element span, nothing across spans
* inter:  edge hub <- source hub, target hub <- edge hub (mirrored if undirected)
* global: ``</g>`` <- every element hub; every token <- ``<g>``
* query:  causal within the query, plus element hubs (sparse) or every
  earlier token (full)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from nag.flatten import FlattenedSequence
from nag.graph import GraphError, TextGraph

QueryMode = Literal["sparse", "full"]
_MODE_CODE = {"sparse": 0, "full": 1}


def intra_mask(seq: FlattenedSequence) -> np.ndarray:
    n = len(seq)
    m = np.zeros((n, n), dtype=bool)
    for a, b in seq.element_spans:
        m[a : b + 1, a : b + 1] = np.tri(b - a + 1, dtype=bool)
    return m


def inter_mask(seq: FlattenedSequence, g: TextGraph) -> np.ndarray:
    n = len(seq)
    m = np.zeros((n, n), dtype=bool)
    index = g.node_index()
    for ei, e in enumerate(g.edges):
        try:
            he = seq.edge_hub[ei]
            hs = seq.node_hub[index[e.src]]
            ht = seq.node_hub[index[e.dst]]
        except KeyError as exc:
            raise GraphError(f"edge {ei} ({e.src!r}->{e.dst!r}) has an endpoint missing from the sequence") from exc
        m[he, hs] = True
        m[ht, he] = True
        if not g.directed:
            m[he, ht] = True
            m[hs, he] = True
    return m


def global_mask(seq: FlattenedSequence) -> np.ndarray:
    n = len(seq)
    m = np.zeros((n, n), dtype=bool)
    m[seq.graph_hub, list(seq.hub_index)] = True
    m[:, seq.graph_start] = True
    return m


def query_mask(seq: FlattenedSequence, mode: QueryMode = "sparse", sees_graph_hub: bool = False) -> np.ndarray:
    n = len(seq)
    m = np.zeros((n, n), dtype=bool)
    q0, q1 = seq.query_span
    if mode == "full":
        m[q0 : q1 + 1, :] = np.tri(n, dtype=bool)[q0 : q1 + 1]
    elif mode == "sparse":
        k = q1 - q0 + 1
        m[q0 : q1 + 1, q0 : q1 + 1] = np.tri(k, dtype=bool)
        cols = list(seq.hub_index)
        if sees_graph_hub:
            cols.append(seq.graph_hub)
        m[q0 : q1 + 1, cols] = True
    else:
        raise ValueError(f"unknown query mode {mode!r}")
    return m


@dataclass(frozen=True)
class TopoMask:
    bits: np.ndarray
    mode: QueryMode
    levels: dict[str, np.ndarray] | None = field(default=None, compare=False)

    @property
    def size(self) -> int:
        return self.bits.shape[0]

    def to_bits_file(self) -> bytes:
        """``u32 size, u8 mode`` little-endian header, then row-major bits (LSB first)."""
        header = struct.pack("<IB", self.size, _MODE_CODE[self.mode])
        return header + np.packbits(self.bits.reshape(-1), bitorder="little").tobytes()

    @classmethod
    def from_bits_file(cls, data: bytes) -> "TopoMask":
        size, code = struct.unpack_from("<IB", data)
        flat = np.unpackbits(np.frombuffer(data[5:], dtype=np.uint8), bitorder="little")[: size * size]
        mode = {v: k for k, v in _MODE_CODE.items()}[code]
        return cls(_frozen(flat.astype(bool).reshape(size, size)), mode)

    def to_pgm(self) -> bytes:
        """Binary portable graymap: 255 where visible, 0 where masked."""
        header = f"P5\n{self.size} {self.size}\n255\n".encode("ascii")
        return header + (self.bits.astype(np.uint8) * 255).tobytes()

    def save(self, path: Path | str) -> None:
        path = Path(path)
        data = self.to_pgm() if path.suffix == ".pgm" else self.to_bits_file()
        path.write_bytes(data)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def compose_mask(
    seq: FlattenedSequence,
    g: TextGraph,
    mode: QueryMode = "sparse",
    *,
    sees_graph_hub: bool = False,
    keep_levels: bool = False,
) -> TopoMask:
    levels = {
        "intra": intra_mask(seq),
        "inter": inter_mask(seq, g),
        "global": global_mask(seq),
        "query": query_mask(seq, mode, sees_graph_hub),
    }
    bits = levels["intra"] | levels["inter"] | levels["global"] | levels["query"]
    kept = {k: _frozen(v) for k, v in levels.items()} if keep_levels else None
    return TopoMask(_frozen(bits), mode, kept)


compose = compose_mask


def causal_mask(n: int) -> np.ndarray:
    return np.tri(n, dtype=bool)
