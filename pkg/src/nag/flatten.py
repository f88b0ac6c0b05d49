"""Toy tokenizer with graph boundary tokens, and structural flattening.

Layout produced by :func:`flatten`::

    <g> [ <n> node text </n> | <e> edge text </e> ]* </g> question [answer <eoa>]

Every element's closing tag is its hub.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from nag.graph import GraphError, TextGraph, UnifiedElement

PAD, EOA = "<pad>", "<eoa>"
G_OPEN, G_CLOSE = "<g>", "</g>"
N_OPEN, N_CLOSE = "<n>", "</n>"
E_OPEN, E_CLOSE = "<e>", "</e>"
GRAPH_TAGS = (G_OPEN, G_CLOSE, N_OPEN, N_CLOSE, E_OPEN, E_CLOSE)
SPECIALS = (PAD, EOA) + GRAPH_TAGS
N_BYTES = 256
_BYTE_OFFSET = len(SPECIALS)
PAD_ID, EOA_ID = 0, 1
GRAPH_TAG_IDS = tuple(range(2, 2 + len(GRAPH_TAGS)))
_WORD_OFFSET = _BYTE_OFFSET + N_BYTES

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_NO_SPACE_BEFORE = set(",.;:!?)]}'")
_NO_SPACE_AFTER = set("([{")


class Vocabulary:
    """Word-level vocabulary with byte fallback.

    Ids ``0 .. 7`` are the reserved tokens (pad, end-of-answer, six graph
    tags), ``8 .. 263`` are byte tokens, words follow in sorted order.
    Text tokenization only ever yields byte or word ids.
    """

    def __init__(self, words: Iterable[str] = ()):
        self.words: tuple[str, ...] = tuple(sorted(set(words)))
        self._word_to_id = {w: _WORD_OFFSET + i for i, w in enumerate(self.words)}
        self.pad_id = PAD_ID
        self.eoa_id = EOA_ID
        self.tag_ids = dict(zip(GRAPH_TAGS, GRAPH_TAG_IDS))

    # construction / persistence

    @classmethod
    def build(cls, texts: Iterable[str], min_count: int = 1) -> "Vocabulary":
        counts = Counter(tok for t in texts for tok in _TOKEN_RE.findall(t))
        return cls(w for w, c in counts.items() if c >= min_count)

    def to_json(self) -> str:
        return json.dumps({"specials": list(SPECIALS), "bytes": N_BYTES, "words": list(self.words)}, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        doc = json.loads(text)
        if tuple(doc.get("specials", ())) != SPECIALS or doc.get("bytes") != N_BYTES:
            raise ValueError("vocabulary file uses a different reserved-token layout")
        return cls(doc["words"])

    def __len__(self) -> int:
        return _WORD_OFFSET + len(self.words)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    def __hash__(self) -> int:
        return hash(self.words)

    # tokens

    @property
    def special_ids(self) -> frozenset[int]:
        return frozenset(range(_BYTE_OFFSET))

    @property
    def graph_tag_ids(self) -> frozenset[int]:
        return frozenset(self.tag_ids.values())

    def tokenize(self, text: str) -> list[int]:
        ids: list[int] = []
        for piece in _TOKEN_RE.findall(text):
            wid = self._word_to_id.get(piece)
            if wid is not None:
                ids.append(wid)
            else:
                ids.extend(_BYTE_OFFSET + b for b in piece.encode("utf-8"))
        return ids

    def id_to_piece(self, i: int) -> str:
        if i < _BYTE_OFFSET:
            return SPECIALS[i]
        if i < _WORD_OFFSET:
            return f"<0x{i - _BYTE_OFFSET:02X}>"
        return self.words[i - _WORD_OFFSET]

    def decode(self, ids: Sequence[int]) -> str:
        """Join word pieces with single spaces, none before closing punctuation.

        Runs of byte tokens are reassembled into one word.
        """
        pieces: list[str] = []
        buf = bytearray()

        def flush():
            if buf:
                pieces.append(buf.decode("utf-8", errors="replace"))
                buf.clear()

        for i in ids:
            if i < _BYTE_OFFSET:
                flush()
                if i not in (self.pad_id, self.eoa_id):
                    pieces.append(SPECIALS[i])
            elif i < _WORD_OFFSET:
                buf.append(i - _BYTE_OFFSET)
            else:
                flush()
                pieces.append(self.words[i - _WORD_OFFSET])
        flush()
        out = ""
        for p in pieces:
            if out and not (p[0] in _NO_SPACE_BEFORE or out[-1] in _NO_SPACE_AFTER):
                out += " "
            out += p
        return out


def tokenize(vocab: Vocabulary, text: str) -> list[int]:
    return vocab.tokenize(text)


@dataclass(frozen=True)
class FlattenedSequence:
    """A graph plus query laid out as one token sequence.

    Spans are inclusive ``(start, end)`` index pairs. ``element_keys[k]`` is
    the ``(kind, index)`` identity of the k-th serialized element and
    ``node_hub`` maps node indices (positions in ``graph.nodes``) to their hub
    token index. ``answer_start`` is the first answer token inside
    ``query_span`` or ``None`` when no answer was appended.
    """

    token_ids: tuple[int, ...]
    element_spans: tuple[tuple[int, int], ...]
    element_keys: tuple[tuple[str, int], ...]
    graph_start: int
    graph_hub: int
    query_span: tuple[int, int]
    answer_start: int | None = None
    node_hub: dict[int, int] = field(default_factory=dict, compare=False)
    edge_hub: dict[int, int] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def hub_index(self) -> tuple[int, ...]:
        return tuple(end for _, end in self.element_spans)

    @property
    def element_order(self) -> tuple[tuple[str, int], ...]:
        return self.element_keys

    @property
    def query_indices(self) -> range:
        return range(self.query_span[0], self.query_span[1] + 1)

    @property
    def answer_span(self) -> tuple[int, int] | None:
        if self.answer_start is None:
            return None
        return (self.answer_start, self.query_span[1])

    def extend_query(self, new_ids: Sequence[int]) -> "FlattenedSequence":
        """Append tokens to the query (used when decoding one token at a time)."""
        if not new_ids:
            return self
        start = self.answer_start if self.answer_start is not None else self.query_span[1] + 1
        return replace(
            self,
            token_ids=self.token_ids + tuple(new_ids),
            query_span=(self.query_span[0], self.query_span[1] + len(new_ids)),
            answer_start=start,
        )

    def element_tokens(self, k: int) -> tuple[int, ...]:
        a, b = self.element_spans[k]
        return self.token_ids[a : b + 1]


def flatten(
    g: TextGraph,
    elements: Sequence[UnifiedElement],
    query: str,
    vocab: Vocabulary,
    answer: str | None = None,
) -> FlattenedSequence:
    """Serialize ``elements`` (a permutation of V ∪ E) between graph tags.

    With ``answer`` given (training), its tokens and an end-of-answer token
    follow the question inside the query span.
    """
    if not elements:
        raise GraphError("cannot flatten a graph with no elements")
    keys = [e.key for e in elements]
    expected = {("node", i) for i in range(len(g.nodes))} | {("edge", i) for i in range(len(g.edges))}
    if len(keys) != len(expected) or set(keys) != expected:
        raise GraphError("elements must enumerate every node and edge exactly once")

    ids: list[int] = [vocab.tag_ids[G_OPEN]]
    spans: list[tuple[int, int]] = []
    node_hub: dict[int, int] = {}
    edge_hub: dict[int, int] = {}
    for el in elements:
        open_tag, close_tag = (N_OPEN, N_CLOSE) if el.kind == "node" else (E_OPEN, E_CLOSE)
        start = len(ids)
        ids.append(vocab.tag_ids[open_tag])
        ids.extend(vocab.tokenize(el.text))
        ids.append(vocab.tag_ids[close_tag])
        spans.append((start, len(ids) - 1))
        (node_hub if el.kind == "node" else edge_hub)[el.index] = len(ids) - 1
    graph_hub = len(ids)
    ids.append(vocab.tag_ids[G_CLOSE])

    q_start = len(ids)
    ids.extend(vocab.tokenize(query))
    answer_start = None
    if answer is not None:
        answer_start = len(ids)
        ids.extend(vocab.tokenize(answer))
        ids.append(vocab.eoa_id)
    if len(ids) == q_start:
        raise ValueError("query must contain at least one token")
    return FlattenedSequence(
        token_ids=tuple(ids),
        element_spans=tuple(spans),
        element_keys=tuple(keys),
        graph_start=0,
        graph_hub=graph_hub,
        query_span=(q_start, len(ids) - 1),
        answer_start=answer_start,
        node_hub=node_hub,
        edge_hub=edge_hub,
    )


def layout_table(seq: FlattenedSequence, vocab: Vocabulary, positions: Sequence[int] | None = None) -> list[dict]:
    """One row per token: index, token, owning element, hub flag (and position)."""
    owner: dict[int, str] = {}
    for (a, b), (kind, idx) in zip(seq.element_spans, seq.element_keys):
        for i in range(a, b + 1):
            owner[i] = f"{kind}[{idx}]"
    hubs = set(seq.hub_index)
    rows = []
    for i, tok in enumerate(seq.token_ids):
        if i == seq.graph_start:
            where = "graph-start"
        elif i == seq.graph_hub:
            where = "graph-hub"
        elif i in owner:
            where = owner[i]
        elif seq.answer_start is not None and i >= seq.answer_start:
            where = "answer"
        else:
            where = "query"
        row = {"index": i, "token": vocab.id_to_piece(tok), "element": where, "hub": i in hubs or i == seq.graph_hub}
        if positions is not None:
            row["position"] = int(positions[i])
        rows.append(row)
    return rows
