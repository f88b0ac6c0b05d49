"""Turn task samples into model inputs (ids, mask, positions) and batches."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import torch

from nag.flatten import EOA_ID, PAD_ID, FlattenedSequence, Vocabulary, flatten
from nag.graph import Node, TextGraph, unified_elements
from nag.linearize import linearize_prompt
from nag.mask import causal_mask, compose_mask
from nag.model import ModelConfig
from nag.positions import assign_positions
from nag.synth.encodings import ALL_ENCODINGS, scheme_vocab
from nag.synth.generators import MAX_EDGES
from nag.synth.tasks import NO_PATH, TEMPLATES, TaskKind, TaskSample

InputFormat = Literal["graph", "linearized"]


@dataclass(frozen=True)
class EncodedSample:
    ids: np.ndarray
    mask: np.ndarray
    positions: np.ndarray
    answer_start: int | None = None

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class Prefix:
    """Everything up to the first answer token, ready to be extended."""

    sample: TaskSample
    seq: FlattenedSequence | None
    ids: tuple[int, ...]


class SampleEncoder:
    """Builds inputs under one (format, query mode, position scheme) setting.

    ``graph`` inputs are flattened with the topology-aware mask; element
    order is a seeded shuffle per sample unless ``element_order`` says
    otherwise. ``linearized`` inputs are a plain causal prompt with
    sequential positions.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        input_format: InputFormat = "graph",
        query_mode: str = "sparse",
        position_scheme: str = "recalibrated",
        sees_graph_hub: bool = False,
        element_order: str = "random",
        template: str = "tuple",
    ):
        self.vocab = vocab
        self.input_format = input_format
        self.query_mode = query_mode
        self.position_scheme = position_scheme
        self.sees_graph_hub = sees_graph_hub
        self.element_order = element_order
        self.template = template

    @classmethod
    def for_model(cls, vocab: Vocabulary, config: ModelConfig, input_format: InputFormat = "graph", **kw) -> "SampleEncoder":
        return cls(
            vocab,
            input_format,
            query_mode=config.query_mode,
            position_scheme=config.position_scheme,
            sees_graph_hub=config.query_sees_graph_hub,
            **kw,
        )

    def prefix(self, sample: TaskSample, order_seed: int = 0) -> Prefix:
        if self.input_format == "linearized":
            return Prefix(sample, None, tuple(self.vocab.tokenize(linearize_prompt(sample, self.template))))
        elements = unified_elements(sample.graph, self.element_order, seed=order_seed)
        seq = flatten(sample.graph, elements, sample.question, self.vocab)
        return Prefix(sample, seq, seq.token_ids)

    def extend(self, prefix: Prefix, answer_ids: Sequence[int] = ()) -> EncodedSample:
        answer_ids = list(answer_ids)
        if prefix.seq is None:
            ids = np.asarray(prefix.ids + tuple(answer_ids), dtype=np.int64)
            start = len(prefix.ids) if answer_ids else None
            return EncodedSample(ids, causal_mask(len(ids)), np.arange(len(ids), dtype=np.int64), start)
        seq = prefix.seq.extend_query(answer_ids)
        return self.encode_sequence(seq, prefix.sample.graph)

    def encode_sequence(self, seq: FlattenedSequence, graph: TextGraph) -> EncodedSample:
        mask = compose_mask(seq, graph, self.query_mode, sees_graph_hub=self.sees_graph_hub).bits
        pos = assign_positions(seq, self.position_scheme).as_array()
        return EncodedSample(np.asarray(seq.token_ids, dtype=np.int64), mask, pos, seq.answer_start)

    def answer_ids(self, sample: TaskSample) -> list[int]:
        return self.vocab.tokenize(sample.answer) + [EOA_ID]

    def encode(self, sample: TaskSample, order_seed: int = 0) -> EncodedSample:
        """Training input: prompt, gold answer and end-of-answer token."""
        return self.extend(self.prefix(sample, order_seed), self.answer_ids(sample))


@dataclass
class Batch:
    ids: torch.Tensor  # (B, S)
    mask: torch.Tensor  # (B, S, S)
    positions: torch.Tensor  # (B, S)
    lengths: torch.Tensor  # (B,)
    pred_index: torch.Tensor  # (N,) flat indices into B*S whose logits are scored
    targets: torch.Tensor  # (N,)
    target_sample: torch.Tensor  # (N,) batch row of each target


def collate(samples: Sequence[EncodedSample]) -> Batch:
    """Right-pad to the longest sample. Pad rows see only themselves."""
    b = len(samples)
    s = max(len(x) for x in samples)
    ids = np.full((b, s), PAD_ID, dtype=np.int64)
    mask = np.zeros((b, s, s), dtype=bool)
    pos = np.zeros((b, s), dtype=np.int64)
    pad_diag = np.eye(s, dtype=bool)
    pred, tgt, owner = [], [], []
    for r, x in enumerate(samples):
        n = len(x)
        ids[r, :n] = x.ids
        mask[r] = pad_diag
        mask[r, :n, :n] = x.mask
        pos[r, :n] = x.positions
        if x.answer_start is not None:
            for t in range(x.answer_start, n):
                pred.append(r * s + t - 1)
                tgt.append(int(x.ids[t]))
                owner.append(r)
    return Batch(
        ids=torch.from_numpy(ids),
        mask=torch.from_numpy(mask),
        positions=torch.from_numpy(pos),
        lengths=torch.tensor([len(x) for x in samples], dtype=torch.long),
        pred_index=torch.tensor(pred, dtype=torch.long),
        targets=torch.tensor(tgt, dtype=torch.long),
        target_sample=torch.tensor(owner, dtype=torch.long),
    )


def synthetic_lexicon() -> list[str]:
    """Every text the synthetic benchmark can emit, independent of any dataset draw.

    Building the vocabulary from this (plus the data) keeps held-out splits
    free of unseen words even when they are small.
    """
    texts: list[str] = [str(i) for i in range(MAX_EDGES + 1)] + ["Yes", "No", NO_PATH]
    texts += [linearize_prompt(_probe_sample(t), t) for t in ("tuple", "csv")]
    for scheme in ALL_ENCODINGS:
        v = scheme_vocab(scheme)
        texts += list(v.names or ())
        for templates in TEMPLATES.values():
            for t in templates:
                texts.append(t.format(nouns=v.nouns, noun=v.noun, relation=v.relation, a_relation=v.relation, relations=v.relations, a="an", b="b"))
    return texts


def _probe_sample(template: str) -> TaskSample:
    g = TextGraph((Node("a", "x"),), (), directed=template == "csv")
    return TaskSample("probe", TaskKind.NODE_COUNT, g, "", "1")


def build_vocab(samples: Sequence[TaskSample] = (), lexicon: bool = True) -> Vocabulary:
    """Vocabulary over node/edge texts, questions and answers of ``samples``.

    With ``lexicon`` the fixed synthetic word list is included as well.
    """
    texts: list[str] = synthetic_lexicon() if lexicon else []
    for s in samples:
        texts.extend(n.text for n in s.graph.nodes)
        texts.extend(e.text for e in s.graph.edges)
        texts.append(s.question)
        texts.append(s.answer)
    return Vocabulary.build(texts)
