"""Greedy answer decoding. The full forward is recomputed for every new token."""

from __future__ import annotations

import zlib
from typing import Sequence

import torch

from nag.encode import Prefix, SampleEncoder, collate
from nag.flatten import EOA_ID
from nag.model import NAGModel
from nag.synth.tasks import TaskSample


def order_seed(sample: TaskSample, seed: int = 0) -> int:
    """Evaluation-time element order seed: fixed per (sample id, seed)."""
    return zlib.crc32(f"{seed}:{sample.id}".encode("utf-8"))


@torch.no_grad()
def greedy_ids(
    model: NAGModel,
    encoder: SampleEncoder,
    prefixes: Sequence[Prefix],
    max_tokens: int = 16,
) -> list[list[int]]:
    """Argmax-decode each prefix until ``<eoa>`` or ``max_tokens``.

    The returned id lists exclude the end-of-answer token.
    """
    model.eval()
    out: list[list[int]] = [[] for _ in prefixes]
    active = list(range(len(prefixes)))
    for _ in range(max_tokens):
        if not active:
            break
        encoded = [encoder.extend(prefixes[i], out[i]) for i in active]
        batch = collate(encoded)
        h = model.hidden_states(batch.ids, batch.mask, batch.positions)
        last = h[torch.arange(len(active)), batch.lengths - 1]
        nxt = model.head(last).argmax(-1).tolist()
        still = []
        for i, tok in zip(active, nxt):
            if tok == EOA_ID:
                continue
            out[i].append(tok)
            still.append(i)
        active = still
    return out


def generate(
    model: NAGModel,
    encoder: SampleEncoder,
    samples: Sequence[TaskSample],
    max_tokens: int = 16,
    batch_size: int = 32,
    seed: int = 0,
) -> list[str]:
    """Decoded answer text per sample, in input order."""
    prefixes = [encoder.prefix(s, order_seed(s, seed)) for s in samples]
    # decode similar lengths together to keep padding small
    order = sorted(range(len(samples)), key=lambda i: len(prefixes[i].ids))
    texts: list[str] = [""] * len(samples)
    for start in range(0, len(order), batch_size):
        chunk = order[start : start + batch_size]
        for i, ids in zip(chunk, greedy_ids(model, encoder, [prefixes[i] for i in chunk], max_tokens)):
            texts[i] = encoder.vocab.decode(ids)
    return texts
