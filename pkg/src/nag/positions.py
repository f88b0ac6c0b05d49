"""Position ids for rotary embeddings: recalibrated (shared hub id) or sequential."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from nag.flatten import FlattenedSequence

PositionScheme = Literal["recalibrated", "sequential"]


@dataclass(frozen=True)
class PositionAssignment:
    ids: tuple[int, ...]
    scheme: PositionScheme
    p_start: int
    p_hub: int | None = None

    def __len__(self) -> int:
        return len(self.ids)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ids, dtype=np.int64)


def assign_recalibrated(seq: FlattenedSequence) -> PositionAssignment:
    """Every element counts up from ``p_start + 1``; all hubs share ``p_hub``.

    ``p_hub = p_start + max |u|`` where ``|u|`` includes both wrapper tags,
    so the longest element keeps its natural ids and shorter elements jump
    to ``p_hub`` at their closing tag. ``</g>`` is ``p_hub + 1`` and the
    query continues from ``p_hub + 2``. Tokens before ``<g>`` (if any) keep
    their sequential ids and ``p_start`` equals the index of ``<g>``.
    """
    ids = list(range(len(seq)))
    p_start = seq.graph_start
    longest = max(b - a + 1 for a, b in seq.element_spans)
    p_hub = p_start + longest
    for a, b in seq.element_spans:
        for offset, i in enumerate(range(a, b)):
            ids[i] = p_start + 1 + offset
        ids[b] = p_hub
    ids[seq.graph_hub] = p_hub + 1
    for k, i in enumerate(range(seq.graph_hub + 1, len(seq))):
        ids[i] = p_hub + 2 + k
    return PositionAssignment(tuple(ids), "recalibrated", p_start, p_hub)


def assign_sequential(seq: FlattenedSequence) -> PositionAssignment:
    return PositionAssignment(tuple(range(len(seq))), "sequential", seq.graph_start)


def assign_positions(seq: FlattenedSequence, scheme: PositionScheme) -> PositionAssignment:
    if scheme == "recalibrated":
        return assign_recalibrated(seq)
    if scheme == "sequential":
        return assign_sequential(seq)
    raise ValueError(f"unknown position scheme {scheme!r}")
