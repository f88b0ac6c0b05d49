"""Answer scorers. All are pure and total: every (pred, gold) pair gets a score."""

from __future__ import annotations

import re
from typing import AbstractSet, Iterable

_WS = re.compile(r"\s+")
_INT = re.compile(r"[+-]?\d+")


class _Excluded:
    """Marker for predictions left out of an absolute-error mean."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EXCLUDED"

    def __bool__(self) -> bool:
        return False


EXCLUDED = _Excluded()


def normalize(text: str) -> str:
    """Trim, case-fold and collapse internal whitespace."""
    return _WS.sub(" ", text.strip()).casefold()


def score_exact(pred: str, gold: str) -> int:
    return int(normalize(pred) == normalize(gold))


def parse_int(text: str) -> int | None:
    t = normalize(text)
    return int(t) if _INT.fullmatch(t) else None


def score_abs_err(pred: str, gold: int | str):
    """``|pred - gold|``, or :data:`EXCLUDED` when ``pred`` is not an integer."""
    g = gold if isinstance(gold, int) else parse_int(gold)
    if g is None:
        raise ValueError(f"gold answer {gold!r} is not an integer")
    p = parse_int(pred)
    return EXCLUDED if p is None else float(abs(p - g))


def answer_set(text: str) -> frozenset[str]:
    return frozenset(x for x in (normalize(part) for part in text.split(",")) if x)


def score_set_f1(pred: str, gold: Iterable[str] | str) -> float:
    cand = answer_set(pred)
    ref = answer_set(gold) if isinstance(gold, str) else frozenset(normalize(g) for g in gold if normalize(g))
    if not cand and not ref:
        return 1.0
    tp = len(cand & ref)
    if tp == 0:
        return 0.0
    precision, recall = tp / len(cand), tp / len(ref)
    return 2 * precision * recall / (precision + recall)


def score_hit_at_1(pred: str, golds: AbstractSet[str] | Iterable[str]) -> int:
    golds = list(golds)
    if not golds:
        raise ValueError("hit@1 needs at least one gold alternative")
    p = normalize(pred)
    return int(any(p == normalize(g) for g in golds))
