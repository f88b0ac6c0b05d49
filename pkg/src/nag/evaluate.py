"""Evaluation loop, per-task aggregation and report plotting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from nag.encode import SampleEncoder
from nag.flatten import Vocabulary, _TOKEN_RE
from nag.linearize import linearize_prompt
from nag.metrics import EXCLUDED, parse_int, score_abs_err, score_exact, score_hit_at_1, score_set_f1
from nag.model import NAGModel
from nag.synth.tasks import INTEGER_TASKS, SET_TASKS, TaskKind, TaskSample


class VocabularyMismatch(ValueError):
    pass


@dataclass
class SampleScore:
    id: str
    task: str
    pred: str
    gold: str
    acc: int
    abs_err: float | None = None
    excluded: bool = False
    f1: float | None = None
    hit_at_1: int | None = None


def score_sample(sample: TaskSample, pred: str) -> SampleScore:
    task = TaskKind(sample.task)
    s = SampleScore(sample.id, task.value, pred, sample.answer, score_exact(pred, sample.answer))
    if task in INTEGER_TASKS and parse_int(sample.answer) is not None:
        err = score_abs_err(pred, sample.answer)
        if err is EXCLUDED:
            s.excluded = True
        else:
            s.abs_err = err
    if task in SET_TASKS:
        s.f1 = score_set_f1(pred, sample.answer)
    golds = sample.meta.get("answers") if sample.meta else None
    if golds:
        s.hit_at_1 = score_hit_at_1(pred, golds)
    return s


def _mean(values: list[float]) -> float | None:
    return math.fsum(values) / len(values) if values else None


def aggregate(scores: Sequence[SampleScore]) -> dict[str, dict]:
    """Per-task means. Order-independent (compensated summation)."""
    tasks: dict[str, list[SampleScore]] = {}
    for s in scores:
        tasks.setdefault(s.task, []).append(s)
    out = {}
    for task in sorted(tasks):
        group = tasks[task]
        entry = {
            "n": len(group),
            "acc": _mean([float(s.acc) for s in group]),
            "abs_err": _mean([s.abs_err for s in group if s.abs_err is not None]),
            "abs_err_excluded": sum(s.excluded for s in group),
            "f1": _mean([s.f1 for s in group if s.f1 is not None]),
        }
        hits = [float(s.hit_at_1) for s in group if s.hit_at_1 is not None]
        if hits:
            entry["hit_at_1"] = _mean(hits)
        out[task] = entry
    return out


@dataclass
class EvalReport:
    checkpoint: str
    split: str
    per_task: dict[str, dict]
    seed: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "checkpoint": self.checkpoint,
            "split": self.split,
            "per_task": self.per_task,
            "seed": self.seed,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        d = json.loads(text)
        return cls(d["checkpoint"], d["split"], d["per_task"], d.get("seed", 0), d.get("config", {}))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "EvalReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def unknown_words(vocab: Vocabulary, samples: Sequence[TaskSample], input_format: str = "graph") -> set[str]:
    known = set(vocab.words)
    seen: set[str] = set()
    for s in samples:
        texts = [n.text for n in s.graph.nodes] + [e.text for e in s.graph.edges] + [s.question, s.answer]
        if input_format == "linearized":
            texts.append(linearize_prompt(s))
        for t in texts:
            seen.update(_TOKEN_RE.findall(t))
    return seen - known


def check_vocabulary(vocab: Vocabulary, samples: Sequence[TaskSample], input_format: str = "graph") -> None:
    missing = unknown_words(vocab, samples, input_format)
    if missing:
        shown = ", ".join(sorted(missing)[:10])
        raise VocabularyMismatch(f"{len(missing)} word(s) in the data are not in the checkpoint vocabulary: {shown}")


def evaluate(
    model: NAGModel,
    vocab: Vocabulary,
    samples: Sequence[TaskSample],
    *,
    split: str = "test",
    checkpoint: str = "",
    input_format: str = "graph",
    seed: int = 0,
    max_tokens: int = 16,
    batch_size: int = 32,
    allow_unknown: bool = False,
) -> tuple[EvalReport, list[SampleScore]]:
    """Greedy-decode every sample and score it with its task's metrics."""
    from nag.decode import generate

    if not allow_unknown:
        check_vocabulary(vocab, samples, input_format)
    encoder = SampleEncoder.for_model(vocab, model.config, input_format)
    preds = generate(model, encoder, samples, max_tokens=max_tokens, batch_size=batch_size, seed=seed)
    return report_from_predictions(samples, preds, split=split, checkpoint=checkpoint, seed=seed, config=model.config.to_dict())


def report_from_predictions(
    samples: Sequence[TaskSample],
    preds: Sequence[str],
    *,
    split: str = "test",
    checkpoint: str = "",
    seed: int = 0,
    config: dict | None = None,
) -> tuple[EvalReport, list[SampleScore]]:
    if len(samples) != len(preds):
        raise ValueError(f"{len(samples)} samples but {len(preds)} predictions")
    scores = [score_sample(s, p) for s, p in zip(samples, preds)]
    return EvalReport(checkpoint, split, aggregate(scores), seed, config or {}), scores


def plot_reports(reports: Sequence[EvalReport], out_dir: Path | str, labels: Sequence[str] | None = None) -> list[Path]:
    """One bar chart per task comparing accuracy (and F1 where defined) across reports."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = list(labels) if labels else [r.checkpoint or f"run{i}" for i, r in enumerate(reports)]
    tasks = sorted({t for r in reports for t in r.per_task})
    written = []
    for task in tasks:
        metrics = ["acc"] + (["f1"] if any((r.per_task.get(task) or {}).get("f1") is not None for r in reports) else [])
        fig, ax = plt.subplots(figsize=(max(3.0, 1.2 * len(reports) * len(metrics)), 3.0))
        width = 0.8 / len(metrics)
        for k, metric in enumerate(metrics):
            vals = [((r.per_task.get(task) or {}).get(metric) or 0.0) for r in reports]
            xs = [i + (k - (len(metrics) - 1) / 2) * width for i in range(len(reports))]
            ax.bar(xs, vals, width=width, label=metric)
        ax.set_xticks(range(len(reports)), labels, rotation=20, ha="right")
        ax.set_ylim(0, 1)
        ax.set_title(task)
        ax.legend(fontsize="small")
        path = out / f"{task}.png"
        fig.savefig(path, dpi=100, bbox_inches="tight", metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written
