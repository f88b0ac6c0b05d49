"""Desk-scale learnability run: text pretraining, then NAG-LoRA under two position schemes.

Stage one trains the toy backbone as a plain causal model on linearized
prompts, which leaves it with no preference for either position scheme.
Stage two fine-tunes one NAG-LoRA copy with recalibrated positions and
one with sequential positions from that same backbone, on the same data,
with the same step budget.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import torch

from nag.decode import generate
from nag.encode import SampleEncoder, build_vocab
from nag.evaluate import report_from_predictions
from nag.model import ModelConfig, NAGModel
from nag.synth import DatasetConfig, generate_dataset
from nag.synth.tasks import TaskSample
from nag.train import TrainConfig, train

TASKS = ("node-count", "edge-existence", "connected-nodes")


@dataclass
class LearnabilityConfig:
    per_task: int = 3000
    min_nodes: int = 5
    max_nodes: int = 10
    data_seed: int = 0
    pretrain_steps: int = 4000
    pretrain_lr: float = 1e-3
    finetune_steps: int = 6000
    finetune_lr: float = 2e-3
    batch_size: int = 16
    eval_every: int = 1000
    eval_per_task: int = 60  # validation samples per task for intermediate points; the last point uses the full split
    model: dict = field(default_factory=dict)  # ModelConfig overrides
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunCurve:
    name: str
    points: list[dict] = field(default_factory=list)  # {"step", "loss", task: acc, "connected-nodes/f1"}
    seconds: float = 0.0

    @property
    def final(self) -> dict:
        return self.points[-1] if self.points else {}


@dataclass
class LearnabilityResult:
    pretrain: RunCurve
    recalibrated: RunCurve
    sequential: RunCurve
    seconds: float

    def summary(self) -> dict:
        r, s = self.recalibrated.final, self.sequential.final
        return {
            "node-count": r.get("node-count"),
            "edge-existence": r.get("edge-existence"),
            "f1_recalibrated": r.get("connected-nodes/f1"),
            "f1_sequential": s.get("connected-nodes/f1"),
            "seconds": round(self.seconds, 1),
        }

    def curves_text(self) -> str:
        lines = []
        for curve in (self.pretrain, self.recalibrated, self.sequential):
            lines.append(f"[{curve.name}] {curve.seconds:.0f}s")
            for p in curve.points:
                lines.append("  " + " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in p.items()))
        return "\n".join(lines)


def score(model: NAGModel, encoder: SampleEncoder, samples: Sequence[TaskSample], seed: int = 0) -> dict:
    preds = generate(model, encoder, samples, max_tokens=24, seed=seed)
    report, _ = report_from_predictions(samples, preds)
    out = {task: entry["acc"] for task, entry in report.per_task.items()}
    if "connected-nodes" in report.per_task:
        out["connected-nodes/f1"] = report.per_task["connected-nodes"]["f1"]
    return out


def per_task_subset(samples: Sequence[TaskSample], k: int) -> list[TaskSample]:
    seen: dict[str, int] = {}
    out = []
    for s in samples:
        if seen.get(s.task.value, 0) < k:
            seen[s.task.value] = seen.get(s.task.value, 0) + 1
            out.append(s)
    return out


def _run(name, model, samples, encoder, val, steps, lr, cfg: LearnabilityConfig, log) -> RunCurve:
    curve = RunCurve(name)
    t0 = time.time()
    quick = per_task_subset(val, cfg.eval_per_task)

    def on_eval(step, m):
        last = step + 1 == steps
        point = {"step": step + 1, "n_val": len(val if last else quick), **score(m, encoder, val if last else quick, cfg.seed)}
        curve.points.append(point)
        log(f"{name} {point}")
        return point

    tc = TrainConfig(steps=steps, batch_size=cfg.batch_size, lr=lr, warmup=min(200, steps // 10), seed=cfg.seed, log_every=0)
    result = train(model, samples, encoder, tc, callback=on_eval, callback_every=cfg.eval_every)
    for point in curve.points:
        window = result.losses[max(0, point["step"] - 100) : point["step"]]
        point["loss"] = sum(window) / len(window)
    curve.seconds = time.time() - t0
    return curve


def run_learnability(cfg: LearnabilityConfig, log: Callable[[str], None] = print) -> LearnabilityResult:
    t0 = time.time()
    torch.manual_seed(cfg.seed)
    data = generate_dataset(
        DatasetConfig(tasks=TASKS, per_task=cfg.per_task, min_nodes=cfg.min_nodes, max_nodes=cfg.max_nodes),
        seed=cfg.data_seed,
    )
    vocab = build_vocab(data["train"])
    val = data["val"]
    base_cfg = ModelConfig(vocab_size=len(vocab), variant="backbone", **cfg.model)

    backbone = NAGModel(base_cfg, seed=cfg.seed)
    text_encoder = SampleEncoder.for_model(vocab, base_cfg, "linearized")
    pre = _run("pretrain-text", backbone, data["train"], text_encoder, val, cfg.pretrain_steps, cfg.pretrain_lr, cfg, log)

    curves = {}
    for scheme in ("recalibrated", "sequential"):
        model = NAGModel.from_backbone(backbone, "nag-lora", seed=cfg.seed, position_scheme=scheme)
        encoder = SampleEncoder.for_model(vocab, model.config)
        curves[scheme] = _run(f"nag-lora-{scheme}", model, data["train"], encoder, val, cfg.finetune_steps, cfg.finetune_lr, cfg, log)
    return LearnabilityResult(pre, curves["recalibrated"], curves["sequential"], time.time() - t0)
