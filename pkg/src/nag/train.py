"""Training loop: Adam with linear warmup, length-bucketed batches, answer-only loss."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np
import torch

from nag.encode import SampleEncoder, collate
from nag.model import NAGModel, sequence_loss
from nag.synth.tasks import TaskSample


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    steps: int = 1000
    batch_size: int = 16
    lr: float = 1e-3
    warmup: int = 100
    decay: str = "cosine"  # cosine | linear | none, applied after warmup
    min_lr_ratio: float = 0.1
    betas: tuple[float, float] = (0.9, 0.98)
    weight_decay: float = 0.0
    grad_clip: float = 1.0
    seed: int = 0
    log_every: int = 50
    bucket_factor: int = 8

    def __post_init__(self) -> None:
        self.betas = tuple(self.betas)
        if self.decay not in ("cosine", "linear", "none"):
            raise ValueError(f"unknown decay {self.decay!r}")
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def lr_at(self, step: int) -> float:
        """Learning rate for 0-based ``step``."""
        if self.warmup and step < self.warmup:
            return self.lr * (step + 1) / self.warmup
        if self.decay == "none":
            return self.lr
        span = max(1, self.steps - self.warmup)
        frac = min(1.0, (step - self.warmup) / span)
        if self.decay == "linear":
            shape = 1.0 - frac
        else:
            shape = 0.5 * (1.0 + math.cos(math.pi * frac))
        return self.lr * (self.min_lr_ratio + (1.0 - self.min_lr_ratio) * shape)


class BatchSampler:
    """Draws batches of similar length so padding stays small.

    Samples are sorted by encoded length and cut into buckets of
    ``bucket_factor * batch_size``; each step picks a bucket, then a batch
    inside it. Everything is driven by ``numpy`` generators keyed on
    ``(seed, step)``, so batch ``k`` does not depend on earlier draws.
    """

    def __init__(self, lengths: Sequence[int], batch_size: int, seed: int, bucket_factor: int = 8):
        order = np.argsort(np.asarray(lengths), kind="stable")
        size = max(batch_size, batch_size * bucket_factor)
        self.buckets = [order[i : i + size] for i in range(0, len(order), size)]
        self.weights = np.array([len(b) for b in self.buckets], dtype=float)
        self.weights /= self.weights.sum()
        self.batch_size = batch_size
        self.seed = seed

    def draw(self, step: int) -> tuple[np.ndarray, np.ndarray]:
        """Sample indices and per-sample element-order seeds for ``step``."""
        rng = np.random.default_rng([self.seed, step])
        bucket = self.buckets[rng.choice(len(self.buckets), p=self.weights)]
        take = min(self.batch_size, len(bucket))
        idx = rng.choice(bucket, size=take, replace=False)
        return idx, rng.integers(0, 2**31, size=take)


@dataclass
class TrainResult:
    losses: list[float]
    log: list[dict]

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]


def make_optimizer(model: NAGModel, config: TrainConfig) -> torch.optim.Adam:
    params = [p for _, p in model.named_parameters() if p.requires_grad]
    if not params:
        raise ValueError("model has no trainable parameters")
    return torch.optim.AdamW(params, lr=config.lr, betas=config.betas, weight_decay=config.weight_decay)


def train(
    model: NAGModel,
    samples: Sequence[TaskSample],
    encoder: SampleEncoder,
    config: TrainConfig,
    callback: Callable[[int, NAGModel], dict | None] | None = None,
    callback_every: int = 0,
) -> TrainResult:
    """Optimize ``model``'s trainable set on ``samples``.

    Element order is reshuffled every time a sample is drawn. ``callback``
    (e.g. a validation pass) runs every ``callback_every`` steps and after
    the last one; whatever dict it returns is merged into that step's log
    record.
    """
    if not samples:
        raise ValueError("no training samples")
    torch.manual_seed(config.seed)
    prefixes = [encoder.prefix(s) for s in samples]
    answers = [encoder.answer_ids(s) for s in samples]
    lengths = [len(p.ids) + len(a) for p, a in zip(prefixes, answers)]
    sampler = BatchSampler(lengths, config.batch_size, config.seed, config.bucket_factor)
    opt = make_optimizer(model, config)
    params = [p for p in model.parameters() if p.requires_grad]

    losses: list[float] = []
    log: list[dict] = []
    model.train()
    for step in range(config.steps):
        idx, order_seeds = sampler.draw(step)
        batch = collate(
            [encoder.extend(encoder.prefix(samples[i], int(o)), answers[i]) for i, o in zip(idx, order_seeds)]
        )
        lr = config.lr_at(step)
        for group in opt.param_groups:
            group["lr"] = lr
        loss = sequence_loss(model, batch)
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDiverged(
                f"non-finite loss {value} at step {step} (lr={lr:.3g}, batch={[samples[i].id for i in idx]})"
            )
        opt.zero_grad(set_to_none=True)
        loss.backward()
        grad_norm = float(torch.nn.utils.clip_grad_norm_(params, config.grad_clip if config.grad_clip > 0 else math.inf))
        opt.step()
        losses.append(value)

        last = step == config.steps - 1
        record = None
        if config.log_every and (step % config.log_every == 0 or last):
            record = {"step": step, "loss": value, "lr": lr, "grad_norm": grad_norm}
        if callback is not None and callback_every and ((step + 1) % callback_every == 0 or last):
            extra = callback(step, model) or {}
            model.train()
            record = {**(record or {"step": step, "loss": value, "lr": lr, "grad_norm": grad_norm}), **extra}
        if record is not None:
            log.append(record)
    model.eval()
    return TrainResult(losses, log)
