"""Shared builders for model-level tests."""

from __future__ import annotations

import torch

from nag.encode import SampleEncoder, build_vocab, collate
from nag.model import ModelConfig, NAGModel
from nag.synth import DatasetConfig, generate_dataset

_CACHE: dict = {}


def small_dataset(tasks=("node-count", "edge-existence", "connected-nodes"), per_task=20, seed=0, max_nodes=8):
    key = (tuple(tasks), per_task, seed, max_nodes)
    if key not in _CACHE:
        cfg = DatasetConfig(tasks=tasks, per_task=per_task, min_nodes=5, max_nodes=max_nodes)
        _CACHE[key] = generate_dataset(cfg, seed=seed)
    return _CACHE[key]


def shared_vocab():
    if "vocab" not in _CACHE:
        _CACHE["vocab"] = build_vocab()
    return _CACHE["vocab"]


def toy_config(**kw) -> ModelConfig:
    base = dict(
        layers=2,
        heads=2,
        head_dim=8,
        model_dim=16,
        ffn_dim=32,
        vocab_size=len(shared_vocab()),
        adapter_rank=4,
        lora_rank=2,
    )
    base.update(kw)
    return ModelConfig(**base)


def randomize_extras(model: NAGModel, seed: int = 0, scale: float = 0.3) -> None:
    """Give zero-initialized extras non-zero values so they actually act."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in model.named_parameters():
            if model.is_extra(name) or name == "graph_tags":
                p.copy_(torch.randn(p.shape, generator=gen, dtype=p.dtype) * scale)


def batch_for(samples, config: ModelConfig, input_format="graph", order_seed=0, encoder=None):
    enc = encoder or SampleEncoder.for_model(shared_vocab(), config, input_format)
    return collate([enc.encode(s, order_seed + i) for i, s in enumerate(samples)])
