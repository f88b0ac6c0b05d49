"""Toy decoder-only transformer with rotary positions and an explicit mask input.

Three variants share one backbone:

* ``backbone``: every weight is trainable.
* ``nag-zero``: frozen backbone; gated low-rank adapters between layers that
  act only on graph-tag positions.
* ``nag-lora``: frozen backbone; low-rank deltas on the Q, K, V projections.

In both NAG variants the six graph-tag embedding rows (kept in a separate
tensor, ``graph_tags``) are trainable as well.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Literal

import torch
import torch.nn as nn
import torch.nn.functional as F

from nag.flatten import GRAPH_TAG_IDS

Variant = Literal["backbone", "nag-zero", "nag-lora"]
VARIANTS = ("backbone", "nag-zero", "nag-lora")


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    layers: int = 4
    heads: int = 4
    head_dim: int = 32
    model_dim: int = 128
    ffn_dim: int = 512
    rope_base: float = 10000.0
    vocab_size: int = 2048
    variant: str = "backbone"
    adapter_rank: int = 32
    lora_rank: int = 8
    lora_alpha: float = 16.0
    query_mode: str = "sparse"
    position_scheme: str = "recalibrated"
    query_sees_graph_hub: bool = False
    norm_eps: float = 1e-6
    init_std: float = 0.02

    def __post_init__(self) -> None:
        if self.model_dim != self.heads * self.head_dim:
            raise ConfigError(f"model_dim {self.model_dim} != heads {self.heads} x head_dim {self.head_dim}")
        if self.head_dim % 2:
            raise ConfigError(f"rotary embeddings need an even head_dim, got {self.head_dim}")
        if not 0 < self.adapter_rank < self.model_dim:
            raise ConfigError(f"adapter_rank must satisfy 0 < r < d, got r={self.adapter_rank}, d={self.model_dim}")
        if self.lora_rank < 1:
            raise ConfigError("lora_rank must be positive")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.query_mode not in ("sparse", "full"):
            raise ConfigError(f"unknown query_mode {self.query_mode!r}")
        if self.position_scheme not in ("recalibrated", "sequential"):
            raise ConfigError(f"unknown position_scheme {self.position_scheme!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def replace(self, **changes) -> "ModelConfig":
        return ModelConfig.from_dict({**self.to_dict(), **changes})


# -- rotary embeddings -----------------------------------------------------


def rope_angles(positions: torch.Tensor, head_dim: int, base: float) -> tuple[torch.Tensor, torch.Tensor]:
    """cos/sin of ``pos * base^(-2k/head_dim)``, computed in float64."""
    if head_dim % 2:
        raise ConfigError(f"rotary embeddings need an even head_dim, got {head_dim}")
    k = torch.arange(0, head_dim, 2, dtype=torch.float64, device=positions.device)
    inv_freq = base ** (-k / head_dim)
    angles = positions.to(torch.float64)[..., None] * inv_freq
    return angles.cos(), angles.sin()


def rope_apply(
    x: torch.Tensor,
    positions: torch.Tensor | int,
    base: float = 10000.0,
    angles: tuple[torch.Tensor, torch.Tensor] | None = None,
) -> torch.Tensor:
    """Rotate coordinate pairs ``(2k, 2k+1)`` of ``x`` by the position angle.

    ``positions`` broadcasts against ``x.shape[:-1]``. ``angles`` takes a
    precomputed ``rope_angles`` result and skips recomputing it.
    """
    if angles is None:
        angles = rope_angles(torch.as_tensor(positions, device=x.device), x.shape[-1], base)
    cos, sin = angles[0].to(x.dtype), angles[1].to(x.dtype)
    even, odd = x[..., 0::2], x[..., 1::2]
    out = torch.stack((even * cos - odd * sin, even * sin + odd * cos), dim=-1)
    return out.flatten(-2)


# -- building blocks -------------------------------------------------------


class RMSNorm(nn.Module):
    def __init__(self, dim: int, eps: float = 1e-6):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * torch.rsqrt(x.pow(2).mean(-1, keepdim=True) + self.eps) * self.weight


class LoRADelta(nn.Module):
    """``scale * B(A x)`` with B zero-initialized."""

    def __init__(self, dim_in: int, dim_out: int, rank: int, alpha: float):
        super().__init__()
        self.down = nn.Parameter(torch.empty(rank, dim_in))
        self.up = nn.Parameter(torch.zeros(dim_out, rank))
        self.scale = alpha / rank

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x @ self.down.T) @ self.up.T * self.scale


class GatedAdapter(nn.Module):
    """``h + sigmoid(Wg_up Wg_down h) * (Wv_up Wv_down h)`` on selected positions."""

    def __init__(self, dim: int, rank: int):
        super().__init__()
        self.gate_down = nn.Parameter(torch.empty(rank, dim))
        self.gate_up = nn.Parameter(torch.empty(dim, rank))
        self.value_down = nn.Parameter(torch.empty(rank, dim))
        self.value_up = nn.Parameter(torch.zeros(dim, rank))

    def delta(self, h: torch.Tensor) -> torch.Tensor:
        gate = torch.sigmoid((h @ self.gate_down.T) @ self.gate_up.T)
        value = (h @ self.value_down.T) @ self.value_up.T
        return gate * value

    def forward(self, h: torch.Tensor, special: torch.Tensor) -> torch.Tensor:
        return adapter_apply(h, special, self)


def adapter_apply(h: torch.Tensor, special: torch.Tensor, adapter: GatedAdapter) -> torch.Tensor:
    """Add the adapter output at ``special`` positions; copy everything else.

    ``special`` is a boolean tensor shaped like ``h.shape[:-1]``. Non-special
    positions are selected from ``h`` itself, so they are bit-identical.
    """
    if not bool(special.any()):
        return h
    return torch.where(special[..., None], h + adapter.delta(h), h)


def masked_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, mask: torch.Tensor):
    """Softmax attention with a boolean visibility mask.

    Hidden entries get the most negative finite value before the row softmax,
    so their weight underflows to exactly zero. Returns ``(output, probs)``.
    """
    scores = (q @ k.transpose(-1, -2)) / math.sqrt(q.shape[-1])
    scores = scores.masked_fill(~mask, torch.finfo(scores.dtype).min)
    probs = torch.softmax(scores, dim=-1)
    return probs @ v, probs


def attention_bias(mask: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    """Additive form of a boolean mask: 0 where visible, the most negative finite value elsewhere."""
    zero = torch.zeros((), dtype=dtype)
    return torch.where(mask, zero, torch.finfo(dtype).min)


class Attention(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.model_dim
        self.heads, self.head_dim, self.rope_base = config.heads, config.head_dim, config.rope_base
        self.wq = nn.Linear(d, d, bias=False)
        self.wk = nn.Linear(d, d, bias=False)
        self.wv = nn.Linear(d, d, bias=False)
        self.wo = nn.Linear(d, d, bias=False)
        self.lora: nn.ModuleDict | None = None
        if config.variant == "nag-lora":
            self.lora = nn.ModuleDict(
                {name: LoRADelta(d, d, config.lora_rank, config.lora_alpha) for name in ("q", "k", "v")}
            )

    def project(self, x: torch.Tensor):
        q, k, v = self.wq(x), self.wk(x), self.wv(x)
        if self.lora is not None:
            q = q + self.lora["q"](x)
            k = k + self.lora["k"](x)
            v = v + self.lora["v"](x)
        return q, k, v

    def forward(self, x: torch.Tensor, mask: torch.Tensor, positions: torch.Tensor, angles=None) -> torch.Tensor:
        """``mask`` is boolean ``(B, S, S)`` or an ``attention_bias`` of it."""
        b, s, _ = x.shape
        q, k, v = self.project(x)

        def split(t):
            return t.view(b, s, self.heads, self.head_dim).transpose(1, 2)

        if angles is None:
            angles = rope_angles(positions[:, None, :], self.head_dim, self.rope_base)
        q = rope_apply(split(q), None, angles=angles)
        k = rope_apply(split(k), None, angles=angles)
        bias = attention_bias(mask, x.dtype) if mask.dtype == torch.bool else mask
        out = F.scaled_dot_product_attention(q, k, split(v), attn_mask=bias[:, None, :, :])
        return self.wo(out.transpose(1, 2).reshape(b, s, -1))


class FeedForward(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.up = nn.Linear(config.model_dim, config.ffn_dim, bias=False)
        self.down = nn.Linear(config.ffn_dim, config.model_dim, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.down(F.gelu(self.up(x)))


class Block(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.attn_norm = RMSNorm(config.model_dim, config.norm_eps)
        self.attn = Attention(config)
        self.ffn_norm = RMSNorm(config.model_dim, config.norm_eps)
        self.ffn = FeedForward(config)

    def forward(self, h: torch.Tensor, mask: torch.Tensor, positions: torch.Tensor, angles=None) -> torch.Tensor:
        h = h + self.attn(self.attn_norm(h), mask, positions, angles)
        return h + self.ffn(self.ffn_norm(h))


# -- the model -------------------------------------------------------------


class NAGModel(nn.Module):
    """Backbone plus the variant's extra parameters.

    ``forward`` takes token ids ``(B, S)``, a boolean mask ``(B, S, S)`` and
    integer positions ``(B, S)``, and returns logits ``(B, S, V)``.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        self.config = config
        d = config.model_dim
        self.embed = nn.Embedding(config.vocab_size, d)
        self.graph_tags = nn.Parameter(torch.empty(len(GRAPH_TAG_IDS), d))
        self.blocks = nn.ModuleList(Block(config) for _ in range(config.layers))
        self.final_norm = RMSNorm(d, config.norm_eps)
        self.head = nn.Linear(d, config.vocab_size, bias=False)
        self.adapters: nn.ModuleList | None = None
        if config.variant == "nag-zero":
            # one adapter after every layer but the last
            self.adapters = nn.ModuleList(GatedAdapter(d, config.adapter_rank) for _ in range(config.layers - 1))
        self.register_buffer("_tag_ids", torch.tensor(GRAPH_TAG_IDS, dtype=torch.long), persistent=False)
        self.reset_parameters(seed)
        self.set_trainable()

    # parameters

    def backbone_parameters(self):
        for name, p in self.named_parameters():
            if not self.is_extra(name):
                yield name, p

    @staticmethod
    def is_extra(name: str) -> bool:
        return name.startswith("adapters.") or ".lora." in name

    def reset_parameters(self, seed: int = 0) -> None:
        """Backbone weights depend on ``seed`` only, never on the variant."""
        gen = torch.Generator().manual_seed(seed)
        extra_gen = torch.Generator().manual_seed(seed + 0x9E3779B1)
        std = self.config.init_std
        with torch.no_grad():
            for name, p in self.named_parameters():
                if self.is_extra(name):
                    continue
                if name.endswith("norm.weight"):
                    p.fill_(1.0)
                else:
                    p.normal_(0.0, std, generator=gen)
            for name, p in self.named_parameters():
                if not self.is_extra(name):
                    continue
                if (".lora." in name and name.endswith(".up")) or name.endswith("value_up"):
                    p.zero_()
                elif ".lora." in name:
                    bound = 1.0 / math.sqrt(p.shape[1])
                    p.uniform_(-bound, bound, generator=extra_gen)
                elif name.endswith("value_down"):
                    p.normal_(0.0, 1.0 / math.sqrt(p.shape[1]), generator=extra_gen)
                else:
                    p.normal_(0.0, std, generator=extra_gen)

    def trainable_names(self) -> set[str]:
        names = {n for n, _ in self.named_parameters()}
        if self.config.variant == "backbone":
            return names
        return {n for n in names if self.is_extra(n) or n == "graph_tags"}

    def set_trainable(self) -> None:
        keep = self.trainable_names()
        for name, p in self.named_parameters():
            p.requires_grad_(name in keep)

    def load_backbone(self, state: dict[str, torch.Tensor]) -> None:
        own = dict(self.named_parameters())
        with torch.no_grad():
            for name, value in state.items():
                if name in own and not self.is_extra(name):
                    own[name].copy_(value)

    @classmethod
    def from_backbone(cls, backbone: "NAGModel", variant: str, seed: int = 0, **overrides) -> "NAGModel":
        config = backbone.config.replace(variant=variant, **overrides)
        model = cls(config, seed=seed).to(next(backbone.parameters()).dtype)
        model.load_backbone({n: p for n, p in backbone.named_parameters()})
        return model

    # forward

    def is_graph_tag(self, ids: torch.Tensor) -> torch.Tensor:
        return torch.isin(ids, self._tag_ids)

    def embed_tokens(self, ids: torch.Tensor) -> torch.Tensor:
        if ids.numel() and (int(ids.max()) >= self.config.vocab_size or int(ids.min()) < 0):
            raise IndexError(f"token id out of range for vocab_size={self.config.vocab_size}")
        h = self.embed(ids)
        tag = self.is_graph_tag(ids)
        if bool(tag.any()):
            rows = self.graph_tags[(ids - GRAPH_TAG_IDS[0]).clamp(0, len(GRAPH_TAG_IDS) - 1)]
            h = torch.where(tag[..., None], rows, h)
        return h

    def hidden_states(
        self,
        ids: torch.Tensor,
        mask: torch.Tensor,
        positions: torch.Tensor,
        inputs_embeds: torch.Tensor | None = None,
    ) -> torch.Tensor:
        h = self.embed_tokens(ids) if inputs_embeds is None else inputs_embeds
        special = self.is_graph_tag(ids)
        bias = attention_bias(mask, h.dtype)
        angles = rope_angles(positions[:, None, :], self.config.head_dim, self.config.rope_base)
        for layer, block in enumerate(self.blocks):
            h = block(h, bias, positions, angles)
            if self.adapters is not None and layer < len(self.adapters):
                h = adapter_apply(h, special, self.adapters[layer])
        return self.final_norm(h)

    def forward(self, ids, mask, positions, inputs_embeds=None) -> torch.Tensor:
        return self.head(self.hidden_states(ids, mask, positions, inputs_embeds))


def answer_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood of ``targets`` under ``logits`` (``(N, V)``, ``(N,)``)."""
    if targets.numel() == 0:
        raise ValueError("empty answer span: nothing to score")
    return F.cross_entropy(logits, targets)


def sequence_loss(model: NAGModel, batch) -> torch.Tensor:
    """Answer-only loss for a collated batch; logits are computed only where scored."""
    h = model.hidden_states(batch.ids, batch.mask, batch.positions)
    flat = h.reshape(-1, h.shape[-1])[batch.pred_index]
    return answer_loss(model.head(flat), batch.targets)
