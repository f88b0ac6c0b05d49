"""Read a hub's masked attention as message passing and check the identity numerically.

For a hub row ``i`` with visible set ``N(i)``, one attention head over
adapter-transformed states computes

    out_i = sum_{j in N(i)} alpha_ij * phi(h_j),   phi(h) = W_V (h + Adapter(h))

where ``alpha`` is the masked softmax row. :func:`message_function_check`
evaluates the left side through the model's batched attention code and the
right side term by term, and reports how far apart they are.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from nag.model import GatedAdapter, masked_attention, rope_apply


@dataclass(frozen=True)
class HeadWeights:
    """One attention head: ``wq``, ``wk``, ``wv`` are ``(head_dim, model_dim)``."""

    wq: torch.Tensor
    wk: torch.Tensor
    wv: torch.Tensor

    @classmethod
    def random(cls, model_dim: int, head_dim: int, generator: torch.Generator | None = None, dtype=torch.float64):
        scale = model_dim**-0.5

        def draw():
            return torch.randn(head_dim, model_dim, generator=generator, dtype=dtype) * scale

        return cls(draw(), draw(), draw())


@dataclass(frozen=True)
class MessageReport:
    max_abs_deviation: float
    attention_output: torch.Tensor
    aggregated: torch.Tensor
    alpha: torch.Tensor
    visible: tuple[int, ...]


def phi(h: torch.Tensor, wv: torch.Tensor, adapter: GatedAdapter | None) -> torch.Tensor:
    """Effective message of one neighbour state."""
    x = h if adapter is None else h + adapter.delta(h)
    return wv @ x


@torch.no_grad()
def message_function_check(
    weights: HeadWeights,
    adapter: GatedAdapter | None,
    hub_states: torch.Tensor,
    neighbor_mask_row: torch.Tensor,
    row: int = 0,
    positions: torch.Tensor | None = None,
    rope_base: float = 10000.0,
) -> MessageReport:
    """Compare batched attention at ``hub_states[row]`` with the explicit sum.

    ``hub_states`` is ``(n, d)``; ``neighbor_mask_row`` is a boolean
    ``(n,)`` visibility row for ``row``. All states are treated as graph-tag
    positions, so the adapter (if any) acts on every one of them. Positions
    default to zero (all hubs share one id under recalibrated indexing).
    """
    n = hub_states.shape[0]
    mask_row = torch.as_tensor(neighbor_mask_row, dtype=torch.bool)
    if mask_row.shape != (n,) or not bool(mask_row.any()):
        raise ValueError("neighbor_mask_row must be a length-n boolean row with at least one visible entry")
    if positions is None:
        positions = torch.zeros(n, dtype=torch.long)

    h_tilde = hub_states if adapter is None else hub_states + adapter.delta(hub_states)
    q = rope_apply(h_tilde @ weights.wq.T, positions, rope_base)
    k = rope_apply(h_tilde @ weights.wk.T, positions, rope_base)
    v = h_tilde @ weights.wv.T
    mask = torch.eye(n, dtype=torch.bool)  # other rows are irrelevant; keep them non-empty
    mask[row] = mask_row
    out, probs = masked_attention(q, k, v, mask)
    alpha = probs[row]

    visible = tuple(int(j) for j in torch.nonzero(mask_row).flatten())
    aggregated = torch.zeros_like(out[row])
    for j in visible:
        aggregated = aggregated + alpha[j] * phi(hub_states[j], weights.wv, adapter)
    dev = float((out[row] - aggregated).abs().max())
    return MessageReport(dev, out[row], aggregated, alpha, visible)
