from __future__ import annotations

import torch
from helpers import shared_vocab, small_dataset, toy_config

from nag.decode import generate, greedy_ids
from nag.encode import SampleEncoder, collate
from nag.model import NAGModel
from nag.train import TrainConfig, train


def test_zero_budget_is_empty():
    model = NAGModel(toy_config())
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    assert generate(model, enc, small_dataset()["val"][:3], max_tokens=0) == ["", "", ""]


def test_overfit_one_sample():
    sample = next(s for s in small_dataset()["train"] if s.task.value == "connected-nodes")
    model = NAGModel(toy_config(layers=2, heads=2, head_dim=16, model_dim=32, ffn_dim=64), seed=0)
    enc = SampleEncoder.for_model(shared_vocab(), model.config, element_order="as-given")
    cfg = TrainConfig(steps=150, batch_size=1, lr=1e-2, warmup=10, log_every=50)
    train(model, [sample], enc, cfg)
    assert generate(model, enc, [sample], max_tokens=20) == [sample.answer]


def test_prefix_consistency():
    model = NAGModel(toy_config(init_std=0.3), seed=2)
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    samples = small_dataset()["val"][:4]
    prefixes = [enc.prefix(s, 7) for s in samples]
    outs = greedy_ids(model, enc, prefixes, max_tokens=5)
    for prefix, out in zip(prefixes, outs):
        if not out:
            continue
        full = enc.extend(prefix, out)
        b = collate([full])
        logits = model(b.ids, b.mask, b.positions)[0]
        start = len(prefix.ids)
        teacher = logits[start - 1 : start - 1 + len(out)].argmax(-1).tolist()
        assert teacher == out


def test_generate_preserves_input_order():
    model = NAGModel(toy_config(init_std=0.3), seed=3)
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    samples = small_dataset()["val"][:9]
    together = generate(model, enc, samples, max_tokens=3, batch_size=4)
    alone = [generate(model, enc, [s], max_tokens=3)[0] for s in samples]
    assert together == alone
    assert torch.get_num_threads() == 1
