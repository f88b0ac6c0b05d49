from __future__ import annotations

import json

import numpy as np
import pytest
import torch
from helpers import shared_vocab, small_dataset, toy_config

from nag.checkpoint import CheckpointError, load_checkpoint, load_tensors, save_checkpoint, save_tensors
from nag.encode import SampleEncoder
from nag.model import ModelConfig, NAGModel
from nag.train import BatchSampler, TrainConfig, TrainingDiverged, train


def node_count_samples(n=64):
    return small_dataset(tasks=("node-count",), per_task=80)["train"][:n]


def test_smoke_loss_decreases_on_toy_config():
    samples = node_count_samples()
    model = NAGModel(ModelConfig(vocab_size=len(shared_vocab()), variant="backbone"), seed=0)
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    result = train(model, samples, enc, TrainConfig(steps=200, batch_size=8, lr=1e-3, warmup=20, log_every=50))
    assert len(result.losses) == 200
    assert np.mean(result.losses[-20:]) < result.initial_loss
    assert result.log[-1]["step"] == 199 and not model.training


def _short_run(variant="nag-lora", seed=0, steps=15):
    model = NAGModel(toy_config(variant=variant), seed=0)
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    res = train(model, node_count_samples(32), enc, TrainConfig(steps=steps, batch_size=4, lr=5e-3, warmup=2, seed=seed))
    return model, res


def test_same_seed_same_curve():
    _, a = _short_run(seed=4)
    _, b = _short_run(seed=4)
    _, c = _short_run(seed=5)
    assert a.losses == b.losses
    assert a.losses != c.losses


@pytest.mark.parametrize("variant", ["nag-zero", "nag-lora"])
def test_frozen_tensors_unchanged(variant):
    before = {n: p.detach().clone() for n, p in NAGModel(toy_config(variant=variant), seed=0).named_parameters()}
    model, _ = _short_run(variant)
    trainable = model.trainable_names()
    changed = set()
    for name, p in model.named_parameters():
        if name in trainable:
            if not torch.equal(p, before[name]):
                changed.add(name)
        else:
            assert p.detach().numpy().tobytes() == before[name].numpy().tobytes(), name
    assert changed


def test_non_finite_loss_aborts():
    model = NAGModel(toy_config(), seed=0)
    with torch.no_grad():
        model.head.weight.fill_(float("nan"))
    enc = SampleEncoder.for_model(shared_vocab(), model.config)
    with pytest.raises(TrainingDiverged, match="step 0"):
        train(model, node_count_samples(8), enc, TrainConfig(steps=3, batch_size=2))


def test_lr_schedule():
    cfg = TrainConfig(steps=100, lr=1.0, warmup=10, min_lr_ratio=0.1)
    assert cfg.lr_at(0) == pytest.approx(0.1)
    assert cfg.lr_at(9) == pytest.approx(1.0)
    assert cfg.lr_at(99) == pytest.approx(0.1, abs=1e-3)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_batch_sampler_is_keyed_on_step():
    lengths = list(range(100))
    s = BatchSampler(lengths, 8, seed=1)
    a, oa = s.draw(5)
    s.draw(6)
    b, ob = s.draw(5)
    assert np.array_equal(a, b) and np.array_equal(oa, ob)
    assert len(set(a.tolist())) == 8
    # one bucket holds similar lengths
    assert np.ptp(a) < 64


def test_checkpoint_round_trip(tmp_path):
    model, _ = _short_run("nag-zero")
    save_checkpoint(tmp_path / "ck", model, shared_vocab(), {"note": "x"})
    back, vocab, meta = load_checkpoint(tmp_path / "ck")
    assert back.config == model.config and vocab == shared_vocab() and meta == {"note": "x"}
    for (n, p), (m, q) in zip(model.named_parameters(), back.named_parameters()):
        assert n == m and torch.equal(p, q)
    manifest = json.loads((tmp_path / "ck" / "manifest.json").read_text())
    assert manifest["config"]["variant"] == "nag-zero"


def test_tensor_bundle_layout(tmp_path):
    t = torch.arange(6, dtype=torch.float32).reshape(2, 3)
    out = save_tensors(tmp_path / "b", {"w": t, "i": torch.tensor([1, -2])}, {})
    entry = next(e for e in json.loads((out / "manifest.json").read_text())["tensors"] if e["name"] == "w")
    raw = (out / entry["file"]).read_bytes()
    assert raw == np.arange(6, dtype="<f4").tobytes()
    _, back = load_tensors(out)
    assert torch.equal(back["w"], t) and back["i"].tolist() == [1, -2]
    (out / entry["file"]).write_bytes(raw[:-4])
    with pytest.raises(CheckpointError):
        load_tensors(out)
