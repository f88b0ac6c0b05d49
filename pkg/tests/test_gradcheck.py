from __future__ import annotations

import torch
from helpers import batch_for, randomize_extras, small_dataset, toy_config
from oracles import finite_difference_errors

from nag.model import NAGModel, sequence_loss
from nag.train import TrainConfig, make_optimizer


def _model(variant):
    model = NAGModel(toy_config(variant=variant, init_std=0.3), seed=0).double()
    if variant != "backbone":
        randomize_extras(model)
    return model


def _check(model, names):
    batch = batch_for(small_dataset()["train"][:3], model.config)
    rows = finite_difference_errors(model, batch, names, sequence_loss)
    assert {r[0] for r in rows} == set(names)
    worst = max(rows, key=lambda r: r[-1])
    assert worst[-1] < 1e-3, worst


def test_gradcheck_backbone():
    model = _model("backbone")
    _check(model, ["embed.weight", "blocks.0.attn.wq.weight", "blocks.1.ffn.down.weight", "head.weight"])


def test_gradcheck_nag_zero():
    model = _model("nag-zero")
    names = [n for n, p in model.named_parameters() if p.requires_grad]
    assert "graph_tags" in names
    _check(model, names)


def test_gradcheck_nag_lora():
    model = _model("nag-lora")
    names = [n for n, p in model.named_parameters() if p.requires_grad]
    assert any(".lora." in n for n in names)
    _check(model, names)


def test_frozen_parameters_receive_nothing():
    for variant in ("nag-zero", "nag-lora"):
        model = _model(variant)
        batch = batch_for(small_dataset()["train"][:3], model.config)
        sequence_loss(model, batch).backward()
        for name, p in model.named_parameters():
            if not p.requires_grad:
                assert p.grad is None, name
        opt = make_optimizer(model, TrainConfig())
        covered = {id(p) for g in opt.param_groups for p in g["params"]}
        assert covered == {id(p) for p in model.parameters() if p.requires_grad}
