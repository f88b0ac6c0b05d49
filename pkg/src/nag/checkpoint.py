"""Tensor-bundle checkpoints.

A bundle is a directory holding ``manifest.json`` (tensor names, shapes,
dtypes, model config, free-form metadata), ``vocab.json`` and one raw
little-endian, row-major ``.bin`` file per tensor.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from nag.flatten import Vocabulary
from nag.model import ModelConfig, NAGModel

FORMAT = "nag-tensor-bundle"
VERSION = 1
_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8", "int32": "<i4", "uint8": "|u1"}


class CheckpointError(ValueError):
    pass


def _file_name(name: str) -> str:
    return name.replace("/", "_") + ".bin"


def save_tensors(out_dir: Path | str, tensors: dict[str, torch.Tensor], manifest_extra: dict) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in sorted(tensors):
        t = tensors[name].detach().cpu()
        dtype = str(t.dtype).removeprefix("torch.")
        if dtype not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {dtype} for {name}")
        arr = np.ascontiguousarray(t.numpy()).astype(_DTYPES[dtype], copy=False)
        (out / _file_name(name)).write_bytes(arr.tobytes(order="C"))
        entries.append({"name": name, "shape": list(t.shape), "dtype": dtype, "file": _file_name(name)})
    manifest = {"format": FORMAT, "version": VERSION, **manifest_extra, "tensors": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_tensors(bundle: Path | str) -> tuple[dict, dict[str, torch.Tensor]]:
    root = Path(bundle)
    try:
        manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise CheckpointError(f"{root} has no manifest.json") from exc
    if manifest.get("format") != FORMAT:
        raise CheckpointError(f"{root} is not a {FORMAT}")
    tensors = {}
    for e in manifest["tensors"]:
        raw = (root / e["file"]).read_bytes()
        arr = np.frombuffer(raw, dtype=_DTYPES[e["dtype"]])
        expected = int(np.prod(e["shape"], dtype=np.int64))
        if arr.size != expected:
            raise CheckpointError(f"{e['file']}: {arr.size} values, manifest says {expected}")
        tensors[e["name"]] = torch.from_numpy(arr.reshape(e["shape"]).astype(arr.dtype.newbyteorder("="))).clone()
    return manifest, tensors


def save_checkpoint(out_dir: Path | str, model: NAGModel, vocab: Vocabulary, meta: dict | None = None) -> Path:
    tensors = dict(model.named_parameters())
    out = save_tensors(out_dir, tensors, {"config": model.config.to_dict(), "meta": meta or {}})
    (out / "vocab.json").write_text(vocab.to_json() + "\n", encoding="utf-8")
    return out


def load_checkpoint(bundle: Path | str) -> tuple[NAGModel, Vocabulary, dict]:
    """Rebuild the model, its vocabulary and the manifest metadata."""
    manifest, tensors = load_tensors(bundle)
    config = ModelConfig.from_dict(manifest["config"])
    dtypes = {t.dtype for t in tensors.values()}
    model = NAGModel(config)
    if dtypes:
        model = model.to(dtypes.pop())
    own = dict(model.named_parameters())
    if set(own) != set(tensors):
        missing, extra = sorted(set(own) - set(tensors)), sorted(set(tensors) - set(own))
        raise CheckpointError(f"tensor set mismatch: missing {missing}, unexpected {extra}")
    with torch.no_grad():
        for name, value in tensors.items():
            if tuple(own[name].shape) != tuple(value.shape):
                raise CheckpointError(f"{name}: shape {tuple(value.shape)} != {tuple(own[name].shape)}")
            own[name].copy_(value)
    vocab = Vocabulary.from_json((Path(bundle) / "vocab.json").read_text(encoding="utf-8"))
    model.eval()
    return model, vocab, manifest.get("meta", {})
