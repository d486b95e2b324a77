"""Self-describing checkpoint: an ``.npz`` holding every weight tensor plus a
JSON metadata record. Loading refuses any shape mismatch."""
from __future__ import annotations

import json

import numpy as np
import torch

from .config import ModelConfig, TrainConfig
from .model import EditModel, build_model

_META = "__meta__"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: EditModel, train_cfg: TrainConfig, vocab_hash: str, **extra) -> None:
    meta = {"model_config": model.cfg.to_dict(), "train_config": train_cfg.to_dict(),
            "vocab_hash": vocab_hash, "dtype": str(next(model.parameters()).dtype), **extra}
    arrays = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    arrays[_META] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Return ``(model, meta)``."""
    with np.load(path) as data:
        if _META not in data.files:
            raise CheckpointError(f"{path}: missing metadata record")
        meta = json.loads(bytes(data[_META]).decode("utf-8"))
        tensors = {k: torch.from_numpy(data[k].copy()) for k in data.files if k != _META}
    cfg = ModelConfig.from_dict(meta["model_config"])
    dtype = getattr(torch, meta.get("dtype", "torch.float32").replace("torch.", ""))
    model = build_model(cfg, dtype=dtype)
    expected = model.state_dict()
    missing = set(expected) - set(tensors)
    unexpected = set(tensors) - set(expected)
    if missing or unexpected:
        raise CheckpointError(f"{path}: missing {sorted(missing)}, unexpected {sorted(unexpected)}")
    for k, v in expected.items():
        if tuple(tensors[k].shape) != tuple(v.shape):
            raise CheckpointError(f"{path}: {k} has shape {tuple(tensors[k].shape)}, "
                                  f"config implies {tuple(v.shape)}")
    model.load_state_dict(tensors)
    model.eval()
    meta["train_config"] = TrainConfig.from_dict(meta["train_config"])
    return model, meta
