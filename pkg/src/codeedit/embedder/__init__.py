"""Edit-embedding model: encoder, edit head, decoder modes, losses, training."""
from __future__ import annotations

import torch

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig
from .losses import (LossBreakdown, edit_embedding, loss_contrastive, loss_reconstruction,
                     loss_regularization, loss_total, quadruple_losses, sequence_nll)
from .model import EditHead, EditModel, LengthError, build_model, pad_batch
from .train import (DivergenceError, EncodedQuad, TrainResult, encode_quadruples,
                    evaluate_losses, read_history, train, write_history)


@torch.no_grad()
def encode_code(model: EditModel, ids) -> torch.Tensor:
    """Code embedding(s). Accepts one id list or a list of id lists."""
    model.eval()
    single = bool(ids) and isinstance(ids[0], int)
    batch = pad_batch([ids] if single else list(ids))
    e = model.encode(batch)
    return e[0] if single else e


@torch.no_grad()
def reconstruct_direct(model: EditModel, e: torch.Tensor, max_len: int = None) -> list:
    model.eval()
    single = e.dim() == 1
    out = model.greedy(e[None] if single else e, max_len)
    return out[0] if single else out


@torch.no_grad()
def apply_edit(model: EditModel, e: torch.Tensor, D: torch.Tensor, max_len: int = None) -> list:
    return reconstruct_direct(model, e + D, max_len)


__all__ = [
    "CheckpointError", "DivergenceError", "EditHead", "EditModel", "EncodedQuad", "LengthError",
    "LossBreakdown", "ModelConfig", "TrainConfig", "TrainResult", "apply_edit", "build_model",
    "edit_embedding", "encode_code", "encode_quadruples", "evaluate_losses", "load_checkpoint",
    "loss_contrastive", "loss_reconstruction", "loss_regularization", "loss_total", "pad_batch",
    "quadruple_losses", "read_history", "reconstruct_direct", "save_checkpoint", "sequence_nll",
    "train", "write_history",
]
