"""Contrastive, reconstruction and regularization losses."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from ..corpus.vocab import PAD
from .config import TrainConfig


@dataclass
class LossBreakdown:
    l_contrastive: torch.Tensor
    l_reconstruction: torch.Tensor
    l_regularization: torch.Tensor
    l_total: torch.Tensor

    def as_floats(self) -> dict:
        return {"l_c": float(self.l_contrastive.detach()), "l_rec": float(self.l_reconstruction.detach()),
                "l_reg": float(self.l_regularization.detach()), "l_total": float(self.l_total.detach())}


def edit_embedding(edit_head, e1: torch.Tensor, e2: torch.Tensor) -> torch.Tensor:
    return edit_head(e1, e2)


def loss_contrastive(D_a: torch.Tensor, D_b: torch.Tensor, y: torch.Tensor, margin: float) -> torch.Tensor:
    """Per-example ``y d^2 + (1 - y) max(0, m - d)^2`` with d the L2 distance."""
    diff = D_a - D_b
    sq = (diff * diff).sum(-1)
    # sqrt has an infinite slope at 0; only the dissimilar branch needs d itself
    d = torch.sqrt(torch.where(sq > 0, sq, torch.ones_like(sq)))
    d = torch.where(sq > 0, d, torch.zeros_like(d))
    y = y.to(sq.dtype)
    return y * sq + (1 - y) * torch.clamp(margin - d, min=0) ** 2


def sequence_nll(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood per sequence over non-pad target positions.

    ``logits`` is (B, L, V) and ``targets`` (B, L); returns shape (B,).
    """
    logp = F.log_softmax(logits, -1)
    nll = -logp.gather(-1, targets[..., None]).squeeze(-1)
    keep = targets.ne(PAD).to(nll.dtype)
    return (nll * keep).sum(-1) / keep.sum(-1).clamp(min=1)


def loss_reconstruction(model, cond: torch.Tensor, target_ids: torch.Tensor) -> torch.Tensor:
    """Teacher-forced NLL of ``target_ids`` (with begin/end) given ``cond``; shape (B,)."""
    inputs = target_ids[:, :-1]
    gold = target_ids[:, 1:]
    return sequence_nll(model.decode_logits(cond, inputs), gold)


def loss_regularization(e1: torch.Tensor, D: torch.Tensor, e2: torch.Tensor) -> torch.Tensor:
    """Mean over coordinates of ``(e1 + D - e2)^2``; shape (B,)."""
    r = e1 + D - e2
    return (r * r).mean(-1)


def loss_total(l_c, l_rec, l_reg, cfg: TrainConfig) -> LossBreakdown:
    total = cfg.lambda_c * l_c + cfg.lambda_rec * l_rec + cfg.lambda_reg * l_reg
    return LossBreakdown(l_c, l_rec, l_reg, total)


def quadruple_losses(model, a1, a2, b1, b2, y, cfg: TrainConfig) -> LossBreakdown:
    """Batch-mean losses for padded id tensors of the four codes."""
    B = a1.shape[0]
    # one encoder pass over all four codes; pooling ignores the shared padding
    L = max(t.shape[1] for t in (a1, a2, b1, b2))
    stacked = torch.cat([F.pad(t, (0, L - t.shape[1]), value=PAD) for t in (a1, a2, b1, b2)])
    e = model.encode(stacked)
    ea1, ea2, eb1, eb2 = e[:B], e[B:2 * B], e[2 * B:3 * B], e[3 * B:]
    D_a = model.edit(ea1, ea2)
    D_b = model.edit(eb1, eb2)

    l_c = loss_contrastive(D_a, D_b, y, cfg.margin).mean()
    l_reg = 0.5 * (loss_regularization(ea1, D_a, ea2) + loss_regularization(eb1, D_b, eb2)).mean()

    conds = [ea1, ea2, eb1, eb2]
    targets = [a1, a2, b1, b2]
    if cfg.rec_edit_transform:
        conds += [ea1 + D_a, eb1 + D_b]
        targets += [a2, b2]
    Lt = max(t.shape[1] for t in targets)
    tgt = torch.cat([F.pad(t, (0, Lt - t.shape[1]), value=PAD) for t in targets])
    if cfg.lambda_rec > 0:
        l_rec = loss_reconstruction(model, torch.cat(conds), tgt).mean()
    else:
        # still reported, but an ablated term contributes no gradient
        with torch.no_grad():
            l_rec = loss_reconstruction(model, torch.cat(conds), tgt).mean()
    return loss_total(l_c, l_rec, l_reg, cfg)
