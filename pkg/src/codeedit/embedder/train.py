"""Training loop: AdamW with linear warmup, gradient accumulation and
best-on-validation model selection."""
from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import torch

from ..corpus.vocab import Vocab, encode
from .config import ModelConfig, TrainConfig
from .losses import LossBreakdown, quadruple_losses
from .model import EditModel, build_model, pad_batch

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "l_c", "l_rec", "l_reg", "l_total", "split")


class DivergenceError(RuntimeError):
    pass


@dataclass
class EncodedQuad:
    a1: list
    a2: list
    b1: list
    b2: list
    label: int


@dataclass
class TrainResult:
    model: EditModel
    history: list = field(default_factory=list)
    best_epoch: int = 0
    optimizer_steps: int = 0


def encode_quadruples(quads, vocab: Vocab, max_len: int) -> list[EncodedQuad]:
    cache: dict = {}

    def ids(sub):
        if sub.ref not in cache:
            cache[sub.ref] = encode(sub.code, vocab, max_len)
        return cache[sub.ref]

    return [EncodedQuad(ids(q.pair_a.first), ids(q.pair_a.second),
                        ids(q.pair_b.first), ids(q.pair_b.second), q.label) for q in quads]


def _batch_losses(model, items: list[EncodedQuad], cfg: TrainConfig) -> LossBreakdown:
    a1 = pad_batch([q.a1 for q in items])
    a2 = pad_batch([q.a2 for q in items])
    b1 = pad_batch([q.b1 for q in items])
    b2 = pad_batch([q.b2 for q in items])
    y = torch.tensor([q.label for q in items])
    return quadruple_losses(model, a1, a2, b1, b2, y, cfg)


@torch.no_grad()
def evaluate_losses(model, items: list[EncodedQuad], cfg: TrainConfig, chunk: int = 32) -> dict:
    """Example-weighted mean of each loss component over ``items``."""
    model.eval()
    sums = {"l_c": 0.0, "l_rec": 0.0, "l_reg": 0.0, "l_total": 0.0}
    for i in range(0, len(items), chunk):
        part = items[i:i + chunk]
        vals = _batch_losses(model, part, cfg).as_floats()
        for k in sums:
            sums[k] += vals[k] * len(part)
    return {k: v / max(len(items), 1) for k, v in sums.items()}


def _check_finite(values: dict, where: str) -> None:
    if not all(math.isfinite(v) for v in values.values()):
        raise DivergenceError(f"non-finite loss {where}: {values}")


def train(train_items: list[EncodedQuad], val_items: list[EncodedQuad], model_cfg: ModelConfig,
          cfg: TrainConfig, model: Optional[EditModel] = None) -> TrainResult:
    """Optimize the total loss; returns the parameters with the lowest validation loss.

    Epoch 0 in the history is the evaluation of the initial parameters.
    """
    if not train_items:
        raise ValueError("training split is empty")
    if not val_items:
        raise ValueError("validation split is empty")
    torch.manual_seed(cfg.seed)
    if model is None:
        model = build_model(model_cfg)
    gen = torch.Generator().manual_seed(cfg.seed)

    steps_per_epoch = math.ceil(len(train_items) / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    warmup_steps = max(1, math.ceil(cfg.warmup * total_steps)) if cfg.warmup > 0 else 0

    def lr_factor(step: int) -> float:
        if step < warmup_steps:
            return (step + 1) / warmup_steps
        return 1.0

    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, betas=cfg.betas, eps=cfg.eps,
                            weight_decay=cfg.weight_decay)
    sched = torch.optim.lr_scheduler.LambdaLR(opt, lr_factor)

    history = []
    for split, items in (("train", train_items), ("validation", val_items)):
        vals = evaluate_losses(model, items, cfg)
        _check_finite(vals, f"at initialization ({split})")
        history.append({"epoch": 0, **vals, "split": split})
    best_val = history[-1]["l_total"]
    best_state = copy.deepcopy(model.state_dict())
    best_epoch = 0
    steps = 0

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = torch.randperm(len(train_items), generator=gen).tolist()
        sums = {"l_c": 0.0, "l_rec": 0.0, "l_reg": 0.0, "l_total": 0.0}
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_items[i] for i in order[start:start + cfg.batch_size]]
            opt.zero_grad(set_to_none=True)
            for m in range(0, len(batch), cfg.micro_batch):
                micro = batch[m:m + cfg.micro_batch]
                losses = _batch_losses(model, micro, cfg)
                vals = losses.as_floats()
                _check_finite(vals, f"in epoch {epoch}")
                (losses.l_total * (len(micro) / len(batch))).backward()
                for k in sums:
                    sums[k] += vals[k] * len(micro)
            if cfg.clip_norm > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip_norm)
            opt.step()
            sched.step()
            steps += 1
        history.append({"epoch": epoch, **{k: v / len(train_items) for k, v in sums.items()},
                        "split": "train"})
        vals = evaluate_losses(model, val_items, cfg)
        _check_finite(vals, f"on validation after epoch {epoch}")
        history.append({"epoch": epoch, **vals, "split": "validation"})
        log.info("epoch %d train %.4f val %.4f", epoch, history[-2]["l_total"], vals["l_total"])
        if vals["l_total"] < best_val:
            best_val = vals["l_total"]
            best_state = copy.deepcopy(model.state_dict())
            best_epoch = epoch

    model.load_state_dict(best_state)
    model.eval()
    return TrainResult(model, history, best_epoch, steps)


def write_history(path, history: list, header_comment: Optional[str] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow([row["epoch"]] + [repr(float(row[k])) for k in ("l_c", "l_rec", "l_reg", "l_total")]
                       + [row["split"]])


def read_history(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    out = []
    for r in rows:
        out.append({"epoch": int(r["epoch"]), "l_c": float(r["l_c"]), "l_rec": float(r["l_rec"]),
                    "l_reg": float(r["l_reg"]), "l_total": float(r["l_total"]), "split": r["split"]})
    return out
