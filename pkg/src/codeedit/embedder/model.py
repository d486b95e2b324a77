"""Small transformer encoder-decoder with an edit head.

Code embeddings are the mean of the final encoder states over non-pad
positions. The decoder sees its conditioning vector as a one-element
cross-attention memory, so ``e`` and ``e + D`` are interchangeable inputs.
"""
from __future__ import annotations

import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from ..corpus.vocab import BOS, EOS, PAD
from .config import ModelConfig


class LengthError(ValueError):
    pass


class Attention(nn.Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)

    def forward(self, x, memory, key_pad: Optional[torch.Tensor] = None, causal: bool = False):
        B, Lq, d = x.shape
        Lk = memory.shape[1]
        h = self.heads
        dh = d // h
        q = self.q(x).view(B, Lq, h, dh).transpose(1, 2)
        k = self.k(memory).view(B, Lk, h, dh).transpose(1, 2)
        v = self.v(memory).view(B, Lk, h, dh).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(dh)
        if key_pad is not None:
            scores = scores.masked_fill(key_pad[:, None, None, :], float("-inf"))
        if causal:
            future = torch.ones(Lq, Lk, dtype=torch.bool, device=x.device).triu(1)
            scores = scores.masked_fill(future, float("-inf"))
        att = scores.softmax(-1)
        out = (att @ v).transpose(1, 2).reshape(B, Lq, d)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, d: int, ff: int):
        super().__init__()
        self.up = nn.Linear(d, ff)
        self.down = nn.Linear(ff, d)

    def forward(self, x):
        # GELU keeps the loss smooth for finite-difference checks
        return self.down(F.gelu(self.up(x)))


class EncoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ff: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.att = Attention(d, heads)
        self.ln2 = nn.LayerNorm(d)
        self.ff = FeedForward(d, ff)

    def forward(self, x, pad):
        h = self.ln1(x)
        x = x + self.att(h, h, key_pad=pad)
        return x + self.ff(self.ln2(x))


class DecoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ff: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d)
        self.self_att = Attention(d, heads)
        self.ln2 = nn.LayerNorm(d)
        self.cross_att = Attention(d, heads)
        self.ln3 = nn.LayerNorm(d)
        self.ff = FeedForward(d, ff)

    def forward(self, x, memory, pad):
        h = self.ln1(x)
        x = x + self.self_att(h, h, key_pad=pad, causal=True)
        x = x + self.cross_att(self.ln2(x), memory)
        return x + self.ff(self.ln3(x))


class EditHead(nn.Module):
    """D = W2 tanh(W1 (e2 - e1) + b1) + b2."""

    def __init__(self, d: int):
        super().__init__()
        bound = 1.0 / math.sqrt(d)
        self.W1 = nn.Parameter(torch.empty(d, d).uniform_(-bound, bound))
        self.b1 = nn.Parameter(torch.empty(d).uniform_(-bound, bound))
        self.W2 = nn.Parameter(torch.empty(d, d).uniform_(-bound, bound))
        self.b2 = nn.Parameter(torch.empty(d).uniform_(-bound, bound))

    def forward(self, e1, e2):
        return torch.tanh((e2 - e1) @ self.W1.T + self.b1) @ self.W2.T + self.b2


class EditModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d
        self.tok = nn.Embedding(cfg.vocab_size, d)
        self.pos = nn.Embedding(cfg.max_len, d)
        self.encoder = nn.ModuleList(EncoderLayer(d, cfg.heads, cfg.ff_dim) for _ in range(cfg.layers))
        self.enc_ln = nn.LayerNorm(d)
        self.decoder = nn.ModuleList(DecoderLayer(d, cfg.heads, cfg.ff_dim) for _ in range(cfg.layers))
        self.dec_ln = nn.LayerNorm(d)
        self.out = nn.Linear(d, cfg.vocab_size)
        self.edit_head = EditHead(d)
        nn.init.normal_(self.tok.weight, std=0.02 * math.sqrt(d))
        nn.init.normal_(self.pos.weight, std=0.02 * math.sqrt(d))

    def _embed(self, ids):
        L = ids.shape[1]
        if L > self.cfg.max_len:
            raise LengthError(f"sequence of length {L} exceeds max_len={self.cfg.max_len}")
        positions = torch.arange(L, device=ids.device)
        return self.tok(ids) + self.pos(positions)[None]

    def encode(self, ids: torch.Tensor) -> torch.Tensor:
        """Mean-pooled final encoder states over non-pad positions, shape (B, d)."""
        pad = ids.eq(PAD)
        x = self._embed(ids)
        for layer in self.encoder:
            x = layer(x, pad)
        x = self.enc_ln(x)
        keep = (~pad).to(x.dtype)[..., None]
        return (x * keep).sum(1) / keep.sum(1)

    def decode_logits(self, cond: torch.Tensor, inputs: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits (B, L, V) given conditioning vectors (B, d)."""
        pad = inputs.eq(PAD)
        memory = cond[:, None, :]
        x = self._embed(inputs)
        for layer in self.decoder:
            x = layer(x, memory, pad)
        return self.out(self.dec_ln(x))

    def edit(self, e1, e2):
        return self.edit_head(e1, e2)

    @torch.no_grad()
    def greedy(self, cond: torch.Tensor, max_len: Optional[int] = None) -> list[list[int]]:
        """Greedy decoding from the begin token; returns ids without specials."""
        max_len = min(max_len or self.cfg.max_len, self.cfg.max_len)
        B = cond.shape[0]
        seq = torch.full((B, 1), BOS, dtype=torch.long, device=cond.device)
        done = torch.zeros(B, dtype=torch.bool, device=cond.device)
        for _ in range(max_len - 1):
            logits = self.decode_logits(cond, seq)[:, -1]
            nxt = logits.argmax(-1)
            nxt = torch.where(done, torch.full_like(nxt, PAD), nxt)
            seq = torch.cat([seq, nxt[:, None]], 1)
            done |= nxt.eq(EOS)
            if bool(done.all()):
                break
        out = []
        for row in seq[:, 1:].tolist():
            ids = []
            for t in row:
                if t in (EOS, PAD):
                    break
                ids.append(t)
            out.append(ids)
        return out


def build_model(cfg: ModelConfig, dtype=torch.float32) -> EditModel:
    torch.manual_seed(cfg.seed)
    return EditModel(cfg).to(dtype)


def pad_batch(seqs: list[list[int]], device=None) -> torch.Tensor:
    L = max(len(s) for s in seqs)
    out = torch.full((len(seqs), L), PAD, dtype=torch.long, device=device)
    for i, s in enumerate(seqs):
        out[i, :len(s)] = torch.tensor(s, dtype=torch.long)
    return out
