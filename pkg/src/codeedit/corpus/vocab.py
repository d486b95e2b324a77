"""Lexer-token vocabulary."""
from __future__ import annotations

import hashlib
import json
import logging
from typing import Iterable

from ..minilang.lexer import tokenize

log = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<s>", "</s>", "<unk>")
DEFAULT_MAX_LEN = 256


class Vocab:
    def __init__(self, tokens: Iterable[str]):
        self.itos = list(RESERVED) + [t for t in tokens if t not in RESERVED]
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def digest(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()[:16]

    def to_json(self) -> dict:
        return {"tokens": self.itos[len(RESERVED):], "hash": self.digest()}

    @classmethod
    def from_json(cls, d: dict) -> "Vocab":
        v = cls(d["tokens"])
        if "hash" in d and d["hash"] != v.digest():
            raise ValueError("vocabulary hash mismatch")
        return v

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def lexemes(code: str) -> list[str]:
    return [t.lexeme for t in tokenize(code, lenient=True)]


def build_vocab(train_codes: Iterable[str]) -> Vocab:
    """Vocabulary of every lexeme seen in the training split, sorted."""
    seen = set()
    for code in train_codes:
        seen.update(lexemes(code))
    return Vocab(sorted(seen))


def encode(code: str, vocab: Vocab, max_len: int = DEFAULT_MAX_LEN) -> list[int]:
    ids = [vocab.stoi.get(t, UNK) for t in lexemes(code)]
    if len(ids) + 2 > max_len:
        log.warning("truncating %d tokens to max_len=%d", len(ids) + 2, max_len)
        ids = ids[:max(max_len - 2, 0)]
    return [BOS] + ids + [EOS]


def decode(ids: Iterable[int], vocab: Vocab) -> str:
    """Single-space layout; stops at the first end token and skips specials."""
    out = []
    for i in ids:
        i = int(i)
        if i == EOS:
            break
        if i in (PAD, BOS):
            continue
        out.append(vocab.itos[i] if 0 <= i < len(vocab) else RESERVED[UNK])
    return " ".join(out)
