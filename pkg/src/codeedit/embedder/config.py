from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class ModelConfig:
    vocab_size: int
    d: int = 64
    layers: int = 2
    heads: int = 4
    ff_dim: int = 256
    max_len: int = 256
    seed: int = 0

    def __post_init__(self):
        for f in ("vocab_size", "d", "layers", "heads", "ff_dim", "max_len"):
            if getattr(self, f) < 1:
                raise ValueError(f"{f} must be >= 1")
        if self.d % self.heads:
            raise ValueError(f"d={self.d} is not divisible by heads={self.heads}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class TrainConfig:
    lambda_c: float = 0.5
    lambda_rec: float = 2.0
    lambda_reg: float = 0.5
    margin: float = 1.0
    lr: float = 1e-4
    warmup: float = 0.10
    batch_size: int = 8
    accum_steps: int = 1
    epochs: int = 100
    weight_decay: float = 0.01
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    clip_norm: float = 1.0
    # also train the decoder on e(A1) + D_A -> A2 (and the B pair)
    rec_edit_transform: bool = True
    seed: int = 0

    def __post_init__(self):
        for f in ("lambda_c", "lambda_rec", "lambda_reg"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be >= 0")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.batch_size < 1 or self.accum_steps < 1 or self.batch_size % self.accum_steps:
            raise ValueError("batch_size must be a positive multiple of accum_steps")
        self.betas = tuple(self.betas)

    @property
    def micro_batch(self) -> int:
        return self.batch_size // self.accum_steps

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})
