from __future__ import annotations

from dataclasses import asdict, dataclass

from ..model.groups import ALL_GROUPS, SPATIAL_PRETRAIN, TEMPORAL_FINETUNE

STAGES = ("spatial_pretrain", "temporal_finetune")
DEFAULT_LR = {"spatial_pretrain": 1e-4, "temporal_finetune": 1e-5}


@dataclass(frozen=True)
class TrainConfig:
    stage: str = "temporal_finetune"
    lr: float | None = None              # stage default when unset
    weight_decay: float = 0.01
    batch_size: int = 8
    max_steps: int = 500
    seed: int = 0
    freeze: str = "stage_default"        # 'stage_default' | 'none' (ablation)
    include_prompt_in_finetune: bool = False
    ema_decay: float | None = None
    grad_clip: float = 1.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    prompt_dropout: float = 0.1
    hdr_dropout: float = 0.1
    bg_dropout: float = 0.1
    log_interval: int = 1
    checkpoint_interval: int = 0         # 0 = final checkpoint only
    init_checkpoint: str | None = None   # stage-1 weights for the finetune

    @property
    def effective_lr(self) -> float:
        return self.lr if self.lr is not None else DEFAULT_LR[self.stage]

    def train_groups(self) -> tuple[str, ...]:
        if self.freeze == "none":
            return ALL_GROUPS
        if self.stage == "spatial_pretrain":
            return SPATIAL_PRETRAIN
        groups = TEMPORAL_FINETUNE
        if self.include_prompt_in_finetune:
            groups = groups + ("prompt_path",)
        return groups

    def validate(self) -> "TrainConfig":
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.effective_lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")
        if self.batch_size < 1 or self.max_steps < 1:
            raise ValueError("batch size and max steps must be positive")
        if self.freeze not in ("stage_default", "none"):
            raise ValueError("freeze must be 'stage_default' or 'none'")
        for r in (self.prompt_dropout, self.hdr_dropout, self.bg_dropout):
            if not 0.0 <= r <= 1.0:
                raise ValueError("dropout rates must lie in [0, 1]")
        if self.ema_decay is not None and not 0.0 < self.ema_decay < 1.0:
            raise ValueError("ema decay must lie in (0, 1)")
        if self.log_interval < 1:
            raise ValueError("log interval must be >= 1")
        # finetune keeps the spatial backbone frozen unless explicitly ablated
        if self.stage == "temporal_finetune" and self.freeze == "stage_default":
            assert "spatial" not in self.train_groups()
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d).validate()
