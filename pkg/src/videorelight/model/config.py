from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs for the frame-inflated denoising U-Net."""

    base_channels: int = 16
    channel_mults: tuple[int, ...] = (1, 2, 3)
    num_res_blocks: int = 1
    attention_levels: tuple[int, ...] = (1, 2)   # levels with spatial+temporal attention
    spatial_heads: int = 2
    temporal_heads: int = 2
    d_ctx: int = 48                              # width shared by prompt and HDR tokens
    latent_mode: str = "identity"                # 'identity' | 'strided'
    strided_channels: int = 16
    frames: int = 8
    max_frames: int = 32
    hdr_tokens_per_frame: int = 2
    hdr_hidden: int = 192
    vocab_size: int = 32
    max_prompt_len: int = 8
    max_timestep: int = 1000
    norm_groups: int = 8
    zero_init_out: bool = True                   # final conv starts at zero

    def __post_init__(self):
        object.__setattr__(self, "channel_mults", tuple(self.channel_mults))
        object.__setattr__(self, "attention_levels", tuple(self.attention_levels))

    @property
    def latent_channels(self) -> int:
        return 3 if self.latent_mode == "identity" else self.strided_channels

    @property
    def levels(self) -> int:
        return len(self.channel_mults)

    def validate(self) -> "ModelConfig":
        if self.levels < 2:
            raise ValueError("need at least 2 levels")
        positive = (self.base_channels, self.num_res_blocks, self.d_ctx,
                    self.frames, self.max_frames, self.hdr_tokens_per_frame,
                    self.hdr_hidden, self.vocab_size, self.max_prompt_len,
                    self.max_timestep, self.spatial_heads, self.temporal_heads,
                    self.strided_channels)
        if any(v <= 0 for v in positive):
            raise ValueError("all dimensions must be positive")
        if any(m <= 0 for m in self.channel_mults):
            raise ValueError("channel multipliers must be positive")
        if self.latent_mode not in ("identity", "strided"):
            raise ValueError(f"unknown latent mode {self.latent_mode!r}")
        for lvl in self.attention_levels:
            if not 0 <= lvl < self.levels:
                raise ValueError(f"attention level {lvl} out of range")
            ch = self.base_channels * self.channel_mults[lvl]
            if ch % self.spatial_heads or ch % self.temporal_heads:
                raise ValueError(f"heads must divide channels at level {lvl} ({ch})")
        if self.frames > self.max_frames:
            raise ValueError("frames exceeds max_frames")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_mults"] = list(self.channel_mults)
        d["attention_levels"] = list(self.attention_levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "channel_mults" in d:
            d["channel_mults"] = tuple(d["channel_mults"])
        if "attention_levels" in d:
            d["attention_levels"] = tuple(d["attention_levels"])
        return cls(**d).validate()
