"""Bundles the latent codec, the denoiser, and the noise schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .diffusion.schedule import NoiseSchedule, ScheduleConfig, schedule_from_config
from .model.config import ModelConfig
from .model.latent import IdentityCodec, StridedCodec, make_codec
from .model.unet import RelightModel


@dataclass
class RelightPipeline:
    cfg: ModelConfig
    schedule_cfg: ScheduleConfig
    codec: IdentityCodec | StridedCodec
    model: RelightModel
    schedule: NoiseSchedule

    @classmethod
    def create(cls, cfg: ModelConfig | None = None,
               schedule_cfg: ScheduleConfig | None = None,
               seed: int = 0) -> "RelightPipeline":
        cfg = (cfg or ModelConfig()).validate()
        schedule_cfg = schedule_cfg or ScheduleConfig(timesteps=cfg.max_timestep)
        if schedule_cfg.timesteps != cfg.max_timestep:
            raise ValueError("schedule timesteps must equal the model's max_timestep")
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            model = RelightModel(cfg)
            codec = make_codec(cfg)
        return cls(cfg=cfg, schedule_cfg=schedule_cfg, codec=codec, model=model,
                   schedule=schedule_from_config(schedule_cfg))

    @property
    def latent_channels(self) -> int:
        return self.cfg.latent_channels

    def latent_size(self, height: int, width: int) -> tuple[int, int]:
        s = self.codec.spatial_factor
        return height // s, width // s

    def eval_mode(self) -> "RelightPipeline":
        self.model.eval()
        if isinstance(self.codec, StridedCodec):
            self.codec.eval()
        return self
