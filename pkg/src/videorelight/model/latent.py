"""Video <-> latent codecs.

Identity mode (default) is the affine map 2v-1 with spatial shape preserved;
its inverse is computed through float64 so the round trip is exact up to the
single float32 rounding the forward map itself may introduce. Strided mode is
a small learned 4x-downsampling autoencoder, pretrained separately and frozen
during diffusion training.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange


def _video_to_tensor(video: np.ndarray) -> torch.Tensor:
    video = np.asarray(video, dtype=np.float32)
    if video.ndim != 4 or video.shape[-1] != 3:
        raise ValueError(f"video must be (f, h, w, 3), got {video.shape}")
    return torch.from_numpy(rearrange(video, "f h w c -> c f h w").copy())


def _tensor_to_video(latent: torch.Tensor) -> np.ndarray:
    arr = latent.detach().cpu().numpy()
    return rearrange(arr, "c f h w -> f h w c")


class IdentityCodec:
    channels = 3
    spatial_factor = 1

    def encode(self, video: np.ndarray) -> torch.Tensor:
        x = _video_to_tensor(video)
        return x * 2.0 - 1.0

    def decode(self, latent: torch.Tensor) -> np.ndarray:
        v = (latent.detach().double() + 1.0) * 0.5
        v = v.clamp(0.0, 1.0).float()
        return np.clip(_tensor_to_video(v), 0.0, 1.0)

    def parameters(self):
        return []

    def state_dict(self):
        return {}


class StridedCodec(nn.Module):
    """Learned 4x spatial compressor with a matched decoder."""

    spatial_factor = 4

    def __init__(self, channels: int = 16):
        super().__init__()
        self.channels = channels
        self.enc = nn.Sequential(
            nn.Conv2d(3, 32, 3, stride=2, padding=1), nn.SiLU(),
            nn.Conv2d(32, 64, 3, stride=2, padding=1), nn.SiLU(),
            nn.Conv2d(64, channels, 3, padding=1),
        )
        self.dec = nn.Sequential(
            nn.Conv2d(channels, 64, 3, padding=1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(64, 32, 3, padding=1), nn.SiLU(),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(32, 3, 3, padding=1),
        )

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        return self.dec(self.enc(frames))

    @torch.no_grad()
    def encode(self, video: np.ndarray) -> torch.Tensor:
        x = _video_to_tensor(video)  # (3, f, h, w)
        frames = rearrange(x, "c f h w -> f c h w")
        z = self.enc(frames)
        return rearrange(z, "f c h w -> c f h w")

    @torch.no_grad()
    def decode(self, latent: torch.Tensor) -> np.ndarray:
        frames = rearrange(latent, "c f h w -> f c h w")
        v = self.dec(frames).clamp(0.0, 1.0)
        return _tensor_to_video(rearrange(v, "f c h w -> c f h w"))


def make_codec(cfg) -> IdentityCodec | StridedCodec:
    if cfg.latent_mode == "identity":
        return IdentityCodec()
    return StridedCodec(cfg.strided_channels)


def pretrain_strided_codec(codec: StridedCodec, frames: np.ndarray,
                           steps: int = 600, batch: int = 32,
                           lr: float = 2e-3, seed: int = 0) -> float:
    """Adam reconstruction pretrain on a stack of (N, h, w, 3) frames;
    returns the final whole-corpus reconstruction MSE."""
    data = torch.from_numpy(
        rearrange(np.asarray(frames, np.float32), "n h w c -> n c h w").copy())
    g = torch.Generator().manual_seed(seed)
    opt = torch.optim.Adam(codec.parameters(), lr=lr)
    for step in range(steps):
        idx = torch.randint(0, data.shape[0], (batch,), generator=g)
        x = data[idx]
        recon = codec(x)
        loss = F.mse_loss(recon, x)
        opt.zero_grad()
        loss.backward()
        opt.step()
    with torch.no_grad():
        total, count = 0.0, 0
        for start in range(0, data.shape[0], 64):
            x = data[start : start + 64]
            total += F.mse_loss(codec(x), x, reduction="sum").item()
            count += x.numel()
    return total / count
