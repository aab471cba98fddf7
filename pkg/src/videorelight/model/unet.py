"""The frame-inflated denoising U-Net.

Spatial convolutions and attention run per frame with shared weights (frames
folded into the batch); temporal attention follows each spatial attention
block. The denoiser input is the channel concatenation (z_t, z_rel, z_bg) in
that fixed order, and every spatial transformer cross-attends to the
per-frame context [prompt tokens || that frame's lighting tokens].
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange, repeat

from .config import ModelConfig
from .hdr import HdrEncoder
from .layers import (
    Downsample,
    ResBlock,
    SpatialTransformer,
    Upsample,
    count_conv,
    timestep_embedding,
)
from .prompt import PromptEmbedder
from .temporal import TemporalAttention


@dataclass
class ConditionBundle:
    """Encoded conditions consumed by the denoiser: input-video and
    background latents, prompt embedding rows, per-frame lighting tokens."""

    z_rel: torch.Tensor       # (B, C, F, H, W)
    z_bg: torch.Tensor        # (B, C, F, H, W)
    y: torch.Tensor           # (B, P, d_ctx)
    hdr_tokens: torch.Tensor  # (B, F, k, d_ctx)
    y_mask: torch.Tensor | None = None  # (B, P) bool; None = all rows real

    def __post_init__(self):
        if self.z_rel.ndim == 4:  # allow unbatched fields
            self.z_rel = self.z_rel[None]
        if self.z_bg.ndim == 4:
            self.z_bg = self.z_bg[None]
        if self.y.ndim == 2:
            self.y = self.y[None]
        if self.hdr_tokens.ndim == 3:
            self.hdr_tokens = self.hdr_tokens[None]
        if self.z_rel.shape != self.z_bg.shape:
            raise ValueError(
                f"z_rel {tuple(self.z_rel.shape)} and z_bg {tuple(self.z_bg.shape)} disagree")
        f = self.z_rel.shape[2]
        if self.hdr_tokens.shape[1] != f:
            raise ValueError(
                f"hdr_tokens carries {self.hdr_tokens.shape[1]} frames, latents have {f}")
        if self.y.shape[-1] != self.hdr_tokens.shape[-1]:
            raise ValueError("prompt and lighting tokens must share d_ctx")

    @property
    def frames(self) -> int:
        return self.z_rel.shape[2]


@dataclass
class FrameContext:
    """Per-frame cross-attention context: shared prompt rows plus that
    frame's lighting tokens."""

    txt: torch.Tensor        # (B, P, d)
    txt_mask: torch.Tensor   # (B, P) bool
    hdr: torch.Tensor        # (B, F, k, d)

    def per_frame(self) -> torch.Tensor:
        """(B, F, P+k, d): prompt rows repeated per frame, lighting rows
        varying per frame. The concatenation order (prompt first) is part of
        the contract."""
        b, f = self.hdr.shape[:2]
        txt = repeat(self.txt, "b p d -> b f p d", f=f)
        return torch.cat([txt, self.hdr], dim=2)

    @property
    def frames(self) -> int:
        return self.hdr.shape[1]


def build_context(y: torch.Tensor, hdr_tokens: torch.Tensor, frames: int,
                  y_mask: torch.Tensor | None = None) -> FrameContext:
    if y.ndim == 2:
        y = y[None]
    if hdr_tokens.ndim == 3:
        hdr_tokens = hdr_tokens[None]
    if hdr_tokens.shape[1] != frames:
        raise ValueError(f"lighting tokens cover {hdr_tokens.shape[1]} frames, need {frames}")
    if y.shape[-1] != hdr_tokens.shape[-1]:
        raise ValueError("prompt embedding width differs from lighting token width")
    if y_mask is None:
        y_mask = torch.ones(y.shape[:2], dtype=torch.bool, device=y.device)
    elif y_mask.ndim == 1:
        y_mask = y_mask[None]
    return FrameContext(txt=y, txt_mask=y_mask, hdr=hdr_tokens)


def assemble_input(z_t: torch.Tensor, bundle: ConditionBundle) -> torch.Tensor:
    """Channel concatenation (z_t, z_rel, z_bg); output has 3x the latent
    channels."""
    if z_t.ndim == 4:
        z_t = z_t[None]
    if z_t.shape != bundle.z_rel.shape:
        raise ValueError(
            f"z_t shape {tuple(z_t.shape)} != conditioning latents {tuple(bundle.z_rel.shape)}")
    return torch.cat([z_t, bundle.z_rel, bundle.z_bg], dim=1)


class UNetBlock(nn.Module):
    """Residual block, optionally followed by spatial and temporal attention."""

    def __init__(self, in_ch: int, out_ch: int, time_dim: int, cfg: ModelConfig,
                 with_attn: bool):
        super().__init__()
        self.res = ResBlock(in_ch, out_ch, time_dim, cfg.norm_groups)
        if with_attn:
            self.spatial = SpatialTransformer(out_ch, cfg.spatial_heads,
                                              cfg.d_ctx, cfg.norm_groups)
            self.temporal = TemporalAttention(out_ch, cfg.temporal_heads,
                                              cfg.max_frames)
        else:
            self.spatial = None
            self.temporal = None

    def forward(self, h, temb, ctx_txt, txt_mask, ctx_hdr, batch, frames,
                temporal_bypass=False, counter=None):
        h = self.res(h, temb, counter=counter)
        if self.spatial is not None:
            h = self.spatial(h, ctx_txt, txt_mask, ctx_hdr, counter=counter)
            if not temporal_bypass:
                h5 = rearrange(h, "(b f) c x y -> b c f x y", b=batch, f=frames)
                h5 = self.temporal(h5, counter=counter)
                h = rearrange(h5, "b c f x y -> (b f) c x y")
        return h


class VideoUNet(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        chs = [cfg.base_channels * m for m in cfg.channel_mults]
        time_dim = cfg.base_channels * 4
        self.time_dim = time_dim
        self.time_mlp = nn.Sequential(
            nn.Linear(cfg.base_channels, time_dim), nn.SiLU(),
            nn.Linear(time_dim, time_dim),
        )
        in_ch = 3 * cfg.latent_channels
        self.conv_in = nn.Conv2d(in_ch, chs[0], 3, padding=1)

        self.down_blocks = nn.ModuleList()
        self.down_levels: list[int] = []
        self.downsamples = nn.ModuleList()
        skip_chs = [chs[0]]
        ch = chs[0]
        for lvl, out_ch in enumerate(chs):
            for _ in range(cfg.num_res_blocks):
                self.down_blocks.append(
                    UNetBlock(ch, out_ch, time_dim, cfg,
                              with_attn=lvl in cfg.attention_levels))
                self.down_levels.append(lvl)
                ch = out_ch
                skip_chs.append(ch)
            if lvl != len(chs) - 1:
                self.downsamples.append(Downsample(ch))
                skip_chs.append(ch)

        self.mid_block1 = ResBlock(ch, ch, time_dim, cfg.norm_groups)
        self.mid_attn = UNetBlock(ch, ch, time_dim, cfg, with_attn=True)
        self.mid_block2 = ResBlock(ch, ch, time_dim, cfg.norm_groups)

        self.up_blocks = nn.ModuleList()
        self.up_levels: list[int] = []
        self.upsamples = nn.ModuleList()
        for lvl in reversed(range(len(chs))):
            out_ch = chs[lvl]
            for _ in range(cfg.num_res_blocks + 1):
                self.up_blocks.append(
                    UNetBlock(ch + skip_chs.pop(), out_ch, time_dim, cfg,
                              with_attn=lvl in cfg.attention_levels))
                self.up_levels.append(lvl)
                ch = out_ch
            if lvl != 0:
                self.upsamples.append(Upsample(ch))

        from .layers import norm_groups_for

        self.norm_out = nn.GroupNorm(norm_groups_for(ch, cfg.norm_groups), ch)
        self.conv_out = nn.Conv2d(ch, cfg.latent_channels, 3, padding=1)
        if cfg.zero_init_out:
            nn.init.zeros_(self.conv_out.weight)
            nn.init.zeros_(self.conv_out.bias)

    def forward(self, x: torch.Tensor, t: torch.Tensor, ctx: FrameContext,
                temporal_bypass: bool = False, op_counter=None) -> torch.Tensor:
        cfg = self.cfg
        if x.ndim != 5:
            raise ValueError(f"expected (B, 3C, F, H, W) input, got {tuple(x.shape)}")
        b, cin, f, hh, ww = x.shape
        if cin != 3 * cfg.latent_channels:
            raise ValueError(f"input channels {cin} != 3x latent channels "
                             f"{3 * cfg.latent_channels}")
        t = torch.as_tensor(t)
        if t.ndim == 0:
            t = t[None].expand(b)
        if ((t < 1) | (t > cfg.max_timestep)).any():
            raise ValueError(f"timestep out of range [1, {cfg.max_timestep}]")
        if ctx.frames != f:
            raise ValueError(f"context covers {ctx.frames} frames, input has {f}")

        dtype = self.conv_in.weight.dtype
        temb = self.time_mlp(timestep_embedding(t, cfg.base_channels, dtype))
        temb_f = torch.repeat_interleave(temb, f, dim=0)
        ctx_txt = torch.repeat_interleave(ctx.txt.to(dtype), f, dim=0)
        txt_mask = torch.repeat_interleave(ctx.txt_mask, f, dim=0)
        ctx_hdr = rearrange(ctx.hdr.to(dtype), "b f k d -> (b f) k d")

        h = self.conv_in(rearrange(x, "b c f x y -> (b f) c x y"))
        count_conv(op_counter, self.conv_in, h)
        skips = [h]
        down_iter = iter(self.down_blocks)
        ds_iter = iter(self.downsamples)
        n_levels = len(cfg.channel_mults)
        bi = 0
        for lvl in range(n_levels):
            for _ in range(cfg.num_res_blocks):
                block = self.down_blocks[bi]
                bi += 1
                h = block(h, temb_f, ctx_txt, txt_mask, ctx_hdr, b, f,
                          temporal_bypass, op_counter)
                skips.append(h)
            if lvl != n_levels - 1:
                h = next(ds_iter)(h, counter=op_counter)
                skips.append(h)

        h = self.mid_block1(h, temb_f, counter=op_counter)
        h = self.mid_attn(h, temb_f, ctx_txt, txt_mask, ctx_hdr, b, f,
                          temporal_bypass, op_counter)
        h = self.mid_block2(h, temb_f, counter=op_counter)

        bi = 0
        us_iter = iter(self.upsamples)
        for lvl in reversed(range(n_levels)):
            for _ in range(cfg.num_res_blocks + 1):
                block = self.up_blocks[bi]
                bi += 1
                h = block(torch.cat([h, skips.pop()], dim=1), temb_f, ctx_txt,
                          txt_mask, ctx_hdr, b, f, temporal_bypass, op_counter)
            if lvl != 0:
                h = next(us_iter)(h, counter=op_counter)

        h = self.conv_out(F.silu(self.norm_out(h)))
        count_conv(op_counter, self.conv_out, h)
        return rearrange(h, "(b f) c x y -> b c f x y", b=b, f=f)


class RelightModel(nn.Module):
    """Denoiser plus its condition encoders (prompt table, lighting MLP)."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.unet = VideoUNet(cfg)
        self.hdr_encoder = HdrEncoder(cfg.d_ctx, cfg.hdr_tokens_per_frame,
                                      cfg.hdr_hidden)
        self.prompt_embedder = PromptEmbedder(cfg.d_ctx, cfg.vocab_size,
                                              cfg.max_prompt_len)

    def forward(self, x, t, ctx, **kwargs):
        return self.unet(x, t, ctx, **kwargs)

    def predict_noise(self, z_t: torch.Tensor, t, bundle: ConditionBundle,
                      **kwargs) -> torch.Tensor:
        x = assemble_input(z_t, bundle)
        ctx = build_context(bundle.y, bundle.hdr_tokens, bundle.frames,
                            bundle.y_mask)
        return self.unet(x, t, ctx, **kwargs)
