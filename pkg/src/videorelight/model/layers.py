"""Spatial building blocks: timestep embedding, residual blocks, and the
per-frame transformer with self- plus context-attention."""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F
from einops import rearrange


def timestep_embedding(t: torch.Tensor, dim: int, dtype: torch.dtype) -> torch.Tensor:
    """Standard sinusoidal embedding of integer timesteps; t is (B,)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=dtype) / max(half - 1, 1)
    )
    args = t.to(dtype)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


def norm_groups_for(channels: int, cap: int = 8) -> int:
    for g in range(min(cap, channels), 0, -1):
        if channels % g == 0:
            return g
    return 1


def count_conv(counter, conv: nn.Conv2d, out: torch.Tensor) -> None:
    if counter is None:
        return
    n, c_out, h, w = out.shape
    k = conv.kernel_size[0] * conv.kernel_size[1]
    counter["spatial_conv"] = counter.get("spatial_conv", 0) + \
        n * c_out * h * w * conv.in_channels * k


def attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, heads: int,
              key_mask: torch.Tensor | None = None,
              counter=None, counter_key: str = "spatial_attn") -> torch.Tensor:
    """Multi-head attention over (N, L, D) tensors. ``key_mask`` is (N, Lk)
    with True for rows that may be attended to."""
    n, lq, d = q.shape
    lk = k.shape[1]
    dh = d // heads
    q = rearrange(q, "n l (h d) -> n h l d", h=heads)
    k = rearrange(k, "n l (h d) -> n h l d", h=heads)
    v = rearrange(v, "n l (h d) -> n h l d", h=heads)
    scores = torch.einsum("nhqd,nhkd->nhqk", q, k) / math.sqrt(dh)
    if key_mask is not None:
        bad = ~key_mask[:, None, None, :]
        scores = scores.masked_fill(bad, torch.finfo(scores.dtype).min)
    weights = scores.softmax(dim=-1)
    out = torch.einsum("nhqk,nhkd->nhqd", weights, v)
    if counter is not None:
        counter[counter_key] = counter.get(counter_key, 0) + 2 * n * heads * lq * lk * dh
    return rearrange(out, "n h l d -> n l (h d)")


class ResBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, time_dim: int, groups_cap: int = 8):
        super().__init__()
        self.norm1 = nn.GroupNorm(norm_groups_for(in_ch, groups_cap), in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.emb_proj = nn.Linear(time_dim, out_ch)
        self.norm2 = nn.GroupNorm(norm_groups_for(out_ch, groups_cap), out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x, temb, counter=None):
        h = self.conv1(F.silu(self.norm1(x)))
        count_conv(counter, self.conv1, h)
        h = h + self.emb_proj(F.silu(temb))[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        count_conv(counter, self.conv2, h)
        if isinstance(self.skip, nn.Conv2d):
            x = self.skip(x)
        return x + h


class SelfAttention(nn.Module):
    def __init__(self, channels: int, heads: int):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(channels, 3 * channels, bias=False)
        self.out = nn.Linear(channels, channels)

    def forward(self, x, counter=None):
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        return self.out(attention(q, k, v, self.heads, counter=counter))


class ContextAttention(nn.Module):
    """Cross-attention from image tokens to the per-frame context.

    Prompt rows and HDR rows keep separate key/value projections: the HDR
    projections belong to the lighting path and stay trainable during the
    video finetune while the rest of the block is frozen.
    """

    def __init__(self, channels: int, d_ctx: int, heads: int):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(channels, channels, bias=False)
        self.k_txt = nn.Linear(d_ctx, channels, bias=False)
        self.v_txt = nn.Linear(d_ctx, channels, bias=False)
        self.k_hdr = nn.Linear(d_ctx, channels, bias=False)
        self.v_hdr = nn.Linear(d_ctx, channels, bias=False)
        self.out = nn.Linear(channels, channels)

    def forward(self, x, ctx_txt, txt_mask, ctx_hdr, counter=None):
        k = torch.cat([self.k_txt(ctx_txt), self.k_hdr(ctx_hdr)], dim=1)
        v = torch.cat([self.v_txt(ctx_txt), self.v_hdr(ctx_hdr)], dim=1)
        if txt_mask is None:
            txt_mask = torch.ones(ctx_txt.shape[:2], dtype=torch.bool,
                                  device=ctx_txt.device)
        hdr_mask = torch.ones(ctx_hdr.shape[:2], dtype=torch.bool,
                              device=ctx_hdr.device)
        mask = torch.cat([txt_mask, hdr_mask], dim=1)
        return self.out(attention(self.q(x), k, v, self.heads, key_mask=mask,
                                  counter=counter))


class FeedForward(nn.Module):
    def __init__(self, channels: int, mult: int = 4):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(channels, mult * channels),
            nn.SiLU(),
            nn.Linear(mult * channels, channels),
        )

    def forward(self, x):
        return self.net(x)


class SpatialTransformer(nn.Module):
    """Per-frame transformer block: self-attention, context cross-attention,
    feed-forward; wrapped in a 1x1 projection pair with an outer residual."""

    def __init__(self, channels: int, heads: int, d_ctx: int, groups_cap: int = 8):
        super().__init__()
        self.norm = nn.GroupNorm(norm_groups_for(channels, groups_cap), channels)
        self.proj_in = nn.Conv2d(channels, channels, 1)
        self.norm1 = nn.LayerNorm(channels)
        self.self_attn = SelfAttention(channels, heads)
        self.norm2 = nn.LayerNorm(channels)
        self.ctx_attn = ContextAttention(channels, d_ctx, heads)
        self.norm3 = nn.LayerNorm(channels)
        self.ff = FeedForward(channels)
        self.proj_out = nn.Conv2d(channels, channels, 1)
        nn.init.zeros_(self.proj_out.weight)
        nn.init.zeros_(self.proj_out.bias)

    def forward(self, x, ctx_txt, txt_mask, ctx_hdr, counter=None):
        n, c, h, w = x.shape
        residual = x
        tokens = self.proj_in(self.norm(x))
        tokens = rearrange(tokens, "n c h w -> n (h w) c")
        tokens = tokens + self.self_attn(self.norm1(tokens), counter=counter)
        tokens = tokens + self.ctx_attn(self.norm2(tokens), ctx_txt, txt_mask,
                                        ctx_hdr, counter=counter)
        tokens = tokens + self.ff(self.norm3(tokens))
        tokens = rearrange(tokens, "n (h w) c -> n c h w", h=h)
        return residual + self.proj_out(tokens)


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, x, counter=None):
        out = self.conv(x)
        count_conv(counter, self.conv, out)
        return out


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x, counter=None):
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        out = self.conv(x)
        count_conv(counter, self.conv, out)
        return out
