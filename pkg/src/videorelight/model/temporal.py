"""Frame-axis self-attention, inserted after each spatial attention block.

The output projection and the learned frame-position embeddings start at
zero, so with the residual the layer is exactly the identity at init and the
freshly inflated video model reproduces the image backbone frame by frame.
"""

from __future__ import annotations

import torch
import torch.nn as nn
from einops import rearrange

from .layers import attention


class TemporalAttention(nn.Module):
    def __init__(self, channels: int, heads: int, max_frames: int):
        super().__init__()
        self.heads = heads
        self.max_frames = max_frames
        self.norm = nn.LayerNorm(channels)
        self.qkv = nn.Linear(channels, 3 * channels, bias=False)
        self.out = nn.Linear(channels, channels)
        self.pos = nn.Parameter(torch.zeros(max_frames, channels))
        nn.init.zeros_(self.out.weight)
        nn.init.zeros_(self.out.bias)

    def forward(self, x: torch.Tensor, counter=None) -> torch.Tensor:
        # x: (B, C, F, H, W); attention runs over F at each spatial location
        b, c, f, h, w = x.shape
        if f > self.max_frames:
            raise ValueError(f"{f} frames exceeds max_frames={self.max_frames}")
        tokens = rearrange(x, "b c f h w -> (b h w) f c")
        hidden = self.norm(tokens) + self.pos[:f].to(tokens.dtype)
        q, k, v = self.qkv(hidden).chunk(3, dim=-1)
        y = self.out(attention(q, k, v, self.heads, counter=counter,
                               counter_key="temporal_attn"))
        y = rearrange(y, "(b h w) f c -> b c f h w", b=b, h=h, w=w)
        return x + y
