"""Environment-map conditioning: LDR/HDR split plus the 5-layer token MLP.

The split is E_l = min(E, 1) and E_h = log1p(max(E - 1, 0)): the displayable
part and the log-compressed over-range excess, with E = E_l + expm1(E_h)
wherever E_h > 0. The MLP's final layer starts at zero so every lighting
token is exactly zero until the video finetune moves it.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

ENV_SIZE = 32


def _check_env(values):
    if isinstance(values, torch.Tensor):
        if not torch.isfinite(values).all():
            raise ValueError("env map entries must be finite")
        if (values < 0).any():
            raise ValueError("env map entries must be nonnegative")
    else:
        values = np.asarray(values)
        if not np.all(np.isfinite(values)):
            raise ValueError("env map entries must be finite")
        if np.any(values < 0):
            raise ValueError("env map entries must be nonnegative")
    return values


def hdr_decompose(env):
    """Split a nonnegative map into its clamped LDR part and log excess."""
    env = _check_env(env)
    if isinstance(env, torch.Tensor):
        e_l = torch.clamp(env, max=1.0)
        e_h = torch.log1p(torch.clamp(env - 1.0, min=0.0))
    else:
        e_l = np.minimum(env, 1.0)
        e_h = np.log1p(np.maximum(env - 1.0, 0.0))
    return e_l, e_h


def hdr_reconstruct(e_l, e_h):
    """Inverse of hdr_decompose on nonnegative inputs."""
    if isinstance(e_l, torch.Tensor):
        return e_l + torch.expm1(e_h)
    return e_l + np.expm1(e_h)


class HdrEncoder(nn.Module):
    """Five affine layers mapping each frame's flattened (E_l || E_h) pair
    (6144 values at 32x32) to ``tokens_per_frame`` context tokens."""

    def __init__(self, d_ctx: int, tokens_per_frame: int = 2,
                 hidden: int = 192, env_size: int = ENV_SIZE):
        super().__init__()
        self.d_ctx = d_ctx
        self.tokens_per_frame = tokens_per_frame
        self.env_size = env_size
        in_dim = 2 * env_size * env_size * 3
        self.mlp = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.SiLU(),
            nn.Linear(hidden, hidden), nn.SiLU(),
            nn.Linear(hidden, hidden), nn.SiLU(),
            nn.Linear(hidden, hidden), nn.SiLU(),
            nn.Linear(hidden, tokens_per_frame * d_ctx),
        )
        final = self.mlp[-1]
        nn.init.zeros_(final.weight)
        nn.init.zeros_(final.bias)

    def forward(self, e_l: torch.Tensor, e_h: torch.Tensor) -> torch.Tensor:
        # (B, F, s, s, 3) pairs -> (B, F, k, d_ctx)
        if e_l.shape != e_h.shape:
            raise ValueError(f"decomposed maps disagree: {e_l.shape} vs {e_h.shape}")
        b, f = e_l.shape[:2]
        expected = (self.env_size, self.env_size, 3)
        if tuple(e_l.shape[2:]) != expected:
            raise ValueError(f"env frames must be {expected}, got {tuple(e_l.shape[2:])}")
        flat = torch.cat([e_l.reshape(b, f, -1), e_h.reshape(b, f, -1)], dim=-1)
        tokens = self.mlp(flat)
        return tokens.reshape(b, f, self.tokens_per_frame, self.d_ctx)

    def encode_env(self, env: torch.Tensor) -> torch.Tensor:
        e_l, e_h = hdr_decompose(env)
        return self(e_l, e_h)
