"""Discrete noise schedule and the forward corruption process.

Timesteps are 1-based: t runs over [1, T], matching the denoiser contract.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class ScheduleConfig:
    timesteps: int = 1000
    beta_min: float = 1e-4
    beta_max: float = 2e-2
    kind: str = "linear"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleConfig":
        return cls(**d)


@dataclass(frozen=True)
class NoiseSchedule:
    timesteps: int
    betas: np.ndarray            # (T,), betas[i] is beta_{i+1}
    alphas_cumprod: np.ndarray   # (T,), strictly decreasing
    sqrt_ac: np.ndarray
    sqrt_1mac: np.ndarray

    def alpha_bar(self, t: int) -> float:
        """alpha-bar at 1-based timestep t; alpha_bar(0) == 1 by convention."""
        if t == 0:
            return 1.0
        if not 1 <= t <= self.timesteps:
            raise ValueError(f"t={t} outside [1, {self.timesteps}]")
        return float(self.alphas_cumprod[t - 1])

    def gather(self, values: np.ndarray, t: torch.Tensor,
               like: torch.Tensor) -> torch.Tensor:
        """Coefficients at (B,) timesteps broadcast to the shape of ``like``."""
        idx = t.long() - 1
        if ((idx < 0) | (idx >= self.timesteps)).any():
            raise ValueError(f"timesteps outside [1, {self.timesteps}]")
        coeff = torch.from_numpy(values).to(like.dtype)[idx]
        return coeff.reshape(-1, *([1] * (like.ndim - 1)))


def make_schedule(timesteps: int = 1000, beta_min: float = 1e-4,
                  beta_max: float = 2e-2, kind: str = "linear") -> NoiseSchedule:
    if timesteps < 1:
        raise ValueError("timesteps must be >= 1")
    if kind == "linear":
        if not 0.0 < beta_min < beta_max < 1.0:
            raise ValueError("need 0 < beta_min < beta_max < 1")
        betas = np.linspace(beta_min, beta_max, timesteps, dtype=np.float64)
    elif kind == "cosine":
        s = 0.008
        f = lambda u: math.cos((u + s) / (1 + s) * math.pi / 2) ** 2
        abar = np.array([f(i / timesteps) / f(0.0) for i in range(timesteps + 1)])
        betas = np.clip(1.0 - abar[1:] / abar[:-1], 1e-8, 0.999)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    if np.any(betas <= 0) or np.any(betas >= 1):
        raise ValueError("betas escaped (0, 1)")
    alphas_cumprod = np.cumprod(1.0 - betas)
    if np.any(np.diff(alphas_cumprod) >= 0):
        raise ValueError("alpha-bar must be strictly decreasing")
    return NoiseSchedule(
        timesteps=timesteps,
        betas=betas,
        alphas_cumprod=alphas_cumprod,
        sqrt_ac=np.sqrt(alphas_cumprod),
        sqrt_1mac=np.sqrt(1.0 - alphas_cumprod),
    )


def schedule_from_config(cfg: ScheduleConfig) -> NoiseSchedule:
    return make_schedule(cfg.timesteps, cfg.beta_min, cfg.beta_max, cfg.kind)


def q_sample(schedule: NoiseSchedule, z0: torch.Tensor, t,
             eps: torch.Tensor) -> torch.Tensor:
    """Forward corruption z_t = sqrt(abar_t) z0 + sqrt(1-abar_t) eps."""
    if eps.shape != z0.shape:
        raise ValueError("noise must match z0's shape")
    t = torch.as_tensor(t)
    if t.ndim == 0:
        t = t[None].expand(z0.shape[0] if z0.ndim > 4 else 1)
    c1 = schedule.gather(schedule.sqrt_ac, t, z0)
    c2 = schedule.gather(schedule.sqrt_1mac, t, z0)
    return c1 * z0 + c2 * eps
