"""Deterministic reverse sampling and the brightness-ensemble variant.

The ensemble shares one latent trajectory: at every reverse step each
brightness-scaled copy of the input contributes a noise prediction, the
predictions are averaged (fixed left-to-right order, accumulated in float64),
and the shared latent advances once with the mean. A one-branch ensemble is
bit-identical to plain sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from ..data.pairs import brightness_augment
from ..model.unet import ConditionBundle, assemble_input, build_context


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 20
    eta: float = 0.0        # 0 = deterministic
    guidance: float = 1.0   # 1 = off
    seed: int = 0

    def validate(self, timesteps: int) -> "SamplerConfig":
        if not 1 <= self.steps <= timesteps:
            raise ValueError(f"steps must lie in [1, {timesteps}]")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        return self


def timestep_stride(timesteps: int, steps: int) -> list[int]:
    """Strictly decreasing 1-based timesteps from T down to 1."""
    xs = np.linspace(timesteps, 1, steps)
    ts = np.floor(xs + 0.5).astype(int)
    if steps > 1 and np.any(np.diff(ts) >= 0):
        raise ValueError("stride failed to produce strictly decreasing timesteps")
    return [int(t) for t in ts]


def make_bundle(pipeline, frames: int, height: int, width: int,
                v_rel: np.ndarray | None = None, v_bg: np.ndarray | None = None,
                prompt=None, env: np.ndarray | None = None) -> ConditionBundle:
    """Encode available conditions; missing ones become zero latents, the
    null prompt embedding, or zero lighting tokens."""
    lh, lw = pipeline.latent_size(height, width)
    c = pipeline.latent_channels
    z_rel = pipeline.codec.encode(v_rel) if v_rel is not None else \
        torch.zeros(c, frames, lh, lw)
    z_bg = pipeline.codec.encode(v_bg) if v_bg is not None else \
        torch.zeros(c, frames, lh, lw)
    emb = pipeline.model.prompt_embedder
    with torch.no_grad():
        y = emb(prompt) if prompt is not None else emb.null_embedding()
        if env is not None:
            env_t = torch.from_numpy(np.asarray(env, np.float32))[None]
            hdr_tokens = pipeline.model.hdr_encoder.encode_env(env_t)[0]
        else:
            k = pipeline.model.hdr_encoder.tokens_per_frame
            hdr_tokens = torch.zeros(frames, k, pipeline.cfg.d_ctx)
    return ConditionBundle(z_rel=z_rel, z_bg=z_bg, y=y, hdr_tokens=hdr_tokens)


def _mean_predictions(preds: list[torch.Tensor]) -> torch.Tensor:
    """Arithmetic mean with fixed summation order; float64 accumulation keeps
    the equal-prediction case bitwise exact after the cast back."""
    acc = preds[0].double()
    for p in preds[1:]:
        acc = acc + p.double()
    return (acc / len(preds)).to(preds[0].dtype)


def _predict(pipeline, z, t, bundle, guidance, temporal_bypass=False):
    eps = pipeline.model.predict_noise(z, t, bundle,
                                       temporal_bypass=temporal_bypass)
    if guidance != 1.0:
        null = ConditionBundle(
            z_rel=bundle.z_rel, z_bg=bundle.z_bg,
            y=pipeline.model.prompt_embedder.null_embedding()[None].expand(
                bundle.z_rel.shape[0], -1, -1),
            hdr_tokens=torch.zeros_like(bundle.hdr_tokens))
        eps_u = pipeline.model.predict_noise(z, t, null,
                                             temporal_bypass=temporal_bypass)
        eps = eps_u + guidance * (eps - eps_u)
    return eps


def _ddim_reverse(pipeline, eps_fn, z: torch.Tensor, ts: list[int],
                  eta: float, generator: torch.Generator) -> torch.Tensor:
    sched = pipeline.schedule
    for i, t in enumerate(ts):
        ab_t = sched.alpha_bar(t)
        ab_prev = sched.alpha_bar(ts[i + 1]) if i + 1 < len(ts) else 1.0
        eps = eps_fn(z, t)
        z0_pred = (z - math.sqrt(1.0 - ab_t) * eps) / math.sqrt(ab_t)
        if eta > 0.0 and i + 1 < len(ts):
            sigma = eta * math.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) \
                * math.sqrt(1.0 - ab_t / ab_prev)
            keep = math.sqrt(max(1.0 - ab_prev - sigma * sigma, 0.0))
            noise = torch.randn(z.shape, generator=generator, dtype=z.dtype)
            z = math.sqrt(ab_prev) * z0_pred + keep * eps + sigma * noise
        else:
            z = math.sqrt(ab_prev) * z0_pred + math.sqrt(1.0 - ab_prev) * eps
    return z


@torch.no_grad()
def sample(pipeline, bundle: ConditionBundle, cfg: SamplerConfig) -> np.ndarray:
    """Deterministic DDIM from seeded Gaussian noise; returns the decoded
    video. Bit-reproducible given (weights, bundle, seed, steps)."""
    cfg.validate(pipeline.schedule.timesteps)
    ts = timestep_stride(pipeline.schedule.timesteps, cfg.steps)
    g = torch.Generator().manual_seed(cfg.seed)
    z = torch.randn(bundle.z_rel.shape, generator=g)

    def eps_fn(z_t, t):
        return _mean_predictions([_predict(pipeline, z_t, t, bundle, cfg.guidance)])

    z = _ddim_reverse(pipeline, eps_fn, z, ts, cfg.eta, g)
    return pipeline.codec.decode(z[0])


def iie_scales(n_aug: int, scale_range: tuple[float, float]) -> list[float]:
    lo, hi = scale_range
    if n_aug == 1:
        return [(lo + hi) / 2.0]
    return [float(s) for s in np.linspace(lo, hi, n_aug)]


@torch.no_grad()
def iie_sample(pipeline, v_in: np.ndarray, bundle: ConditionBundle,
               n_aug: int, cfg: SamplerConfig,
               scale_range: tuple[float, float] = (0.5, 1.5),
               scales: list[float] | None = None) -> np.ndarray:
    """Brightness-ensemble sampling: N scaled copies of the input video each
    predict noise at every step; the shared latent advances with the mean."""
    if n_aug < 1:
        raise ValueError("ensemble needs at least one branch")
    if scales is None:
        scales = iie_scales(n_aug, scale_range)
    if len(scales) != n_aug:
        raise ValueError(f"{len(scales)} scales for {n_aug} branches")
    lo, hi = scale_range
    for s in scales:
        if not lo <= s <= hi:
            raise ValueError(f"scale {s} outside configured range [{lo}, {hi}]")
    cfg.validate(pipeline.schedule.timesteps)

    branches = []
    for s in scales:
        v_s = brightness_augment(v_in, s)
        z_rel = pipeline.codec.encode(v_s)
        branches.append(ConditionBundle(
            z_rel=z_rel, z_bg=bundle.z_bg, y=bundle.y,
            hdr_tokens=bundle.hdr_tokens, y_mask=bundle.y_mask))

    ts = timestep_stride(pipeline.schedule.timesteps, cfg.steps)
    g = torch.Generator().manual_seed(cfg.seed)
    z = torch.randn(branches[0].z_rel.shape, generator=g)

    def eps_fn(z_t, t):
        preds = [_predict(pipeline, z_t, t, br, cfg.guidance) for br in branches]
        return _mean_predictions(preds)

    z = _ddim_reverse(pipeline, eps_fn, z, ts, cfg.eta, g)
    return pipeline.codec.decode(z[0])


@torch.no_grad()
def per_frame_sample(pipeline, bundle: ConditionBundle, cfg: SamplerConfig,
                     shared_noise: bool = False) -> np.ndarray:
    """Image-model baseline: temporal attention bypassed and every frame
    denoised on its own trajectory. By default each frame draws its own
    starting noise (seed + frame index); ``shared_noise`` reuses the exact
    tensor the video sampler would start from."""
    cfg.validate(pipeline.schedule.timesteps)
    b, c, f, h, w = bundle.z_rel.shape
    if b != 1:
        raise ValueError("per-frame baseline expects a single video bundle")
    if shared_noise:
        g = torch.Generator().manual_seed(cfg.seed)
        z = torch.randn(bundle.z_rel.shape, generator=g)
    else:
        frames_noise = []
        for k in range(f):
            gk = torch.Generator().manual_seed(cfg.seed + k)
            frames_noise.append(torch.randn(1, c, 1, h, w, generator=gk))
        z = torch.cat(frames_noise, dim=2)
        g = torch.Generator().manual_seed(cfg.seed)

    # fold frames into the batch: each runs an independent 1-frame trajectory
    from einops import rearrange

    z = rearrange(z, "1 c f h w -> f c 1 h w")
    per_frame = ConditionBundle(
        z_rel=rearrange(bundle.z_rel, "1 c f h w -> f c 1 h w"),
        z_bg=rearrange(bundle.z_bg, "1 c f h w -> f c 1 h w"),
        y=bundle.y.expand(f, -1, -1),
        hdr_tokens=rearrange(bundle.hdr_tokens, "1 f k d -> f 1 k d"),
        y_mask=None if bundle.y_mask is None else bundle.y_mask.expand(f, -1),
    )
    ts = timestep_stride(pipeline.schedule.timesteps, cfg.steps)

    def eps_fn(z_t, t):
        return _mean_predictions([
            _predict(pipeline, z_t, t, per_frame, cfg.guidance,
                     temporal_bypass=True)])

    z = _ddim_reverse(pipeline, eps_fn, z, ts, cfg.eta, g)
    z = rearrange(z, "f c 1 h w -> 1 c f h w")
    return pipeline.codec.decode(z[0])
