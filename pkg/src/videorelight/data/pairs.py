"""Training pairs: source-lit input, target-lit ground truth, background
plate, env-map sequence, prompt tokens, and the foreground mask. Plus the two
input augmentations (brightness scaling, drifting shadow stripes)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lights import LightCondition, lights_differ, render_env_map, validate_env_map
from .prompts import tokens_for_light
from .render import render_background_video, render_video
from .scenes import SceneSpec

F32 = np.float32

BRIGHTNESS_RANGE = (0.25, 2.0)
ATTENUATION_RANGE = (0.2, 1.0)  # 1.0 is the no-op edge used by limit tests


@dataclass
class RelightSample:
    """One training pair. All videos share (f, h, w); mask is binary;
    v_bg equals v_appr exactly outside the mask."""

    v_appr: np.ndarray   # (f, h, w, 3) target, lit by the target light
    v_rel: np.ndarray    # (f, h, w, 3) input, lit by the source light
    v_bg: np.ndarray     # (f, h, w, 3) background plate under the target light
    env: np.ndarray      # (f, 32, 32, 3) target-light env map, HDR
    prompt: tuple[int, ...]
    mask: np.ndarray     # (f, h, w) in {0, 1}

    def validate(self) -> "RelightSample":
        f, h, w, c = self.v_appr.shape
        if c != 3:
            raise ValueError("videos must have 3 channels")
        for name in ("v_rel", "v_bg"):
            if getattr(self, name).shape != (f, h, w, 3):
                raise ValueError(f"{name} shape {getattr(self, name).shape} != {(f, h, w, 3)}")
        if self.mask.shape != (f, h, w):
            raise ValueError(f"mask shape {self.mask.shape} != {(f, h, w)}")
        if not np.all((self.mask == 0) | (self.mask == 1)):
            raise ValueError("mask must be binary")
        validate_env_map(self.env, frames=f)
        return self

    @property
    def frames(self) -> int:
        return self.v_appr.shape[0]

    def frame_slice(self, k: int) -> "RelightSample":
        """Single-frame view used by the image-backbone pretraining stage."""
        return RelightSample(
            v_appr=self.v_appr[k : k + 1],
            v_rel=self.v_rel[k : k + 1],
            v_bg=self.v_bg[k : k + 1],
            env=self.env[k : k + 1],
            prompt=self.prompt,
            mask=self.mask[k : k + 1],
        )


def make_pair(scene: SceneSpec, light_src: LightCondition,
              light_tgt: LightCondition, prompt_vocab=None) -> RelightSample:
    """Render a pair: input under ``light_src``, target under ``light_tgt``.

    The background plate is the target-lit frame with the foreground replaced
    by backdrop shading (exact inpainting — we own the renderer). Identical
    lights are rejected as a degenerate pair.
    """
    if not lights_differ(light_src, light_tgt):
        raise ValueError("source and target lights are identical (degenerate pair)")
    v_appr, mask = render_video(scene, light_tgt)
    v_rel, _ = render_video(scene, light_src)
    bg_only = render_background_video(scene, light_tgt)
    v_bg = np.where(mask[..., None] > 0, bg_only, v_appr)
    env = render_env_map(light_tgt, scene.frames)
    prompt = tokens_for_light(light_tgt)
    return RelightSample(v_appr=v_appr, v_rel=v_rel, v_bg=v_bg, env=env,
                         prompt=prompt, mask=mask).validate()


def brightness_augment(v: np.ndarray, s: float) -> np.ndarray:
    """clamp(s * v, 0, 1) applied uniformly to all frames."""
    if not BRIGHTNESS_RANGE[0] <= s <= BRIGHTNESS_RANGE[1]:
        raise ValueError(f"brightness scale {s} outside {BRIGHTNESS_RANGE}")
    return np.clip(F32(s) * np.asarray(v, dtype=F32), F32(0), F32(1))


@dataclass(frozen=True)
class ShadowSpec:
    """A drifting attenuation region: a half-plane or a soft stripe.

    The region is defined by the signed distance d = nx*x + ny*y - offset_k,
    with offset_k = offset + k*drift. Half-plane: attenuate where d < 0.
    Stripe: attenuate where |d| < width/2, with a linear soft edge of
    ``softness`` pixels.
    """

    kind: str = "stripe"          # 'halfplane' | 'stripe'
    normal: tuple[float, float] = (1.0, 0.0)
    offset: float = 0.0
    width: float = 8.0
    softness: float = 1.0
    attenuation: float = 0.5
    drift: float = 0.0            # px per frame

    def validate(self) -> "ShadowSpec":
        if self.kind not in ("halfplane", "stripe"):
            raise ValueError(f"unknown shadow kind {self.kind!r}")
        if not ATTENUATION_RANGE[0] <= self.attenuation <= ATTENUATION_RANGE[1]:
            raise ValueError(
                f"attenuation {self.attenuation} outside {ATTENUATION_RANGE}")
        if self.kind == "stripe" and self.width <= 0:
            raise ValueError("stripe width must be positive")
        if self.softness <= 0:
            raise ValueError("softness must be positive")
        return self


def shadow_weight(spec: ShadowSpec, frame: int, height: int, width: int) -> np.ndarray:
    """(h, w) weight in [0, 1]: 1 fully inside the shadow region, 0 outside."""
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    nx, ny = spec.normal
    norm = np.hypot(nx, ny)
    if norm == 0:
        raise ValueError("shadow normal must be nonzero")
    nx, ny = nx / norm, ny / norm
    off = spec.offset + frame * spec.drift
    d = nx * xs[None, :] + ny * ys[:, None] - off
    if spec.kind == "halfplane":
        return (d < 0).astype(np.float64)
    half = spec.width / 2.0
    return np.clip((half + spec.softness - np.abs(d)) / spec.softness, 0.0, 1.0)


def shadow_augment(v: np.ndarray, mask: np.ndarray, spec: ShadowSpec) -> np.ndarray:
    """Multiply masked pixels inside the drifting region by the attenuation;
    background pixels are untouched."""
    spec.validate()
    v = np.asarray(v, dtype=F32)
    f, h, w, _ = v.shape
    out = np.empty_like(v)
    a = float(spec.attenuation)
    for k in range(f):
        wgt = shadow_weight(spec, k, h, w) * np.asarray(mask[k], dtype=np.float64)
        factor = (1.0 - wgt * (1.0 - a)).astype(F32)
        out[k] = v[k] * factor[..., None]
    return out
