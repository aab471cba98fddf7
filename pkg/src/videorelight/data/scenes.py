"""Procedural scenes: a handful of moving primitives over a gradient backdrop.

Everything is a pure function of the seed, so identical seeds give
byte-identical scene specs.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

PRIMITIVE_KINDS = ("disk", "box", "blob")


@dataclass(frozen=True)
class GeneratorConfig:
    frames: int = 8
    height: int = 32
    width: int = 32
    min_primitives: int = 1
    max_primitives: int = 3
    kinds: tuple[str, ...] = PRIMITIVE_KINDS
    moving_light_prob: float = 0.5
    augment_prob: float = 0.5  # chance the relit input gets brightness/shadow augmentation

    def validate(self) -> "GeneratorConfig":
        if self.frames < 2:
            raise ValueError("frames must be >= 2")
        if self.height < 8 or self.width < 8:
            raise ValueError("height and width must be >= 8")
        if not 1 <= self.min_primitives <= self.max_primitives:
            raise ValueError("need 1 <= min_primitives <= max_primitives")
        for k in self.kinds:
            if k not in PRIMITIVE_KINDS:
                raise ValueError(f"unknown primitive kind {k!r}")
        return self


@dataclass(frozen=True)
class Motion:
    kind: str              # 'linear' | 'circular'
    anchor: tuple[float, float]   # start point / orbit center
    delta: tuple[float, float]    # end-start displacement (linear)
    radius: float = 0.0           # orbit radius (circular)
    angle0: float = 0.0
    sweep: float = 0.0


@dataclass(frozen=True)
class Primitive:
    kind: str
    albedo: tuple[float, float, float]
    size: float                   # radius (disk/blob) or half-extent (box)
    normal_kind: str              # 'spherecap' | 'flat'
    motion: Motion
    aspect: float = 1.0           # box: half-extent-y = size * aspect
    wobble: float = 0.0           # blob: radial modulation amplitude
    wobble_cos: float = 1.0       # blob: phase rotation, cos component
    wobble_sin: float = 0.0       # blob: phase rotation, sin component

    def max_extent(self) -> float:
        if self.kind == "box":
            return self.size * math.hypot(1.0, self.aspect)
        if self.kind == "blob":
            return self.size * (1.0 + self.wobble)
        return self.size


@dataclass(frozen=True)
class SceneSpec:
    frames: int
    height: int
    width: int
    primitives: tuple[Primitive, ...]
    background_base: tuple[float, float, float]
    background_gx: tuple[float, float, float]   # horizontal albedo slope
    background_gy: tuple[float, float, float]   # vertical albedo slope
    rng_seed: int

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def primitive_center(prim: Primitive, k: int, frames: int) -> tuple[float, float]:
    """Pixel-space center of a primitive at frame k."""
    m = prim.motion
    s = k / max(frames - 1, 1)
    if m.kind == "linear":
        return (m.anchor[0] + s * m.delta[0], m.anchor[1] + s * m.delta[1])
    ang = m.angle0 + s * m.sweep
    return (m.anchor[0] + m.radius * math.cos(ang),
            m.anchor[1] + m.radius * math.sin(ang))


def _motion_bound(m: Motion) -> float:
    """Max distance of the path from its anchor (coarse, for bounds checks)."""
    if m.kind == "linear":
        return math.hypot(*m.delta)
    return m.radius


def _sample_primitive(rng: np.random.Generator, cfg: GeneratorConfig,
                      kind: str) -> Primitive:
    h, w = cfg.height, cfg.width
    max_size = 0.30 * min(h, w)
    size = float(rng.uniform(0.12 * min(h, w), max_size))
    albedo = tuple(float(a) for a in rng.uniform(0.15, 0.95, size=3))
    wobble = 0.0
    wc, ws = 1.0, 0.0
    aspect = 1.0
    if kind == "blob":
        wobble = float(rng.uniform(0.15, 0.35))
        phase = float(rng.uniform(0, 2 * math.pi))
        wc, ws = math.cos(phase), math.sin(phase)
    if kind == "box":
        aspect = float(rng.uniform(0.5, 1.0))
    normal_kind = "flat" if kind == "box" else "spherecap"

    extent = size * (1.0 + wobble) if kind == "blob" else \
        (size * math.hypot(1.0, aspect) if kind == "box" else size)
    margin = extent + 1.0
    lo_x, hi_x = margin, w - margin
    lo_y, hi_y = margin, h - margin
    if hi_x <= lo_x or hi_y <= lo_y:  # primitive too large for the frame
        size *= 0.5
        extent *= 0.5
        margin = extent + 1.0
        lo_x, hi_x = margin, w - margin
        lo_y, hi_y = margin, h - margin

    if rng.uniform() < 0.5:
        # linear path: start and end both inside bounds
        x0 = float(rng.uniform(lo_x, hi_x))
        y0 = float(rng.uniform(lo_y, hi_y))
        x1 = float(rng.uniform(lo_x, hi_x))
        y1 = float(rng.uniform(lo_y, hi_y))
        motion = Motion("linear", (x0, y0), (x1 - x0, y1 - y0))
    else:
        max_r = 0.25 * min(w, h)
        r = float(rng.uniform(0.5, max_r))
        cx = float(rng.uniform(lo_x + r, hi_x - r)) if hi_x - lo_x > 2 * r else (lo_x + hi_x) / 2
        cy = float(rng.uniform(lo_y + r, hi_y - r)) if hi_y - lo_y > 2 * r else (lo_y + hi_y) / 2
        motion = Motion("circular", (cx, cy), (0.0, 0.0), radius=r,
                        angle0=float(rng.uniform(0, 2 * math.pi)),
                        sweep=float(rng.uniform(-math.pi, math.pi)))
    return Primitive(kind=kind, albedo=albedo, size=size, normal_kind=normal_kind,
                     motion=motion, aspect=aspect, wobble=wobble,
                     wobble_cos=wc, wobble_sin=ws)


def _in_bounds(prim: Primitive, cfg: GeneratorConfig) -> bool:
    ext = prim.max_extent()
    for k in range(cfg.frames):
        cx, cy = primitive_center(prim, k, cfg.frames)
        if not (ext <= cx <= cfg.width - ext and ext <= cy <= cfg.height - ext):
            return False
    return True


def sample_scene(seed: int, cfg: GeneratorConfig | None = None) -> SceneSpec:
    """Deterministically sample a scene from ``seed``."""
    cfg = (cfg or GeneratorConfig()).validate()
    rng = np.random.default_rng(seed)
    n = int(rng.integers(cfg.min_primitives, cfg.max_primitives + 1))
    prims = []
    for _ in range(n):
        kind = cfg.kinds[int(rng.integers(0, len(cfg.kinds)))]
        for _attempt in range(64):
            prim = _sample_primitive(rng, cfg, kind)
            if _in_bounds(prim, cfg):
                break
        else:
            raise RuntimeError("could not place primitive inside frame bounds")
        prims.append(prim)

    base = rng.uniform(0.25, 0.75, size=3)
    gx = rng.uniform(-0.25, 0.25, size=3)
    gy = rng.uniform(-0.25, 0.25, size=3)
    # keep the gradient inside [0, 1] over the whole frame
    lo = np.minimum(0, gx) + np.minimum(0, gy)
    hi = np.maximum(0, gx) + np.maximum(0, gy)
    base = np.clip(base, -lo + 0.02, 1.0 - hi - 0.02)
    return SceneSpec(
        frames=cfg.frames,
        height=cfg.height,
        width=cfg.width,
        primitives=tuple(prims),
        background_base=tuple(float(v) for v in base),
        background_gx=tuple(float(v) for v in gx),
        background_gy=tuple(float(v) for v in gy),
        rng_seed=int(seed),
    )
