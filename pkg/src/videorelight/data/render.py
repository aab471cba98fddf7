"""Analytic Lambertian micro-renderer.

Per-pixel shading is clamp(albedo * color * (ambient + intensity * max(0, n.l)))
with sphere-cap normals on disks/blobs and flat normals on boxes and the
backdrop. All per-pixel math is float32 using only +,-,*,/,sqrt so the result
is bit-reproducible against a scalar reference loop: those operations round
identically whether vectorized or not, which transcendental kernels do not
guarantee. Pixel (row, col) has center (col+0.5, row+0.5); world y points up.
"""

from __future__ import annotations

import numpy as np

from .lights import LightCondition
from .scenes import Primitive, SceneSpec, primitive_center

F32 = np.float32


def background_albedo(scene: SceneSpec) -> np.ndarray:
    """(h, w, 3) gradient albedo: (base + gx * x/w) + gy * y/h, clipped."""
    h, w = scene.height, scene.width
    xs = np.arange(w, dtype=F32) + F32(0.5)
    ys = np.arange(h, dtype=F32) + F32(0.5)
    xn = xs / F32(w)
    yn = ys / F32(h)
    out = np.empty((h, w, 3), dtype=F32)
    for ch in range(3):
        base = F32(scene.background_base[ch])
        gx = F32(scene.background_gx[ch])
        gy = F32(scene.background_gy[ch])
        out[:, :, ch] = (base + gx * xn[None, :]) + gy * yn[:, None]
    return np.clip(out, F32(0), F32(1))


def primitive_footprint(prim: Primitive, cx: float, cy: float,
                        height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Coverage mask and per-pixel normals for one primitive at one frame.

    Returns (inside (h,w) bool, normals (h,w,3) float32). Normal components
    outside the footprint are unspecified.
    """
    xs = np.arange(width, dtype=F32) + F32(0.5)
    ys = np.arange(height, dtype=F32) + F32(0.5)
    cx32, cy32 = F32(cx), F32(cy)
    dx = (xs - cx32)[None, :] + np.zeros((height, 1), dtype=F32)
    dy = (cy32 - ys)[:, None] + np.zeros((1, width), dtype=F32)  # y-up

    normals = np.zeros((height, width, 3), dtype=F32)
    if prim.kind == "box":
        sx = F32(prim.size)
        sy = F32(prim.size) * F32(prim.aspect)
        inside = (np.abs(dx) <= sx) & (np.abs(dy) <= sy)
        normals[:, :, 2] = F32(1)
        return inside, normals

    if prim.kind == "disk":
        r = F32(prim.size)
        u = dx / r
        v = dy / r
        q2 = u * u + v * v
        inside = q2 <= F32(1)
        nz = np.sqrt(np.maximum(F32(1) - q2, F32(0)))
        normals[:, :, 0] = u
        normals[:, :, 1] = v
        normals[:, :, 2] = nz
        return inside, normals

    # blob: disk whose radius is modulated by sin(3*theta) in a rotated frame
    wc, ws = F32(prim.wobble_cos), F32(prim.wobble_sin)
    wob = F32(prim.wobble)
    r = F32(prim.size)
    dxr = wc * dx - ws * dy
    dyr = ws * dx + wc * dy
    rho2 = dxr * dxr + dyr * dyr
    rho = np.sqrt(rho2)
    safe = np.where(rho2 > 0, rho, F32(1))
    s = dyr / safe
    c = dxr / safe
    sin3 = s * (c * c * F32(3) - s * s)  # sin(3t) = sin t (3cos^2 t - sin^2 t)
    reff = r * (F32(1) + wob * sin3)
    inside = (rho <= reff) | (rho2 == 0)
    u = dx / reff
    v = dy / reff
    q2 = u * u + v * v
    nz = np.sqrt(np.maximum(F32(1) - q2, F32(0)))
    normals[:, :, 0] = np.where(rho2 > 0, u, F32(0))
    normals[:, :, 1] = np.where(rho2 > 0, v, F32(0))
    normals[:, :, 2] = np.where(rho2 > 0, nz, F32(1))
    return inside, normals


def shade_frame(albedo: np.ndarray, normals: np.ndarray, light_dir: np.ndarray,
                color: np.ndarray, intensity: float, ambient: float) -> np.ndarray:
    """clamp(albedo * color * (ambient + intensity * max(0, n.l)), 0, 1)."""
    lx, ly, lz = F32(light_dir[0]), F32(light_dir[1]), F32(light_dir[2])
    nl = normals[:, :, 0] * lx + normals[:, :, 1] * ly + normals[:, :, 2] * lz
    term = F32(ambient) + F32(intensity) * np.maximum(nl, F32(0))
    out = np.empty_like(albedo)
    for ch in range(3):
        out[:, :, ch] = albedo[:, :, ch] * F32(color[ch]) * term
    return np.clip(out, F32(0), F32(1))


def render_video(scene: SceneSpec, light: LightCondition) -> tuple[np.ndarray, np.ndarray]:
    """Render (video (f,h,w,3), mask (f,h,w)); mask is 1 on primitive pixels."""
    if light.frames < scene.frames:
        raise ValueError(f"light covers {light.frames} frames, scene needs {scene.frames}")
    f, h, w = scene.frames, scene.height, scene.width
    video = np.empty((f, h, w, 3), dtype=F32)
    mask = np.zeros((f, h, w), dtype=F32)
    bg_albedo = background_albedo(scene)
    flat = np.zeros((h, w, 3), dtype=F32)
    flat[:, :, 2] = F32(1)
    for k in range(f):
        albedo = bg_albedo.copy()
        normals = flat.copy()
        covered = np.zeros((h, w), dtype=bool)
        for prim in scene.primitives:  # later primitives draw on top
            cx, cy = primitive_center(prim, k, f)
            inside, pn = primitive_footprint(prim, cx, cy, h, w)
            for ch in range(3):
                albedo[:, :, ch] = np.where(inside, F32(prim.albedo[ch]), albedo[:, :, ch])
            normals = np.where(inside[:, :, None], pn, normals)
            covered |= inside
        video[k] = shade_frame(albedo, normals, light.direction_traj[k],
                               light.color, light.intensity, light.ambient)
        mask[k] = covered.astype(F32)
    return video, mask


def render_background_video(scene: SceneSpec, light: LightCondition) -> np.ndarray:
    """The scene's backdrop only (no primitives) under ``light``."""
    empty = SceneSpec(
        frames=scene.frames, height=scene.height, width=scene.width,
        primitives=(), background_base=scene.background_base,
        background_gx=scene.background_gx, background_gy=scene.background_gy,
        rng_seed=scene.rng_seed,
    )
    video, _ = render_video(empty, light)
    return video
