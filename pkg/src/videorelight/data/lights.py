"""Time-varying directional+ambient lights and their environment maps.

World frame: x points right, y up, z out of the screen toward the viewer.
Light directions point from the surface toward the light source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ENV_SIZE = 32
ENV_LOBE_SIGMA = 2.0  # px, width of the Gaussian lobe on the 32x32 grid


@dataclass(frozen=True)
class LightCondition:
    """One light: a per-frame unit direction, an RGB color, and scalar
    intensity/ambient levels."""

    direction_traj: np.ndarray  # (f, 3) float32, unit rows
    color: np.ndarray           # (3,) float32 in [0, 1]
    intensity: float
    ambient: float

    def __post_init__(self):
        traj = np.asarray(self.direction_traj, dtype=np.float32)
        if traj.ndim != 2 or traj.shape[1] != 3:
            raise ValueError(f"direction_traj must be (f, 3), got {traj.shape}")
        norms = np.linalg.norm(traj.astype(np.float64), axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("every light direction must have unit norm (±1e-6)")
        color = np.asarray(self.color, dtype=np.float32)
        if color.shape != (3,) or np.any(color < 0) or np.any(color > 1):
            raise ValueError("color must be RGB in [0, 1]")
        if self.intensity < 0:
            raise ValueError("intensity must be >= 0")
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError("ambient must lie in [0, 1]")
        object.__setattr__(self, "direction_traj", traj)
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "intensity", float(self.intensity))
        object.__setattr__(self, "ambient", float(self.ambient))

    @property
    def frames(self) -> int:
        return self.direction_traj.shape[0]

    def mean_direction(self) -> np.ndarray:
        m = self.direction_traj.astype(np.float64).mean(axis=0)
        n = np.linalg.norm(m)
        if n == 0:
            return np.array([0.0, 0.0, 1.0], dtype=np.float32)
        return (m / n).astype(np.float32)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return (v / np.linalg.norm(v)).astype(np.float32)


def static_light(direction, color, intensity: float, ambient: float,
                 frames: int) -> LightCondition:
    """Constant light over ``frames`` frames; ``direction`` is normalized."""
    d = _unit(direction)
    traj = np.repeat(d[None, :], frames, axis=0)
    return LightCondition(traj, np.asarray(color, np.float32), intensity, ambient)


def sweeping_light(direction, color, intensity: float, ambient: float,
                   frames: int, sweep_rad: float) -> LightCondition:
    """Light whose azimuth rotates by ``sweep_rad`` across the clip."""
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    phi0 = math.atan2(d[1], d[0])
    rho = math.hypot(d[0], d[1])
    traj = np.empty((frames, 3), dtype=np.float32)
    for k in range(frames):
        phi = phi0 + sweep_rad * (k / max(frames - 1, 1))
        traj[k] = (rho * math.cos(phi), rho * math.sin(phi), d[2])
    # renormalize against accumulated float error
    traj = traj / np.linalg.norm(traj.astype(np.float64), axis=1, keepdims=True).astype(np.float32)
    return LightCondition(traj, np.asarray(color, np.float32), intensity, ambient)


def sample_light(rng: np.random.Generator, frames: int,
                 moving_prob: float = 0.5) -> LightCondition:
    """Draw a random light: upper-hemisphere direction, saturated-ish color,
    moderate intensity/ambient. Moving lights sweep in azimuth."""
    z = rng.uniform(0.25, 0.9)
    phi = rng.uniform(-math.pi, math.pi)
    rho = math.sqrt(1.0 - z * z)
    direction = (rho * math.cos(phi), rho * math.sin(phi), z)
    color = rng.uniform(0.35, 1.0, size=3)
    color[rng.integers(0, 3)] = rng.uniform(0.8, 1.0)  # keep one strong channel
    intensity = rng.uniform(0.4, 1.6)
    ambient = rng.uniform(0.05, 0.35)
    if rng.uniform() < moving_prob:
        sweep = rng.uniform(0.3, 1.2) * (1 if rng.uniform() < 0.5 else -1)
        return sweeping_light(direction, color, intensity, ambient, frames, sweep)
    return static_light(direction, color, intensity, ambient, frames)


def lights_differ(a: LightCondition, b: LightCondition) -> bool:
    if a.frames != b.frames:
        return True
    return not (
        np.array_equal(a.direction_traj, b.direction_traj)
        and np.array_equal(a.color, b.color)
        and a.intensity == b.intensity
        and a.ambient == b.ambient
    )


def project_equirect(direction, height: int = ENV_SIZE, width: int = ENV_SIZE) -> tuple[float, float]:
    """Equirectangular projection of a unit direction onto grid coordinates.

    Returns continuous (row, col); col wraps modulo ``width``.
    """
    x, y, z = (float(direction[0]), float(direction[1]), float(direction[2]))
    phi = math.atan2(y, x)            # azimuth in (-pi, pi]
    theta = math.acos(max(-1.0, min(1.0, z)))  # polar in [0, pi]
    u = (phi + math.pi) / (2.0 * math.pi)
    v = theta / math.pi
    return v * height, u * width


def nearest_env_pixel(direction, height: int = ENV_SIZE, width: int = ENV_SIZE) -> tuple[int, int]:
    """Grid pixel whose center is closest to the projected direction."""
    row_f, col_f = project_equirect(direction, height, width)
    row = min(height - 1, max(0, int(math.floor(row_f))))
    # pick the pixel center minimizing wrapped column distance
    col = int(math.floor(col_f)) % width
    best = col
    best_d = None
    for cand in (col - 1, col, col + 1):
        c = cand % width
        d = abs(c + 0.5 - col_f)
        d = min(d, width - d)
        if best_d is None or d < best_d:
            best_d, best = d, c
    # same refinement for rows (no wrap)
    best_r = row
    best_rd = None
    for cand in (row - 1, row, row + 1):
        r = min(height - 1, max(0, cand))
        d = abs(r + 0.5 - row_f)
        if best_rd is None or d < best_rd:
            best_rd, best_r = d, r
    return best_r, best


def render_env_map(light: LightCondition, frames: int, size: int = ENV_SIZE,
                   sigma: float = ENV_LOBE_SIGMA) -> np.ndarray:
    """HDR environment-map sequence for a light: per frame, a Gaussian lobe at
    the equirectangular projection of that frame's direction scaled by
    intensity*color, over a uniform ambient*color floor. The sequence is then
    smoothed along time with a centered width-3 moving average (edges
    replicated)."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    if light.frames < frames:
        raise ValueError(f"light has {light.frames} frames, need {frames}")
    rows = np.arange(size, dtype=np.float64) + 0.5
    cols = np.arange(size, dtype=np.float64) + 0.5
    color = light.color.astype(np.float64)
    raw = np.empty((frames, size, size, 3), dtype=np.float64)
    for k in range(frames):
        grow, gcol = project_equirect(light.direction_traj[k], size, size)
        dy = rows - grow
        dx = np.abs(cols - gcol)
        dx = np.minimum(dx, size - dx)  # wrap in azimuth
        d2 = dy[:, None] ** 2 + dx[None, :] ** 2
        lobe = np.exp(-d2 / (2.0 * sigma * sigma))
        frame = light.ambient * color[None, None, :] \
            + light.intensity * lobe[:, :, None] * color[None, None, :]
        raw[k] = frame
    smoothed = np.empty_like(raw)
    for k in range(frames):
        lo = max(k - 1, 0)
        hi = min(k + 1, frames - 1)
        smoothed[k] = (raw[lo] + raw[k] + raw[hi]) / 3.0
    return smoothed.astype(np.float32)


def validate_env_map(values: np.ndarray, frames: int | None = None,
                     size: int = ENV_SIZE) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 4 or values.shape[1:] != (size, size, 3):
        raise ValueError(f"env map must be (f, {size}, {size}, 3), got {values.shape}")
    if frames is not None and values.shape[0] != frames:
        raise ValueError(f"env map has {values.shape[0]} frames, expected {frames}")
    if not np.all(np.isfinite(values)):
        raise ValueError("env map entries must be finite")
    if np.any(values < 0):
        raise ValueError("env map entries must be nonnegative")
    return values
