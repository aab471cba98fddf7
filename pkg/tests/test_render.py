import numpy as np
import pytest

from shading_oracle import render_frame_bruteforce
from videorelight.data import GeneratorConfig, render_video, sample_scene, static_light
from videorelight.data.scenes import Motion, Primitive, SceneSpec


def _single_disk_scene(frames=3, size=16):
    disk = Primitive(
        kind="disk", albedo=(0.5, 0.5, 0.5), size=5.0, normal_kind="spherecap",
        motion=Motion("linear", (8.5, 8.5), (0.0, 0.0)),
    )
    return SceneSpec(
        frames=frames, height=size, width=size, primitives=(disk,),
        background_base=(0.4, 0.4, 0.4), background_gx=(0.0, 0.0, 0.0),
        background_gy=(0.0, 0.0, 0.0), rng_seed=0,
    )


def test_head_on_light_gives_albedo_at_disk_center():
    # n == l at the disk center, ambient 0, white unit light -> pixel = albedo
    scene = _single_disk_scene()
    light = static_light((0, 0, 1), (1, 1, 1), intensity=1.0, ambient=0.0,
                         frames=scene.frames)
    video, mask = render_video(scene, light)
    # disk center sits on the center of pixel (row 8, col 8)
    assert mask[0, 8, 8] == 1
    assert np.array_equal(video[0, 8, 8], np.array([0.5, 0.5, 0.5], np.float32))


def test_antiparallel_light_leaves_ambient_only():
    scene = _single_disk_scene()
    ambient = 0.2
    light = static_light((0, 0, -1), (1.0, 0.8, 0.6), intensity=1.0,
                         ambient=ambient, frames=scene.frames)
    video, _ = render_video(scene, light)
    # max(0, n.l) == 0 everywhere (nz >= 0), leaving clamp(albedo*color*ambient)
    f32 = np.float32
    disk_val = np.array([f32(0.5) * f32(1.0) * f32(0.2),
                         f32(0.5) * f32(0.8) * f32(0.2),
                         f32(0.5) * f32(0.6) * f32(0.2)], np.float32)
    assert np.array_equal(video[0, 8, 8], disk_val)
    bg_val = np.array([f32(0.4) * f32(1.0) * f32(0.2),
                       f32(0.4) * f32(0.8) * f32(0.2),
                       f32(0.4) * f32(0.6) * f32(0.2)], np.float32)
    assert np.array_equal(video[0, 0, 0], bg_val)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_render_matches_bruteforce_oracle_exactly(seed):
    cfg = GeneratorConfig(frames=3, height=20, width=20)
    scene = sample_scene(seed, cfg)
    rng = np.random.default_rng(seed + 100)
    from videorelight.data import sample_light

    light = sample_light(rng, cfg.frames)
    video, mask = render_video(scene, light)
    for k in range(cfg.frames):
        ref_video, ref_mask = render_frame_bruteforce(scene, light, k)
        assert np.array_equal(video[k], ref_video), f"frame {k} shading differs"
        assert np.array_equal(mask[k], ref_mask), f"frame {k} mask differs"


def test_mask_marks_primitive_pixels():
    scene = _single_disk_scene()
    light = static_light((0, 0, 1), (1, 1, 1), 1.0, 0.1, scene.frames)
    _, mask = render_video(scene, light)
    assert mask[0, 8, 8] == 1
    assert mask[0, 0, 0] == 0
    assert set(np.unique(mask)) <= {0.0, 1.0}


def test_light_frame_count_checked():
    scene = _single_disk_scene(frames=5)
    light = static_light((0, 0, 1), (1, 1, 1), 1.0, 0.1, frames=3)
    with pytest.raises(ValueError):
        render_video(scene, light)
