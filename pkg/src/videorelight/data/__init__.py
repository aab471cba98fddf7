from .lights import LightCondition, render_env_map, sample_light, static_light
from .scenes import GeneratorConfig, Primitive, SceneSpec, primitive_center, sample_scene
from .render import render_video
from .pairs import (
    RelightSample,
    ShadowSpec,
    brightness_augment,
    make_pair,
    shadow_augment,
)
from .dataset import (
    dataset_hash,
    generate_dataset,
    read_dataset,
    read_sample,
    write_dataset,
)

__all__ = [
    "LightCondition",
    "render_env_map",
    "sample_light",
    "static_light",
    "GeneratorConfig",
    "Primitive",
    "SceneSpec",
    "primitive_center",
    "sample_scene",
    "render_video",
    "RelightSample",
    "ShadowSpec",
    "brightness_augment",
    "make_pair",
    "shadow_augment",
    "dataset_hash",
    "generate_dataset",
    "read_dataset",
    "read_sample",
    "write_dataset",
]
