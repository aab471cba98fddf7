"""On-disk dataset layout and the seeded pair generator.

One directory per sample holding one binary tensor file per field plus a
``meta.json`` sidecar (shapes, CRCs, prompt, seed); a top-level
``manifest.json`` lists every sample with a recomputable checksum.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .. import DataError
from ..tensorio import TENSOR_SUFFIX, read_tensor, write_tensor
from .lights import sample_light
from .pairs import RelightSample, ShadowSpec, brightness_augment, make_pair, shadow_augment
from .scenes import GeneratorConfig, sample_scene

FORMAT_VERSION = "lightatlas-micro-1"
TENSOR_FIELDS = ("v_appr", "v_rel", "v_bg", "env", "mask")


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def write_sample(sample: RelightSample, sample_dir: Path, seed: int | None = None) -> str:
    """Write one sample directory; returns its checksum (sha256 of meta)."""
    sample.validate()
    sample_dir.mkdir(parents=True, exist_ok=True)
    fields = {}
    for name in TENSOR_FIELDS:
        arr = getattr(sample, name)
        crc = write_tensor(sample_dir / f"{name}{TENSOR_SUFFIX}", arr)
        fields[name] = {"shape": list(arr.shape), "crc32": crc}
    meta = {
        "format": FORMAT_VERSION,
        "fields": fields,
        "prompt": list(int(t) for t in sample.prompt),
        "seed": seed,
    }
    meta_bytes = _canonical_json(meta)
    (sample_dir / "meta.json").write_bytes(meta_bytes)
    return hashlib.sha256(meta_bytes).hexdigest()


def read_sample(sample_dir: str | Path) -> RelightSample:
    sample_dir = Path(sample_dir)
    meta_path = sample_dir / "meta.json"
    if not meta_path.exists():
        raise DataError(f"no meta.json in {sample_dir}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"corrupt meta.json in {sample_dir}: {e}") from e
    if meta.get("format") != FORMAT_VERSION:
        raise DataError(f"unsupported sample format {meta.get('format')!r}")
    arrays = {}
    for name in TENSOR_FIELDS:
        info = meta["fields"][name]
        arrays[name] = read_tensor(
            sample_dir / f"{name}{TENSOR_SUFFIX}",
            expect_shape=tuple(info["shape"]),
            expect_crc=info["crc32"],
        )
    return RelightSample(
        v_appr=arrays["v_appr"], v_rel=arrays["v_rel"], v_bg=arrays["v_bg"],
        env=arrays["env"], prompt=tuple(meta["prompt"]), mask=arrays["mask"],
    ).validate()


def write_dataset(samples: Iterable[RelightSample], path: str | Path,
                  seeds: Iterable[int] | None = None,
                  extra_meta: dict | None = None) -> dict:
    """Write samples under ``path`` and return the manifest dict."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    seed_list = list(seeds) if seeds is not None else None
    for i, sample in enumerate(samples):
        name = f"sample_{i:05d}"
        seed = seed_list[i] if seed_list is not None else None
        checksum = write_sample(sample, path / name, seed=seed)
        entries.append({"name": name, "checksum": checksum})
    manifest = {
        "format": FORMAT_VERSION,
        "count": len(entries),
        "samples": entries,
    }
    if extra_meta:
        manifest["meta"] = extra_meta
    (path / "manifest.json").write_bytes(_canonical_json(manifest))
    return manifest


def read_manifest(path: str | Path) -> dict:
    mpath = Path(path) / "manifest.json"
    if not mpath.exists():
        raise DataError(f"no manifest.json in {path}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as e:
        raise DataError(f"corrupt manifest.json in {path}: {e}") from e
    if manifest.get("format") != FORMAT_VERSION:
        raise DataError(f"unsupported dataset format {manifest.get('format')!r}")
    return manifest


def read_dataset(path: str | Path, verify: bool = True) -> list[RelightSample]:
    """Load every sample listed in the manifest; checksums are verified."""
    path = Path(path)
    manifest = read_manifest(path)
    samples = []
    for entry in manifest["samples"]:
        sample_dir = path / entry["name"]
        if verify:
            meta_path = sample_dir / "meta.json"
            if not meta_path.exists():
                raise DataError(f"manifest lists {entry['name']} but meta.json is missing")
            digest = hashlib.sha256(meta_path.read_bytes()).hexdigest()
            if digest != entry["checksum"]:
                raise DataError(f"checksum mismatch for {entry['name']}")
        samples.append(read_sample(sample_dir))
    return samples


def dataset_hash(path: str | Path) -> str:
    """sha256 of the manifest bytes; recomputable from the directory alone."""
    mpath = Path(path) / "manifest.json"
    if not mpath.exists():
        raise DataError(f"no manifest.json in {path}")
    return hashlib.sha256(mpath.read_bytes()).hexdigest()


def _sample_rng(root_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(root_seed, index)))


def generate_sample(root_seed: int, index: int, cfg: GeneratorConfig) -> RelightSample:
    """Deterministically generate pair ``index`` of the run seeded ``root_seed``."""
    rng = _sample_rng(root_seed, index)
    scene_seed = int(rng.integers(0, 2**62))
    scene = sample_scene(scene_seed, cfg)
    light_tgt = sample_light(rng, cfg.frames, cfg.moving_light_prob)
    for _ in range(16):
        light_src = sample_light(rng, cfg.frames, cfg.moving_light_prob)
        dir_gap = 1.0 - float(light_src.mean_direction() @ light_tgt.mean_direction())
        col_gap = float(np.abs(light_src.color - light_tgt.color).sum())
        if dir_gap > 0.02 or col_gap > 0.1 or abs(light_src.intensity - light_tgt.intensity) > 0.1:
            break
    sample = make_pair(scene, light_src, light_tgt)
    if rng.uniform() < cfg.augment_prob:
        s = float(rng.uniform(0.5, 1.6))
        sample.v_rel = brightness_augment(sample.v_rel, s)
    if rng.uniform() < cfg.augment_prob * 0.5:
        ang = rng.uniform(0, 2 * np.pi)
        spec = ShadowSpec(
            kind="stripe",
            normal=(float(np.cos(ang)), float(np.sin(ang))),
            offset=float(rng.uniform(0, max(cfg.height, cfg.width))),
            width=float(rng.uniform(4, 0.6 * max(cfg.height, cfg.width))),
            softness=float(rng.uniform(0.5, 2.0)),
            attenuation=float(rng.uniform(0.3, 0.9)),
            drift=float(rng.uniform(-1.5, 1.5)),
        )
        sample.v_rel = shadow_augment(sample.v_rel, sample.mask, spec)
    return sample.validate()


def generate_dataset(count: int, seed: int,
                     cfg: GeneratorConfig | None = None) -> Iterator[RelightSample]:
    """Yield ``count`` deterministic pairs. Each pair owns its seeded
    generator, so generation is order-independent and parallel-safe."""
    cfg = (cfg or GeneratorConfig()).validate()
    for i in range(count):
        yield generate_sample(seed, i, cfg)
