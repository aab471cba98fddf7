"""Checkpoint container: one zip holding the config JSON, the parameter-group
manifest, every named tensor in the raw binary format, optimizer state, and
the training RNG state. Entry timestamps are pinned so identical states
produce byte-identical files."""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .. import __version__
from ..diffusion.schedule import ScheduleConfig
from ..model.config import ModelConfig
from ..model.groups import param_groups
from ..model.latent import StridedCodec
from ..pipeline import RelightPipeline
from ..tensorio import tensor_from_bytes, tensor_to_bytes

FORMAT_TAG = "vrl-ckpt-1"
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)  # fixed so same state => same bytes


class CheckpointError(Exception):
    pass


def _write_entry(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_STORED
    zf.writestr(info, data)


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, indent=1).encode()


def save_checkpoint(path: str | Path, pipeline: RelightPipeline,
                    train_cfg=None, optimizer_payload: dict | None = None,
                    generator_state: bytes | None = None, step: int = 0,
                    dataset_hash: str | None = None,
                    ema: dict[str, torch.Tensor] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries: dict[str, bytes] = {}
    entries["format.json"] = _json_bytes(
        {"format": FORMAT_TAG, "tool_version": __version__})
    entries["config.json"] = _json_bytes({
        "model": pipeline.cfg.to_dict(),
        "schedule": pipeline.schedule_cfg.to_dict(),
        "train": train_cfg.to_dict() if train_cfg is not None else None,
    })
    entries["groups.json"] = _json_bytes(param_groups(pipeline.model))
    for name, tensor in pipeline.model.state_dict().items():
        entries[f"params/{name}"] = tensor_to_bytes(
            tensor.detach().cpu().numpy().astype(np.float32))
    if isinstance(pipeline.codec, StridedCodec):
        for name, tensor in pipeline.codec.state_dict().items():
            entries[f"codec/{name}"] = tensor_to_bytes(
                tensor.detach().cpu().numpy().astype(np.float32))
    if optimizer_payload is not None:
        entries["optim.json"] = _json_bytes(optimizer_payload["meta"])
        for name, tensor in optimizer_payload["tensors"].items():
            entries[f"optim/{name}"] = tensor_to_bytes(
                tensor.detach().cpu().numpy().astype(np.float32))
    if ema:
        for name, tensor in ema.items():
            entries[f"ema/{name}"] = tensor_to_bytes(
                tensor.detach().cpu().numpy().astype(np.float32))
    if generator_state is not None:
        entries["rng/torch.bin"] = generator_state
    entries["state.json"] = _json_bytes(
        {"step": int(step), "dataset_hash": dataset_hash})

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for name in sorted(entries):
            _write_entry(zf, name, entries[name])
    path.write_bytes(buf.getvalue())
    return path


@dataclass
class CheckpointData:
    model_cfg: ModelConfig
    schedule_cfg: ScheduleConfig
    train_cfg_dict: dict | None
    groups: dict[str, list[str]]
    model_state: dict[str, torch.Tensor]
    codec_state: dict[str, torch.Tensor]
    optim_meta: dict | None
    optim_tensors: dict[str, torch.Tensor]
    ema: dict[str, torch.Tensor]
    generator_state: bytes | None
    step: int
    dataset_hash: str | None


def load_checkpoint(path: str | Path) -> CheckpointData:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    try:
        zf = zipfile.ZipFile(path)
    except zipfile.BadZipFile as e:
        raise CheckpointError(f"not a checkpoint container: {path}") from e
    with zf:
        names = set(zf.namelist())
        if "format.json" not in names:
            raise CheckpointError("missing format entry")
        fmt = json.loads(zf.read("format.json"))
        if fmt.get("format") != FORMAT_TAG:
            raise CheckpointError(
                f"format version mismatch: {fmt.get('format')!r} != {FORMAT_TAG!r}")
        config = json.loads(zf.read("config.json"))
        state = json.loads(zf.read("state.json"))
        groups = json.loads(zf.read("groups.json"))

        def tensors_under(prefix: str) -> dict[str, torch.Tensor]:
            out = {}
            for name in names:
                if name.startswith(prefix):
                    arr = tensor_from_bytes(zf.read(name))
                    out[name[len(prefix):]] = torch.from_numpy(arr)
            return out

        optim_meta = json.loads(zf.read("optim.json")) if "optim.json" in names else None
        return CheckpointData(
            model_cfg=ModelConfig.from_dict(config["model"]),
            schedule_cfg=ScheduleConfig.from_dict(config["schedule"]),
            train_cfg_dict=config.get("train"),
            groups=groups,
            model_state=tensors_under("params/"),
            codec_state=tensors_under("codec/"),
            optim_meta=optim_meta,
            optim_tensors=tensors_under("optim/"),
            ema=tensors_under("ema/"),
            generator_state=zf.read("rng/torch.bin") if "rng/torch.bin" in names else None,
            step=int(state["step"]),
            dataset_hash=state.get("dataset_hash"),
        )


def load_pipeline(path: str | Path) -> tuple[RelightPipeline, CheckpointData]:
    """Rebuild a pipeline from a checkpoint, weights restored bitwise."""
    data = load_checkpoint(path)
    pipeline = RelightPipeline.create(data.model_cfg, data.schedule_cfg, seed=0)
    missing, unexpected = pipeline.model.load_state_dict(data.model_state, strict=True)
    if missing or unexpected:
        raise CheckpointError(f"state mismatch: missing={missing} unexpected={unexpected}")
    if isinstance(pipeline.codec, StridedCodec):
        if not data.codec_state:
            raise CheckpointError("strided codec weights absent from checkpoint")
        pipeline.codec.load_state_dict(data.codec_state)
    return pipeline, data
