"""Deterministic training orchestration.

Data order is a pure function of (seed, epoch); every stochastic draw comes
from one checkpointed torch.Generator; AdamW (decoupled weight decay) runs
over exactly the parameters the stage's freeze policy selects. Two runs with
the same seed produce byte-identical checkpoints in single-threaded mode, and
a resumed run reproduces the uninterrupted one bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from pathlib import Path

import numpy as np
import torch

from .. import NumericError
from ..diffusion.losses import prepare_batch, training_loss
from ..model.groups import apply_freeze
from ..pipeline import RelightPipeline
from .checkpoint import CheckpointError, load_checkpoint, load_pipeline, save_checkpoint
from .config import TrainConfig

LOG_NAME = "train_log.jsonl"
FINAL_NAME = "checkpoint.ckpt"


def samples_digest(samples) -> str:
    """Content hash of an in-memory sample list (stand-in for the manifest
    hash when training straight from generated data)."""
    h = hashlib.sha256()
    for s in samples:
        for field in ("v_appr", "v_rel", "v_bg", "env", "mask"):
            h.update(getattr(s, field).tobytes())
        h.update(bytes(s.prompt))
    return h.hexdigest()


def _stage_items(samples, stage: str):
    if stage == "spatial_pretrain":
        return [s.frame_slice(k) for s in samples for k in range(s.frames)]
    return list(samples)


def _epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, epoch, 0xDA7A)))
    return rng.permutation(n)


def _batch_indices(cfg: TrainConfig, n: int, step: int) -> np.ndarray:
    per_epoch = n // cfg.batch_size
    if per_epoch < 1:
        raise ValueError(f"batch size {cfg.batch_size} exceeds dataset size {n}")
    epoch, pos = divmod(step, per_epoch)
    order = _epoch_order(cfg.seed, epoch, n)
    return order[pos * cfg.batch_size : (pos + 1) * cfg.batch_size]


def _make_optimizer(cfg: TrainConfig, params) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        params, lr=cfg.effective_lr, betas=(cfg.adam_beta1, cfg.adam_beta2),
        eps=cfg.adam_eps, weight_decay=cfg.weight_decay)


def _optimizer_payload(opt: torch.optim.AdamW, names: list[str]) -> dict:
    sd = opt.state_dict()
    steps = {}
    tensors = {}
    for idx, st in sd["state"].items():
        name = names[idx]
        steps[name] = float(st["step"].item() if torch.is_tensor(st["step"]) else st["step"])
        tensors[f"{name}.exp_avg"] = st["exp_avg"]
        tensors[f"{name}.exp_avg_sq"] = st["exp_avg_sq"]
    meta = {
        "trainable": names,
        "steps": steps,
        "param_groups": [
            {k: v for k, v in g.items() if k != "params"}
            for g in sd["param_groups"]
        ],
    }
    return {"meta": meta, "tensors": tensors}


def _restore_optimizer(opt: torch.optim.AdamW, meta: dict, tensors: dict) -> None:
    sd = opt.state_dict()
    names = meta["trainable"]
    state = {}
    for idx, name in enumerate(names):
        if name not in meta["steps"]:
            continue
        state[idx] = {
            "step": torch.tensor(meta["steps"][name]),
            "exp_avg": tensors[f"{name}.exp_avg"],
            "exp_avg_sq": tensors[f"{name}.exp_avg_sq"],
        }
    groups = []
    for stored, current in zip(meta["param_groups"], sd["param_groups"]):
        merged = dict(current)
        merged.update(stored)
        groups.append(merged)
    opt.load_state_dict({"state": state, "param_groups": groups})


def _run(pipeline: RelightPipeline, items, cfg: TrainConfig, out_dir: Path,
         dataset_hash: str, generator: torch.Generator,
         optimizer: torch.optim.AdamW, trainable_names: list[str],
         start_step: int, ema: dict[str, torch.Tensor] | None) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / LOG_NAME
    model = pipeline.model
    model.train()
    params = [dict(model.named_parameters())[n] for n in trainable_names]
    t0 = time.monotonic()

    def checkpoint(path: Path, step: int) -> Path:
        return save_checkpoint(
            path, pipeline, train_cfg=cfg,
            optimizer_payload=_optimizer_payload(optimizer, trainable_names),
            generator_state=bytes(generator.get_state().numpy().tobytes()),
            step=step, dataset_hash=dataset_hash, ema=ema)

    with log_path.open("a") as log:
        for step in range(start_step, cfg.max_steps):
            idx = _batch_indices(cfg, len(items), step)
            batch = prepare_batch(pipeline, [items[i] for i in idx])
            loss = training_loss(
                pipeline, batch, generator,
                prompt_dropout=cfg.prompt_dropout, hdr_dropout=cfg.hdr_dropout,
                bg_dropout=cfg.bg_dropout)
            loss_val = float(loss.detach())
            if not math.isfinite(loss_val):
                snap = checkpoint(out_dir / "diagnostic_nan.ckpt", step)
                raise NumericError(
                    f"non-finite loss {loss_val} at step {step + 1}; "
                    f"diagnostic snapshot at {snap}")
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            grad_norm = float(torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip))
            optimizer.step()
            if ema is not None:
                with torch.no_grad():
                    for name, p in zip(trainable_names,
                                       (dict(model.named_parameters())[n]
                                        for n in trainable_names)):
                        ema[name].mul_(cfg.ema_decay).add_(p, alpha=1 - cfg.ema_decay)
            done = step + 1
            if done % cfg.log_interval == 0 or done == cfg.max_steps:
                log.write(json.dumps({
                    "step": done, "loss": loss_val,
                    "lr": optimizer.param_groups[0]["lr"],
                    "grad_norm": grad_norm,
                    "wall": time.monotonic() - t0,
                }) + "\n")
                log.flush()
            if cfg.checkpoint_interval and done % cfg.checkpoint_interval == 0 \
                    and done != cfg.max_steps:
                checkpoint(out_dir / f"checkpoint_step{done:06d}.ckpt", done)
    model.eval()
    return checkpoint(out_dir / FINAL_NAME, cfg.max_steps)


def train(pipeline: RelightPipeline, samples, cfg: TrainConfig,
          out_dir: str | Path, dataset_hash: str | None = None) -> Path:
    """Run one training stage from scratch; returns the final checkpoint."""
    cfg.validate()
    out_dir = Path(out_dir)
    items = _stage_items(samples, cfg.stage)
    dataset_hash = dataset_hash or samples_digest(samples)
    trainable_names = apply_freeze(pipeline.model, cfg.train_groups())
    params = [dict(pipeline.model.named_parameters())[n] for n in trainable_names]
    optimizer = _make_optimizer(cfg, params)
    generator = torch.Generator().manual_seed(cfg.seed)
    ema = None
    if cfg.ema_decay is not None:
        ema = {n: dict(pipeline.model.named_parameters())[n].detach().clone()
               for n in trainable_names}
    return _run(pipeline, items, cfg, out_dir, dataset_hash, generator,
                optimizer, trainable_names, start_step=0, ema=ema)


def resume(ckpt_path: str | Path, samples, out_dir: str | Path,
           max_steps: int | None = None,
           dataset_hash: str | None = None) -> Path:
    """Continue an interrupted run from its checkpoint; the continuation
    reproduces the uninterrupted run's states bitwise."""
    pipeline, data = load_pipeline(ckpt_path)
    if data.train_cfg_dict is None:
        raise CheckpointError("checkpoint carries no training config")
    if data.optim_meta is None:
        raise CheckpointError("checkpoint carries no optimizer state; cannot resume")
    if data.generator_state is None:
        raise CheckpointError("checkpoint carries no RNG state; cannot resume")
    cfg = TrainConfig.from_dict(data.train_cfg_dict)
    if max_steps is not None:
        cfg = TrainConfig.from_dict({**cfg.to_dict(), "max_steps": max_steps})
    dataset_hash = dataset_hash or samples_digest(samples)
    if data.dataset_hash is not None and data.dataset_hash != dataset_hash:
        raise CheckpointError(
            f"dataset hash {dataset_hash[:12]}... does not match the checkpoint's "
            f"{data.dataset_hash[:12]}...; refusing to resume")
    items = _stage_items(samples, cfg.stage)
    trainable_names = apply_freeze(pipeline.model, cfg.train_groups())
    params = [dict(pipeline.model.named_parameters())[n] for n in trainable_names]
    if trainable_names != data.optim_meta["trainable"]:
        raise CheckpointError("trainable parameter set changed since checkpoint")
    optimizer = _make_optimizer(cfg, params)
    _restore_optimizer(optimizer, data.optim_meta, data.optim_tensors)
    generator = torch.Generator()
    generator.set_state(torch.from_numpy(
        np.frombuffer(data.generator_state, dtype=np.uint8).copy()))
    ema = data.ema or None
    return _run(pipeline, items, cfg, Path(out_dir), dataset_hash, generator,
                optimizer, trainable_names, start_step=data.step, ema=ema)
