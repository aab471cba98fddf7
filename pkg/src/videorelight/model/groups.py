"""Parameter partitioning and freeze policies.

Every trainable parameter belongs to exactly one group:
  spatial      — the per-frame backbone (convs, self-attn, prompt K/V, norms)
  temporal     — frame-axis attention modules and frame-position embeddings
  hdr_path     — the lighting MLP and its cross-attention K/V projections
  prompt_path  — the token table and prompt positional offsets

The image pretrain stage trains spatial+prompt; the video finetune trains
temporal+hdr while the spatial backbone stays bit-frozen.
"""

from __future__ import annotations

import hashlib

import torch.nn as nn

GROUP_NAMES = ("spatial", "temporal", "hdr_path", "prompt_path")
SPATIAL_PRETRAIN = ("spatial", "prompt_path")
TEMPORAL_FINETUNE = ("temporal", "hdr_path")
ALL_GROUPS = GROUP_NAMES


def group_of(name: str) -> str:
    if name.startswith("hdr_encoder."):
        return "hdr_path"
    if ".ctx_attn.k_hdr." in name or ".ctx_attn.v_hdr." in name:
        return "hdr_path"
    if name.startswith("prompt_embedder."):
        return "prompt_path"
    if ".temporal." in name:
        return "temporal"
    return "spatial"


def param_groups(model: nn.Module) -> dict[str, list[str]]:
    """Partition all trainable parameter names; raises if any parameter is
    left unclassified or double-counted."""
    groups: dict[str, list[str]] = {g: [] for g in GROUP_NAMES}
    seen = set()
    for name, _ in model.named_parameters():
        g = group_of(name)
        if name in seen:
            raise ValueError(f"parameter {name} classified twice")
        seen.add(name)
        groups[g].append(name)
    total = sum(len(v) for v in groups.values())
    if total != len(list(model.named_parameters())):
        raise ValueError("parameter groups do not partition the model")
    return groups


def freeze_spatial(groups: dict[str, list[str]],
                   include_prompt: bool = False) -> set[str]:
    """Names trainable during the video finetune: temporal + hdr_path
    (optionally prompt_path); spatial always excluded."""
    trainable = set(groups["temporal"]) | set(groups["hdr_path"])
    if include_prompt:
        trainable |= set(groups["prompt_path"])
    return trainable


def apply_freeze(model: nn.Module, train_groups) -> list[str]:
    """Set requires_grad per group membership; returns trainable names in
    deterministic (module) order."""
    for g in train_groups:
        if g not in GROUP_NAMES:
            raise ValueError(f"unknown parameter group {g!r}")
    train_groups = set(train_groups)
    trainable = []
    for name, p in model.named_parameters():
        on = group_of(name) in train_groups
        p.requires_grad_(on)
        if on:
            trainable.append(name)
    return trainable


def group_fingerprints(model: nn.Module,
                       groups: dict[str, list[str]] | None = None) -> dict[str, str]:
    """sha256 over each group's raw parameter bytes (order: name-sorted)."""
    groups = groups or param_groups(model)
    params = dict(model.named_parameters())
    out = {}
    for g, names in groups.items():
        h = hashlib.sha256()
        for name in sorted(names):
            h.update(name.encode())
            h.update(params[name].detach().cpu().numpy().tobytes())
        out[g] = h.hexdigest()
    return out
