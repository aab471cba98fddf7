"""The noise-prediction training objective with condition dropout.

Per draw: corrupt the encoded target with q_sample at a uniform timestep and
regress the drawn noise under the full condition set. Prompt, lighting, and
background conditions are independently dropped (to the null token / zero
tokens / zero latents) so the sampler can run with any subset present.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

from ..model.unet import ConditionBundle, assemble_input, build_context
from .schedule import q_sample


def prepare_batch(pipeline, samples) -> dict:
    """Encode a list of RelightSamples into stacked training tensors."""
    z0 = torch.stack([pipeline.codec.encode(s.v_appr) for s in samples])
    z_rel = torch.stack([pipeline.codec.encode(s.v_rel) for s in samples])
    z_bg = torch.stack([pipeline.codec.encode(s.v_bg) for s in samples])
    env = torch.stack([torch.from_numpy(np.asarray(s.env, np.float32)) for s in samples])
    prompts = [tuple(s.prompt) for s in samples]
    return {"z0": z0, "z_rel": z_rel, "z_bg": z_bg, "env": env, "prompts": prompts}


def training_loss(pipeline, batch: dict, generator: torch.Generator,
                  prompt_dropout: float = 0.1, hdr_dropout: float = 0.1,
                  bg_dropout: float = 0.1, t=None, noise=None,
                  model=None) -> torch.Tensor:
    """Mean squared error between the drawn noise and the prediction.

    ``t``/``noise`` override the random draws (tests, grad checks);
    ``model`` overrides the pipeline's denoiser (oracle hooks).
    """
    model = model if model is not None else pipeline.model
    sched = pipeline.schedule
    z0 = batch["z0"]
    b = z0.shape[0]
    dtype = z0.dtype

    if t is None:
        t = torch.randint(1, sched.timesteps + 1, (b,), generator=generator)
    else:
        t = torch.as_tensor(t)
        if t.ndim == 0:
            t = t[None].expand(b)
    if noise is None:
        noise = torch.randn(z0.shape, generator=generator, dtype=dtype)
    z_t = q_sample(sched, z0, t, noise)

    drops = torch.rand(3, b, generator=generator)
    drop_prompt = drops[0] < prompt_dropout
    drop_hdr = drops[1] < hdr_dropout
    drop_bg = drops[2] < bg_dropout

    prompts = [() if drop_prompt[i] else batch["prompts"][i] for i in range(b)]
    y, y_mask = pipeline.model.prompt_embedder.embed_batch(prompts)
    hdr_tokens = pipeline.model.hdr_encoder.encode_env(batch["env"].to(dtype))
    if drop_hdr.any():
        keep = (~drop_hdr).to(dtype).reshape(b, 1, 1, 1)
        hdr_tokens = hdr_tokens * keep
    z_bg = batch["z_bg"]
    if drop_bg.any():
        z_bg = z_bg * (~drop_bg).to(dtype).reshape(b, 1, 1, 1, 1)

    bundle = ConditionBundle(z_rel=batch["z_rel"], z_bg=z_bg, y=y.to(dtype),
                             hdr_tokens=hdr_tokens, y_mask=y_mask)
    x = assemble_input(z_t, bundle)
    ctx = build_context(bundle.y, bundle.hdr_tokens, bundle.frames, bundle.y_mask)
    pred = model(x, t, ctx)
    return F.mse_loss(pred, noise)
