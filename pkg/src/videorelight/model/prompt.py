from __future__ import annotations

import torch
import torch.nn as nn


class PromptEmbedder(nn.Module):
    """Learned token table plus learned positional offsets. Row ``vocab_size``
    is the null token used for empty prompts."""

    def __init__(self, d_ctx: int, vocab_size: int = 32, max_len: int = 8):
        super().__init__()
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.null_id = vocab_size
        self.table = nn.Embedding(vocab_size + 1, d_ctx)
        self.pos = nn.Parameter(torch.zeros(max_len, d_ctx))

    def forward(self, tokens) -> torch.Tensor:
        ids = torch.as_tensor(list(tokens), dtype=torch.long)
        if ids.numel() == 0:
            ids = torch.tensor([self.null_id], dtype=torch.long)
        if ids.ndim != 1:
            raise ValueError("prompt must be a flat token sequence")
        if len(ids) > self.max_len:
            raise ValueError(f"prompt length {len(ids)} exceeds max {self.max_len}")
        if (ids < 0).any() or (ids > self.null_id).any():
            raise ValueError(f"token id out of vocabulary (0..{self.null_id})")
        emb = self.table(ids) + self.pos[: len(ids)]
        return emb

    def null_embedding(self) -> torch.Tensor:
        return self([])

    def embed_batch(self, prompts) -> tuple[torch.Tensor, torch.Tensor]:
        """Pad a list of prompts to a common length.

        Returns (B, Pmax, d_ctx) embeddings and a (B, Pmax) bool mask that is
        True on real rows.
        """
        embs = [self(p) for p in prompts]
        pmax = max(e.shape[0] for e in embs)
        d = embs[0].shape[1]
        out = torch.zeros(len(embs), pmax, d, dtype=embs[0].dtype)
        mask = torch.zeros(len(embs), pmax, dtype=torch.bool)
        for i, e in enumerate(embs):
            out[i, : e.shape[0]] = e
            mask[i, : e.shape[0]] = True
        return out, mask
