"""Fixed 32-token lighting vocabulary.

A prompt is three tokens: direction octant, nearest color name, intensity
bucket. Token id 32 is the learned null token used for empty prompts.
"""

from __future__ import annotations

import numpy as np

from .lights import LightCondition

OCTANTS = (
    "from-lower-left-back",
    "from-lower-left-front",
    "from-lower-right-back",
    "from-lower-right-front",
    "from-upper-left-back",
    "from-upper-left-front",
    "from-upper-right-back",
    "from-upper-right-front",
)

# 16 anchor colors, matched by nearest RGB distance
COLOR_ANCHORS = (
    ("white", (1.0, 1.0, 1.0)),
    ("gray", (0.55, 0.55, 0.55)),
    ("red", (1.0, 0.2, 0.2)),
    ("green", (0.2, 1.0, 0.2)),
    ("blue", (0.25, 0.35, 1.0)),
    ("yellow", (1.0, 1.0, 0.25)),
    ("cyan", (0.25, 1.0, 1.0)),
    ("magenta", (1.0, 0.3, 1.0)),
    ("orange", (1.0, 0.6, 0.2)),
    ("chartreuse", (0.7, 1.0, 0.25)),
    ("spring", (0.3, 1.0, 0.65)),
    ("azure", (0.3, 0.7, 1.0)),
    ("violet", (0.65, 0.35, 1.0)),
    ("rose", (1.0, 0.4, 0.6)),
    ("teal", (0.25, 0.75, 0.75)),
    ("amber", (1.0, 0.8, 0.45)),
)

INTENSITY_NAMES = (
    "pitch-dark", "very-dim", "dim", "soft", "medium", "bright",
    "very-bright", "blazing",
)
INTENSITY_STEP = 0.25  # bucket k covers [k, k+1) * step, top bucket open

VOCAB: tuple[str, ...] = OCTANTS + tuple(n for n, _ in COLOR_ANCHORS) + INTENSITY_NAMES
VOCAB_SIZE = len(VOCAB)          # 32
NULL_TOKEN = VOCAB_SIZE          # 32; the embedding table has VOCAB_SIZE+1 rows

assert VOCAB_SIZE == 32

_TOKEN_IDS = {name: i for i, name in enumerate(VOCAB)}


def octant_token(direction) -> int:
    x, y, z = float(direction[0]), float(direction[1]), float(direction[2])
    idx = (4 if y >= 0 else 0) + (2 if x >= 0 else 0) + (1 if z >= 0 else 0)
    return idx


def color_token(color) -> int:
    c = np.asarray(color, dtype=np.float64)
    dists = [np.sum((c - np.asarray(rgb)) ** 2) for _, rgb in COLOR_ANCHORS]
    return len(OCTANTS) + int(np.argmin(dists))


def intensity_token(intensity: float) -> int:
    bucket = min(int(intensity / INTENSITY_STEP), len(INTENSITY_NAMES) - 1)
    return len(OCTANTS) + len(COLOR_ANCHORS) + max(bucket, 0)


def tokens_for_light(light: LightCondition) -> tuple[int, int, int]:
    """Three-token description of a light: octant, color name, brightness."""
    return (
        octant_token(light.mean_direction()),
        color_token(light.color),
        intensity_token(light.intensity),
    )


def token_name(token_id: int) -> str:
    if token_id == NULL_TOKEN:
        return "<null>"
    return VOCAB[token_id]


def parse_prompt(text: str) -> tuple[int, ...]:
    """Space-separated token names -> ids. Unknown words raise ValueError."""
    ids = []
    for word in text.split():
        if word not in _TOKEN_IDS:
            raise ValueError(
                f"unknown prompt token {word!r}; valid tokens: {', '.join(VOCAB)}")
        ids.append(_TOKEN_IDS[word])
    return tuple(ids)


def describe_tokens(tokens) -> str:
    return " ".join(token_name(t) for t in tokens)
