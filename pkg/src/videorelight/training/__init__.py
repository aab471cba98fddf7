from .config import TrainConfig
from .checkpoint import (
    CheckpointError,
    load_checkpoint,
    load_pipeline,
    save_checkpoint,
)
from .loop import resume, samples_digest, train

__all__ = [
    "TrainConfig",
    "CheckpointError",
    "load_checkpoint",
    "load_pipeline",
    "save_checkpoint",
    "resume",
    "samples_digest",
    "train",
]
