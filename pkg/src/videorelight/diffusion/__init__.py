from .schedule import NoiseSchedule, ScheduleConfig, make_schedule, q_sample
from .losses import prepare_batch, training_loss
from .sampling import (
    SamplerConfig,
    iie_sample,
    make_bundle,
    per_frame_sample,
    sample,
    timestep_stride,
)

__all__ = [
    "NoiseSchedule",
    "ScheduleConfig",
    "make_schedule",
    "q_sample",
    "prepare_batch",
    "training_loss",
    "SamplerConfig",
    "iie_sample",
    "make_bundle",
    "per_frame_sample",
    "sample",
    "timestep_stride",
]
