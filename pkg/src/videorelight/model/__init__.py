from .config import ModelConfig
from .latent import IdentityCodec, StridedCodec, make_codec, pretrain_strided_codec
from .hdr import HdrEncoder, hdr_decompose, hdr_reconstruct
from .prompt import PromptEmbedder
from .temporal import TemporalAttention
from .unet import (
    ConditionBundle,
    FrameContext,
    RelightModel,
    VideoUNet,
    assemble_input,
    build_context,
)
from .groups import (
    ALL_GROUPS,
    SPATIAL_PRETRAIN,
    TEMPORAL_FINETUNE,
    apply_freeze,
    freeze_spatial,
    group_fingerprints,
    param_groups,
)

__all__ = [
    "ModelConfig",
    "IdentityCodec",
    "StridedCodec",
    "make_codec",
    "pretrain_strided_codec",
    "HdrEncoder",
    "hdr_decompose",
    "hdr_reconstruct",
    "PromptEmbedder",
    "TemporalAttention",
    "ConditionBundle",
    "FrameContext",
    "RelightModel",
    "VideoUNet",
    "assemble_input",
    "build_context",
    "ALL_GROUPS",
    "SPATIAL_PRETRAIN",
    "TEMPORAL_FINETUNE",
    "apply_freeze",
    "freeze_spatial",
    "group_fingerprints",
    "param_groups",
]
