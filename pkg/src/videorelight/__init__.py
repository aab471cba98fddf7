"""Video relighting at desk scale: exact synthetic pairs, a frame-inflated
denoising U-Net with multi-modal lighting conditioning, and a
brightness-ensemble sampler."""

__version__ = "0.1.0"


class DataError(Exception):
    """Bad or missing input data (datasets, checkpoints, sample dirs)."""


class NumericError(Exception):
    """Numerical failure during training or sampling (NaN/inf loss)."""
