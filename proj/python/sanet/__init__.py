"""Lane marker extraction for event-camera frames.

Thin Python surface over the C++ core: directional slice convolutions,
the trained segmentation model, evaluation metrics, event accumulation
and the synthetic scene generator.
"""

from sanet._core import (  # noqa: F401
    DIRECTIONS,
    ConfigError,
    DataError,
    DimensionError,
    Model,
    NumericError,
    __version__,
    accumulate,
    confusion,
    gen_scene,
    msc_forward,
    poly_lr,
    rasterize,
    shift_message,
    slice_conv,
    slice_conv_reference,
)

__all__ = [
    "DIRECTIONS",
    "ConfigError",
    "DataError",
    "DimensionError",
    "Model",
    "NumericError",
    "__version__",
    "accumulate",
    "confusion",
    "gen_scene",
    "msc_forward",
    "poly_lr",
    "rasterize",
    "shift_message",
    "slice_conv",
    "slice_conv_reference",
]
