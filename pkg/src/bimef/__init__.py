"""Low-light image enhancement by fusing the input with a synthetic exposure."""

from .camera import BtfParams, CameraModel, apply_btf, btf_params, crf
from .fusion import EnhanceConfig, EnhanceOutput, enhance, fuse, fuse_weighted, weight_map
from .illumination import SolverConfig, SolverError, estimate_illumination
from .image import (
    Histogram,
    ImageFormatError,
    entropy,
    geometric_brightness,
    histogram,
    lightness,
    load_image,
    resize_nearest,
    save_image,
)
from .metrics import LoeConfig, loe
from .sampler import KSearchConfig, optimal_k

__version__ = "0.1.0"
