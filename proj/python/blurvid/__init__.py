"""Recover a short video from one motion-blurred image under an affine motion model.

Images are float64 numpy arrays in [0, 1], shaped (H, W) or (H, W, 3).
"""

import sys

from ._core import (
    AffineParams,
    Error,
    InvalidArgument,
    IoError,
    NonFiniteError,
    ShapeError,
    SingularTransformError,
    blur_forward,
    compose,
    default_config,
    disk_on_texture,
    extract,
    invert,
    load_image,
    main,
    middle_mask,
    parse_motion,
    propagate_masks,
    psnr,
    psnr_masked,
    render_frames,
    save_image,
    ssim,
    step_transform,
    synth_alpha,
    synthesize,
    tv_value,
    warp,
)

__all__ = [name for name in dir() if not name.startswith("_") and name != "sys"]


def _cli():
    sys.exit(main(sys.argv[1:]))
