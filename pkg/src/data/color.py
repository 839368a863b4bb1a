"""
Color conversion and model-input construction.

The network consumes 6-channel images: RGB in channels 0-2 and the hexcone
HSV conversion of the same pixels in channels 3-5, all scaled to [0, 1].

Author: Facet Development
"""

from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F
from matplotlib import colors as mcolors

from .schema import ImageSample
from ..utils.errors import DataError


def _check_unit_range(arr: np.ndarray, name: str) -> None:
    if arr.shape[-1] != 3:
        raise DataError(f"{name} must have 3 channels in the last axis, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise DataError(
            f"{name} values must lie in [0, 1], found range "
            f"[{float(arr.min()):.4f}, {float(arr.max()):.4f}]"
        )


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """
    Convert an RGB image to HSV with every channel in [0, 1].

    Uses the standard hexcone model; hue is 0 for achromatic pixels.

    Args:
        rgb: Array of shape (..., 3) with values in [0, 1]

    Returns:
        float64 array of the same shape

    Raises:
        DataError: If any value lies outside [0, 1]

    Example:
        >>> rgb_to_hsv(np.array([1.0, 0.0, 0.0]))
        array([0., 1., 1.])
    """
    arr = np.asarray(rgb, dtype=np.float64)
    _check_unit_range(arr, "rgb")
    return mcolors.rgb_to_hsv(arr)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """
    Convert an HSV image (channels in [0, 1]) back to RGB.

    Args:
        hsv: Array of shape (..., 3) with values in [0, 1]

    Returns:
        float64 array of the same shape
    """
    arr = np.asarray(hsv, dtype=np.float64)
    _check_unit_range(arr, "hsv")
    return mcolors.hsv_to_rgb(arr)


def resize_image(image: np.ndarray, size: int) -> np.ndarray:
    """
    Bilinear resize of an H x W x C float image to size x size.

    Values are clipped back to [0, 1] to absorb rounding.
    """
    if image.shape[0] == size and image.shape[1] == size:
        return image
    tensor = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
    tensor = tensor.permute(2, 0, 1).unsqueeze(0)
    resized = F.interpolate(tensor, size=(size, size), mode="bilinear", align_corners=False)
    return resized[0].permute(1, 2, 0).clamp_(0.0, 1.0).numpy()


def resize_mask(mask: np.ndarray, size: int) -> np.ndarray:
    """Nearest-neighbor resize of an integer mask (labels are preserved)."""
    if mask.shape[0] == size and mask.shape[1] == size:
        return mask
    tensor = torch.from_numpy(mask.astype(np.float32))[None, None]
    resized = F.interpolate(tensor, size=(size, size), mode="nearest")
    return resized[0, 0].numpy().astype(mask.dtype)


def make_model_input(sample: ImageSample, size: Optional[int] = None) -> np.ndarray:
    """
    Build the 6-channel network input for one sample.

    Args:
        sample: Source sample
        size: Target side length; None keeps the sample resolution

    Returns:
        float32 array of shape size x size x 6: RGB then HSV of the resized RGB

    Example:
        >>> x = make_model_input(sample, size=256)
        >>> x.shape
        (256, 256, 6)
    """
    size = size or sample.image_size
    rgb = resize_image(np.asarray(sample.rgb, dtype=np.float32), size)
    hsv = rgb_to_hsv(rgb)
    return np.concatenate([rgb, hsv.astype(np.float32)], axis=-1)

