"""Image loading, colour conversions and mask import/export.

Accepted input formats are PNG and PGM/PPM (other Pillow-readable formats
work too). Images are held as uint8 numpy arrays: (H, W) for greyscale,
(H, W, 3) for RGB.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage

MIN_DIM = 16

# ITU-R 601 luma weights, fixed so grey conversion is reproducible
_LUMA = np.array([0.299, 0.587, 0.114])


def load_image(path) -> np.ndarray:
    """Read an image file as uint8, greyscale (H, W) or RGB (H, W, 3)."""
    with PILImage.open(path) as im:
        if im.mode in ("1", "L", "I", "I;16", "F"):
            arr = np.asarray(im.convert("L"), dtype=np.uint8)
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    validate_image(arr)
    return arr


def validate_image(img: np.ndarray) -> None:
    if img.ndim == 3 and img.shape[2] != 3:
        raise ValueError(f"expected 1 or 3 channels, got shape {img.shape}")
    if img.ndim not in (2, 3):
        raise ValueError(f"expected 2-D or 3-D image array, got ndim={img.ndim}")
    h, w = img.shape[:2]
    if h < MIN_DIM or w < MIN_DIM:
        raise ValueError(f"image too small ({w}x{h}); minimum is {MIN_DIM}x{MIN_DIM}")


def to_grey(img: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma as float64 in [0, 255]."""
    if img.ndim == 2:
        return img.astype(np.float64)
    return img.astype(np.float64) @ _LUMA


def saturation(img: np.ndarray) -> np.ndarray:
    """HSV saturation channel as float64 in [0, 255]; zero for greyscale input."""
    if img.ndim == 2:
        return np.zeros(img.shape, dtype=np.float64)
    f = img.astype(np.float64)
    mx = f.max(axis=2)
    mn = f.min(axis=2)
    out = np.zeros_like(mx)
    nz = mx > 0
    out[nz] = 255.0 * (mx[nz] - mn[nz]) / mx[nz]
    return out


def mask_to_image(mask: np.ndarray) -> np.ndarray:
    """Render a binary mask as a dark-foreground-on-white uint8 image.

    The dark-on-light convention matches leaf photographs, so a rendered
    mask can be fed back through segmentation.
    """
    return np.where(mask, 0, 255).astype(np.uint8)


def save_mask_png(mask: np.ndarray, path) -> None:
    """Export a mask as a 1-bit PNG (foreground black)."""
    PILImage.fromarray(mask_to_image(mask)).convert("1").save(path, format="PNG")


def resize_max_dim(img: np.ndarray, target: int) -> np.ndarray:
    """Bilinear-resize so that max(H, W) == target; no-op when already there."""
    h, w = img.shape[:2]
    if max(h, w) == target:
        return img
    scale = target / max(h, w)
    new_w = max(MIN_DIM, int(round(w * scale)))
    new_h = max(MIN_DIM, int(round(h * scale)))
    im = PILImage.fromarray(img)
    return np.asarray(im.resize((new_w, new_h), PILImage.BILINEAR), dtype=np.uint8)
