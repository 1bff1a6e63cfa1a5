"""Binary leaf segmentation.

Background grey level and saturation are estimated from the image edges and
used as thresholds; the two thresholded masks are morphologically closed and
merged. Stems are deleted with a square-kernel top-hat, guarded so thin
shapes (pine needles) survive intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import imageio
from .errors import EmptySegmentation


@dataclass(frozen=True)
class SegmentationConfig:
    closing_radius_px: int = 5
    tophat_kernel_fraction: float = 0.03
    stem_area_loss_limit: float = 0.10
    grey_threshold_offset: float = 25.0
    saturation_threshold_offset: float = 25.0

    def __post_init__(self):
        if self.closing_radius_px < 1:
            raise ValueError("closing_radius_px must be >= 1")
        if not 0.0 < self.stem_area_loss_limit < 1.0:
            raise ValueError("stem_area_loss_limit must be in (0, 1)")


DEFAULT_SEGMENTATION = SegmentationConfig()


def disk_element(radius: int) -> np.ndarray:
    """Discrete disk structuring element: offsets with dx^2 + dy^2 <= r^2."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    dy, dx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return (dx * dx + dy * dy) <= radius * radius


def estimate_background(img: np.ndarray) -> tuple[float, float]:
    """Background grey level and saturation from the four 1-pixel image edges.

    Each edge contributes its mean; the maximum over the four edges is
    returned per channel.
    """
    imageio.validate_image(img)
    grey = imageio.to_grey(img)
    sat = imageio.saturation(img)
    grey_level = max(float(e.mean()) for e in _edges(grey))
    sat_level = max(float(e.mean()) for e in _edges(sat))
    return grey_level, sat_level


def _edges(plane: np.ndarray):
    return plane[0, :], plane[-1, :], plane[:, 0], plane[:, -1]


def morph_close(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilate then erode with a discrete disk; outside the image is background."""
    se = disk_element(radius)
    padded = np.pad(mask.astype(bool), radius)
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, se), se)
    return closed[radius:-radius, radius:-radius]


def morph_open(mask: np.ndarray, side: int) -> np.ndarray:
    """Erode then dilate with a square kernel; outside the image is background."""
    if side < 1:
        raise ValueError("side must be >= 1")
    se = np.ones((side, side), dtype=bool)
    pad = side  # enough to keep the dilation inside the padded frame
    padded = np.pad(mask.astype(bool), pad)
    opened = ndimage.binary_dilation(ndimage.binary_erosion(padded, se), se)
    return opened[pad:-pad, pad:-pad]


def morph_tophat(mask: np.ndarray, side: int) -> np.ndarray:
    """White top-hat: mask minus its square-kernel opening."""
    return mask.astype(bool) & ~morph_open(mask, side)


def segment(img: np.ndarray, cfg: SegmentationConfig = DEFAULT_SEGMENTATION) -> np.ndarray:
    """Threshold against the estimated background, close, and merge the branches.

    Greyscale branch keeps pixels darker than (background grey - offset);
    saturation branch keeps pixels more saturated than (background saturation
    + offset) and is skipped for single-channel input. Raises
    EmptySegmentation when nothing survives.
    """
    bg_grey, bg_sat = estimate_background(img)
    grey_mask = imageio.to_grey(img) < (bg_grey - cfg.grey_threshold_offset)
    merged = morph_close(grey_mask, cfg.closing_radius_px) if grey_mask.any() else grey_mask
    if img.ndim == 3:
        sat_mask = imageio.saturation(img) > (bg_sat + cfg.saturation_threshold_offset)
        if sat_mask.any():
            merged = merged | morph_close(sat_mask, cfg.closing_radius_px)
    if not merged.any():
        raise EmptySegmentation("no foreground pixels after thresholding")
    return merged


def stem_kernel_side(shape: tuple[int, int], fraction: float) -> int:
    """Odd square-kernel side proportional to the larger image dimension."""
    side = int(round(fraction * max(shape[:2])))
    if side % 2 == 0:
        side += 1
    return max(side, 3)


def remove_stem(mask: np.ndarray, cfg: SegmentationConfig = DEFAULT_SEGMENTATION) -> np.ndarray:
    """Subtract the top-hat response (thin protrusions such as stems).

    If that would shave off more than stem_area_loss_limit of the area the
    mask is returned unchanged, which keeps needle-like shapes alive.
    """
    mask = mask.astype(bool)
    area = int(np.count_nonzero(mask))
    if area == 0:
        raise EmptySegmentation("cannot remove stem from an empty mask")
    side = stem_kernel_side(mask.shape, cfg.tophat_kernel_fraction)
    candidate = mask & ~morph_tophat(mask, side)
    if np.count_nonzero(candidate) < (1.0 - cfg.stem_area_loss_limit) * area:
        return mask.copy()
    return candidate
