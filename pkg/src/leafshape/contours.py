"""Closed-boundary extraction and resampling.

Outer borders of 8-connected foreground components are traced with the
classic raster-scan border-following scheme (hole borders are traced only to
mark them, then discarded). The leaf boundary is picked by area among
plausibly-sized, roughly-centred candidates, with a Canny edge-detection
fallback when thresholding fails.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import imageio, segmentation
from .errors import DegenerateContour, NoContour

RESAMPLE_POINTS = 256

# 8-neighbourhood ring in clockwise screen order (row down, col right)
_RING = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))
_RING_INDEX = {off: k for k, off in enumerate(_RING)}


@dataclass(frozen=True)
class ContourSelectConfig:
    min_perimeter_fraction: float = 0.10
    max_center_distance_fraction: float = 0.25
    canny_low: float = 5.0
    canny_high: float = 10.0

    def __post_init__(self):
        for frac in (self.min_perimeter_fraction, self.max_center_distance_fraction):
            if not 0.0 < frac < 1.0:
                raise ValueError("selection fractions must be in (0, 1)")


DEFAULT_SELECT = ContourSelectConfig()


@dataclass
class Contour:
    """Ordered closed pixel boundary, counter-clockwise by shoelace sign."""

    points: np.ndarray  # (n, 2) float64 columns (x, y)
    area: float = field(init=False)
    perimeter: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
            raise DegenerateContour(f"contour needs >= 4 (x, y) points, got {pts.shape}")
        if _signed_area(pts) < 0:
            pts = pts[::-1].copy()
        self.points = pts
        self.area = abs(_signed_area(pts))
        closed = np.vstack([pts, pts[:1]])
        self.perimeter = float(np.hypot(np.diff(closed[:, 0]), np.diff(closed[:, 1])).sum())
        if self.perimeter <= 0.0:
            raise DegenerateContour("contour has zero perimeter")

    @property
    def centroid(self) -> np.ndarray:
        pts = self.points
        closed = np.vstack([pts, pts[:1]])
        cross = closed[:-1, 0] * closed[1:, 1] - closed[1:, 0] * closed[:-1, 1]
        a = cross.sum() / 2.0
        if abs(a) < 1e-9:
            return pts.mean(axis=0)
        cx = ((closed[:-1, 0] + closed[1:, 0]) * cross).sum() / (6.0 * a)
        cy = ((closed[:-1, 1] + closed[1:, 1]) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])


@dataclass
class SampledContour:
    """Exactly n boundary points at uniform arc-length spacing."""

    points: np.ndarray  # (n, 2) float64
    perimeter: float


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)) / 2.0


def extract_contours(mask: np.ndarray) -> list[Contour]:
    """Trace all outer borders of 8-connected foreground components.

    Borders shorter than four pixels (specks, dominoes) are dropped.
    Raises NoContour when the mask is empty or yields no usable border.
    """
    mask = np.asarray(mask).astype(bool)
    if not mask.any():
        raise NoContour("mask has no foreground pixels")
    f = np.pad(mask.astype(np.int32), 1)
    h, w = f.shape

    left_bg = np.pad(mask, 1) & (np.roll(np.pad(mask, 1), 1, axis=1) == 0)
    right_bg = np.pad(mask, 1) & (np.roll(np.pad(mask, 1), -1, axis=1) == 0)
    candidates = np.argwhere(left_bg | right_bg)  # raster order

    nbd = 1
    outer: list[np.ndarray] = []
    for i, j in candidates:
        if f[i, j] == 1 and f[i, j - 1] == 0:
            is_outer = True
            start2 = (i, j - 1)
        elif f[i, j] >= 1 and f[i, j + 1] == 0:
            is_outer = False
            start2 = (i, j + 1)
        else:
            continue
        nbd += 1
        border = _follow_border(f, (int(i), int(j)), start2, nbd)
        if is_outer and len(border) >= 4:
            pts = np.array([(bj - 1, bi - 1) for bi, bj in border], dtype=np.float64)
            outer.append(pts)

    contours = []
    for pts in outer:
        try:
            contours.append(Contour(pts))
        except DegenerateContour:
            continue
    if not contours:
        raise NoContour("no border of usable length found")
    return contours


def _follow_border(f, start, start2, nbd):
    """Border following from `start`, marking visited pixels with +/- nbd."""
    i, j = start
    # clockwise search around start for the first nonzero neighbour
    base = _RING_INDEX[(start2[0] - i, start2[1] - j)]
    first = None
    for t in range(8):
        di, dj = _RING[(base + t) % 8]
        if f[i + di, j + dj] != 0:
            first = (i + di, j + dj)
            break
    if first is None:
        f[i, j] = -nbd
        return [start]

    border = [start]
    prev = first          # (i2, j2)
    cur = start           # (i3, j3)
    while True:
        # counter-clockwise from the neighbour after prev, around cur
        base = _RING_INDEX[(prev[0] - cur[0], prev[1] - cur[1])]
        nxt = None
        east_zero = False
        for t in range(1, 9):
            di, dj = _RING[(base - t) % 8]
            if f[cur[0] + di, cur[1] + dj] != 0:
                nxt = (cur[0] + di, cur[1] + dj)
                break
            if (di, dj) == (0, 1):
                east_zero = True
        if east_zero:
            f[cur[0], cur[1]] = -nbd
        elif f[cur[0], cur[1]] == 1:
            f[cur[0], cur[1]] = nbd
        if nxt == start and cur == first:
            return border
        border.append(nxt)
        prev, cur = cur, nxt


def select_leaf_contour(contours, image_shape, cfg: ContourSelectConfig = DEFAULT_SELECT):
    """Largest-area contour that is long enough and close enough to the centre.

    Returns None when no candidate passes the filters (callers fall back to
    edge detection).
    """
    h, w = image_shape[:2]
    min_perimeter = cfg.min_perimeter_fraction * min(w, h)
    max_dist = cfg.max_center_distance_fraction * float(np.hypot(w, h))
    centre = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    best = None
    best_key = None
    for c in contours:
        if c.perimeter < min_perimeter:
            continue
        dist = float(np.hypot(*(c.centroid - centre)))
        if dist > max_dist:
            continue
        key = (c.area, -dist, c.perimeter)
        if best is None or key > best_key:
            best, best_key = c, key
    return best


def resample(contour: Contour, n: int = RESAMPLE_POINTS) -> SampledContour:
    """Resample the closed boundary to n points at equal arc-length spacing.

    Points sit at arc lengths i*L/n along the boundary polygon, starting at
    the contour's first point, via linear interpolation along segments.
    """
    pts = contour.points
    closed = np.vstack([pts, pts[:1]])
    seg = np.hypot(np.diff(closed[:, 0]), np.diff(closed[:, 1]))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = cum[-1]
    if length <= 1e-12:
        raise DegenerateContour("cannot resample a zero-length contour")
    targets = np.arange(n) * (length / n)
    xs = np.interp(targets, cum, closed[:, 0])
    ys = np.interp(targets, cum, closed[:, 1])
    return SampledContour(points=np.column_stack([xs, ys]), perimeter=float(length))


def canny_edges(grey: np.ndarray, low: float, high: float, sigma: float = 1.4) -> np.ndarray:
    """Canny edge map: Gaussian smoothing, Sobel gradients, non-maximum
    suppression along the quantised gradient direction, then double-threshold
    hysteresis. Thresholds are in grey-level units of the gradient magnitude.
    """
    sm = ndimage.gaussian_filter(grey.astype(np.float64), sigma)
    gx = ndimage.sobel(sm, axis=1)
    gy = ndimage.sobel(sm, axis=0)
    mag = np.hypot(gx, gy) / 4.0  # Sobel weight sum, back to grey units
    hgt, wdt = mag.shape
    padded = np.pad(mag, 1)

    def shifted(dy, dx):
        return padded[1 + dy:1 + dy + hgt, 1 + dx:1 + dx + wdt]

    ang = np.mod(np.arctan2(gy, gx), np.pi)
    q = np.round(ang / (np.pi / 4)).astype(int) % 4
    keep = np.zeros(mag.shape, dtype=bool)
    for qi, (dy, dx) in enumerate(((0, 1), (1, 1), (1, 0), (1, -1))):
        sel = q == qi
        keep |= sel & (mag >= shifted(dy, dx)) & (mag >= shifted(-dy, -dx))
    nms = np.where(keep, mag, 0.0)

    strong = nms >= high
    if not strong.any():
        return np.zeros(mag.shape, dtype=bool)
    weak = nms >= low
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    good = np.unique(labels[strong])
    return np.isin(labels, good[good > 0])


def canny_fallback(img: np.ndarray, cfg: ContourSelectConfig = DEFAULT_SELECT,
                   closing_radius: int = 5):
    """Recover the leaf contour from Canny edges when thresholding fails.

    Edge map is morphologically closed, then traced and filtered like the
    primary path. Returns None when there is still no candidate.
    """
    grey = imageio.to_grey(img)
    edges = canny_edges(grey, cfg.canny_low, cfg.canny_high)
    if not edges.any():
        return None
    closed = segmentation.morph_close(edges, closing_radius)
    try:
        cands = extract_contours(closed)
    except NoContour:
        return None
    return select_leaf_contour(cands, img.shape, cfg)


def component_fill(mask: np.ndarray, contour: Contour) -> np.ndarray:
    """Filled connected component owning the contour: holes closed, specks gone."""
    labels, _ = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    x0, y0 = contour.points[0]
    own = labels[int(round(y0)), int(round(x0))]
    if own == 0:
        raise NoContour("contour start does not sit on a foreground pixel")
    return ndimage.binary_fill_holes(labels == own)


def contour_fill(contour: Contour, shape) -> np.ndarray:
    """Rasterise the traced boundary pixels and fill the enclosed region."""
    canvas = np.zeros(shape[:2], dtype=bool)
    xs = np.clip(np.rint(contour.points[:, 0]).astype(int), 0, shape[1] - 1)
    ys = np.clip(np.rint(contour.points[:, 1]).astype(int), 0, shape[0] - 1)
    canvas[ys, xs] = True
    return ndimage.binary_fill_holes(canvas)


def write_contour_csv(contour: Contour, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in contour.points:
            writer.writerow([repr(float(x)), repr(float(y))])
