"""The fixed-length shape feature vector.

Layout: [solidity, circularity, rectangularity, compactness] followed, for
each LAII scale in ascending order, by a 143-entry block:

    10 statistics (mean/std of the signal, its circular first and second
    differences, and their absolute values), area under the curve, bending
    energy, signal entropy, spectral centroid, then the 129 sum-normalised
    real-FFT magnitude bins.

With the default five scales that is 4 + 5 * 143 = 719 features. Every
LAII-derived feature is invariant to circular shifts of the signal, so the
pipeline does not depend on where the boundary trace starts.
"""

from __future__ import annotations

import numpy as np

from .contours import Contour
from .errors import DegenerateContour, DegenerateSpectrum, LengthMismatch
from .laii import LaiiSignal

SIGNAL_LENGTH = 256
SPECTRUM_BINS = SIGNAL_LENGTH // 2 + 1  # 129 for real input
ENTROPY_BINS = 128
BASIC_FEATURES = 4
PER_SCALE_FEATURES = 10 + 4 + SPECTRUM_BINS  # 143


def feature_count(num_scales: int) -> int:
    return BASIC_FEATURES + num_scales * PER_SCALE_FEATURES


def basic_shape_features(contour: Contour) -> np.ndarray:
    """[solidity, circularity, rectangularity, compactness].

    Solidity compares the contour area to its convex hull, circularity to
    the circle of equal perimeter, rectangularity to the minimum-area
    enclosing rectangle; compactness is perimeter over area.
    """
    area = contour.area
    perim = contour.perimeter
    if area < 1e-9:
        raise DegenerateContour("contour area is (near) zero")
    hull = convex_hull(contour.points)
    hull_area = _polygon_area(hull)
    solidity = area / hull_area if hull_area > 0 else 0.0
    circularity = 4.0 * np.pi * area / (perim * perim)
    rect_area = min_area_rect(hull)
    rectangularity = area / rect_area if rect_area > 0 else 0.0
    compactness = perim / area
    return np.array([solidity, circularity, rectangularity, compactness])


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (monotone chain), counter-clockwise, no collinear vertices."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _polygon_area(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))) / 2.0


def min_area_rect(hull: np.ndarray) -> float:
    """Area of the minimum rectangle containing the hull (rotating calipers:
    one rectangle side is always flush with a hull edge)."""
    if len(hull) < 3:
        return 0.0
    edges = np.roll(hull, -1, axis=0) - hull
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    keep = lengths > 1e-12
    if not keep.any():
        return 0.0
    dirs = edges[keep] / lengths[keep, None]
    normals = np.column_stack([-dirs[:, 1], dirs[:, 0]])
    proj_u = hull @ dirs.T
    proj_v = hull @ normals.T
    areas = (proj_u.max(axis=0) - proj_u.min(axis=0)) * (proj_v.max(axis=0) - proj_v.min(axis=0))
    return float(areas.min())


def statistical_features(values: np.ndarray) -> np.ndarray:
    """Mean and population std of the signal, circular d1, d2, |d1| and |d2|."""
    k = np.asarray(values, dtype=np.float64)
    d1 = np.roll(k, -1) - k
    d2 = np.roll(d1, -1) - d1
    out = []
    for series in (k, d1, d2, np.abs(d1), np.abs(d2)):
        out.append(series.mean())
        out.append(series.std())
    return np.array(out)


def area_under_curve(values: np.ndarray) -> float:
    """Trapezoidal integral over the sample index with circular closure."""
    k = np.asarray(values, dtype=np.float64)
    return float(0.5 * (k + np.roll(k, -1)).sum())


def bending_energy(values: np.ndarray) -> float:
    """Mean of the squared signal entries."""
    k = np.asarray(values, dtype=np.float64)
    return float((k * k).sum() / len(k))


def signal_entropy(values: np.ndarray, bins: int = ENTROPY_BINS) -> float:
    """Shannon entropy (nats) of a fixed-range [0, 1] histogram of the signal.

    Fixed bin edges keep the feature comparable across shapes; empty bins
    contribute nothing.
    """
    hist, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=bins, range=(0.0, 1.0))
    total = hist.sum()
    if total == 0:
        return 0.0
    q = hist[hist > 0] / total
    return float(-(q * np.log(q)).sum())


def rfft_spectrum(values: np.ndarray) -> np.ndarray:
    """Sum-normalised magnitudes of the real FFT (bins 0..N/2).

    An all-zero signal yields an all-zero spectrum; downstream centroid
    computation rejects it explicitly.
    """
    k = np.asarray(values, dtype=np.float64)
    mags = np.abs(np.fft.rfft(k))
    total = mags.sum()
    if total == 0.0:
        return np.zeros_like(mags)
    return mags / total


def spectral_centroid(spectrum: np.ndarray) -> float:
    """Magnitude-weighted mean bin index."""
    s = np.asarray(spectrum, dtype=np.float64)
    total = s.sum()
    if total <= 0.0:
        raise DegenerateSpectrum("spectrum has zero total magnitude")
    return float((np.arange(len(s)) * s).sum() / total)


def scale_block(signal: LaiiSignal) -> np.ndarray:
    """The 143 features derived from one LAII signal."""
    values = signal.values
    spec = rfft_spectrum(values)
    head = np.concatenate([
        statistical_features(values),
        [area_under_curve(values), bending_energy(values),
         signal_entropy(values), spectral_centroid(spec)],
    ])
    return np.concatenate([head, spec])


def assemble(contour: Contour, laiis: list[LaiiSignal],
             expected_scales: int | None = None) -> np.ndarray:
    """Concatenate basic shape features with one block per LAII scale.

    Raises LengthMismatch when the scale count disagrees with the model
    configuration or a signal is not SIGNAL_LENGTH samples long.
    """
    if expected_scales is not None and len(laiis) != expected_scales:
        raise LengthMismatch(f"expected {expected_scales} LAII scales, got {len(laiis)}")
    if not laiis:
        raise LengthMismatch("at least one LAII scale is required")
    scales = [s.scale_percent for s in laiis]
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError(f"LAII scales must be ascending, got {scales}")
    for s in laiis:
        if len(s.values) != SIGNAL_LENGTH:
            raise LengthMismatch(
                f"LAII signal at scale {s.scale_percent}% has length {len(s.values)}, "
                f"expected {SIGNAL_LENGTH}")
    vec = np.concatenate([basic_shape_features(contour)] + [scale_block(s) for s in laiis])
    assert len(vec) == feature_count(len(laiis))
    return vec


def feature_names(scales) -> list[str]:
    """Human-readable names in vector order, for documentation and debugging."""
    names = ["solidity", "circularity", "rectangularity", "compactness"]
    stat_names = ["mean", "std", "d1_mean", "d1_std", "d2_mean", "d2_std",
                  "absd1_mean", "absd1_std", "absd2_mean", "absd2_std"]
    for s in scales:
        tag = f"s{s:g}"
        names += [f"{tag}.{n}" for n in stat_names]
        names += [f"{tag}.auc", f"{tag}.bending_energy", f"{tag}.entropy", f"{tag}.centroid"]
        names += [f"{tag}.fft{i:03d}" for i in range(SPECTRUM_BINS)]
    return names
