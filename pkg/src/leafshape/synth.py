"""Synthetic shape corpus generation.

Renders parametric shape families (disk, square, star, serrated ellipse,
lobed quasi-leaf) as dark-on-white binary images in dataset layout, with
seeded random rotation, scale and boundary jitter. Geometry is drawn in unit
coordinates and only multiplied by the raster size, so the same seed at a
different resolution produces the same shapes, rescaled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .dataset import Dataset

VERTICES = 720


@dataclass(frozen=True)
class ShapeClass:
    name: str
    kind: str
    params: dict = field(default_factory=dict)


DEFAULT_FAMILIES = (
    ShapeClass("disk", "disk"),
    ShapeClass("square", "square"),
    ShapeClass("star5", "star", {"points": 5, "inner_ratio": 0.45}),
    ShapeClass("serrated", "serrated_ellipse", {"teeth": 24, "tooth_amp": 0.05, "aspect": 0.55}),
    ShapeClass("lobed", "lobed_leaf", {"lobes": 5, "depth": 0.28, "aspect": 0.8}),
)


@dataclass(frozen=True)
class CorpusSpec:
    classes: tuple = DEFAULT_FAMILIES
    per_class: int = 40
    size: int = 512
    rotation_deg: tuple = (0.0, 360.0)
    scale_range: tuple = (0.55, 0.9)
    jitter: float = 0.004

    @staticmethod
    def from_json(path) -> "CorpusSpec":
        with open(path) as fh:
            raw = json.load(fh)
        classes = tuple(
            ShapeClass(c["name"], c["kind"], c.get("params", {}))
            for c in raw.get("classes", [])
        ) or DEFAULT_FAMILIES
        return CorpusSpec(
            classes=classes,
            per_class=int(raw.get("per_class", 40)),
            size=int(raw.get("size", 512)),
            rotation_deg=tuple(raw.get("rotation_deg", (0.0, 360.0))),
            scale_range=tuple(raw.get("scale_range", (0.55, 0.9))),
            jitter=float(raw.get("jitter", 0.004)),
        )


def unit_polygon(kind: str, params: dict) -> np.ndarray:
    """Base shape as a closed polygon with max radius 0.5, centred on origin."""
    theta = np.linspace(0.0, 2.0 * np.pi, VERTICES, endpoint=False)
    if kind == "disk":
        r = np.full_like(theta, 0.5)
    elif kind == "square":
        # polar form of the square boundary, corners scaled back to radius 0.5
        r = 0.5 / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))
        r *= 0.5 / r.max()
    elif kind == "star":
        points = int(params.get("points", 5))
        inner = float(params.get("inner_ratio", 0.45))
        blend = 0.5 * (1.0 + np.cos(points * theta))  # 1 at tips, 0 between
        sharp = blend ** 3
        r = 0.5 * (inner + (1.0 - inner) * sharp)
    elif kind == "serrated_ellipse":
        aspect = float(params.get("aspect", 0.55))
        teeth = int(params.get("teeth", 24))
        amp = float(params.get("tooth_amp", 0.05))
        base = 0.5 * aspect / np.sqrt((aspect * np.cos(theta)) ** 2 + np.sin(theta) ** 2)
        r = base * (1.0 + amp * np.cos(teeth * theta))
        r *= 0.5 / r.max()
    elif kind == "lobed_leaf":
        lobes = int(params.get("lobes", 5))
        depth = float(params.get("depth", 0.28))
        aspect = float(params.get("aspect", 0.8))
        base = 0.5 * aspect / np.sqrt((aspect * np.cos(theta)) ** 2 + np.sin(theta) ** 2)
        r = base * (1.0 - depth * 0.5 * (1.0 - np.cos(lobes * theta)))
        r *= 0.5 / r.max()
    else:
        raise ValueError(f"unknown shape kind {kind!r}")
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _smooth_circular(values: np.ndarray, width: int) -> np.ndarray:
    kernel = np.ones(width) / width
    extended = np.concatenate([values[-width:], values, values[:width]])
    sm = np.convolve(extended, kernel, mode="same")
    return sm[width:-width]


def render_instance(spec: CorpusSpec, class_idx: int, item_idx: int, seed: int,
                    size: int | None = None) -> np.ndarray:
    """Rasterise one corpus item; geometry depends only on (seed, class, item)."""
    size = size or spec.size
    cls = spec.classes[class_idx]
    rng = np.random.default_rng([seed, class_idx, item_idx])
    angle = np.deg2rad(rng.uniform(*spec.rotation_deg))
    scale = rng.uniform(*spec.scale_range)
    poly = unit_polygon(cls.kind, cls.params)
    if spec.jitter > 0:
        radial = rng.normal(0.0, spec.jitter, len(poly))
        radial = _smooth_circular(radial, 9)  # keep the boundary locally clean
        radii = np.hypot(poly[:, 0], poly[:, 1])
        factor = 1.0 + radial / np.maximum(radii, 1e-6)
        poly = poly * factor[:, None]
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    poly = poly @ rot.T * scale
    centre = (size - 1) / 2.0
    poly = poly * size + centre
    return rasterize_polygon(poly, size)


def rasterize_polygon(poly: np.ndarray, size: int) -> np.ndarray:
    """Even-odd scanline fill over pixel centres at integer coordinates."""
    mask = np.zeros((size, size), dtype=bool)
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    cols = np.arange(size)
    for row in range(size):
        y = float(row)
        hit = ((y1 <= y) & (y < y2)) | ((y2 <= y) & (y < y1))
        if not hit.any():
            continue
        t = (y - y1[hit]) / (y2[hit] - y1[hit])
        xs = np.sort(x1[hit] + t * (x2[hit] - x1[hit]))
        parity = np.searchsorted(xs, cols, side="left") % 2
        mask[row] = parity == 1
    return mask


def synth_corpus(spec: CorpusSpec, out_dir, seed: int) -> Dataset:
    """Write the corpus to disk in dataset layout and return its Dataset."""
    out_dir = Path(out_dir)
    items = []
    for ci, cls in enumerate(spec.classes):
        cdir = out_dir / cls.name
        cdir.mkdir(parents=True, exist_ok=True)
        for k in range(spec.per_class):
            mask = render_instance(spec, ci, k, seed)
            img = np.where(mask, 0, 255).astype(np.uint8)
            path = cdir / f"{cls.name}_{k:03d}.png"
            PILImage.fromarray(img).save(path, format="PNG")
            items.append((cls.name, str(path)))
    return Dataset(items=items, classes=[c.name for c in spec.classes])
