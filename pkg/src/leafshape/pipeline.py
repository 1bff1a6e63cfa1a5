"""Image-to-features orchestration and the feature store.

One image flows through segmentation, stem removal, boundary selection
(falling back to Canny edges), arc-length resampling, multi-scale LAII
extraction and feature assembly. LAII counting always runs against the
filled component that owns the selected boundary, so interior holes and
stray specks cannot leak into the signals.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from . import contours, imageio, laii, segmentation
from .classifier import OvoSvmModel, predict_topn
from .contours import Contour, ContourSelectConfig, SampledContour
from .dataset import Dataset
from .errors import EmptySegmentation, LeafShapeError, NoContour
from .features import assemble, feature_count
from .laii import LaiiSignal, ScaleSet
from .segmentation import SegmentationConfig

log = logging.getLogger("leafshape")


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    selection: ContourSelectConfig = field(default_factory=ContourSelectConfig)
    scale_set: ScaleSet = field(default_factory=ScaleSet)
    resize_to: int | None = None   # rescale so max(H, W) matches before anything else
    fast_laii: bool = False


@dataclass
class ExtractionResult:
    features: np.ndarray
    contour: Contour
    sampled: SampledContour
    laiis: list[LaiiSignal]
    mask: np.ndarray
    used_fallback: bool


def segment_image(img: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Threshold-based segmentation followed by stem removal."""
    mask = segmentation.segment(img, cfg.segmentation)
    return segmentation.remove_stem(mask, cfg.segmentation)


def extract_from_image(img: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> ExtractionResult:
    """Full feature extraction for one image; raises NoContour when both the
    threshold path and the Canny fallback fail."""
    if cfg.resize_to:
        img = imageio.resize_max_dim(img, cfg.resize_to)
    contour = None
    mask = None
    used_fallback = False
    try:
        mask = segment_image(img, cfg)
        cands = contours.extract_contours(mask)
        contour = contours.select_leaf_contour(cands, img.shape, cfg.selection)
    except (EmptySegmentation, NoContour):
        contour = None
    if contour is None:
        used_fallback = True
        contour = contours.canny_fallback(img, cfg.selection,
                                          cfg.segmentation.closing_radius_px)
        if contour is None:
            raise NoContour("no leaf boundary found by thresholding or edge fallback")
        shape_mask = contours.contour_fill(contour, img.shape)
    else:
        shape_mask = contours.component_fill(mask, contour)
    sampled = contours.resample(contour)
    signals = laii.laii_multiscale(shape_mask, sampled, cfg.scale_set, fast=cfg.fast_laii)
    vec = assemble(contour, signals, expected_scales=len(cfg.scale_set.scales))
    return ExtractionResult(features=vec, contour=contour, sampled=sampled,
                            laiis=signals, mask=shape_mask, used_fallback=used_fallback)


def extract_from_path(path, cfg: PipelineConfig = PipelineConfig()) -> ExtractionResult:
    return extract_from_image(imageio.load_image(path), cfg)


def _extract_one(job):
    """Worker for dataset extraction; returns (label, path, features | error)."""
    lab, path, cfg = job
    try:
        return lab, path, extract_from_path(path, cfg).features, None
    except (LeafShapeError, OSError, ValueError) as exc:
        return lab, path, None, str(exc)


def extract_dataset(ds: Dataset, cfg: PipelineConfig = PipelineConfig(),
                    workers: int = 0):
    """Extract features for every dataset item, skipping and logging failures.

    Extraction is pure per image, so `workers > 1` fans it out over a process
    pool; results come back in dataset order either way. Returns
    (labels, paths, X, skipped) with X of shape (n_ok, n_features).
    """
    jobs = [(lab, path, cfg) for lab, path in ds.items]
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(job) for job in jobs]

    labels: list = []
    paths: list = []
    rows: list = []
    skipped: list = []
    for lab, path, features, error in results:
        if error is not None:
            log.warning("skipping %s: %s", path, error)
            skipped.append((path, error))
            continue
        labels.append(lab)
        paths.append(path)
        rows.append(features)
    X = np.array(rows) if rows else np.empty((0, feature_count(len(cfg.scale_set.scales))))
    return labels, paths, X, skipped


def write_feature_csv(path, labels, paths, X) -> None:
    """Feature store: header `label,source_path,f000..fNNN`, one row per image."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "source_path"] + [f"f{i:03d}" for i in range(X.shape[1])])
        for lab, src, row in zip(labels, paths, X):
            writer.writerow([lab, src] + [repr(float(v)) for v in row])


def read_feature_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["label", "source_path"]:
            raise ValueError(f"{path} is not a feature store (bad header)")
        labels: list = []
        paths: list = []
        rows: list = []
        width = len(header) - 2
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width + 2:
                raise ValueError(f"{path}:{line_no}: expected {width + 2} columns, got {len(row)}")
            labels.append(row[0])
            paths.append(row[1])
            rows.append([float(v) for v in row[2:]])
    return labels, paths, np.array(rows, dtype=np.float64)


def predict_features(model: OvoSvmModel, features: np.ndarray, n: int | None = None):
    """Rank classes for one raw feature vector."""
    reduced = model.transform(np.atleast_2d(features))[0]
    return predict_topn(model, reduced, n)


def predict_image(model: OvoSvmModel, img: np.ndarray, n: int | None = None,
                  cfg: PipelineConfig | None = None):
    """Rank classes for one image using the model's stored extraction profile."""
    if cfg is None:
        cfg = PipelineConfig(scale_set=model.scale_set,
                             resize_to=model.meta.get("resize_to"))
    res = extract_from_image(img, cfg)
    return predict_features(model, res.features, n)
