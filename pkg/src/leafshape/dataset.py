"""Dataset ingestion and seeded train/test splitting.

Datasets live on disk as root/<class_name>/<image files>; class labels come
from directory names, sorted lexicographically for a stable index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ClassTooSmallWarning, EmptyClass, EmptyDataset

IMAGE_EXTENSIONS = {".png", ".pgm", ".ppm", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


@dataclass
class Dataset:
    items: list            # (label, path) pairs
    classes: list

    @property
    def counts(self) -> dict:
        out: dict = {}
        for lab, _ in self.items:
            out[lab] = out.get(lab, 0) + 1
        return out

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class Split:
    train: list
    test: list
    test_per_class: int
    seed: int


def load_dataset(root) -> Dataset:
    root = Path(root)
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise EmptyDataset(f"no class directories under {root}")
    items = []
    classes = []
    for cdir in class_dirs:
        files = sorted(p for p in cdir.iterdir()
                       if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)
        if not files:
            raise EmptyClass(f"class directory {cdir.name!r} contains no images")
        classes.append(cdir.name)
        items.extend((cdir.name, str(p)) for p in files)
    return Dataset(items=items, classes=classes)


def split_dataset(ds: Dataset, test_per_class: int, seed: int) -> Split:
    """Uniform per-class sampling without replacement, deterministic per seed.

    A class smaller than test_per_class + 1 contributes all but one item to
    the test side and warns.
    """
    if test_per_class < 1:
        raise ValueError("test_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    by_class: dict = {c: [] for c in ds.classes}
    for lab, path in ds.items:
        by_class[lab].append((lab, path))
    train: list = []
    test: list = []
    for lab in ds.classes:
        members = sorted(by_class[lab], key=lambda it: it[1])
        take = test_per_class
        if len(members) <= test_per_class:
            take = len(members) - 1
            warnings.warn(
                f"class {lab!r} has {len(members)} items; taking {take} for test",
                ClassTooSmallWarning)
        chosen = set(rng.choice(len(members), size=take, replace=False).tolist())
        for k, item in enumerate(members):
            (test if k in chosen else train).append(item)
    return Split(train=train, test=test, test_per_class=test_per_class, seed=seed)
