"""Evaluation metrics, model persistence and hyper-parameter search.

Models are stored as a single JSON file: a header carrying the format
version, configuration, label table and array dimensions, plus one base64
block of little-endian float64 values guarded by a SHA-256 checksum.
"""

from __future__ import annotations

import base64
import hashlib
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .classifier import (BinarySvm, OvoSvmModel, SvmConfig, predict_topn,
                         train_ovo, true_label_ranks)
from .errors import CorruptModel, DimensionMismatch, VersionMismatch
from .laii import ScaleSet
from .reduce import PcaModel, Standardizer, fit_pca, fit_standardizer, project, standardize

MODEL_FORMAT_VERSION = 1
TOPN_MAX = 10


@dataclass
class EvalReport:
    labels: list
    confusion: np.ndarray        # rows true, cols predicted (top-1)
    macro_recall: float
    macro_precision: float
    macro_f1: float
    top_n: np.ndarray            # accuracy for n = 1..TOPN_MAX
    n_test: int

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
            "macro_recall": self.macro_recall,
            "macro_precision": self.macro_precision,
            "macro_f1": self.macro_f1,
            "top_n": self.top_n.tolist(),
            "n_test": self.n_test,
        }


def metrics_from_confusion(cm: np.ndarray) -> tuple[float, float, float]:
    """Macro recall/precision/F1 over classes that appear in the test set."""
    cm = np.asarray(cm, dtype=np.float64)
    present = cm.sum(axis=1) > 0
    diag = np.diag(cm)
    recalls = np.zeros(len(cm))
    recalls[present] = diag[present] / cm.sum(axis=1)[present]
    col_sums = cm.sum(axis=0)
    precisions = np.where(col_sums > 0, diag / np.maximum(col_sums, 1), 0.0)
    f1 = np.zeros(len(cm))
    pr = precisions + recalls
    nz = pr > 0
    f1[nz] = 2.0 * precisions[nz] * recalls[nz] / pr[nz]
    return (float(recalls[present].mean()),
            float(precisions[present].mean()),
            float(f1[present].mean()))


def evaluate(model: OvoSvmModel, X_features: np.ndarray, labels) -> EvalReport:
    """Score raw feature vectors against their labels.

    Top-n accuracy is the fraction of items whose true label appears among
    the first n ranked predictions; for n beyond the class count it saturates.
    """
    X_features = np.asarray(X_features, dtype=np.float64)
    labels = list(labels)
    if len(X_features) != len(labels):
        raise DimensionMismatch("feature rows and labels differ in length")
    unknown = sorted(set(labels) - set(model.labels))
    if unknown:
        raise DimensionMismatch(f"labels not in the model: {unknown}")
    reduced = model.transform(X_features)
    index = {lab: k for k, lab in enumerate(model.labels)}
    m = len(model.labels)
    cm = np.zeros((m, m), dtype=int)
    ranks = np.empty(len(labels), dtype=int)
    for k, (x, lab) in enumerate(zip(reduced, labels)):
        ranking = [entry[0] for entry in predict_topn(model, x)]
        cm[index[lab], index[ranking[0]]] += 1
        ranks[k] = ranking.index(lab) + 1
    top_n = np.array([(ranks <= n).mean() for n in range(1, TOPN_MAX + 1)])
    recall, precision, f1 = metrics_from_confusion(cm)
    return EvalReport(labels=list(model.labels), confusion=cm,
                      macro_recall=recall, macro_precision=precision, macro_f1=f1,
                      top_n=top_n, n_test=len(labels))


def fit_reduced_model(X_features: np.ndarray, labels, cfg: SvmConfig,
                      scale_set: ScaleSet, n_components: int = 128,
                      meta: dict | None = None) -> OvoSvmModel:
    """Standardize, fit PCA, and train the OvO machines in one step."""
    X_features = np.asarray(X_features, dtype=np.float64)
    std = fit_standardizer(X_features)
    z = standardize(X_features, std)
    pca = fit_pca(z, k=n_components)
    reduced = project(z, pca)
    return train_ovo(reduced, labels, cfg, standardizer=std, pca=pca,
                     scale_set=scale_set, meta=meta)


def grid_search(X_features: np.ndarray, labels, c_grid, gamma_grid,
                scale_set: ScaleSet, folds: int = 3, seed: int = 0,
                n_components: int = 128, base_cfg: SvmConfig | None = None):
    """Small cross-validated grid over (C, gamma); returns (best_cfg, table).

    Folds are stratified per class after a seeded shuffle. Ties prefer the
    smaller gamma, then the smaller C, so the result is deterministic.
    """
    base_cfg = base_cfg or SvmConfig()
    X_features = np.asarray(X_features, dtype=np.float64)
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for lab in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(len(idx))]
        fold_of[idx] = np.arange(len(idx)) % folds
    table = []
    best = None
    best_acc = -1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for gamma in sorted(gamma_grid):
            for c_val in sorted(c_grid):
                cfg = SvmConfig(C=c_val, gamma=gamma,
                                kkt_tolerance=base_cfg.kkt_tolerance,
                                max_passes=base_cfg.max_passes,
                                cache_mb=base_cfg.cache_mb)
                correct = 0
                for f in range(folds):
                    tr = fold_of != f
                    te_idx = np.flatnonzero(~tr)
                    if len(set(labels[tr].tolist())) < 2 or not len(te_idx):
                        continue
                    model = fit_reduced_model(X_features[tr], labels[tr], cfg,
                                              scale_set, n_components=n_components)
                    # items whose class the fold never trained on count as misses
                    known = np.array([labels[i] in set(model.labels) for i in te_idx])
                    if not known.any():
                        continue
                    te_idx = te_idx[known]
                    reduced = model.transform(X_features[te_idx])
                    ranks = true_label_ranks(model, reduced, labels[te_idx])
                    correct += int((ranks == 1).sum())
                acc = correct / len(labels)
                table.append({"C": c_val, "gamma": gamma, "cv_accuracy": acc})
                if acc > best_acc:
                    best_acc = acc
                    best = cfg
    return best, table


def save_model(model: OvoSvmModel, path) -> None:
    arrays = [model.standardizer.mean, model.standardizer.std,
              model.pca.mean, model.pca.components.ravel(),
              model.pca.explained_variance]
    machines_meta = []
    for mach in model.machines:
        arrays.extend([mach.support_vectors.ravel(), mach.dual_coef,
                       np.array([mach.bias])])
        machines_meta.append({"pair": list(mach.pair),
                              "n_sv": int(len(mach.dual_coef)),
                              "converged": bool(mach.converged)})
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "labels": list(model.labels),
        "scales": list(model.scale_set.scales),
        "min_radius_px": model.scale_set.min_radius_px,
        "config": {"C": model.config.C, "gamma": model.config.gamma,
                   "kkt_tolerance": model.config.kkt_tolerance,
                   "max_passes": model.config.max_passes,
                   "cache_mb": model.config.cache_mb},
        "feature_dim": int(len(model.standardizer.mean)),
        "reduced_dim": int(model.pca.n_components),
        "machines": machines_meta,
        "meta": model.meta,
        "checksum": hashlib.sha256(blob).hexdigest(),
        "blob": base64.b64encode(blob).decode("ascii"),
    }
    with open(path, "w") as fh:
        json.dump(header, fh)


def load_model(path) -> OvoSvmModel:
    try:
        with open(path) as fh:
            header = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"cannot parse model file: {exc}") from exc
    version = header.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"model format {version}, supported {MODEL_FORMAT_VERSION}")
    try:
        blob = base64.b64decode(header["blob"].encode("ascii"), validate=True)
        if hashlib.sha256(blob).hexdigest() != header["checksum"]:
            raise CorruptModel("checksum mismatch")
        values = np.frombuffer(blob, dtype="<f8")
        d = int(header["feature_dim"])
        k = int(header["reduced_dim"])
        off = 0

        def take(count):
            nonlocal off
            if off + count > len(values):
                raise CorruptModel("binary block shorter than the header promises")
            out = values[off:off + count].copy()
            off += count
            return out

        std = Standardizer(mean=take(d), std=take(d))
        pca = PcaModel(mean=take(d), components=take(k * d).reshape(k, d),
                       explained_variance=take(k))
        machines = []
        cfg_raw = header["config"]
        cfg = SvmConfig(C=cfg_raw["C"], gamma=cfg_raw["gamma"],
                        kkt_tolerance=cfg_raw["kkt_tolerance"],
                        max_passes=cfg_raw["max_passes"],
                        cache_mb=cfg_raw["cache_mb"])
        for mm in header["machines"]:
            n_sv = int(mm["n_sv"])
            sv = take(n_sv * k).reshape(n_sv, k)
            coef = take(n_sv)
            bias = float(take(1)[0])
            machines.append(BinarySvm(support_vectors=sv, dual_coef=coef, bias=bias,
                                      pair=tuple(mm["pair"]), gamma=cfg.gamma,
                                      converged=bool(mm["converged"])))
        if off != len(values):
            raise CorruptModel("binary block longer than the header promises")
        scale_set = ScaleSet(scales=tuple(header["scales"]),
                             min_radius_px=int(header["min_radius_px"]))
        return OvoSvmModel(labels=list(header["labels"]), machines=machines,
                           standardizer=std, pca=pca, scale_set=scale_set,
                           config=cfg, meta=dict(header.get("meta", {})))
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptModel(f"malformed model file: {exc}") from exc
