"""Feature standardisation and principal-component projection.

The raw feature vector mixes units (areas, ratios, spectral bins), so
features are z-scored before the covariance eigendecomposition. Component
signs follow a fixed convention (first non-zero coefficient positive) to
keep fitted models byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, TooFewSamples

STD_FLOOR = 1e-12
DEFAULT_COMPONENTS = 128


@dataclass
class Standardizer:
    mean: np.ndarray  # (d,)
    std: np.ndarray   # (d,), floored away from zero


@dataclass
class PcaModel:
    components: np.ndarray          # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing
    mean: np.ndarray                # (d,)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def fit_standardizer(X: np.ndarray) -> Standardizer:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewSamples("standardizer needs at least 2 samples")
    return Standardizer(mean=X.mean(axis=0), std=np.maximum(X.std(axis=0), STD_FLOOR))


def standardize(X: np.ndarray, s: Standardizer) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != len(s.mean):
        raise DimensionMismatch(f"expected {len(s.mean)} features, got {X.shape[-1]}")
    return (X - s.mean) / s.std


def fit_pca(X: np.ndarray, k: int = DEFAULT_COMPONENTS) -> PcaModel:
    """Top-k eigenvectors of the sample covariance.

    Uses the d x d covariance when d <= n, otherwise the n x n Gram trick.
    When fewer than k components are supported by the data, k is lowered to
    the available rank (at most n - 1) and the model records the reduction.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewSamples("PCA needs at least 2 samples")
    n, d = X.shape
    k_eff = min(k, n - 1, d)
    mean = X.mean(axis=0)
    xc = X - mean

    if d <= n:
        cov = xc.T @ xc / (n - 1)
        vals, vecs = np.linalg.eigh(cov)
        order = np.argsort(vals)[::-1][:k_eff]
        components = vecs[:, order].T
        variances = vals[order]
    else:
        gram = xc @ xc.T / (n - 1)
        vals, vecs = np.linalg.eigh(gram)
        order = np.argsort(vals)[::-1][:k_eff]
        vals = vals[order]
        vecs = vecs[:, order]
        positive = vals > STD_FLOOR
        vals = vals[positive]
        vecs = vecs[:, positive]
        components = (xc.T @ vecs).T
        norms = np.linalg.norm(components, axis=1)
        components = components / norms[:, None]
        variances = vals

    components = _fix_signs(components)
    return PcaModel(components=components,
                    explained_variance=np.maximum(variances, 0.0),
                    mean=mean)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for row in out:
        nz = np.nonzero(np.abs(row) > STD_FLOOR)[0]
        if len(nz) and row[nz[0]] < 0:
            row *= -1.0
    return out


def project(X: np.ndarray, pca: PcaModel) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != pca.components.shape[1]:
        raise DimensionMismatch(
            f"expected {pca.components.shape[1]} features, got {X.shape[-1]}")
    return (X - pca.mean) @ pca.components.T
