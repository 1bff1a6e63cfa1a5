"""One-vs-one soft-margin SVM with an RBF kernel, trained by SMO.

Each unordered class pair gets its own binary machine, trained only on that
pair's samples with balanced per-class penalties. Prediction counts duel
votes; ties break on summed signed decision values, then label order.

The solver is sequential minimal optimisation with second-order working-set
selection: the first index maximises the KKT violation, the second minimises
the one-step objective bound among eligible partners. It stops when the
maximal violating pair gap falls below the tolerance.
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, EmptyClass, NonconvergenceWarning
from .laii import ScaleSet
from .reduce import PcaModel, Standardizer, project, standardize

_TAU = 1e-12
_SV_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1000.0
    gamma: float = 7.0
    kkt_tolerance: float = 1e-3
    max_passes: int | None = None  # iteration cap; None means 10 * n per problem
    cache_mb: float = 256.0

    def __post_init__(self):
        if self.C <= 0 or self.gamma <= 0:
            raise ValueError("C and gamma must be positive")


def rbf_kernel(u: np.ndarray, v: np.ndarray, gamma: float) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"kernel arguments differ in shape: {u.shape} vs {v.shape}")
    d = u - v
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_matrix(X: np.ndarray, Y: np.ndarray, gamma: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    sq = (X * X).sum(axis=1)[:, None] + (Y * Y).sum(axis=1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def balanced_weights(labels, classes=None) -> dict:
    """Per-class penalty multipliers: n_total / (n_classes * n_c)."""
    labels = list(labels)
    counts: dict = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    if classes is None:
        classes = sorted(counts)
    missing = [c for c in classes if counts.get(c, 0) == 0]
    if missing or not classes:
        raise EmptyClass(f"classes without samples: {missing or 'all'}")
    total = len(labels)
    return {c: total / (len(classes) * counts[c]) for c in classes}


class _KernelCache:
    """Row cache over the RBF Gram matrix with an LRU memory budget."""

    def __init__(self, X, gamma, cache_mb):
        self.X = X
        self.gamma = gamma
        n = len(X)
        row_bytes = max(8 * n, 1)
        self.capacity = max(2, int(cache_mb * 2**20 // row_bytes))
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        got = self._rows.get(i)
        if got is not None:
            self._rows.move_to_end(i)
            return got
        row = rbf_matrix(self.X[i:i + 1], self.X, self.gamma)[0]
        self._rows[i] = row
        if len(self._rows) > self.capacity:
            self._rows.popitem(last=False)
        return row


def _smo(cache: _KernelCache, y: np.ndarray, c_bounds: np.ndarray,
         tol: float, max_iter: int):
    """Minimise 0.5 a'Qa - sum(a) subject to 0 <= a <= C_i, y'a = 0."""
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)          # Q alpha - 1
    diag = np.ones(n)           # rbf k(x, x) = 1
    converged = False
    iterations = 0

    while iterations < max_iter:
        iterations += 1
        neg_yg = -y * grad
        up = ((y > 0) & (alpha < c_bounds - _TAU)) | ((y < 0) & (alpha > _TAU))
        low = ((y > 0) & (alpha > _TAU)) | ((y < 0) & (alpha < c_bounds - _TAU))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.flatnonzero(up)[np.argmax(neg_yg[up])])
        m_up = neg_yg[i]
        m_low = neg_yg[low].min()
        if m_up - m_low <= tol:
            converged = True
            break

        k_i = cache.row(i)
        cand = low & (neg_yg < m_up)
        idx = np.flatnonzero(cand)
        quad = np.maximum(diag[i] + diag[idx] - 2.0 * k_i[idx], _TAU)
        gain = m_up - neg_yg[idx]
        j = int(idx[np.argmin(-(gain * gain) / quad)])
        k_j = cache.row(j)

        denom = max(diag[i] + diag[j] - 2.0 * k_i[j], _TAU)
        step = (m_up - neg_yg[j]) / denom
        # keep both multipliers inside their boxes
        if y[i] > 0:
            step = min(step, c_bounds[i] - alpha[i])
        else:
            step = min(step, alpha[i])
        if y[j] > 0:
            step = min(step, alpha[j])
        else:
            step = min(step, c_bounds[j] - alpha[j])
        if step <= 0.0:
            converged = True
            break
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        grad += y * (k_i - k_j) * step

    neg_yg = -y * grad
    free = (alpha > 1e-8) & (alpha < c_bounds * (1.0 - 1e-8))
    if free.any():
        bias = float(neg_yg[free].mean())
    else:
        up = ((y > 0) & (alpha < c_bounds - _TAU)) | ((y < 0) & (alpha > _TAU))
        low = ((y > 0) & (alpha > _TAU)) | ((y < 0) & (alpha < c_bounds - _TAU))
        hi = neg_yg[up].max() if up.any() else 0.0
        lo = neg_yg[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return alpha, bias, converged, iterations


@dataclass
class BinarySvm:
    """One trained pairwise machine; positive decision favours pair[0]."""

    support_vectors: np.ndarray  # (m, d)
    dual_coef: np.ndarray        # (m,) alpha_i * y_i
    bias: float
    pair: tuple
    gamma: float
    converged: bool = True

    def decision(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(
                f"expected {self.support_vectors.shape[1]}-dim input, got {x.shape[-1]}")
        k = rbf_matrix(self.support_vectors, x.reshape(1, -1), self.gamma)[:, 0]
        return float(self.dual_coef @ k + self.bias)

    def decision_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(
                f"expected {self.support_vectors.shape[1]}-dim input, got {X.shape[1]}")
        return self.dual_coef @ rbf_matrix(self.support_vectors, X, self.gamma) + self.bias


def train_binary(X: np.ndarray, y: np.ndarray, cfg: SvmConfig,
                 sample_c: np.ndarray | None = None, pair: tuple = (1, -1)) -> BinarySvm:
    """Train one soft-margin machine on labels y in {-1, +1}.

    sample_c holds the per-sample box bound (class weight already applied);
    defaults to cfg.C everywhere. Hitting the iteration cap emits a
    NonconvergenceWarning and returns the best iterate, flagged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) != {-1.0, 1.0}:
        raise EmptyClass("binary training needs both labels -1 and +1")
    if sample_c is None:
        sample_c = np.full(len(y), cfg.C, dtype=np.float64)
    max_iter = cfg.max_passes if cfg.max_passes is not None else 10 * len(y)
    cache = _KernelCache(X, cfg.gamma, cfg.cache_mb)
    alpha, bias, converged, _ = _smo(cache, y, sample_c, cfg.kkt_tolerance, max_iter)
    if not converged:
        warnings.warn(f"SMO for pair {pair} hit the iteration cap ({max_iter})",
                      NonconvergenceWarning)
    sv = alpha > _SV_THRESHOLD
    if not sv.any():
        sv = np.zeros(len(y), dtype=bool)
        sv[0] = True  # degenerate but keeps the machine well-formed
    return BinarySvm(support_vectors=X[sv].copy(),
                     dual_coef=(alpha * y)[sv].copy(),
                     bias=bias, pair=tuple(pair), gamma=cfg.gamma,
                     converged=converged)


@dataclass
class OvoSvmModel:
    """All pairwise machines plus the feature transform fitted with them."""

    labels: list
    machines: list
    standardizer: Standardizer
    pca: PcaModel
    scale_set: ScaleSet
    config: SvmConfig
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.labels)
        expected = m * (m - 1) // 2
        if len(self.machines) != expected:
            raise ValueError(f"{m} classes need {expected} machines, got {len(self.machines)}")

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Raw feature vectors -> standardized principal-component coordinates."""
        return project(standardize(np.atleast_2d(X), self.standardizer), self.pca)


def train_ovo(X: np.ndarray, labels, cfg: SvmConfig,
              standardizer: Standardizer | None = None, pca: PcaModel | None = None,
              scale_set: ScaleSet | None = None, meta: dict | None = None) -> OvoSvmModel:
    """Train one machine per unordered class pair.

    X holds already-reduced coordinates. Balanced class weights are computed
    per pair on that pair's subpopulation.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise EmptyClass("one-vs-one training needs at least 2 classes")
    machines = []
    for a, b in combinations(classes, 2):
        sel = (labels == a) | (labels == b)
        xs = X[sel]
        subset = labels[sel]
        y = np.where(subset == a, 1.0, -1.0)
        weights = balanced_weights(subset.tolist(), classes=[a, b])
        sample_c = np.array([cfg.C * weights[lab] for lab in subset])
        machines.append(train_binary(xs, y, cfg, sample_c=sample_c, pair=(a, b)))
    return OvoSvmModel(labels=classes, machines=machines,
                       standardizer=standardizer, pca=pca,
                       scale_set=scale_set or ScaleSet(), config=cfg,
                       meta=dict(meta or {}))


def predict_topn(model: OvoSvmModel, x: np.ndarray, n: int | None = None):
    """Ranked (label, votes, margin_sum) list for one reduced vector.

    Classes are ordered by duel votes, then by summed signed decision values
    in their favour, then by label order.
    """
    m = len(model.labels)
    if n is None:
        n = m
    if n > m:
        raise ValueError(f"top-{n} requested but only {m} classes exist")
    index = {lab: k for k, lab in enumerate(model.labels)}
    votes = np.zeros(m, dtype=int)
    margins = np.zeros(m, dtype=np.float64)
    for machine in model.machines:
        val = machine.decision(x)
        ia, ib = index[machine.pair[0]], index[machine.pair[1]]
        if val >= 0:
            votes[ia] += 1
        else:
            votes[ib] += 1
        margins[ia] += val
        margins[ib] -= val
    order = sorted(range(m), key=lambda c: (-votes[c], -margins[c], c))
    return [(model.labels[c], int(votes[c]), float(margins[c])) for c in order[:n]]


def predict_label(model: OvoSvmModel, x: np.ndarray):
    return predict_topn(model, x, 1)[0][0]


def true_label_ranks(model: OvoSvmModel, X: np.ndarray, labels) -> np.ndarray:
    """1-based rank of each true label in the full prediction ranking."""
    ranks = np.empty(len(X), dtype=int)
    for k, (x, lab) in enumerate(zip(X, labels)):
        ranking = [entry[0] for entry in predict_topn(model, x)]
        ranks[k] = ranking.index(lab) + 1
    return ranks
