import numpy as np
import pytest

from leafshape.classifier import (BinarySvm, OvoSvmModel, SvmConfig,
                                  balanced_weights, predict_topn, rbf_kernel,
                                  rbf_matrix, train_binary, train_ovo,
                                  true_label_ranks)
from leafshape.errors import DimensionMismatch, EmptyClass
from leafshape.laii import ScaleSet
from leafshape.reduce import PcaModel, Standardizer
from oracles import dual_objective, qp_oracle


def _alphas(machine):
    return np.abs(machine.dual_coef), np.sign(machine.dual_coef)


# ---- kernels and weights -----------------------------------------------------

class TestRbfKernel:
    def test_self_similarity(self, rng):
        u = rng.normal(size=128)
        assert rbf_kernel(u, u, 7.0) == 1.0

    def test_unit_distance(self):
        u = np.zeros(4)
        v = np.array([1.0, 0, 0, 0])
        assert rbf_kernel(u, v, 7.0) == pytest.approx(np.exp(-7.0), rel=1e-12)
        assert rbf_kernel(u, v, 7.0) == pytest.approx(9.118819655545162e-4, rel=1e-9)

    def test_symmetry(self, rng):
        for _ in range(10):
            u, v = rng.normal(size=(2, 16))
            assert abs(rbf_kernel(u, v, 2.0) - rbf_kernel(v, u, 2.0)) < 1e-15

    def test_range(self, rng):
        X = rng.normal(size=(20, 8))
        K = rbf_matrix(X, X, 0.5)
        assert (K > 0).all() and (K <= 1.0 + 1e-15).all()


class TestBalancedWeights:
    def test_equal_classes(self):
        w = balanced_weights(["a"] * 10 + ["b"] * 10)
        assert w == {"a": 1.0, "b": 1.0}

    def test_unequal_classes(self):
        w = balanced_weights(["a"] * 30 + ["b"] * 10)
        assert w["a"] == pytest.approx(2 / 3)
        assert w["b"] == pytest.approx(2.0)

    def test_weighted_count_identity(self, rng):
        for _ in range(10):
            sizes = rng.integers(1, 40, size=rng.integers(2, 6))
            labels = [f"c{k}" for k, n in enumerate(sizes) for _ in range(n)]
            w = balanced_weights(labels)
            total = sum(n * w[f"c{k}"] for k, n in enumerate(sizes))
            assert total == pytest.approx(sum(sizes), rel=1e-12)

    def test_missing_class(self):
        with pytest.raises(EmptyClass):
            balanced_weights(["a", "a"], classes=["a", "b"])


# ---- binary training ---------------------------------------------------------

class TestTrainBinary:
    def test_two_symmetric_points(self):
        X = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        m = train_binary(X, y, SvmConfig(C=10.0, gamma=1.0))
        assert m.decision(np.array([-1.0])) < 0
        assert m.decision(np.array([1.0])) > 0
        assert abs(m.decision(np.array([0.0]))) < 1e-9

    def test_xor_training_accuracy(self):
        X = np.array([[0.0, 0], [1, 1], [0, 1], [1, 0]])
        y = np.array([1.0, 1.0, -1.0, -1.0])
        cfg = SvmConfig(C=1000.0, gamma=7.0, kkt_tolerance=1e-6)
        m = train_binary(X, y, cfg)
        preds = np.sign([m.decision(x) for x in X])
        assert (preds == y).all()
        # dual solution certified against the independent QP oracle
        K = rbf_matrix(X, X, cfg.gamma)
        a_oracle = qp_oracle(K, y, np.full(4, cfg.C))
        alphas, signs = _alphas(m)
        a_smo = np.zeros(4)
        for sv, al, sg in zip(m.support_vectors, alphas, signs):
            idx = int(np.argmin(np.linalg.norm(X - sv, axis=1)))
            a_smo[idx] = al
        f1 = dual_objective(K, y, a_smo)
        f2 = dual_objective(K, y, a_oracle)
        assert abs(f1 - f2) <= 1e-4 * max(abs(f1), abs(f2))

    def test_random_problems_match_qp_oracle(self, rng):
        cfg = SvmConfig(C=5.0, gamma=0.7, kkt_tolerance=1e-6, max_passes=10_000)
        for trial in range(10):
            X = rng.normal(size=(6, 2))
            y = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
            weights = balanced_weights(y.tolist())
            c_bounds = np.array([cfg.C * weights[v] for v in y])
            m = train_binary(X, y, cfg, sample_c=c_bounds)
            alphas, signs = _alphas(m)
            a_smo = np.zeros(6)
            for sv, al in zip(m.support_vectors, alphas):
                idx = int(np.argmin(np.linalg.norm(X - sv, axis=1)))
                a_smo[idx] = al
            # dual feasibility
            assert (a_smo >= -1e-9).all()
            assert (a_smo <= c_bounds + 1e-6).all()
            assert abs(np.dot(a_smo, y)) < 1e-6
            # objective against the oracle
            K = rbf_matrix(X, X, cfg.gamma)
            f_smo = dual_objective(K, y, a_smo)
            f_qp = dual_objective(K, y, qp_oracle(K, y, c_bounds))
            assert abs(f_smo - f_qp) <= 1e-4 * max(abs(f_smo), abs(f_qp), 1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(EmptyClass):
            train_binary(np.ones((3, 2)), np.ones(3), SvmConfig())

    def test_permutation_stability(self, rng):
        X = rng.normal(size=(40, 3))
        y = np.where(X[:, 0] + 0.3 * rng.normal(size=40) > 0, 1.0, -1.0)
        if len(set(y)) < 2:
            y[0] = -y[0]
        cfg = SvmConfig(C=10.0, gamma=0.5, kkt_tolerance=1e-8, max_passes=200_000)
        m1 = train_binary(X, y, cfg)
        perm = rng.permutation(40)
        m2 = train_binary(X[perm], y[perm], cfg)
        probes = rng.normal(size=(25, 3))
        d1 = np.array([m1.decision(p) for p in probes])
        d2 = np.array([m2.decision(p) for p in probes])
        assert np.abs(d1 - d2).max() < 1e-6


# ---- one-vs-one --------------------------------------------------------------

def _blobs(rng, n_classes=3, per_class=20, dim=2, spread=0.25):
    centres = rng.normal(size=(n_classes, dim)) * 4.0
    X = np.vstack([c + spread * rng.normal(size=(per_class, dim)) for c in centres])
    labels = [f"class{k}" for k in range(n_classes) for _ in range(per_class)]
    return X, labels


class TestTrainOvo:
    def test_machine_counts(self, rng):
        X, labels = _blobs(rng, n_classes=3)
        model = train_ovo(X, labels, SvmConfig(C=10.0, gamma=1.0))
        assert len(model.machines) == 3

        X32 = rng.normal(size=(96, 2)) + np.repeat(np.arange(32), 3)[:, None] * 5.0
        labels32 = [f"s{k:02d}" for k in range(32) for _ in range(3)]
        model32 = train_ovo(X32, labels32, SvmConfig(C=10.0, gamma=1.0))
        assert len(model32.machines) == 32 * 31 // 2 == 496

    def test_blobs_training_accuracy(self, rng):
        X, labels = _blobs(rng, n_classes=3, per_class=25)
        model = train_ovo(X, labels, SvmConfig(C=100.0, gamma=1.0))
        ranks = true_label_ranks(model, X, labels)
        assert (ranks == 1).all()

    def test_dual_feasibility_invariant(self, rng):
        X, labels = _blobs(rng, n_classes=4, per_class=12)
        cfg = SvmConfig(C=50.0, gamma=0.8)
        model = train_ovo(X, labels, cfg)
        for mach in model.machines:
            coef = mach.dual_coef
            assert abs(coef.sum()) < 1e-6           # sum alpha_i y_i = 0
            assert (np.abs(coef) <= cfg.C * 2 + 1e-6).all()

    def test_fewer_than_two_classes(self, rng):
        with pytest.raises(EmptyClass):
            train_ovo(rng.normal(size=(5, 2)), ["only"] * 5, SvmConfig())


def _stub_model(decisions):
    """Model of constant-decision machines for ranking-rule tests."""
    labels = sorted({lab for pair in decisions for lab in pair})
    machines = [BinarySvm(support_vectors=np.zeros((1, 2)),
                          dual_coef=np.zeros(1), bias=value, pair=pair, gamma=1.0)
                for pair, value in decisions.items()]
    d = 2
    ident = Standardizer(mean=np.zeros(d), std=np.ones(d))
    pca = PcaModel(components=np.eye(d), explained_variance=np.ones(d), mean=np.zeros(d))
    return OvoSvmModel(labels=labels, machines=machines, standardizer=ident,
                       pca=pca, scale_set=ScaleSet(), config=SvmConfig())


class TestPredictTopn:
    def test_two_class_ranking(self):
        model = _stub_model({("a", "b"): 0.7})
        ranking = predict_topn(model, np.zeros(2))
        assert [r[0] for r in ranking] == ["a", "b"]
        assert ranking[0][1] == 1 and ranking[1][1] == 0

    def test_cyclic_tie_broken_by_margin(self):
        # every class wins one duel; summed signed margins decide
        model = _stub_model({("a", "b"): 0.9,    # a beats b
                             ("b", "c"): 0.5,    # b beats c
                             ("a", "c"): -2.0})  # c beats a
        ranking = predict_topn(model, np.zeros(2))
        assert [r[0] for r in ranking] == ["c", "b", "a"]
        margins = {lab: m for lab, _, m in ranking}
        assert margins["c"] == pytest.approx(1.5)
        assert margins["b"] == pytest.approx(-0.4)
        assert margins["a"] == pytest.approx(-1.1)

    def test_equal_everything_breaks_by_label_order(self):
        model = _stub_model({("a", "b"): 0.0})  # zero decision favours the first class
        ranking = predict_topn(model, np.zeros(2))
        assert ranking[0][0] == "a"

    def test_topn_monotone_on_blobs(self, rng):
        X, labels = _blobs(rng, n_classes=5, per_class=15, spread=1.8)
        model = train_ovo(X, labels, SvmConfig(C=10.0, gamma=0.4))
        probes, probe_labels = _blobs(rng, n_classes=5, per_class=5, spread=1.8)
        ranks = true_label_ranks(model, X, labels)
        curve = [(ranks <= n).mean() for n in range(1, 6)]
        assert all(b >= a for a, b in zip(curve, curve[1:]))

    def test_n_too_large(self):
        model = _stub_model({("a", "b"): 1.0})
        with pytest.raises(ValueError):
            predict_topn(model, np.zeros(2), 3)

    def test_dimension_mismatch(self):
        model = _stub_model({("a", "b"): 1.0})
        with pytest.raises(DimensionMismatch):
            predict_topn(model, np.zeros(5))

    def test_prediction_determinism(self, rng):
        X, labels = _blobs(rng, n_classes=3)
        model = train_ovo(X, labels, SvmConfig(C=10.0, gamma=1.0))
        probe = rng.normal(size=2)
        first = predict_topn(model, probe)
        for _ in range(5):
            assert predict_topn(model, probe) == first
