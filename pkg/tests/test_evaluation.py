import math

import numpy as np
import pytest

from trine.errors import EvalError
from trine.evaluation import (EvalReport, auc_pr, auc_roc, edge_embedding,
                              evaluate, evaluate_end_to_end, f1_score, kfold_split,
                              make_link_dataset, train_classifier)
from trine.graph import Node, build_from_pairs
from trine.synth import planted_graph, random_graph
from trine.trainer import EmbeddingStore, TrainConfig, default_metapaths, init_embeddings

from conftest import random_tripartite


def auc_pair_counting_oracle(scores, labels):
    """O(n^2) definition: P(random positive outranks random negative), ties half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def solve_two_point_logistic(x1, x0, l2):
    """Regularized two-point logistic fit, reduced to a scalar root problem.

    Stationarity gives b = -w (x1 + x0) / 2 and
    l2 * w = (1 - sigmoid(w (x1 - x0) / 2)) * (x1 - x0) / 2.
    """
    delta = x1 - x0

    def f(w):
        s = 1.0 / (1.0 + math.exp(-w * delta / 2.0))
        return l2 * w - (1.0 - s) * delta / 2.0

    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        hi *= 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    w = (lo + hi) / 2.0
    return w, -w * (x1 + x0) / 2.0


class TestEdgeEmbedding:
    def _store(self, vectors_u, vectors_p):
        g = build_from_pairs((len(vectors_u), len(vectors_p), 0), [])
        emb = [np.array(vectors_u, dtype=float), np.array(vectors_p, dtype=float),
               np.zeros((0, len(vectors_u[0])))]
        return EmbeddingStore(emb, [m.copy() for m in emb], g.labels)

    def test_identical_vectors(self):
        store = self._store([[1.0, 2.0]], [[1.0, 2.0]])
        assert np.array_equal(edge_embedding(store, Node(0, 0), Node(1, 0)), [1.0, 2.0])

    def test_opposite_vectors_cancel(self):
        store = self._store([[3.0, -1.0]], [[-3.0, 1.0]])
        assert np.array_equal(edge_embedding(store, Node(0, 0), Node(1, 0)), [0.0, 0.0])

    def test_mean(self):
        store = self._store([[1.0, 3.0]], [[3.0, 5.0]])
        assert np.array_equal(edge_embedding(store, Node(0, 0), Node(1, 0)), [2.0, 4.0])


class TestMakeLinkDataset:
    def test_complete_relation_errors(self):
        g = build_from_pairs((2, 2, 0), [(0, i, j, 1.0) for i in range(2) for j in range(2)])
        with pytest.raises(EvalError, match="too dense"):
            make_link_dataset(g, 0, 1.0, np.random.default_rng(0))

    def test_negatives_disjoint_from_edges(self):
        rng = np.random.default_rng(1)
        g = random_tripartite(rng, counts=(6, 5, 4), density=0.3)
        ds = make_link_dataset(g, 0, 1.0, np.random.default_rng(2))
        n_pos = len(g.edge_wt[0])
        assert ds.n_positive == n_pos
        assert ds.n_negative == n_pos
        edge_set = {(int(i), int(j)) for i, j in zip(g.edge_src[0], g.edge_dst[0])}
        negs = ds.pairs[n_pos:]
        assert len(set(negs)) == len(negs)
        assert not (set(negs) & edge_set)

    def test_empty_relation_errors(self):
        g = build_from_pairs((2, 2, 2), [(0, 0, 0, 1.0)])
        with pytest.raises(EvalError, match="no edges"):
            make_link_dataset(g, 2, 1.0, np.random.default_rng(0))

    def test_ceil_of_ratio(self):
        g = build_from_pairs((3, 3, 0), [(0, 0, 0, 1.0), (0, 1, 1, 1.0), (0, 2, 2, 1.0)])
        ds = make_link_dataset(g, 0, 0.5, np.random.default_rng(3))
        assert ds.n_negative == 2  # ceil(1.5)

    @pytest.mark.parametrize("n_edges,expect_enumeration", [(8, True), (3, False)])
    def test_negatives_uniform_over_non_edges(self, n_edges, expect_enumeration):
        # 4x4 relation; both the enumeration and the rejection branch
        pairs = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 0)]
        edges = [(0, i, j, 1.0) for i, j in pairs[:n_edges]]
        g = build_from_pairs((4, 4, 0), edges)
        n_pos = len(g.edge_wt[0])
        n_free = 16 - n_pos
        n_neg = n_pos
        assert (n_free <= 2 * n_neg) == expect_enumeration
        trials = 8000
        freq: dict[tuple[int, int], int] = {}
        for t in range(trials):
            ds = make_link_dataset(g, 0, 1.0, np.random.default_rng(100 + t))
            for pair in ds.pairs[n_pos:]:
                freq[pair] = freq.get(pair, 0) + 1
        expected = n_neg / n_free
        for pair, count in freq.items():
            assert abs(count / trials - expected) < 0.02
        assert len(freq) == n_free  # every non-edge seen


class TestKFold:
    def test_even_split(self):
        labels = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
        fold_of = kfold_split(labels, 5, np.random.default_rng(0))
        sizes = [int((fold_of == f).sum()) for f in range(5)]
        assert sizes == [2] * 5

    def test_partition_covers_everything(self):
        labels = (np.random.default_rng(1).random(37) < 0.4).astype(int)
        fold_of = kfold_split(labels, 4, np.random.default_rng(2))
        assert set(fold_of) == {0, 1, 2, 3}
        assert len(fold_of) == 37

    @pytest.mark.parametrize("n_pos,n_neg", [(25, 25), (45, 5)])
    def test_stratification(self, n_pos, n_neg):
        labels = np.concatenate([np.ones(n_pos), np.zeros(n_neg)])
        fold_of = kfold_split(labels, 5, np.random.default_rng(3))
        for f in range(5):
            in_fold = labels[fold_of == f]
            assert abs(in_fold.sum() - n_pos / 5) <= 1
            assert abs((in_fold == 0).sum() - n_neg / 5) <= 1

    def test_too_few_samples(self):
        with pytest.raises(EvalError):
            kfold_split(np.array([1, 0]), 3, np.random.default_rng(0))
        with pytest.raises(EvalError):
            kfold_split(np.array([1, 0, 1]), 1, np.random.default_rng(0))


class TestClassifier:
    def test_separable_data_perfect_accuracy(self):
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train_classifier(X, y, l2=1e-6)
        pred = model.predict_proba(X) >= 0.5
        assert np.array_equal(pred, y.astype(bool))

    def test_equal_features_balanced_labels(self):
        X = np.ones((10, 3))
        y = np.array([0.0, 1.0] * 5)
        model = train_classifier(X, y)
        probe = np.array([[1.0, 1.0, 1.0], [5.0, -2.0, 0.0]])
        assert np.allclose(model.predict_proba(probe), 0.5, atol=1e-9)

    def test_two_point_closed_form(self):
        x1, x0, l2 = 2.0, 0.5, 0.1
        w_star, b_star = solve_two_point_logistic(x1, x0, l2)
        X = np.array([[x1], [x0]])
        y = np.array([1.0, 0.0])
        model = train_classifier(X, y, l2=l2, tol=1e-12)
        assert abs(model.weights[0] - w_star) < 1e-4
        assert abs(model.intercept - b_star) < 1e-4

    def test_single_class_rejected(self):
        with pytest.raises(EvalError, match="single class"):
            train_classifier(np.ones((3, 2)), np.ones(3))


class TestAucRoc:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        assert auc_roc(scores, labels) == 1.0
        assert auc_pr(scores, labels) == 1.0

    def test_all_ties_give_half(self):
        scores = np.ones(6)
        labels = np.array([1, 0, 1, 0, 1, 0])
        assert auc_roc(scores, labels) == 0.5

    def test_reversed_ranking_gives_zero(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([1, 1, 0, 0])
        assert auc_roc(scores, labels) == 0.0

    def test_matches_pair_counting_oracle_exactly(self):
        rng = np.random.default_rng(17)
        for trial in range(50):
            n = int(rng.integers(2, 51))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            # small integer grid forces plenty of ties
            scores = rng.integers(0, 6, size=n).astype(float)
            assert auc_roc(scores, labels) == auc_pair_counting_oracle(scores, labels)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(23)
        scores = rng.random(40)
        labels = rng.integers(0, 2, size=40)
        labels[0], labels[1] = 0, 1
        for transform in (lambda s: 3 * s + 2, np.exp, lambda s: s ** 3):
            assert auc_roc(transform(scores), labels) == pytest.approx(auc_roc(scores, labels))
            assert auc_pr(transform(scores), labels) == pytest.approx(auc_pr(scores, labels))

    def test_single_class_rejected(self):
        with pytest.raises(EvalError):
            auc_roc(np.array([0.1, 0.2]), np.array([1, 1]))
        with pytest.raises(EvalError):
            auc_pr(np.array([0.1, 0.2]), np.array([0, 0]))


class TestAucPr:
    def test_all_ties_equal_prevalence(self):
        scores = np.full(8, 0.4)
        labels = np.array([1, 1, 0, 0, 0, 0, 1, 0])
        assert auc_pr(scores, labels) == pytest.approx(3 / 8)

    def test_matches_sklearn_average_precision(self):
        sklearn_metrics = pytest.importorskip("sklearn.metrics")
        rng = np.random.default_rng(29)
        for trial in range(20):
            n = int(rng.integers(4, 60))
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            scores = rng.integers(0, 8, size=n).astype(float) if trial % 2 else rng.random(n)
            expected = sklearn_metrics.average_precision_score(labels, scores)
            assert auc_pr(scores, labels) == pytest.approx(expected, abs=1e-12)


class TestF1:
    def test_threshold(self):
        scores = np.array([0.6, 0.5, 0.4, 0.2])
        labels = np.array([1, 1, 0, 1])
        # preds: 1 1 0 0 -> tp=2 fp=0 fn=1
        assert f1_score(scores, labels) == pytest.approx(2 * 2 / (2 * 2 + 0 + 1))

    def test_degenerate_zero(self):
        assert f1_score(np.array([0.1, 0.2]), np.array([0, 0])) == 0.0


class TestEvaluate:
    def test_random_embeddings_on_random_graph_near_half(self):
        # null-model check: no structure, no information in the features
        g = random_graph((40, 25, 20), density=0.2, seed=31)
        cfg = TrainConfig(dim=8)
        store = init_embeddings(g, cfg, np.random.default_rng(7))
        report = evaluate(store, g, relation=2, folds=5, seed=11)
        assert abs(report.mean_auc_roc - 0.5) < 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        g = random_tripartite(rng, counts=(12, 8, 8), density=0.35)
        store = init_embeddings(g, TrainConfig(dim=6), np.random.default_rng(1))
        a = evaluate(store, g, relation=0, folds=3, seed=5)
        b = evaluate(store, g, relation=0, folds=3, seed=5)
        assert a.auc_roc == b.auc_roc
        assert a.auc_pr == b.auc_pr
        assert a.f1 == b.f1

    def test_report_means(self):
        report = EvalReport(relation=2, folds=2, n_positive=4, n_negative=4,
                            auc_roc=[0.6, 0.8], auc_pr=[0.5, 0.7], f1=[0.4, 0.6])
        assert report.mean_auc_roc == pytest.approx(0.7)
        assert report.mean_auc_pr == pytest.approx(0.6)
        assert report.mean_f1 == pytest.approx(0.5)
        assert "mean" in report.lines()[-1]
        assert any(line.startswith("mean_auc_roc = ") for line in report.key_values())


class TestEndToEnd:
    def test_holds_out_test_edges(self, monkeypatch):
        g = planted_graph((12, 8, 6), 2, 0.6, 0.1, seed=5)
        seen_graphs = []
        import trine.evaluation as evaluation

        real_train = evaluation.train

        def spy_train(graph, metapaths, cfg, **kwargs):
            seen_graphs.append(graph)
            return real_train(graph, metapaths, cfg, **kwargs)

        monkeypatch.setattr(evaluation, "train", spy_train)
        cfg = TrainConfig(dim=4, epochs=1, seed=2, max_walks=1, walk_length=4)
        report = evaluate_end_to_end(g, default_metapaths(), cfg, relation=2, folds=3)
        assert len(seen_graphs) == 3
        n_pos = len(g.edge_wt[2])
        held_out = [n_pos - len(gf.edge_wt[2]) for gf in seen_graphs]
        assert sum(held_out) == n_pos  # every positive held out exactly once
        assert all(h >= 1 for h in held_out)
        assert len(report.auc_roc) == 3

    def test_deterministic(self):
        g = planted_graph((12, 8, 6), 2, 0.6, 0.1, seed=6)
        cfg = TrainConfig(dim=4, epochs=2, seed=9, max_walks=1, walk_length=4)
        a = evaluate_end_to_end(g, default_metapaths(), cfg, relation=2, folds=3)
        b = evaluate_end_to_end(g, default_metapaths(), cfg, relation=2, folds=3)
        assert a.auc_roc == b.auc_roc and a.auc_pr == b.auc_pr and a.f1 == b.f1
