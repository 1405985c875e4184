import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icul.audit import RETRAINED, UNLEARNED
from icul.errors import ClassError, SizeError
from icul.metrics import (
    RocCurve,
    accuracies,
    auc,
    benchmark_curve,
    roc,
    tpr_at_fpr,
)


def _labels(pos, neg):
    return [UNLEARNED] * pos + [RETRAINED] * neg


class TestRoc:
    def test_perfect_separation(self):
        scores = [3.0, 2.5, 2.0, -1.0, -2.0, -3.0]
        curve = roc(scores, _labels(3, 3))
        assert (0.0, 1.0) in curve.points
        assert auc(curve) == 1.0

    def test_random_scores_auc_near_half(self):
        rng = np.random.default_rng(0)
        scores = rng.normal(size=10_000)
        labels = [UNLEARNED if rng.random() < 0.5 else RETRAINED
                  for _ in range(10_000)]
        assert auc(roc(scores, labels)) == pytest.approx(0.5, abs=0.02)

    def test_all_ties_give_diagonal(self):
        curve = roc([1.0] * 10, _labels(5, 5))
        assert curve.points == ((0.0, 0.0), (1.0, 1.0))
        assert auc(curve) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ClassError):
            roc([1.0, 2.0], [UNLEARNED, UNLEARNED])

    def test_curve_is_monotone_with_exact_endpoints(self):
        rng = np.random.default_rng(1)
        curve = roc(rng.normal(size=200), _labels(100, 100))
        f, t = curve.fprs, curve.tprs
        assert f[0] == 0.0 and t[0] == 0.0
        assert f[-1] == 1.0 and t[-1] == 1.0
        assert (np.diff(f) >= 0).all() and (np.diff(t) >= 0).all()

    def test_matches_sklearn_auc(self):
        from sklearn.metrics import roc_auc_score

        rng = np.random.default_rng(2)
        scores = np.concatenate([rng.normal(1, 1, 300), rng.normal(0, 1, 300)])
        labels = _labels(300, 300)
        mine = auc(roc(scores, labels))
        ref = roc_auc_score([lab == UNLEARNED for lab in labels], scores)
        assert mine == pytest.approx(ref, abs=1e-12)


class TestAuc:
    def test_diagonal(self):
        assert auc(benchmark_curve()) == 0.5

    def test_step_through_0_1(self):
        curve = RocCurve(points=((0.0, 0.0), (0.0, 1.0), (1.0, 1.0)))
        assert auc(curve) == 1.0

    def test_hand_computed_trapezoid(self):
        curve = RocCurve(points=((0.0, 0.0), (0.5, 0.8), (1.0, 1.0)))
        # 0.5*(0+0.8)/2 + 0.5*(0.8+1)/2 = 0.65
        assert auc(curve) == pytest.approx(0.65)


class TestTprAtFpr:
    def test_benchmark_identity_is_exact(self):
        bench = benchmark_curve()
        for f in (1e-3, 1e-2, 1e-1):
            assert tpr_at_fpr(bench, f) == f

    def test_perfect_curve_gives_one_everywhere(self):
        curve = RocCurve(points=((0.0, 0.0), (0.0, 1.0), (1.0, 1.0)))
        for f in (1e-3, 1e-2, 1e-1):
            assert tpr_at_fpr(curve, f) == 1.0

    def test_interpolates_between_points(self):
        curve = RocCurve(points=((0.0, 0.0), (0.2, 0.6), (1.0, 1.0)))
        assert tpr_at_fpr(curve, 0.1) == pytest.approx(0.3)

    def test_nondecreasing_in_fpr(self):
        rng = np.random.default_rng(3)
        scores = np.concatenate([rng.normal(0.5, 1, 200), rng.normal(0, 1, 200)])
        curve = roc(scores, _labels(200, 200))
        grid = np.linspace(0.001, 0.999, 50)
        values = [tpr_at_fpr(curve, f) for f in grid]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


class TestAccuracies:
    def test_majority_predictor_scores_half_on_balanced_test(self, tiny_corpus):
        from icul.model import ToyModel, toy_handle
        from icul.unlearn import baseline

        weights = np.zeros((2, 64))
        weights[1, :] = 1.0    # always prefers "positive"
        model = ToyModel(weights=weights, label_set=("negative", "positive"),
                         feature_dim=64)
        report = accuracies(baseline(toy_handle(model)), [], [],
                            list(tiny_corpus.examples))
        assert report.test_acc == 0.5
        assert report.train_acc is None and report.forget_acc is None

    def test_empty_test_rejected(self, tiny_model):
        from icul.unlearn import baseline
        from icul.model import toy_handle

        with pytest.raises(SizeError):
            accuracies(baseline(toy_handle(tiny_model)), [], [], [])

    def test_retrained_separable_model_perfect_test_accuracy(self, tiny_corpus):
        from icul.model import ToyHyper
        from icul.unlearn import retrain_oracle

        hyper = ToyHyper(lr=0.1, epochs=5, seed=0, feature_dim=128, batch_size=4)
        um = retrain_oracle(list(tiny_corpus.examples),
                            [tiny_corpus.examples[0].id], hyper)
        report = accuracies(um, list(tiny_corpus.examples)[2:],
                            [tiny_corpus.examples[1]],
                            list(tiny_corpus.examples))
        assert report.test_acc == 1.0

    def test_icul_wrapper_is_evaluated_with_its_context(self, tiny_corpus):
        from icul.model import ToyHyper, toy_handle, train_toy
        from icul.unlearn import icul_unlearn

        hyper = ToyHyper(lr=0.1, epochs=5, seed=0, feature_dim=128,
                         batch_size=4, alpha=1000.0)
        model = train_toy(list(tiny_corpus.examples), hyper)
        forget = [tiny_corpus.examples[0]]
        pool = list(tiny_corpus.examples)[2:]
        um = icul_unlearn(toy_handle(model), forget, pool, L=2, seed=1,
                          label_set=tiny_corpus.label_set)
        # with overwhelming attention, the flipped context demo drags the
        # forget point to the wrong label: context provably participates
        report = accuracies(um, [], forget, list(tiny_corpus.examples))
        assert report.forget_acc == 0.0


class TestInvariances:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_auc_invariant_under_monotone_transform(self, seed):
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=60)
        labels = [UNLEARNED if rng.random() < 0.5 else RETRAINED for _ in scores]
        if len(set(labels)) < 2:
            labels[0], labels[1] = UNLEARNED, RETRAINED
        base = auc(roc(scores, labels))
        warped = auc(roc(np.expm1(scores * 0.5) * 3 + 1, labels))
        assert warped == pytest.approx(base, abs=1e-12)

    def test_negated_scores_with_swapped_labels_reflect_curve(self):
        rng = np.random.default_rng(9)
        scores = np.concatenate([rng.normal(1, 1, 50), rng.normal(0, 1, 50)])
        labels = _labels(50, 50)
        swapped = [RETRAINED if lab == UNLEARNED else UNLEARNED for lab in labels]
        a = auc(roc(scores, labels))
        b = auc(roc(-scores, labels))
        c = auc(roc(-scores, swapped))
        assert b == pytest.approx(1.0 - a, abs=1e-12)
        assert c == pytest.approx(a, abs=1e-12)
