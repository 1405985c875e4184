import math

import numpy as np
import pytest

from icul.audit import (
    RETRAINED,
    UNLEARNED,
    GaussianFit,
    UnlearnMethod,
    confidence,
    fit_gaussian,
    gaussian_logpdf,
    lira_forget,
    run_audit,
    train_ensemble,
)
from icul.corpus import make_split, select_disjoint_forget_sets, shadow_subsets
from icul.errors import AlignmentError, LabelError, SampleSizeError
from icul.model import ClassDistribution, ToyHyper
from icul.synth import make_synthetic_corpus


class TestConfidence:
    def test_uniform_binary_is_exactly_zero(self):
        dist = ClassDistribution(probs={"a": 0.5, "b": 0.5})
        assert confidence(dist, "a") == 0.0
        assert confidence(dist, "b") == 0.0

    def test_09_01_matches_hand_computed_logit(self):
        dist = ClassDistribution(probs={"a": 0.9, "b": 0.1})
        # log(0.9) - log(0.1) = 2.1972245773...
        assert confidence(dist, "a") == pytest.approx(2.19722, abs=1e-5)

    def test_clamp_keeps_saturated_probability_finite(self):
        dist = ClassDistribution(probs={"a": 1.0, "b": 0.0})
        value = confidence(dist, "a")
        assert math.isfinite(value)
        assert value == pytest.approx(math.log((1 - 1e-12) / 1e-12))

    def test_strictly_increasing_in_p(self):
        grid = np.linspace(0.01, 0.99, 50)
        values = [confidence(ClassDistribution(probs={"a": p, "b": 1 - p}), "a")
                  for p in grid]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_unknown_label_rejected(self):
        with pytest.raises(LabelError):
            confidence(ClassDistribution(probs={"a": 1.0}), "zzz")


class TestFitGaussian:
    def test_degenerate_variance_hits_floor(self):
        fit = fit_gaussian([1.0, 1.0, 1.0, 1.0])
        assert fit.mean == 1.0
        assert fit.std == 1e-6

    def test_two_points_hand_computed(self):
        fit = fit_gaussian([0.0, 2.0])
        assert fit.mean == 1.0
        assert fit.std == pytest.approx(1.41421, abs=1e-5)   # sqrt(2), ddof=1

    def test_monte_carlo_recovery(self):
        rng = np.random.default_rng(0)
        draws = rng.normal(3.0, 2.0, size=100_000)
        fit = fit_gaussian(draws)
        assert fit.mean == pytest.approx(3.0, abs=0.02)
        assert fit.std == pytest.approx(2.0, abs=0.02)

    def test_single_score_rejected(self):
        with pytest.raises(SampleSizeError):
            fit_gaussian([1.0])


class TestGaussianLogpdf:
    def test_matches_scipy(self):
        from scipy.stats import norm

        rng = np.random.default_rng(1)
        for _ in range(50):
            mean, std = rng.normal(), rng.uniform(0.1, 3.0)
            x = rng.normal()
            mine = gaussian_logpdf(x, GaussianFit(mean=mean, std=std))
            assert mine == pytest.approx(norm.logpdf(x, mean, std), rel=1e-12)


class TestLiraForget:
    def test_identical_fits_give_exact_zero(self):
        fit = GaussianFit(mean=0.3, std=1.2)
        score = lira_forget([0.5, -1.0, 2.0], [fit] * 3, [fit] * 3)
        assert score.log_lr == 0.0
        assert score.per_point == (0.0, 0.0, 0.0)

    def test_single_point_hand_computed(self):
        # in = N(0,1), out = N(2,1), s = 0:
        # log N(0; 0,1) - log N(0; 2,1) = -0 + (0-2)^2/2 = 2
        score = lira_forget([0.0], [GaussianFit(0.0, 1.0)], [GaussianFit(2.0, 1.0)])
        assert score.log_lr == pytest.approx(2.0)

    def test_additivity_over_points(self):
        in_fits = [GaussianFit(0.0, 1.0)] * 5
        out_fits = [GaussianFit(1.0, 2.0)] * 5
        targets = [0.1, 0.5, -0.3, 2.0, 1.1]
        total = lira_forget(targets, in_fits, out_fits)
        singles = [lira_forget([t], [i], [o]).log_lr
                   for t, i, o in zip(targets, in_fits, out_fits)]
        assert total.log_lr == pytest.approx(sum(singles))

    def test_antisymmetric_under_fit_swap(self):
        rng = np.random.default_rng(3)
        in_fits = [GaussianFit(rng.normal(), rng.uniform(0.5, 2)) for _ in range(4)]
        out_fits = [GaussianFit(rng.normal(), rng.uniform(0.5, 2)) for _ in range(4)]
        targets = rng.normal(size=4).tolist()
        fwd = lira_forget(targets, in_fits, out_fits)
        rev = lira_forget(targets, out_fits, in_fits)
        assert fwd.log_lr == pytest.approx(-rev.log_lr)

    def test_length_mismatch_rejected(self):
        with pytest.raises(AlignmentError):
            lira_forget([0.0, 1.0], [GaussianFit(0, 1)], [GaussianFit(0, 1)])


@pytest.fixture(scope="module")
def audited_pipeline():
    corpus = make_synthetic_corpus(n=600, seed=21)
    plan = make_split(corpus, seed=2, n_train=450, n_test=100)
    sets = select_disjoint_forget_sets(plan, [1] * 4, seed=5)
    asg = shadow_subsets(plan, sets, k=10, p=0.5, seed=8)
    hyper = ToyHyper(lr=0.1, epochs=3, seed=13, feature_dim=1024)
    ensemble = train_ensemble(corpus, asg, hyper)
    forget_ids = {i for fs in sets for i in fs.ids}
    pool = corpus.get_many([i for i in plan.train_ids if i not in forget_ids])
    return corpus, plan, ensemble, pool


class TestRunAudit:
    def test_counts_and_labels(self, audited_pipeline):
        corpus, plan, ensemble, pool = audited_pipeline
        records = run_audit(ensemble, range(4), UnlearnMethod(kind="baseline"),
                            corpus, pool, run_seed=0)
        assert len(records) == 40   # 4 forget sets x K=10 models
        labels = [lab for *_, lab in records]
        assert labels.count(UNLEARNED) == 20
        assert labels.count(RETRAINED) == 20

    def test_no_op_in_scores_are_raw_model_confidences(self, audited_pipeline):
        from icul.audit import collect_scores
        from icul.model import toy_handle

        corpus, plan, ensemble, pool = audited_pipeline
        ins, _ = collect_scores(ensemble, 0, UnlearnMethod(kind="baseline"),
                                corpus, pool, run_seed=0)
        fs = ensemble.assignment.forget_sets[0]
        ex = corpus[fs.ids[0]]
        for i, vec in ins.items():
            raw = toy_handle(ensemble.models[i]).predict((), ex.text)
            assert vec[0] == pytest.approx(confidence(raw, ex.label))

    def test_leave_one_out_excludes_own_score(self, audited_pipeline):
        # construction audit: the score vector of the judged model never
        # feeds the fit that judges it; removing that model's scores from
        # the collection must not change its fits
        from icul.audit import collect_scores, fit_gaussian

        corpus, plan, ensemble, pool = audited_pipeline
        method = UnlearnMethod(kind="baseline")
        ins, outs = collect_scores(ensemble, 0, method, corpus, pool, run_seed=0)
        judged = sorted(ins)[0]
        others = [v[0] for i, v in sorted(ins.items()) if i != judged]
        full_fit = fit_gaussian(others)
        redacted = dict(ins)
        redacted[judged] = np.array([999.0])   # would distort any fit using it
        others_after = [v[0] for i, v in sorted(redacted.items()) if i != judged]
        assert fit_gaussian(others_after) == full_fit

    def test_identical_hypotheses_give_zero_scores_and_diagonal_roc(self):
        from icul.metrics import auc, roc

        fits = [GaussianFit(0.0, 1.0)]
        scores, labels = [], []
        rng = np.random.default_rng(5)
        for i in range(40):
            s = lira_forget([rng.normal()], fits, fits)
            scores.append(s.log_lr)
            labels.append(UNLEARNED if i % 2 else RETRAINED)
        assert all(s == 0.0 for s in scores)
        curve = roc(scores, labels)
        assert auc(curve) == pytest.approx(0.5)
