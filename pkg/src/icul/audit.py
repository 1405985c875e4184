"""Likelihood-ratio unlearning audit over a shadow-model ensemble.

The audit decides, per evaluated model, between

    H0: the model was retrained from scratch without the forget points
    H1: the model was trained with them and then "unlearned"

Confidence on a forget point (x, y) is the logit-scaled score

    phi(f(x), y) = log f(x)_y - log sum_{y' != y} f(x)_{y'}
                 = log p - log(1 - p)          for a normalized distribution.

K shadow models are trained on subsets built so each forget set is IN for
k*p of them and OUT for the rest. IN models get the unlearning method
applied, then their confidences on the forget points sample the H1
(numerator) distribution; OUT models' raw confidences sample H0. Per-point
Gaussians are fitted to both sides and the log likelihood ratio

    log LR = sum_j [ log N(s_j; in_j) - log N(s_j; out_j) ]

is the audit statistic: near zero means the tested model is
indistinguishable from a retrain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, ShadowAssignment
from .errors import AlignmentError, CapabilityError, LabelError, SampleSizeError
from .model import ClassDistribution, ToyHyper, toy_handle, train_toy
from .prompting import ContextSpec, PromptTemplate, build_context
from .seeds import derive_seed
from .unlearn import UnlearnedModel, baseline, ga_unlearn, retrain_oracle

UNLEARNED = "unlearned"    # H1: trained with the forget set, then unlearned
RETRAINED = "retrained"    # H0: never trained on the forget set

# Probabilities are clamped before the logit so saturated softmax outputs
# stay finite; fitted stds are floored to keep log-densities defined.
CONFIDENCE_CLAMP = 1e-12
STD_FLOOR = 1e-6

_LOG_2PI = math.log(2.0 * math.pi)


def _logit(p: float) -> float:
    p = min(max(p, CONFIDENCE_CLAMP), 1.0 - CONFIDENCE_CLAMP)
    return math.log(p) - math.log(1.0 - p)


def confidence(dist: ClassDistribution, true_label: str) -> float:
    """Logit-scaled confidence in the true label."""
    if true_label not in dist.probs:
        raise LabelError(f"label {true_label!r} not in distribution")
    return _logit(dist.probs[true_label])


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    std: float


def fit_gaussian(scores) -> GaussianFit:
    """Sample mean and (n-1)-denominator std, floored at STD_FLOOR."""
    scores = np.asarray(scores, dtype=float)
    if scores.size < 2:
        raise SampleSizeError(f"need at least 2 scores, got {scores.size}")
    std = float(np.std(scores, ddof=1))
    return GaussianFit(mean=float(np.mean(scores)), std=max(std, STD_FLOOR))


def gaussian_logpdf(x: float, fit: GaussianFit) -> float:
    z = (x - fit.mean) / fit.std
    return -0.5 * z * z - math.log(fit.std) - 0.5 * _LOG_2PI


@dataclass(frozen=True)
class LiraScore:
    log_lr: float
    per_point: tuple

    def __post_init__(self):
        # additivity is definitional; recompute rather than trust callers
        object.__setattr__(self, "log_lr", float(sum(self.per_point)))


def lira_forget(target_scores, in_fits, out_fits) -> LiraScore:
    """Per-point Gaussian log likelihood ratios and their sum."""
    if not (len(target_scores) == len(in_fits) == len(out_fits)):
        raise AlignmentError(
            f"lengths differ: {len(target_scores)} scores, "
            f"{len(in_fits)} in fits, {len(out_fits)} out fits"
        )
    per_point = tuple(
        gaussian_logpdf(s, fi) - gaussian_logpdf(s, fo)
        for s, fi, fo in zip(target_scores, in_fits, out_fits)
    )
    return LiraScore(log_lr=0.0, per_point=per_point)


@dataclass(frozen=True)
class UnlearnMethod:
    """Which unlearning procedure to audit, with its parameters."""

    kind: str                 # "baseline" | "icul" | "ga" | "retrain"
    L: int = 6                # icul: number of correctly labeled context points
    context_mode: str = "icul"  # icul | icl | random_icul (ablations)
    lr: float = 0.0           # ga
    epochs: int = 1           # ga

    def param_label(self) -> str:
        if self.kind == "icul":
            tag = {"icul": "L", "icl": "icl-L", "random_icul": "rand-L"}[self.context_mode]
            return f"{tag}={self.L}"
        if self.kind == "ga":
            return f"lr={self.lr:g}"
        return "-"


@dataclass(frozen=True)
class ShadowEnsemble:
    assignment: ShadowAssignment
    models: tuple             # ToyModels, index-aligned with assignment.subsets
    hyper: ToyHyper

    @property
    def k(self) -> int:
        return self.assignment.k


def model_seed(run_seed: int, index: int) -> int:
    return derive_seed("shadow-train", run_seed, index)


def train_ensemble(corpus: Corpus, assignment: ShadowAssignment,
                   hyper: ToyHyper) -> ShadowEnsemble:
    """Train one toy model per shadow subset; model i sees exactly subset i."""
    models = []
    for i, subset in enumerate(assignment.subsets):
        seed_i = model_seed(hyper.seed, i)
        hyper_i = ToyHyper(
            lr=hyper.lr, epochs=hyper.epochs, seed=seed_i, alpha=hyper.alpha,
            tau=hyper.tau, feature_dim=hyper.feature_dim,
            batch_size=hyper.batch_size,
        )
        models.append(train_toy(corpus.get_many(subset), hyper_i,
                                label_set=corpus.label_set))
    return ShadowEnsemble(assignment=assignment, models=tuple(models), hyper=hyper)


def apply_method(ensemble: ShadowEnsemble, forget_index: int, model_index: int,
                 method: UnlearnMethod, corpus: Corpus, pool,
                 run_seed: int, template=None) -> UnlearnedModel:
    """Unlearn one forget set from one IN shadow model."""
    model = ensemble.models[model_index]
    fs = ensemble.assignment.forget_sets[forget_index]
    forget_examples = corpus.get_many(fs.ids)

    if method.kind == "baseline":
        return baseline(toy_handle(model))
    if method.kind == "icul":
        # every (forget set, model) unlearning run draws its own L context
        # examples, like independent runs of the procedure would
        spec = ContextSpec(mode=method.context_mode, L=method.L,
                           seed=derive_seed("context", run_seed, forget_index,
                                            model_index))
        ctx = build_context(spec, forget_examples, pool,
                            template or PromptTemplate(), corpus.label_set,
                            corpus.task_kind)
        return UnlearnedModel(kind="icul", handle=toy_handle(model),
                              fixed_context=ctx)
    if method.kind == "ga":
        order = np.random.default_rng(
            derive_seed("ga-order", run_seed, forget_index)
        ).permutation(len(forget_examples))
        ordered = [forget_examples[i] for i in order]
        return ga_unlearn(model, ordered, lr=method.lr, epochs=method.epochs)
    if method.kind == "retrain":
        subset = ensemble.assignment.subsets[model_index]
        hyper_i = ToyHyper(
            lr=ensemble.hyper.lr, epochs=ensemble.hyper.epochs,
            seed=model_seed(ensemble.hyper.seed, model_index),
            alpha=ensemble.hyper.alpha, tau=ensemble.hyper.tau,
            feature_dim=ensemble.hyper.feature_dim,
            batch_size=ensemble.hyper.batch_size,
        )
        return retrain_oracle(corpus.get_many(subset), fs.ids, hyper_i,
                              label_set=corpus.label_set)
    raise CapabilityError(f"unknown method {method.kind!r}")


def collect_scores(ensemble: ShadowEnsemble, forget_index: int,
                   method: UnlearnMethod, corpus: Corpus, pool,
                   run_seed: int, template=None):
    """Per-model confidence vectors on the forget points.

    Returns (in_scores, out_scores): dicts model_index -> np.ndarray of one
    confidence per forget point. IN models are unlearned first (they sample
    the numerator); OUT models are scored as-is (denominator).
    """
    fs = ensemble.assignment.forget_sets[forget_index]
    forget_examples = corpus.get_many(fs.ids)
    texts = [ex.text for ex in forget_examples]
    labels = [ex.label for ex in forget_examples]

    def score_rows(probs_matrix, label_order):
        out = np.empty(len(texts))
        for j, y in enumerate(labels):
            out[j] = _logit(probs_matrix[j, label_order.index(y)])
        return out

    in_scores, out_scores = {}, {}
    for i in ensemble.assignment.in_models(forget_index):
        um = apply_method(ensemble, forget_index, i, method, corpus, pool,
                          run_seed, template)
        probs = um.predict_many(texts)
        in_scores[i] = score_rows(probs, list(um.handle.label_set))
    for o in ensemble.assignment.out_models(forget_index):
        handle = toy_handle(ensemble.models[o])
        probs = handle.predict_many((), texts)
        out_scores[o] = score_rows(probs, list(handle.label_set))
    return in_scores, out_scores


def score_models(in_scores, out_scores, leave_one_out: bool = True):
    """LiRA score and ground-truth label for every model in one audit.

    Each model is judged against per-point Gaussian fits of the other
    models' scores. With leave_one_out the judged model is dropped from its
    own side's fit, and one rank-matched model is dropped from the opposite
    side as well: a fit from n-1 samples assigns systematically lower
    density to fresh points than one from n, so unequal fit sizes would
    bias the log ratio away from zero even for a perfect unlearner.
    Labels come from membership alone, never from the scores.
    """
    in_order = sorted(in_scores)
    out_order = sorted(out_scores)
    n_points = len(in_scores[in_order[0]])
    records = []
    for m in sorted(in_order + out_order):
        is_in = m in in_scores
        target = in_scores[m] if is_in else out_scores[m]
        if leave_one_out:
            own, other = (in_order, out_order) if is_in else (out_order, in_order)
            drop_other = other[own.index(m) % len(other)]
            keep_in = [i for i in in_order if i != m and i != drop_other]
            keep_out = [o for o in out_order if o != m and o != drop_other]
        else:
            keep_in, keep_out = in_order, out_order
        in_fits, out_fits = [], []
        for j in range(n_points):
            in_fits.append(fit_gaussian([in_scores[i][j] for i in keep_in]))
            out_fits.append(fit_gaussian([out_scores[o][j] for o in keep_out]))
        score = lira_forget(target, in_fits, out_fits)
        records.append((m, score, UNLEARNED if is_in else RETRAINED))
    return records


def run_audit(ensemble: ShadowEnsemble, forget_indices, method: UnlearnMethod,
              corpus: Corpus, pool, run_seed: int, template=None,
              leave_one_out: bool = True):
    """Score every shadow model against every forget set.

    Returns a list of (forget_index, model_index, LiraScore, label);
    IN models are unlearned with ``method`` before scoring, OUT models are
    scored raw, and fits follow the balanced leave-one-out rule of
    score_models.
    """
    records = []
    for fi in forget_indices:
        in_scores, out_scores = collect_scores(
            ensemble, fi, method, corpus, pool, run_seed, template)
        for m, score, label in score_models(in_scores, out_scores,
                                            leave_one_out=leave_one_out):
            records.append((fi, m, score, label))
    return records
