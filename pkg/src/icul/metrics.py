"""Audit metrics: empirical ROC curves, AUC, TPR at fixed low FPRs, and
model accuracy tables.

The positive class is "unlearned" (H1): a true positive is correctly
flagging a model that still carries the forget points. A successful
unlearner therefore drives the curve down to the diagonal, where
TPR = FPR (the random-guess reference).
"""

from dataclasses import dataclass

import numpy as np

from .audit import UNLEARNED
from .errors import ClassError, SizeError

REPORT_FPRS = (1e-3, 1e-2, 1e-1)


@dataclass(frozen=True)
class RocCurve:
    points: tuple      # (fpr, tpr) pairs from (0, 0) to (1, 1)

    @property
    def fprs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tprs(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def roc(scores, labels) -> RocCurve:
    """Empirical ROC over all distinct-score thresholds, ties grouped."""
    scores = np.asarray(scores, dtype=float)
    pos = np.array([lab == UNLEARNED for lab in labels])
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ClassError("ROC needs scores from both hypothesis classes")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = pos[order]

    tp = np.cumsum(sorted_pos)
    fp = np.cumsum(~sorted_pos)
    # one curve point per distinct score value: index of each tie group's end
    last = np.nonzero(np.append(np.diff(sorted_scores) != 0, True))[0]

    points = [(0.0, 0.0)]
    for i in last:
        points.append((float(fp[i]) / n_neg, float(tp[i]) / n_pos))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return RocCurve(points=tuple(points))


def benchmark_curve() -> RocCurve:
    """Random-guess reference: TPR = FPR everywhere."""
    return RocCurve(points=((0.0, 0.0), (1.0, 1.0)))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    f, t = curve.fprs, curve.tprs
    return float(np.trapezoid(t, f))


def tpr_at_fpr(curve: RocCurve, fpr: float) -> float:
    """TPR at a target FPR, linearly interpolated between curve points."""
    f, t = curve.fprs, curve.tprs
    # collapse vertical segments: at a repeated fpr the curve's value is its top
    uniq, idx = np.unique(f, return_index=True)
    top = np.maximum.reduceat(t, idx)
    return float(np.interp(fpr, uniq, top))


@dataclass(frozen=True)
class AccuracyReport:
    train_acc: float       # None when the list was empty
    forget_acc: float
    test_acc: float


def accuracies(model, train, forget, test) -> AccuracyReport:
    """Argmax-label accuracy of a model (or unlearned wrapper) on each list.

    ICUL wrappers keep their fixed context prepended to every query; the
    context is part of inference.
    """
    if not test:
        raise SizeError("test list must be non-empty")

    def acc(examples):
        if not examples:
            return None
        probs = model.predict_many([ex.text for ex in examples])
        label_set = list(model.handle.label_set if hasattr(model, "handle")
                         else model.label_set)
        pred = np.argmax(probs, axis=1)
        truth = np.array([label_set.index(ex.label) for ex in examples])
        return float(np.mean(pred == truth))

    return AccuracyReport(
        train_acc=acc(train), forget_acc=acc(forget), test_acc=acc(test)
    )
