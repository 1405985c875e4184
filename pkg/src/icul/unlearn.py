"""The three unlearning procedures.

icul     black-box: prepend a fixed context (flipped forget points + L
         correct examples) at inference time; weights untouched.
ga       white-box: sequentially ascend the loss gradient on each forget
         point, maximizing its cross-entropy.
retrain  oracle: train from scratch on the data minus the forget points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DivergenceError
from .model import (
    ClassDistribution,
    ModelHandle,
    ToyModel,
    grad_loss,
    toy_handle,
    train_toy,
)
from .prompting import ICUL, BuiltContext, ContextSpec, PromptTemplate, build_context

# Weight magnitude guard: ascent past this is treated as divergence rather
# than letting non-finite values contaminate downstream scores.
WEIGHT_GUARD = 1e6


@dataclass(frozen=True)
class UnlearnedModel:
    kind: str                       # "icul" | "ga" | "retrain" | "baseline"
    handle: ModelHandle
    fixed_context: BuiltContext = None

    def predict(self, query: str) -> ClassDistribution:
        return self.handle.predict(self.fixed_context or (), query)

    def predict_many(self, queries) -> np.ndarray:
        return self.handle.predict_many(self.fixed_context or (), queries)


def icul_unlearn(handle: ModelHandle, forget, pool, L: int, seed: int,
                 template: PromptTemplate = None, label_set=None,
                 task_kind: str = "classification") -> UnlearnedModel:
    """Wrap the model with a fixed ICUL context; non-destructive."""
    template = template or PromptTemplate()
    label_set = tuple(label_set) if label_set is not None else handle.label_set
    spec = ContextSpec(mode=ICUL, L=L, seed=seed)
    context = build_context(spec, forget, pool, template, label_set, task_kind)
    return UnlearnedModel(kind="icul", handle=handle, fixed_context=context)


def ga_unlearn(model: ToyModel, forget, lr: float, epochs: int = 1) -> UnlearnedModel:
    """Sequential per-point gradient ascent on the forget points.

    Each point is unlearned individually with a constant step size before
    moving to the next; lr=0 or epochs=0 is the identity on weights.
    """
    if not isinstance(model, ToyModel):
        raise CapabilityError("gradient ascent needs weight access (toy backend only)")
    W = model.weights.copy()
    step = 0
    for ex in forget:
        for _ in range(epochs):
            current = ToyModel(
                weights=W, label_set=model.label_set,
                feature_dim=model.feature_dim, alpha=model.alpha, tau=model.tau,
            )
            W = W + lr * grad_loss(current, ex)
            step += 1
            if not np.isfinite(W).all() or np.abs(W).max() > WEIGHT_GUARD:
                raise DivergenceError(
                    f"weights diverged at ascent step {step} (point {ex.id!r})"
                )
    updated = ToyModel(
        weights=W, label_set=model.label_set,
        feature_dim=model.feature_dim, alpha=model.alpha, tau=model.tau,
    )
    return UnlearnedModel(kind="ga", handle=toy_handle(updated))


def retrain_oracle(train, forget_ids, hyper, label_set=None) -> UnlearnedModel:
    """Exact unlearning: retrain on train minus the forget ids.

    Same hyperparameters and seed as the original training, so an empty
    forget set reproduces the original weights bit for bit.
    """
    drop = set(forget_ids)
    kept = [ex for ex in train if ex.id not in drop]
    retrained = train_toy(kept, hyper, label_set=label_set)
    return UnlearnedModel(kind="retrain", handle=toy_handle(retrained))


def baseline(handle: ModelHandle) -> UnlearnedModel:
    """The decision not to unlearn; audits of this measure raw leakage."""
    return UnlearnedModel(kind="baseline", handle=handle)
