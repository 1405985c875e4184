"""Black-box model contract and the trainable toy in-context classifier.

The contract is: given an ordered list of (text, label) context
demonstrations and a query text, return a probability distribution over the
task's label set. The toy backend implements it as

    score(y) = w_y . x_q  +  alpha * sum_i sim(x_q, x_i)^(1/tau) * 1[y_i = y]
    probs    = softmax(score)

where x are hashed bag-of-words count vectors and sim is cosine similarity
clamped to [0, 1]. The linear term is the only trained part, so the model is
both finetunable by gradient methods and steerable by context
demonstrations. The attention term has no trained parameters.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, LabelError
from .seeds import rng_for

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

DEFAULT_FEATURE_DIM = 4096
DEFAULT_ALPHA = 2.0
DEFAULT_TAU = 0.5


def token_bucket(token: str, feature_dim: int) -> int:
    """Stable hash bucket for a token (blake2s, platform independent)."""
    digest = hashlib.blake2s(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % feature_dim


def featurize(text: str, feature_dim: int) -> np.ndarray:
    """Hashed bag-of-words count vector. Empty text gives the zero vector."""
    vec = np.zeros(feature_dim)
    for token in _TOKEN_RE.findall(text.lower()):
        vec[token_bucket(token, feature_dim)] += 1.0
    return vec


def featurize_many(texts, feature_dim: int) -> np.ndarray:
    mat = np.zeros((len(texts), feature_dim))
    for r, text in enumerate(texts):
        for token in _TOKEN_RE.findall(text.lower()):
            mat[r, token_bucket(token, feature_dim)] += 1.0
    return mat


@dataclass(frozen=True)
class ClassDistribution:
    """Probabilities over the task label set; non-negative, sums to one."""

    probs: dict

    def __getitem__(self, label: str) -> float:
        return self.probs[label]

    def argmax(self) -> str:
        return max(self.probs, key=lambda k: (self.probs[k], k))


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class ToyHyper:
    lr: float = 0.1
    epochs: int = 3
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    tau: float = DEFAULT_TAU
    feature_dim: int = DEFAULT_FEATURE_DIM
    batch_size: int = 32


@dataclass(frozen=True, eq=False)
class ToyModel:
    weights: np.ndarray            # |label_set| x feature_dim
    label_set: tuple
    feature_dim: int
    alpha: float = DEFAULT_ALPHA
    tau: float = DEFAULT_TAU
    _label_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_label_index", {y: i for i, y in enumerate(self.label_set)}
        )

    def label_row(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise LabelError(f"label {label!r} not in label set {self.label_set}") from None


def train_toy(examples, hyper: ToyHyper, label_set=None) -> ToyModel:
    """Minimize softmax cross-entropy of the linear term by mini-batch SGD.

    Weights start at zero (epochs=0 yields uniform predictions); shuffling is
    fixed by hyper.seed, so identical inputs give bit-identical weights.
    label_set defaults to the labels present in the examples; passing the
    task's full label set enforces that every class keeps coverage.
    """
    if label_set is None:
        label_set = tuple(sorted({ex.label for ex in examples}))
    else:
        label_set = tuple(label_set)
    counts = {y: 0 for y in label_set}
    for ex in examples:
        if ex.label not in counts:
            raise LabelError(f"label {ex.label!r} not in label set {label_set}")
        counts[ex.label] += 1
    missing = [y for y, c in counts.items() if c == 0]
    if missing or not examples:
        raise CoverageError(f"labels without examples: {missing or 'all'}")

    C, D = len(label_set), hyper.feature_dim
    X = featurize_many([ex.text for ex in examples], D)
    y_idx = np.array([label_set.index(ex.label) for ex in examples])
    Y = np.zeros((len(examples), C))
    Y[np.arange(len(examples)), y_idx] = 1.0

    W = np.zeros((C, D))
    rng = rng_for("toy-train", hyper.seed)
    n = len(examples)
    for _ in range(hyper.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            rows = perm[start:start + hyper.batch_size]
            xb, yb = X[rows], Y[rows]
            probs = _softmax(xb @ W.T)
            W -= hyper.lr * (probs - yb).T @ xb / len(rows)

    return ToyModel(
        weights=W,
        label_set=label_set,
        feature_dim=D,
        alpha=hyper.alpha,
        tau=hyper.tau,
    )


def _context_scores(model: ToyModel, context, queries: np.ndarray) -> np.ndarray:
    """Attention contribution of the demonstrations, one row per query."""
    add = np.zeros((queries.shape[0], len(model.label_set)))
    if not context or model.alpha == 0.0:
        return add
    demo_x = featurize_many([t for t, _ in context], model.feature_dim)
    demo_rows = [model.label_row(y) for _, y in context]
    qn = np.linalg.norm(queries, axis=1)
    dn = np.linalg.norm(demo_x, axis=1)
    denom = np.outer(qn, dn)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, (queries @ demo_x.T) / denom, 0.0)
    sim = np.clip(sim, 0.0, 1.0) ** (1.0 / model.tau)
    for d, row in enumerate(demo_rows):
        add[:, row] += model.alpha * sim[:, d]
    return add


def predict_toy(model: ToyModel, context, query: str) -> ClassDistribution:
    """Distribution over labels for one query given context demonstrations."""
    x = featurize(query, model.feature_dim)[None, :]
    scores = x @ model.weights.T + _context_scores(model, context, x)
    probs = _softmax(scores)[0]
    return ClassDistribution(probs=dict(zip(model.label_set, probs.tolist())))


def predict_toy_many(model: ToyModel, context, queries) -> np.ndarray:
    """Probability matrix (n_queries x n_labels), label order = label_set."""
    X = featurize_many(list(queries), model.feature_dim)
    scores = X @ model.weights.T + _context_scores(model, context, X)
    return _softmax(scores)


def example_loss(model: ToyModel, example) -> float:
    """Context-free cross-entropy of the linear term on one example."""
    row = model.label_row(example.label)
    x = featurize(example.text, model.feature_dim)
    probs = _softmax((model.weights @ x)[None, :])[0]
    return float(-np.log(max(probs[row], 1e-300)))


def grad_loss(model: ToyModel, example) -> np.ndarray:
    """Gradient of the context-free cross-entropy w.r.t. the weights.

    For softmax cross-entropy this is (p - onehot(y)) outer x.
    """
    row = model.label_row(example.label)
    x = featurize(example.text, model.feature_dim)
    probs = _softmax((model.weights @ x)[None, :])[0]
    err = probs.copy()
    err[row] -= 1.0
    return np.outer(err, x)


def save_toy(model: ToyModel, path) -> None:
    doc = {
        "feature_dim": model.feature_dim,
        "alpha": model.alpha,
        "tau": model.tau,
        "label_set": list(model.label_set),
        "weights": model.weights.reshape(-1).tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_toy(path) -> ToyModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    label_set = tuple(doc["label_set"])
    weights = np.array(doc["weights"]).reshape(len(label_set), doc["feature_dim"])
    return ToyModel(
        weights=weights,
        label_set=label_set,
        feature_dim=doc["feature_dim"],
        alpha=doc["alpha"],
        tau=doc["tau"],
    )


def _demos_of(context) -> tuple:
    """Context may be a BuiltContext or a bare (text, label) sequence."""
    return tuple(getattr(context, "demonstrations", context))


@dataclass(frozen=True)
class ModelHandle:
    """Uniform front for the toy and remote backends; queries run greedily
    (temperature 0) while confidences read the pre-argmax probabilities."""

    backend: object                # ToyModel or remote.RemoteBackend
    kind: str = "toy"              # "toy" | "remote"

    def predict(self, context, query: str) -> ClassDistribution:
        return predict(self, context, query)

    def predict_many(self, context, queries) -> np.ndarray:
        if self.kind == "toy":
            return predict_toy_many(self.backend, _demos_of(context), queries)
        return np.array(
            [list(predict(self, context, q).probs.values()) for q in queries]
        )

    @property
    def label_set(self) -> tuple:
        return tuple(self.backend.label_set)


def toy_handle(model: ToyModel) -> ModelHandle:
    return ModelHandle(backend=model, kind="toy")


def predict(handle: ModelHandle, context, query: str) -> ClassDistribution:
    """Dispatch the backend contract: context demonstrations + query in,
    normalized label distribution out."""
    for _, y in _demos_of(context):
        if y not in handle.label_set:
            raise LabelError(f"context label {y!r} not in label set")
    if handle.kind == "toy":
        return predict_toy(handle.backend, _demos_of(context), query)
    return handle.backend.predict(context, query)
