"""Synthetic review corpus for desk-scale runs.

Each record mixes class-indicative words (drawn with some cross-class
bleed, so the task is learnable but not trivially separable), shared
filler words (so context demonstrations have nonzero similarity to
queries), and a record-unique marker token. The marker gives an overfit
model something to memorize, which is what the audit's baseline leakage
measurement needs to detect.
"""

import numpy as np

from .corpus import Corpus, LabeledExample
from .seeds import rng_for

_POSITIVE = (
    "great", "excellent", "superb", "wonderful", "delightful", "charming",
    "brilliant", "enjoyable", "fresh", "moving", "crisp", "vivid",
    "engaging", "riveting", "warm", "clever",
)
_NEGATIVE = (
    "awful", "terrible", "dull", "boring", "clumsy", "flat",
    "tedious", "stale", "lifeless", "shallow", "grating", "murky",
    "plodding", "hollow", "sloppy", "bland",
)
_FILLER = (
    "the", "movie", "plot", "acting", "scene", "script", "film",
    "story", "sound", "camera", "pacing", "ending",
)


def make_synthetic_corpus(n: int = 2000, seed: int = 0,
                          word_noise: float = 0.2,
                          signal_words: int = 4,
                          filler_words: int = 3,
                          marker_tokens: int = 2,
                          noise_words: int = None) -> Corpus:
    """n two-class records; deterministic in seed.

    marker_tokens sets how many record-unique tokens each text carries;
    more markers means an overfit model memorizes individual records
    harder. noise_words, when given, controls the exact count of
    cross-class signal words per record instead of drawing each with
    probability word_noise: an int fixes the count, a sequence of weights
    (w0, w1, ...) draws count c with probability wc. Bounding the count
    keeps record difficulty (and therefore the memorization headroom an
    audit sees) inside a band instead of letting a Bernoulli tail produce
    majority-wrong records.
    """
    rng = rng_for("synth", seed)
    vocab = {"positive": _POSITIVE, "negative": _NEGATIVE}
    suffixes = "abcdefgh"
    examples = []
    for i in range(n):
        label = "positive" if rng.random() < 0.5 else "negative"
        other = "negative" if label == "positive" else "positive"
        if noise_words is None:
            crossed = [rng.random() < word_noise for _ in range(signal_words)]
        else:
            if isinstance(noise_words, int):
                count = noise_words
            else:
                weights = np.asarray(noise_words, dtype=float)
                count = int(rng.choice(len(weights), p=weights / weights.sum()))
            flip_at = set(rng.choice(signal_words, size=count,
                                     replace=False).tolist())
            crossed = [k in flip_at for k in range(signal_words)]
        words = []
        for is_cross in crossed:
            source = vocab[other] if is_cross else vocab[label]
            words.append(source[int(rng.integers(len(source)))])
        for _ in range(filler_words):
            words.append(_FILLER[int(rng.integers(len(_FILLER)))])
        order = rng.permutation(len(words))
        markers = " ".join(f"mk{i:04d}{s}" for s in suffixes[:marker_tokens])
        text = " ".join(words[k] for k in order) + " " + markers
        examples.append(LabeledExample(id=f"{i:06d}", text=text, label=label))
    return Corpus(examples=tuple(examples),
                  label_set=("negative", "positive"),
                  task_kind="classification")
