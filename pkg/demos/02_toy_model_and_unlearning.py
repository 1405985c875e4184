"""Train the toy in-context classifier and apply all three unlearners.

The toy model is a linear softmax classifier over hashed bag-of-words
features plus a kernel-attention term over context demonstrations. It is
small enough to retrain in milliseconds yet exposes everything the
unlearning methods need: gradients for ascent, retraining for the oracle,
and context sensitivity for the prompt-based method.
"""

import numpy as np

from icul import (
    ToyHyper,
    confidence,
    ga_unlearn,
    icul_unlearn,
    make_split,
    make_synthetic_corpus,
    retrain_oracle,
    toy_handle,
    train_toy,
)

corpus = make_synthetic_corpus(n=800, seed=1, marker_tokens=3)
plan = make_split(corpus, seed=1, n_train=600, n_test=150)
train = corpus.get_many(plan.train_ids)

hyper = ToyHyper(lr=0.1, epochs=25, seed=1, feature_dim=4096,
                 alpha=0.6, batch_size=8)
model = train_toy(train, hyper, label_set=corpus.label_set)
handle = toy_handle(model)

target = train[0]
pool = train[10:60]
print(f"target record: {target.text!r} -> {target.label}")

raw = confidence(handle.predict((), target.text), target.label)
print(f"confidence before unlearning : {raw:+.3f}")

wrapped = icul_unlearn(handle, [target], pool, L=6, seed=3,
                       label_set=corpus.label_set)
print(f"confidence after icul        : "
      f"{confidence(wrapped.predict(target.text), target.label):+.3f}")

ascended = ga_unlearn(model, [target], lr=0.05, epochs=1)
print(f"confidence after ga          : "
      f"{confidence(ascended.predict(target.text), target.label):+.3f}")

retrained = retrain_oracle(train, [target.id], hyper,
                           label_set=corpus.label_set)
print(f"confidence after retraining  : "
      f"{confidence(retrained.predict(target.text), target.label):+.3f}")

# icul leaves the weights untouched
assert np.array_equal(model.weights, wrapped.handle.backend.weights)
print("\nicul never modified the model weights; the other two produced "
      "new weight matrices.")
