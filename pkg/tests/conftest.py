import json

import pytest

from icul.corpus import Corpus, LabeledExample
from icul.model import ToyHyper, train_toy


@pytest.fixture
def tiny_corpus():
    """Linearly separable two-class corpus: 'good' texts vs 'bad' texts."""
    examples = []
    for i in range(12):
        if i % 2 == 0:
            examples.append(LabeledExample(
                id=f"g{i:02d}", text=f"good fine solid item{i}", label="positive"))
        else:
            examples.append(LabeledExample(
                id=f"b{i:02d}", text=f"bad poor weak item{i}", label="negative"))
    return Corpus(examples=tuple(examples),
                  label_set=("negative", "positive"))


@pytest.fixture
def tiny_model(tiny_corpus):
    hyper = ToyHyper(lr=0.1, epochs=5, seed=0, feature_dim=128, batch_size=4)
    return train_toy(list(tiny_corpus.examples), hyper)


@pytest.fixture
def jsonl_file(tmp_path):
    def write(records, name="data.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec) + "\n")
        return path

    return write
