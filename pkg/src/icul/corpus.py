"""Labeled text corpora: ingestion, splits, forget sets, shadow subsets."""

import csv
import json
from dataclasses import dataclass, field

from .errors import (
    ConfigError,
    OverlapError,
    ParseError,
    SanitizationError,
    SizeError,
)
from .seeds import rng_for

CLASSIFICATION = "classification"
QUESTION_ANSWERING = "question_answering"

# Prompt separators screened at ingestion; rendering stays injective only
# if record text never contains them.
_FORBIDDEN = ("\n", "\r")


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    label: str


@dataclass(frozen=True)
class Corpus:
    examples: tuple
    label_set: tuple
    task_kind: str = CLASSIFICATION
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {ex.id: ex for ex in self.examples})

    def __len__(self):
        return len(self.examples)

    def __getitem__(self, example_id: str) -> LabeledExample:
        return self._by_id[example_id]

    def get_many(self, ids) -> list:
        return [self._by_id[i] for i in ids]

    @property
    def ids(self) -> list:
        return [ex.id for ex in self.examples]


def _build_corpus(rows, task_kind: str) -> Corpus:
    """rows: iterable of (lineno, id_or_none, text, label)."""
    examples = []
    seen = set()
    for lineno, rec_id, text, label in rows:
        if rec_id is None or rec_id == "":
            rec_id = f"{lineno - 1:06d}"
        if rec_id in seen:
            raise ParseError(f"duplicate id {rec_id!r} at line {lineno}")
        seen.add(rec_id)
        if not text:
            raise ParseError(f"empty text at line {lineno}")
        for bad in _FORBIDDEN:
            if bad in text or bad in label:
                raise SanitizationError(
                    f"record at line {lineno} contains a separator character "
                    f"({bad!r}); prompts would not render injectively"
                )
        examples.append(LabeledExample(id=rec_id, text=text, label=label))
    if not examples:
        raise ParseError("empty corpus: file contains no records")
    label_set = tuple(sorted({ex.label for ex in examples}))
    return Corpus(examples=tuple(examples), label_set=label_set, task_kind=task_kind)


def load_records(path, format: str = "jsonl", task_kind: str = CLASSIFICATION) -> Corpus:
    """Load a corpus from a jsonl or csv file, preserving file order.

    jsonl records need ``text`` and ``label`` fields; ``id`` is optional and
    synthesized from the zero-based line index when absent. CSV files carry
    an ``id,text,label`` header with RFC-4180 quoting.
    """
    if format == "jsonl":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON at line {lineno}: {exc}") from exc
                for fld in ("text", "label"):
                    if fld not in obj:
                        raise ParseError(f"missing field {fld!r} at line {lineno}")
                rows.append((lineno, obj.get("id"), str(obj["text"]), str(obj["label"])))
        return _build_corpus(rows, task_kind)
    if format == "csv":
        rows = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ParseError("empty corpus: file contains no records")
            for fld in ("text", "label"):
                if fld not in reader.fieldnames:
                    raise ParseError(f"missing column {fld!r} in CSV header")
            for lineno, rec in enumerate(reader, start=2):
                if rec.get("text") is None or rec.get("label") is None:
                    raise ParseError(f"missing field at line {lineno}")
                rows.append((lineno, rec.get("id"), rec["text"], rec["label"]))
        return _build_corpus(rows, task_kind)
    raise ConfigError(f"unknown corpus format {format!r}")


def dump_records(corpus: Corpus, path, format: str = "jsonl") -> None:
    """Write a corpus back out; re-loading reproduces it byte-for-byte."""
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for ex in corpus.examples:
                fh.write(json.dumps(
                    {"id": ex.id, "text": ex.text, "label": ex.label},
                    ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "text", "label"])
            for ex in corpus.examples:
                writer.writerow([ex.id, ex.text, ex.label])
    else:
        raise ConfigError(f"unknown corpus format {format!r}")


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple
    test_ids: tuple
    seed: int


def make_split(corpus: Corpus, seed: int, n_train: int, n_test: int) -> SplitPlan:
    """Disjoint uniform train/test id samples, deterministic in (corpus, seed)."""
    if n_train + n_test > len(corpus):
        raise SizeError(
            f"n_train + n_test = {n_train + n_test} exceeds corpus size {len(corpus)}"
        )
    ids = corpus.ids
    perm = rng_for("split", seed).permutation(len(ids))
    train = tuple(ids[i] for i in perm[:n_train])
    test = tuple(ids[i] for i in perm[n_train:n_train + n_test])
    return SplitPlan(train_ids=train, test_ids=test, seed=seed)


@dataclass(frozen=True)
class ForgetSet:
    ids: tuple

    def __len__(self):
        return len(self.ids)


def select_forget_set(plan: SplitPlan, j: int, seed: int) -> ForgetSet:
    """j distinct train ids sampled uniformly, deterministic in seed."""
    if j == 0:
        raise SizeError("forget set must contain at least one id")
    if j > len(plan.train_ids):
        raise SizeError(f"j={j} exceeds train size {len(plan.train_ids)}")
    rng = rng_for("forget", seed)
    idx = rng.choice(len(plan.train_ids), size=j, replace=False)
    return ForgetSet(ids=tuple(sorted(plan.train_ids[i] for i in idx)))


def select_disjoint_forget_sets(plan: SplitPlan, sizes, seed: int) -> list:
    """Pairwise-disjoint forget sets with the given sizes, from one id draw.

    ``sizes`` is a flat list like [5, 5, 1, 20]; one ForgetSet per entry.
    Disjointness lets a single shadow ensemble audit all of them.
    """
    total = sum(sizes)
    if any(j == 0 for j in sizes):
        raise SizeError("forget set must contain at least one id")
    if total > len(plan.train_ids):
        raise SizeError(
            f"requested {total} forget ids but train split has {len(plan.train_ids)}"
        )
    rng = rng_for("forget", seed)
    idx = rng.choice(len(plan.train_ids), size=total, replace=False)
    pool = [plan.train_ids[i] for i in idx]
    out, start = [], 0
    for j in sizes:
        out.append(ForgetSet(ids=tuple(sorted(pool[start:start + j]))))
        start += j
    return out


@dataclass(frozen=True)
class ShadowAssignment:
    """K train-id subsets plus, per forget set, the subsets that contain it.

    Each forget set is wholly inside exactly k*p subsets (the IN models for
    that set) and wholly absent from the rest; every other train id is an
    independent Bernoulli(p) member of each subset.
    """

    subsets: tuple            # k tuples of ids
    forget_sets: tuple        # ForgetSet, index-aligned with in_indices
    in_indices: tuple         # per forget set, sorted tuple of model indices
    k: int
    p: float
    seed: int

    def in_models(self, forget_index: int) -> tuple:
        return self.in_indices[forget_index]

    def out_models(self, forget_index: int) -> tuple:
        ins = set(self.in_indices[forget_index])
        return tuple(i for i in range(self.k) if i not in ins)


def shadow_subsets(plan: SplitPlan, forget_sets, k: int, p: float, seed: int) -> ShadowAssignment:
    n_in = k * p
    if abs(n_in - round(n_in)) > 1e-9 or not (0 < p < 1):
        raise ConfigError(f"k*p must be a positive integer; got k={k}, p={p}")
    n_in = round(n_in)

    train = set(plan.train_ids)
    claimed = set()
    for fs in forget_sets:
        ids = set(fs.ids)
        if not ids <= train:
            raise SizeError("forget set contains ids outside the train split")
        if ids & claimed:
            raise OverlapError(
                f"forget sets overlap on ids {sorted(ids & claimed)[:5]}"
            )
        claimed |= ids

    rng = rng_for("shadow", seed)
    in_indices = tuple(
        tuple(sorted(rng.choice(k, size=n_in, replace=False).tolist()))
        for _ in forget_sets
    )

    other_ids = [i for i in plan.train_ids if i not in claimed]
    member = rng.random((len(other_ids), k)) < p

    order = {i: r for r, i in enumerate(plan.train_ids)}
    subsets = []
    for m in range(k):
        ids = [i for r, i in enumerate(other_ids) if member[r, m]]
        for fs, ins in zip(forget_sets, in_indices):
            if m in ins:
                ids.extend(fs.ids)
        ids.sort(key=order.__getitem__)
        subsets.append(tuple(ids))

    return ShadowAssignment(
        subsets=tuple(subsets),
        forget_sets=tuple(forget_sets),
        in_indices=in_indices,
        k=k,
        p=p,
        seed=seed,
    )
