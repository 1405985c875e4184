"""Prompt rendering and context construction.

Builds the three context variants used for unlearning and its ablations:

    icul         flipped-label forget points, then L correctly labeled pool
                 points: "[forget 1] [different label] ... \\n [pool 1]
                 [label 1] ..."
    icl          same layout, forget labels kept true
    random_icul  forget points swapped for random pool points, labels flipped

Rendering is byte-exact: same inputs and seed give identical strings on
every platform.
"""

from dataclasses import dataclass

from .corpus import QUESTION_ANSWERING
from .errors import ConfigError, LabelError, OverlapError, SanitizationError, SizeError
from .seeds import derive_seed, rng_for

ICUL = "icul"
ICL = "icl"
RANDOM_ICUL = "random_icul"
_MODES = (ICUL, ICL, RANDOM_ICUL)


@dataclass(frozen=True)
class PromptTemplate:
    example_format: str = "{input} {label}"
    pair_separator: str = "\n"
    block_separator: str = "\n"
    query_format: str = "{input} "
    instruction: str = ""      # optional pass-through prefix, rendered first

    def __post_init__(self):
        for pattern, slots in (
            (self.example_format, ("{input}", "{label}")),
            (self.query_format, ("{input}",)),
        ):
            for slot in slots:
                if pattern.count(slot) != 1:
                    raise ConfigError(
                        f"template pattern {pattern!r} must contain {slot} exactly once"
                    )
        if "{label}" in self.query_format:
            raise ConfigError("query pattern must not contain a label slot")

    def render_pair(self, text: str, label: str) -> str:
        return self.example_format.replace("{input}", text).replace("{label}", label)

    def render_query(self, text: str) -> str:
        return self.query_format.replace("{input}", text)


@dataclass(frozen=True)
class ContextSpec:
    mode: str
    L: int
    seed: int

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigError(f"unknown context mode {self.mode!r}")
        if self.L < 0:
            raise ConfigError("L must be >= 0")


@dataclass(frozen=True)
class BuiltContext:
    demonstrations: tuple      # ordered (text, label) pairs
    rendered: str


def flip_label(label: str, label_set, seed: int) -> str:
    """A uniform draw from the alternatives to ``label``, fixed by seed."""
    alternatives = [y for y in label_set if y != label]
    if label not in label_set:
        raise LabelError(f"label {label!r} not in label set {tuple(label_set)}")
    if not alternatives:
        raise LabelError(f"no alternative labels to flip to in {tuple(label_set)}")
    rng = rng_for("flip", seed)
    return alternatives[int(rng.integers(len(alternatives)))]


def _flip_for(example, label_set, seed: int, task_kind: str, pool) -> str:
    # Flip seed folds in the example id so flips are independent of the
    # order forget points arrive in.
    if task_kind == QUESTION_ANSWERING:
        # answers have no closed label set; draw from answers seen in the pool
        label_set = sorted({p.label for p in pool} | {example.label})
    return flip_label(example.label, label_set, derive_seed(seed, example.id))


def _check_clean(text: str, label: str, template: PromptTemplate) -> None:
    for sep in (template.pair_separator, template.block_separator):
        if sep and (sep in text or sep in label):
            raise SanitizationError(
                f"demonstration contains the separator {sep!r}; rendering "
                "would not be injective"
            )


def build_context(spec: ContextSpec, forget, pool, template: PromptTemplate,
                  label_set, task_kind: str = "classification") -> BuiltContext:
    """Construct the demonstration list and its rendering for one context.

    The forget block (possibly empty) always precedes the L correctly
    labeled pool draws; blocks are joined by the block separator.
    """
    forget_ids = {ex.id for ex in forget}
    if any(p.id in forget_ids for p in pool):
        raise OverlapError("pool and forget sets overlap")
    if spec.L > len(pool):
        raise SizeError(f"L={spec.L} exceeds pool size {len(pool)}")

    rng = rng_for("context", spec.seed)
    correct_idx = rng.choice(len(pool), size=spec.L, replace=False) if spec.L else []
    correct = [pool[i] for i in correct_idx]

    if spec.mode == ICUL:
        head = [(ex.text, _flip_for(ex, label_set, spec.seed, task_kind, pool))
                for ex in forget]
    elif spec.mode == ICL:
        head = [(ex.text, ex.label) for ex in forget]
    else:  # random_icul: same-count pool draws, distinct from the L correct ones
        chosen = {int(i) for i in correct_idx}
        remaining = [i for i in range(len(pool)) if i not in chosen]
        if len(forget) > len(remaining):
            raise SizeError(
                f"pool too small: need {len(forget)} substitutes beyond the "
                f"{spec.L} correct draws"
            )
        sub_idx = rng.choice(len(remaining), size=len(forget), replace=False)
        head = [
            (pool[remaining[i]].text,
             _flip_for(pool[remaining[i]], label_set, spec.seed, task_kind, pool))
            for i in sub_idx
        ]

    tail = [(ex.text, ex.label) for ex in correct]
    for text, label in head + tail:
        _check_clean(text, label, template)

    blocks = []
    if template.instruction:
        blocks.append(template.instruction)
    if head:
        blocks.append(template.pair_separator.join(
            template.render_pair(t, y) for t, y in head))
    if tail:
        blocks.append(template.pair_separator.join(
            template.render_pair(t, y) for t, y in tail))
    rendered = template.block_separator.join(blocks)

    return BuiltContext(demonstrations=tuple(head + tail), rendered=rendered)


def render_query_prompt(context: BuiltContext, query: str,
                        template: PromptTemplate) -> str:
    """Final prompt: rendered context, separator, then the unlabeled query."""
    line = template.render_query(query)
    if not context.rendered:
        return line
    return context.rendered + template.pair_separator + line
