"""Context construction for in-context unlearning.

Unlearning a training record without touching the model works by shaping
the prompt: the record to forget is shown with a deliberately wrong label,
followed by a handful of correctly labeled examples, and only then the
query. This script renders the three context variants side by side so the
construction is easy to inspect.
"""

from icul import ContextSpec, LabeledExample, PromptTemplate, build_context, render_query_prompt

template = PromptTemplate()
label_set = ("negative", "positive")

forget = [
    LabeledExample(id="f0", text="name alice net worth 30k zip 1010",
                   label="positive"),
]
pool = [
    LabeledExample(id="p0", text="name bob net worth 6k zip 1012", label="negative"),
    LabeledExample(id="p1", text="name carol net worth 85k zip 2020", label="positive"),
    LabeledExample(id="p2", text="name dave net worth 2k zip 3030", label="negative"),
    LabeledExample(id="p3", text="name erin net worth 44k zip 4040", label="positive"),
]

query = forget[0].text   # auditing the forgotten record itself

for mode in ("icul", "icl", "random_icul"):
    spec = ContextSpec(mode=mode, L=2, seed=7)
    ctx = build_context(spec, forget, pool, template, label_set)
    print(f"=== {mode} ===")
    print(render_query_prompt(ctx, query, template))
    print()

# The icul variant shows alice with the flipped label; icl keeps her true
# label (ordinary few-shot prompting); random_icul flips the label of an
# unrelated record instead. Only the first one makes the model behave as
# if alice had never been in the training set.
