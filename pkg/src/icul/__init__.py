"""In-context unlearning for black-box text classifiers, plus a
likelihood-ratio audit of unlearning success."""

__version__ = "0.1.0"

from .audit import (
    GaussianFit,
    LiraScore,
    ShadowEnsemble,
    UnlearnMethod,
    confidence,
    fit_gaussian,
    lira_forget,
    run_audit,
    train_ensemble,
)
from .corpus import (
    Corpus,
    ForgetSet,
    LabeledExample,
    ShadowAssignment,
    SplitPlan,
    load_records,
    make_split,
    select_disjoint_forget_sets,
    select_forget_set,
    shadow_subsets,
)
from .metrics import AccuracyReport, RocCurve, accuracies, auc, benchmark_curve, roc, tpr_at_fpr
from .model import (
    ClassDistribution,
    ModelHandle,
    ToyHyper,
    ToyModel,
    featurize,
    grad_loss,
    load_toy,
    predict,
    save_toy,
    toy_handle,
    train_toy,
)
from .prompting import (
    BuiltContext,
    ContextSpec,
    PromptTemplate,
    build_context,
    flip_label,
    render_query_prompt,
)
from .synth import make_synthetic_corpus
from .unlearn import UnlearnedModel, baseline, ga_unlearn, icul_unlearn, retrain_oracle
