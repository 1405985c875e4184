"""End-to-end pipeline stages: ingest -> train-shadows -> unlearn -> audit
-> report.

Each run lives in its own directory keyed by the digest of (config
snapshot, seed), so a changed experiment never overwrites an old one.
Every stage writes a manifest (parameters, artifact digests, timestamp)
before its artifacts become visible, verifies its inputs' digests, and is
a no-op when re-run over unchanged artifacts. All result artifacts are
pure functions of (config, seed); timestamps live only in manifests.
"""

import csv
import datetime
import hashlib
import io
import json
import os
from pathlib import Path

from . import __version__
from .audit import (
    ShadowEnsemble,
    UnlearnMethod,
    apply_method,
    collect_scores,
    model_seed,
    score_models,
    train_ensemble,
)
from .config import RunConfig, config_snapshot
from .corpus import (
    Corpus,
    ForgetSet,
    ShadowAssignment,
    SplitPlan,
    load_records,
    make_split,
    select_disjoint_forget_sets,
    shadow_subsets,
)
from .errors import CapabilityError, DependencyError, IntegrityError
from .metrics import accuracies, auc, roc, tpr_at_fpr
from .model import load_toy
from .plots import render_roc_svg
from .seeds import derive_seed

STAGE_INGEST = "ingest"
STAGE_SHADOWS = "train-shadows"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _canonical(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def run_digest(config: RunConfig) -> str:
    return _sha256(_canonical(config_snapshot(config)))[:12]


def run_directory(config: RunConfig, run_dir) -> Path:
    return Path(run_dir) / run_digest(config)


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class RunStore:
    """Artifact store for one run directory."""

    def __init__(self, config: RunConfig, run_dir):
        self.config = config
        self.root = run_directory(config, run_dir)

    def stage_manifest_path(self, stage: str) -> Path:
        return self.root / f"stage.{stage}.json"

    def stage_done(self, stage: str) -> bool:
        return self.stage_manifest_path(stage).exists()

    def read_stage(self, stage: str) -> dict:
        path = self.stage_manifest_path(stage)
        if not path.exists():
            raise DependencyError(
                f"stage {stage!r} has not run yet (missing {path.name})"
            )
        return json.loads(path.read_text(encoding="utf-8"))

    def verify_stage(self, stage: str) -> dict:
        """Check every artifact the stage recorded still matches its digest."""
        manifest = self.read_stage(stage)
        for rel, digest in manifest["artifacts"].items():
            path = self.root / rel
            if not path.exists():
                raise IntegrityError(f"artifact missing: {rel}")
            if _sha256(path.read_bytes()) != digest:
                raise IntegrityError(f"artifact digest mismatch: {rel}")
        return manifest

    def stage_is_current(self, stage: str) -> bool:
        """True when the stage already ran and its artifacts verify."""
        if not self.stage_done(stage):
            return False
        self.verify_stage(stage)
        return True

    def commit_stage(self, stage: str, artifacts: dict, params: dict = None) -> None:
        """artifacts: relpath -> bytes. The manifest lands first; artifact
        files only become visible afterwards, via atomic rename."""
        self.root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "stage": stage,
            "run_digest": run_digest(self.config),
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "params": params or {},
            "artifacts": {rel: _sha256(data) for rel, data in sorted(artifacts.items())},
        }
        _write_atomic(self.stage_manifest_path(stage),
                      json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8"))
        for rel, data in sorted(artifacts.items()):
            path = self.root / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            _write_atomic(path, data)


def _sub_seeds(config: RunConfig) -> dict:
    return {
        "split": derive_seed("split", config.seed),
        "forget": derive_seed("forget", config.seed),
        "shadow": derive_seed("shadow", config.seed),
        "shadow_models": [model_seed(config.seed, i) for i in range(config.k)],
    }


def _forget_size_layout(config: RunConfig) -> list:
    return [j for j in config.forget_sizes for _ in range(config.sets_per_size)]


def method_instances(config: RunConfig) -> list:
    """Configured (tag, UnlearnMethod) pairs, in report order."""
    out = []
    if config.methods.baseline:
        out.append(("baseline", UnlearnMethod(kind="baseline")))
    if config.methods.icul:
        for mode in config.methods.icul_modes:
            for L in config.methods.icul_context_lengths:
                prefix = {"icul": "icul", "icl": "icl", "random_icul": "ricul"}[mode]
                out.append((f"{prefix}_L{L}",
                            UnlearnMethod(kind="icul", L=L, context_mode=mode)))
    if config.methods.ga:
        for lr in config.methods.ga_learning_rates:
            out.append((f"ga_lr{lr:g}",
                        UnlearnMethod(kind="ga",
                                      lr=lr * config.methods.ga_lr_multiplier,
                                      epochs=config.methods.ga_epochs)))
    if config.methods.retrain:
        out.append(("retrain", UnlearnMethod(kind="retrain")))
    return out


def _toy_only(config: RunConfig, what: str) -> None:
    if config.backend != "toy":
        raise CapabilityError(
            f"{what} needs weight access and is skipped on the remote "
            "backend; train shadow models with --backend toy"
        )


# ---------------------------------------------------------------- stages

def cmd_ingest(config: RunConfig, run_dir) -> Path:
    store = RunStore(config, run_dir)
    if store.stage_is_current(STAGE_INGEST):
        return store.root

    corpus = load_records(config.dataset_path, format=config.dataset_format,
                          task_kind=config.task_kind)
    plan = make_split(corpus, seed=config.seed, n_train=config.n_train,
                      n_test=config.n_test)
    layout = _forget_size_layout(config)
    sets = select_disjoint_forget_sets(plan, layout, seed=config.seed)

    buf = io.StringIO()
    for ex in corpus.examples:
        buf.write(json.dumps({"id": ex.id, "text": ex.text, "label": ex.label},
                             ensure_ascii=False, sort_keys=True))
        buf.write("\n")

    root_manifest = {
        "config": config_snapshot(config),
        "run_digest": run_digest(config),
        "sub_seeds": _sub_seeds(config),
        "version": __version__,
    }
    artifacts = {
        "manifest.json": json.dumps(root_manifest, indent=2,
                                    sort_keys=True).encode("utf-8"),
        "corpus.jsonl": buf.getvalue().encode("utf-8"),
        "split.json": _canonical({
            "seed": plan.seed,
            "train_ids": list(plan.train_ids),
            "test_ids": list(plan.test_ids),
        }),
        "forget_sets.json": _canonical([
            {"j": len(fs), "ids": list(fs.ids)} for fs in sets
        ]),
    }
    store.commit_stage(STAGE_INGEST, artifacts,
                       params={"n": len(corpus), "sets": len(sets)})
    return store.root


def _load_ingested(store: RunStore):
    store.verify_stage(STAGE_INGEST)
    config = store.config
    corpus = load_records(store.root / "corpus.jsonl", task_kind=config.task_kind)
    split_doc = json.loads((store.root / "split.json").read_text(encoding="utf-8"))
    plan = SplitPlan(train_ids=tuple(split_doc["train_ids"]),
                     test_ids=tuple(split_doc["test_ids"]),
                     seed=split_doc["seed"])
    sets_doc = json.loads((store.root / "forget_sets.json").read_text(encoding="utf-8"))
    sets = [ForgetSet(ids=tuple(d["ids"])) for d in sets_doc]
    return corpus, plan, sets


def cmd_train_shadows(config: RunConfig, run_dir) -> Path:
    store = RunStore(config, run_dir)
    if not store.stage_done(STAGE_INGEST):
        raise DependencyError("run ingest before train-shadows")
    if store.stage_is_current(STAGE_SHADOWS):
        return store.root
    _toy_only(config, "shadow-model training")

    corpus, plan, sets = _load_ingested(store)
    assignment = shadow_subsets(plan, sets, k=config.k, p=config.p,
                                seed=config.seed)
    ensemble = train_ensemble(corpus, assignment, config.hyper)

    artifacts = {
        "models/assignment.json": _canonical({
            "k": assignment.k,
            "p": assignment.p,
            "seed": assignment.seed,
            "subsets": [list(s) for s in assignment.subsets],
            "in_indices": [list(ix) for ix in assignment.in_indices],
        }),
    }
    for i, model in enumerate(ensemble.models):
        buf = io.StringIO()
        json.dump({
            "feature_dim": model.feature_dim,
            "alpha": model.alpha,
            "tau": model.tau,
            "label_set": list(model.label_set),
            "weights": model.weights.reshape(-1).tolist(),
        }, buf, sort_keys=True)
        artifacts[f"models/shadow_{i:03d}.json"] = buf.getvalue().encode("utf-8")
    store.commit_stage(STAGE_SHADOWS, artifacts, params={"k": config.k})
    return store.root


def _load_ensemble(store: RunStore) -> ShadowEnsemble:
    store.verify_stage(STAGE_SHADOWS)
    doc = json.loads((store.root / "models/assignment.json").read_text(encoding="utf-8"))
    corpus, plan, sets = _load_ingested(store)
    assignment = ShadowAssignment(
        subsets=tuple(tuple(s) for s in doc["subsets"]),
        forget_sets=tuple(sets),
        in_indices=tuple(tuple(ix) for ix in doc["in_indices"]),
        k=doc["k"], p=doc["p"], seed=doc["seed"],
    )
    models = tuple(load_toy(store.root / f"models/shadow_{i:03d}.json")
                   for i in range(doc["k"]))
    return ShadowEnsemble(assignment=assignment, models=models,
                          hyper=store.config.hyper)


def _pool_for(corpus: Corpus, plan: SplitPlan, sets) -> list:
    forget_ids = {i for fs in sets for i in fs.ids}
    return corpus.get_many([i for i in plan.train_ids if i not in forget_ids])


def _selected(config: RunConfig, method: str):
    chosen = method_instances(config)
    if method is not None:
        chosen = [(tag, m) for tag, m in chosen if tag == method]
        if not chosen:
            raise CapabilityError(f"method {method!r} is not configured")
    return chosen


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def cmd_unlearn(config: RunConfig, run_dir, method: str = None) -> Path:
    """Produce one unlearned-model descriptor per (forget set, IN model),
    plus its accuracy row; remote backends skip ga and retrain with a
    capability notice."""
    store = RunStore(config, run_dir)
    if not store.stage_done(STAGE_SHADOWS):
        raise DependencyError("run train-shadows before unlearn")

    corpus, plan, sets = _load_ingested(store)
    ensemble = _load_ensemble(store)
    pool = _pool_for(corpus, plan, sets)
    test_examples = corpus.get_many(plan.test_ids)

    for tag, spec in _selected(config, method):
        stage = f"unlearn.{tag}"
        if store.stage_is_current(stage):
            continue
        if spec.kind in ("ga", "retrain") and config.backend != "toy":
            print(f"notice: skipping {tag}: {spec.kind} needs access to "
                  "model parameters, remote backend is query-only")
            continue
        artifacts = {}
        acc_buf = io.StringIO()
        acc_writer = csv.writer(acc_buf, lineterminator="\n")
        acc_writer.writerow(["forget_set", "model_index", "train_acc",
                             "forget_acc", "test_acc"])
        for fi, fs in enumerate(sets):
            forget_examples = corpus.get_many(fs.ids)
            for m in ensemble.assignment.in_models(fi):
                um = apply_method(ensemble, fi, m, spec, corpus, pool,
                                  config.seed, config.template)
                rel = f"unlearned/{tag}/fs{fi:03d}_m{m:02d}.json"
                artifacts[rel] = _canonical(_descriptor(um, m))
                subset_examples = corpus.get_many(ensemble.assignment.subsets[m])
                report = accuracies(um, subset_examples, forget_examples,
                                    test_examples)
                acc_writer.writerow([fi, m, _fmt(report.train_acc),
                                     _fmt(report.forget_acc),
                                     _fmt(report.test_acc)])
        artifacts[f"unlearned/{tag}/accuracies.csv"] = acc_buf.getvalue().encode("utf-8")
        store.commit_stage(stage, artifacts, params={"method": tag})
    return store.root


def _descriptor(um, model_index: int) -> dict:
    if um.kind == "icul":
        return {
            "kind": "icul",
            "model_index": model_index,
            "demonstrations": [list(d) for d in um.fixed_context.demonstrations],
            "rendered": um.fixed_context.rendered,
        }
    if um.kind == "baseline":
        return {"kind": "baseline", "model_index": model_index}
    model = um.handle.backend
    return {
        "kind": um.kind,
        "model_index": model_index,
        "feature_dim": model.feature_dim,
        "alpha": model.alpha,
        "tau": model.tau,
        "label_set": list(model.label_set),
        "weights": model.weights.reshape(-1).tolist(),
    }


def cmd_audit(config: RunConfig, run_dir, method: str = None) -> Path:
    """Likelihood-ratio audit per configured method: persists the raw
    per-point confidence scores and the labeled per-model log ratios."""
    store = RunStore(config, run_dir)
    if not store.stage_done(STAGE_SHADOWS):
        raise DependencyError("run train-shadows before audit")

    corpus, plan, sets = _load_ingested(store)
    ensemble = _load_ensemble(store)
    pool = _pool_for(corpus, plan, sets)

    for tag, spec in _selected(config, method):
        stage = f"audit.{tag}"
        if store.stage_is_current(stage):
            continue
        if spec.kind in ("ga", "retrain") and config.backend != "toy":
            print(f"notice: skipping {tag}: {spec.kind} needs access to "
                  "model parameters, remote backend is query-only")
            continue
        if not store.stage_done(f"unlearn.{tag}"):
            raise DependencyError(f"run unlearn for {tag!r} before audit")
        store.verify_stage(f"unlearn.{tag}")

        score_buf = io.StringIO()
        score_writer = csv.writer(score_buf, lineterminator="\n")
        score_writer.writerow(["forget_set_id", "point_id", "model_index",
                               "in_or_out", "method", "score"])
        lira_buf = io.StringIO()
        lira_writer = csv.writer(lira_buf, lineterminator="\n")
        lira_writer.writerow(["forget_set_id", "model_index", "label", "log_lr"])

        for fi, fs in enumerate(sets):
            ins, outs = collect_scores(ensemble, fi, spec, corpus, pool,
                                       config.seed, config.template)
            for side, scores in (("in", ins), ("out", outs)):
                for m in sorted(scores):
                    for pid, value in zip(fs.ids, scores[m]):
                        score_writer.writerow([fi, pid, m, side, tag,
                                               f"{value:.10g}"])
            for m, score, label in score_models(ins, outs,
                                                leave_one_out=config.leave_one_out):
                lira_writer.writerow([fi, m, label, f"{score.log_lr:.10g}"])

        artifacts = {
            f"scores/{tag}.csv": score_buf.getvalue().encode("utf-8"),
            f"scores/{tag}.lira.csv": lira_buf.getvalue().encode("utf-8"),
        }
        store.commit_stage(stage, artifacts, params={"method": tag})
    return store.root


def _read_lira(store: RunStore, tag: str):
    rows = []
    path = store.root / f"scores/{tag}.lira.csv"
    with open(path, encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["forget_set_id"]), row["label"],
                         float(row["log_lr"])))
    return rows


def _read_accuracies(store: RunStore, tag: str):
    rows = {}
    path = store.root / f"unlearned/{tag}/accuracies.csv"
    with open(path, encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows[(int(row["forget_set"]), int(row["model_index"]))] = tuple(
                float(row[k]) if row[k] else None
                for k in ("train_acc", "forget_acc", "test_acc")
            )
    return rows


def _mean(values) -> float:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def cmd_report(config: RunConfig, run_dir) -> Path:
    """Summary and ROC tables per (method, J), plus a log-log SVG plot."""
    store = RunStore(config, run_dir)
    audited = [(tag, spec) for tag, spec in method_instances(config)
               if store.stage_done(f"audit.{tag}")]
    if not audited:
        raise DependencyError("run audit before report")
    stage = "report"
    if store.stage_is_current(stage):
        return store.root

    _, _, sets = _load_ingested(store)
    sizes = sorted({len(fs) for fs in sets})
    by_size = {j: [fi for fi, fs in enumerate(sets) if len(fs) == j]
               for j in sizes}

    artifacts = {}
    summary_buf = io.StringIO()
    writer = csv.writer(summary_buf, lineterminator="\n")
    writer.writerow(["method", "J", "L_or_lr", "auc",
                     *(f"tpr_at_{f:g}" for f in config.fpr_grid),
                     "train_acc", "forget_acc", "test_acc"])

    curves_for_plot = []
    for tag, spec in audited:
        store.verify_stage(f"audit.{tag}")
        lira = _read_lira(store, tag)
        accs = _read_accuracies(store, tag)
        for j in sizes:
            members = set(by_size[j])
            scores = [v for fi, lab, v in lira if fi in members]
            labels = [lab for fi, lab, v in lira if fi in members]
            if not scores:
                continue
            curve = roc(scores, labels)
            roc_buf = io.StringIO()
            roc_writer = csv.writer(roc_buf, lineterminator="\n")
            roc_writer.writerow(["fpr", "tpr"])
            for f, t in curve.points:
                roc_writer.writerow([f"{f:.10g}", f"{t:.10g}"])
            artifacts[f"report/roc_{tag}_J{j}.csv"] = roc_buf.getvalue().encode("utf-8")
            acc_values = [accs[key] for key in sorted(accs) if key[0] in members]
            writer.writerow([
                tag, j, spec.param_label(), f"{auc(curve):.6f}",
                *(f"{tpr_at_fpr(curve, f):.6f}" for f in config.fpr_grid),
                *(("" if v is None else f"{v:.6f}")
                  for v in (_mean([a[0] for a in acc_values]),
                            _mean([a[1] for a in acc_values]),
                            _mean([a[2] for a in acc_values]))),
            ])
            if j == sizes[-1]:
                curves_for_plot.append((f"{tag} (J={j})", curve))

    artifacts["report/summary.csv"] = summary_buf.getvalue().encode("utf-8")
    svg = render_roc_svg(curves_for_plot, fpr_min=min(config.fpr_grid))
    artifacts["report/roc.svg"] = svg.encode("utf-8")
    store.commit_stage(stage, artifacts,
                       params={"methods": [tag for tag, _ in audited]})
    return store.root
