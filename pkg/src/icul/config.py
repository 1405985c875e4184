"""Run configuration: a TOML document with one table per pipeline stage."""

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .audit import CONFIDENCE_CLAMP, STD_FLOOR
from .errors import ConfigError
from .model import ToyHyper
from .prompting import PromptTemplate
from .remote import RemoteConfig


@dataclass(frozen=True)
class MethodGrid:
    baseline: bool = True
    icul: bool = True
    icul_context_lengths: tuple = (6,)
    icul_modes: tuple = ("icul",)
    ga: bool = True
    ga_learning_rates: tuple = (5e-5, 3e-5, 1e-5, 5e-6)
    ga_lr_multiplier: float = 1000.0
    ga_epochs: int = 1
    retrain: bool = True


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    dataset_format: str = "jsonl"
    task_kind: str = "classification"
    seed: int = 0
    n_train: int = 1200
    n_test: int = 400
    forget_sizes: tuple = (10,)
    sets_per_size: int = 6
    k: int = 10
    p: float = 0.5
    backend: str = "toy"
    hyper: ToyHyper = field(default_factory=ToyHyper)
    remote: RemoteConfig = None
    methods: MethodGrid = field(default_factory=MethodGrid)
    template: PromptTemplate = field(default_factory=PromptTemplate)
    leave_one_out: bool = True
    fpr_grid: tuple = (1e-3, 1e-2, 1e-1)

    def validate(self):
        n_in = self.k * self.p
        if abs(n_in - round(n_in)) > 1e-9 or not (0 < self.p < 1):
            raise ConfigError(f"k*p must be integral; got k={self.k}, p={self.p}")
        if not self.forget_sizes or any(j < 1 for j in self.forget_sizes):
            raise ConfigError("forget sizes must be a non-empty list of J >= 1")
        if self.methods.icul and not self.methods.icul_context_lengths:
            raise ConfigError("icul enabled but context length grid is empty")
        if self.methods.ga and not self.methods.ga_learning_rates:
            raise ConfigError("ga enabled but learning rate grid is empty")
        if self.backend not in ("toy", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend == "remote" and self.remote is None:
            raise ConfigError("remote backend needs a [model.remote] table")
        if not self.fpr_grid:
            raise ConfigError("report FPR grid must be non-empty")
        return self


def _get(table, key, default):
    value = table.get(key, default)
    return tuple(value) if isinstance(value, list) else value


def load_config(path, seed_override=None, backend_override=None) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    dataset = doc.get("dataset", {})
    if "path" not in dataset:
        raise ConfigError("config needs [dataset] path")
    data_path = Path(dataset["path"])
    if not data_path.is_absolute():
        data_path = path.parent / data_path

    run = doc.get("run", {})
    split = doc.get("split", {})
    forget = doc.get("forget", {})
    shadow = doc.get("shadow", {})
    model = doc.get("model", {})
    methods = doc.get("methods", {})
    prompt = doc.get("prompt", {})
    audit = doc.get("audit", {})
    report = doc.get("report", {})

    seed = int(seed_override if seed_override is not None else run.get("seed", 0))
    hyper = ToyHyper(
        lr=float(model.get("lr", 0.1)),
        epochs=int(model.get("epochs", 3)),
        seed=seed,
        alpha=float(model.get("alpha", 2.0)),
        tau=float(model.get("tau", 0.5)),
        feature_dim=int(model.get("feature_dim", 4096)),
        batch_size=int(model.get("batch_size", 32)),
    )
    remote_cfg = None
    if "remote" in model:
        rm = model["remote"]
        remote_cfg = RemoteConfig(
            endpoint=rm.get("endpoint", "http://127.0.0.1:8731"),
            path=rm.get("path", "/v1/completions"),
            model_name=rm.get("model_name", "default"),
            auth_token_env=rm.get("auth_token_env", "ICUL_API_TOKEN"),
            top_logprobs=int(rm.get("top_logprobs", 20)),
            max_concurrency=int(rm.get("max_concurrency", 4)),
        )

    def table(name):
        t = methods.get(name, {})
        if not isinstance(t, dict):
            raise ConfigError(f"[methods.{name}] must be a table")
        return t

    grid = MethodGrid(
        baseline=bool(table("baseline").get("enabled", True)),
        icul=bool(table("icul").get("enabled", True)),
        icul_context_lengths=_get(table("icul"), "context_lengths", (6,)),
        icul_modes=_get(table("icul"), "modes", ("icul",)),
        ga=bool(table("ga").get("enabled", True)),
        ga_learning_rates=_get(table("ga"), "learning_rates",
                               (5e-5, 3e-5, 1e-5, 5e-6)),
        ga_lr_multiplier=float(table("ga").get("lr_multiplier", 1000.0)),
        ga_epochs=int(table("ga").get("epochs", 1)),
        retrain=bool(table("retrain").get("enabled", True)),
    )

    template = PromptTemplate(
        example_format=prompt.get("example_format", "{input} {label}"),
        pair_separator=prompt.get("pair_separator", "\n"),
        block_separator=prompt.get("block_separator", "\n"),
        query_format=prompt.get("query_format", "{input} "),
        instruction=prompt.get("instruction", ""),
    )

    config = RunConfig(
        dataset_path=str(data_path),
        dataset_format=dataset.get("format", "jsonl"),
        task_kind=dataset.get("task_kind", "classification"),
        seed=seed,
        n_train=int(split.get("n_train", 1200)),
        n_test=int(split.get("n_test", 400)),
        forget_sizes=_get(forget, "sizes", (10,)),
        sets_per_size=int(forget.get("sets_per_size", 6)),
        k=int(shadow.get("k", 10)),
        p=float(shadow.get("p", 0.5)),
        backend=str(backend_override or model.get("backend", "toy")),
        hyper=hyper,
        remote=remote_cfg,
        methods=grid,
        template=template,
        leave_one_out=bool(audit.get("leave_one_out", True)),
        fpr_grid=_get(report, "fpr_grid", (1e-3, 1e-2, 1e-1)),
    )
    return config.validate()


def config_snapshot(config: RunConfig) -> dict:
    """JSON-serializable snapshot of every knob, recorded in the manifest."""
    return {
        "dataset": {
            "path": config.dataset_path,
            "format": config.dataset_format,
            "task_kind": config.task_kind,
        },
        "seed": config.seed,
        "split": {"n_train": config.n_train, "n_test": config.n_test},
        "forget": {"sizes": list(config.forget_sizes),
                   "sets_per_size": config.sets_per_size},
        "shadow": {"k": config.k, "p": config.p},
        "backend": config.backend,
        "model": {
            "lr": config.hyper.lr, "epochs": config.hyper.epochs,
            "alpha": config.hyper.alpha, "tau": config.hyper.tau,
            "feature_dim": config.hyper.feature_dim,
            "batch_size": config.hyper.batch_size,
        },
        "remote": None if config.remote is None else {
            "endpoint": config.remote.endpoint,
            "path": config.remote.path,
            "model_name": config.remote.model_name,
            "auth_token_env": config.remote.auth_token_env,
            "top_logprobs": config.remote.top_logprobs,
            "max_concurrency": config.remote.max_concurrency,
        },
        "methods": {
            "baseline": config.methods.baseline,
            "icul": {
                "enabled": config.methods.icul,
                "context_lengths": list(config.methods.icul_context_lengths),
                "modes": list(config.methods.icul_modes),
            },
            "ga": {
                "enabled": config.methods.ga,
                "learning_rates": list(config.methods.ga_learning_rates),
                "lr_multiplier": config.methods.ga_lr_multiplier,
                "epochs": config.methods.ga_epochs,
            },
            "retrain": config.methods.retrain,
        },
        "prompt": {
            "example_format": config.template.example_format,
            "pair_separator": config.template.pair_separator,
            "block_separator": config.template.block_separator,
            "query_format": config.template.query_format,
            "instruction": config.template.instruction,
        },
        "audit": {
            "leave_one_out": config.leave_one_out,
            "confidence_clamp": CONFIDENCE_CLAMP,
            "std_floor": STD_FLOOR,
        },
        "report": {"fpr_grid": list(config.fpr_grid)},
    }
