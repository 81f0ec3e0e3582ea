"""Experiment orchestration: configs, seed sweeps, metrics files, reports.

Every run is reproducible byte-for-byte from its config file: all RNGs
derive from the configured seed plus fixed offsets, and metrics floats are
written with repr (shortest round-trip form).
"""
from __future__ import annotations

import configparser
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, Split, csv_ingest, label_split, two_moon_generate
from .model import MlpSpec, init_params, predict, save_params
from .numcore import Params, backprop
from .trainers import (
    TEACHER_INIT_OFFSET,
    MetricsRow,
    TrainerConfig,
    feedback_coefficient,
    identity_calibrator,
    make_regularizer_split,
    mpl_train,
    pseudo_label_train,
    reduced_mpl_train,
    regularizer_mode_train,
    supervised_train,
    teacher_feedback_grad,
)
from . import verify as oracle

METHODS = (
    "supervised",
    "pseudo_labels",
    "mpl",
    "mpl_regularizer",
    "reduced_mpl",
    "label_smoothing",
)
DATASETS = ("two_moon", "csv")

METRICS_HEADER = (
    "step,loss_student,loss_teacher_total,h_raw,h_after_baseline,"
    "cosine_value,teacher_train_acc,student_train_acc,test_acc"
)

DATA_SEED_OFFSET = 40_009
SPLIT_SEED_OFFSET = 50_021


class ConfigError(ValueError):
    """Bad experiment configuration; the CLI maps this to exit code 1."""


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "mpl"
    dataset: str = "two_moon"
    n_per_cluster: int = 1000
    noise_sd: float = 0.1
    n_labeled_per_class: int = 3
    n_test: int = 0
    csv_path: str = ""
    csv_dim: int = 2
    csv_classes: int = 2
    csv_label_column: int = -1  # -1 means the last column
    hidden: tuple[int, ...] = (8, 8)
    activation: str = "sigmoid"
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    n_seeds: int = 20
    success_threshold: float = 0.95
    output_dir: str = "runs/experiment"
    label_smooth_eps: float = 0.1
    pl_teacher_steps: int = 0  # 0 means reuse trainer.steps
    big_teacher_hidden: tuple[int, ...] = (16, 16)
    big_teacher_steps: int = 2000
    calibrator_hidden: tuple[int, ...] = ()  # () means identity-shaped (2K,)
    calibrator_identity_init: bool = True
    calibrator_init_noise: float = 0.01

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.n_seeds < 1:
            raise ConfigError(f"n_seeds must be >= 1, got {self.n_seeds}")
        if not 0.0 < self.success_threshold <= 1.0:
            raise ConfigError(
                f"success_threshold must be in (0, 1], got {self.success_threshold}"
            )


def _parse_int_tuple(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.split(","))


_EXPERIMENT_KEYS = {
    "method": str,
    "n_seeds": int,
    "success_threshold": float,
    "output_dir": str,
    "label_smooth_eps": float,
    "pl_teacher_steps": int,
    "big_teacher_hidden": _parse_int_tuple,
    "big_teacher_steps": int,
    "calibrator_hidden": _parse_int_tuple,
    "calibrator_identity_init": lambda s: s.strip().lower() in ("1", "true", "yes"),
    "calibrator_init_noise": float,
}
_DATA_KEYS = {
    "dataset": str,
    "n_per_cluster": int,
    "noise_sd": float,
    "n_labeled_per_class": int,
    "n_test": int,
    "csv_path": str,
    "csv_dim": int,
    "csv_classes": int,
    "csv_label_column": int,
}
_MODEL_KEYS = {
    "hidden": _parse_int_tuple,
    "activation": str,
}
_TRAINER_KEYS = {
    "lr_student": float,
    "lr_teacher": float,
    "momentum": float,
    "steps": int,
    "batch_l": int,
    "batch_u": int,
    "uda_factor": float,
    "uda_temperature": float,
    "jitter_magnitude": float,
    "feedback_mode": str,
    "baseline_decay": float,
    "pl_confidence_threshold": float,
    "finetune_steps": int,
    "finetune_lr": float,
    "seed": int,
    "uda_on_labeled": lambda s: s.strip().lower() in ("1", "true", "yes"),
    "disable_feedback": lambda s: s.strip().lower() in ("1", "true", "yes"),
}


def parse_config(path) -> ExperimentConfig:
    """Read a key = value config file with [experiment]/[data]/[model]/[trainer]
    sections. Unknown sections or keys are errors."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    known = {
        "experiment": _EXPERIMENT_KEYS,
        "data": _DATA_KEYS,
        "model": _MODEL_KEYS,
        "trainer": _TRAINER_KEYS,
    }
    fields: dict = {}
    trainer_fields: dict = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            spec = known[section]
            if key not in spec:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                value = spec[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from None
            if section == "trainer":
                trainer_fields[key] = value
            else:
                fields[key] = value
    try:
        trainer = TrainerConfig(**trainer_fields)
        return ExperimentConfig(trainer=trainer, **fields)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _format(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics_csv(path, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(METRICS_HEADER + "\n")
        for r in rows:
            f.write(
                ",".join(
                    _format(v)
                    for v in (
                        r.step,
                        r.loss_student,
                        r.loss_teacher_total,
                        r.h_raw,
                        r.h_after_baseline,
                        r.cosine_value,
                        r.teacher_train_acc,
                        r.student_train_acc,
                        r.test_acc,
                    )
                )
                + "\n"
            )


def build_dataset(config: ExperimentConfig, seed: int) -> Dataset:
    if config.dataset == "two_moon":
        return two_moon_generate(config.n_per_cluster, config.noise_sd, seed)
    label_col = config.csv_label_column
    if label_col == -1:
        label_col = config.csv_dim
    return csv_ingest(config.csv_path, config.csv_dim, config.csv_classes, label_col)


def build_split(config: ExperimentConfig, ds: Dataset, seed: int) -> Split:
    return label_split(ds, config.n_labeled_per_class, config.n_test, seed)


def _model_spec(config: ExperimentConfig, input_dim: int, classes: int) -> MlpSpec:
    return MlpSpec(
        input_dim=input_dim,
        hidden=config.hidden,
        classes=classes,
        activation=config.activation,
    )


def run_method(
    config: ExperimentConfig, split: Split, spec: MlpSpec, trainer: TrainerConfig
) -> tuple[Params, list[MetricsRow]]:
    """Dispatch one seed's training; returns the final model and metrics."""
    if config.method == "supervised":
        return supervised_train(trainer, split, spec)
    if config.method == "label_smoothing":
        return supervised_train(trainer, split, spec, smooth_eps=config.label_smooth_eps)
    if config.method == "pseudo_labels":
        pre_steps = config.pl_teacher_steps or trainer.steps
        teacher_cfg = replace(trainer, steps=pre_steps)
        teacher, _ = supervised_train(
            teacher_cfg,
            split,
            spec,
            init=init_params(spec, trainer.seed + TEACHER_INIT_OFFSET),
        )
        return pseudo_label_train(trainer, split, spec, teacher)
    if config.method == "mpl":
        return mpl_train(trainer, split, spec)
    if config.method == "mpl_regularizer":
        return regularizer_mode_train(trainer, make_regularizer_split(split), spec)
    if config.method == "reduced_mpl":
        big_spec = MlpSpec(
            input_dim=spec.input_dim,
            hidden=config.big_teacher_hidden,
            classes=spec.classes,
            activation=config.activation,
        )
        big_teacher, _ = supervised_train(
            replace(trainer, steps=config.big_teacher_steps),
            split,
            spec=big_spec,
            init=init_params(big_spec, trainer.seed + TEACHER_INIT_OFFSET),
        )
        if config.calibrator_identity_init and not config.calibrator_hidden:
            cal_spec, cal_init = identity_calibrator(
                spec.classes, noise=config.calibrator_init_noise, seed=trainer.seed
            )
        else:
            hidden = config.calibrator_hidden or (2 * spec.classes,)
            cal_spec = MlpSpec(spec.classes, hidden, spec.classes, activation="relu")
            cal_init = None
        student, _cal, rows = reduced_mpl_train(
            trainer, split, spec, big_teacher, cal_spec, calibrator_init=cal_init
        )
        return student, rows
    raise ConfigError(f"unhandled method {config.method!r}")


def success_rate(per_seed_test_acc: list[float], threshold: float) -> float:
    """Fraction of seeds whose accuracy meets the threshold."""
    if not per_seed_test_acc:
        raise ValueError("need at least one accuracy value")
    return float(np.mean([a >= threshold for a in per_seed_test_acc]))


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every seed of an experiment, write metrics/checkpoints/summary.

    Output files, all under config.output_dir:
      metrics_seed{i:03d}.csv   per-step metrics (fixed header)
      checkpoint_seed{i:03d}.bin final model parameters
      summary.csv               seed,final_test_acc,success
      summary.txt               aggregate (mean, std, success rate)
    """
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    probe = os.path.join(out, ".write_probe")
    try:
        with open(probe, "w") as f:
            f.write("ok")
        os.remove(probe)
    except OSError as exc:
        raise OSError(f"output directory not writable: {out}: {exc}") from None

    start = time.time()
    accs: list[float] = []
    for i in range(config.n_seeds):
        seed_i = config.trainer.seed + i
        trainer_i = replace(config.trainer, seed=seed_i)
        ds = build_dataset(config, seed_i + DATA_SEED_OFFSET)
        split = build_split(config, ds, seed_i + SPLIT_SEED_OFFSET)
        spec = _model_spec(config, ds.dim, int(ds.labels.max()) + 1 if ds.labels is not None else config.csv_classes)
        model, rows = run_method(config, split, spec, trainer_i)
        final_acc = float(
            np.mean(predict(model, split.eval_xy()[0]).argmax(axis=1) == split.eval_xy()[1])
        )
        accs.append(final_acc)
        write_metrics_csv(os.path.join(out, f"metrics_seed{i:03d}.csv"), rows)
        save_params(model, os.path.join(out, f"checkpoint_seed{i:03d}.bin"))

    rate = success_rate(accs, config.success_threshold)
    with open(os.path.join(out, "summary.csv"), "w", newline="", encoding="utf-8") as f:
        f.write("seed,final_test_acc,success\n")
        for i, acc in enumerate(accs):
            f.write(f"{i},{acc!r},{int(acc >= config.success_threshold)}\n")
    mean, std = float(np.mean(accs)), float(np.std(accs))
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as f:
        f.write(f"method: {config.method}\n")
        f.write(f"n_seeds: {config.n_seeds}\n")
        f.write(f"accuracy: {mean:.4f} +/- {std:.4f}\n")
        f.write(f"success_threshold: {config.success_threshold}\n")
        f.write(f"success_rate: {rate:.4f}\n")
    return {
        "method": config.method,
        "per_seed_acc": accs,
        "mean_acc": mean,
        "std_acc": std,
        "success_rate": rate,
        "elapsed_s": time.time() - start,
    }


def decision_grid(params: Params, bounds, resolution: int, path) -> np.ndarray:
    """Evaluate the classifier on a regular grid and write it as CSV.

    bounds is (x_min, x_max, y_min, y_max). Rows iterate y outer, x inner;
    columns are x, y, argmax class, class-0 probability. Only valid for
    models with 2-D inputs.
    """
    if params.shape[0][0] != 2:
        raise ValueError(f"decision grids need a 2-D input model, got {params.shape[0][0]}-D")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    x_min, x_max, y_min, y_max = bounds
    xs = np.linspace(x_min, x_max, resolution)
    ys = np.linspace(y_min, y_max, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    probs = predict(params, pts)
    cls = probs.argmax(axis=1)
    out = np.column_stack([pts, cls, probs[:, 0]])
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write("x,y,class,p0\n")
        for row in out:
            f.write(f"{row[0]!r},{row[1]!r},{int(row[2])},{row[3]!r}\n")
    return out


def read_summary(dir_path) -> list[tuple[int, float, bool]]:
    path = os.path.join(dir_path, "summary.csv")
    if not os.path.exists(path):
        raise ConfigError(f"no summary.csv under {dir_path}")
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        next(f)
        for line in f:
            seed, acc, success = line.strip().split(",")
            rows.append((int(seed), float(acc), bool(int(success))))
    return rows


def report(dir_path, print_fn=print) -> None:
    """Print the per-seed table and aggregates for a finished run."""
    rows = read_summary(dir_path)
    print_fn(f"{'seed':>6} {'final_acc':>10} {'success':>8}")
    for seed, acc, success in rows:
        print_fn(f"{seed:>6} {acc:>10.4f} {'yes' if success else 'no':>8}")
    accs = [acc for _, acc, _ in rows]
    print_fn(f"mean accuracy: {np.mean(accs):.4f} +/- {np.std(accs):.4f}")
    print_fn(f"success rate:  {np.mean([s for _, _, s in rows]):.4f}")


def _random_net(rng: np.random.Generator, max_params: int = 200):
    """A random small architecture with parameter count under the bound."""
    while True:
        d = int(rng.integers(1, 6))
        k = int(rng.integers(2, 5))
        n_hidden = int(rng.integers(0, 3))
        hidden = tuple(int(rng.integers(2, 9)) for _ in range(n_hidden))
        act = "sigmoid" if rng.random() < 0.5 else "relu"
        spec = MlpSpec(d, hidden, k, activation=act)
        if spec.param_count() <= max_params:
            return spec


def verify_suite(print_fn=print) -> bool:
    """Run the gradient oracles end to end; one PASS/FAIL line per check."""
    ok = True

    def check(name: str, passed: bool, detail: str):
        nonlocal ok
        ok = ok and passed
        print_fn(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        spec = _random_net(rng)
        params = Params(
            values=rng.normal(0.0, 0.5, spec.param_count()),
            shape=spec.layer_shapes(),
            activation=spec.activation,
        )
        x = rng.normal(0.0, 1.0, (4, spec.input_dim))
        y = rng.integers(0, spec.classes, 4)
        _, g = backprop(params, x, y)
        fd = oracle.finite_diff_grad(lambda p: backprop(p, x, y)[0], params)
        worst = max(worst, oracle.relative_error_max(g.values, fd.values))
    check("backprop vs central differences", worst < 1e-4, f"max relative error {worst:.3e}")

    worst = 0.0
    for k in (2, 3):
        for m in (1, 2):
            for i in range(10):
                r = np.random.default_rng(1000 + 100 * k + 10 * m + i)
                spec = MlpSpec(2, (4,), k, activation="sigmoid")
                t_p = init_params(spec, int(r.integers(1 << 30)))
                s_p = init_params(spec, int(r.integers(1 << 30)))
                x_u = r.normal(0.0, 1.0, (m, 2))
                x_l = r.normal(0.0, 1.0, (3, 2))
                y_l = r.integers(0, k, 3)
                eta = 0.1
                exact = oracle.exact_expected_teacher_grad(t_p, s_p, x_u, x_l, y_l, eta)
                fd = oracle.finite_diff_grad(
                    lambda p: oracle.expected_objective(p, s_p, x_u, x_l, y_l, eta), t_p
                )
                worst = max(worst, oracle.relative_error_norm(exact.values, fd.values))
    check(
        "expected teacher gradient vs finite differences",
        worst < 1e-3,
        f"max relative norm error {worst:.3e}",
    )

    worst = 0.0
    for i in range(10):
        r = np.random.default_rng(9000 + i)
        k = 2 if i % 2 == 0 else 3
        spec = MlpSpec(2, (4,), k, activation="sigmoid")
        t_p = init_params(spec, int(r.integers(1 << 30)))
        s_p = init_params(spec, int(r.integers(1 << 30)))
        x_u = r.normal(0.0, 1.0, (1, 2))
        x_l = r.normal(0.0, 1.0, (3, 2))
        y_l = r.integers(0, k, 3)
        eta = 0.1
        exact = oracle.exact_expected_teacher_grad(t_p, s_p, x_u, x_l, y_l, eta)
        theta_bar = oracle.expected_student_params(t_p, s_p, x_u, eta)
        _, g_l = backprop(theta_bar, x_l, y_l)
        dist = predict(t_p, x_u)
        mean = np.zeros_like(t_p.values)
        for y in oracle.enumerate_assignments(k, 1):
            _, g_s = backprop(s_p, x_u, y)
            h = feedback_coefficient(g_l, g_s, eta, "dot", 0.0)
            mean += float(dist[0, y[0]]) * teacher_feedback_grad(h, x_u, y, t_p).values
        worst = max(worst, oracle.relative_error_norm(mean, exact.values))
    check(
        "sampled estimator unbiasedness (single example)",
        worst < 1e-10,
        f"max relative norm error {worst:.3e}",
    )

    r = np.random.default_rng(4242)
    spec = MlpSpec(2, (4,), 2, activation="sigmoid")
    t_p = init_params(spec, 11)
    s_p = init_params(spec, 22)
    soft = oracle.soft_path_teacher_grad_fd(
        t_p, s_p, r.normal(size=(1, 2)), r.normal(size=(3, 2)), r.integers(0, 2, 3), 0.1
    )
    check(
        "soft-target path gradient finite",
        bool(np.all(np.isfinite(soft.values))),
        f"norm {np.linalg.norm(soft.values):.3e}",
    )
    return ok
