"""Training procedures: supervised, pseudo labels, and the feedback loop.

The feedback trainer alternates one student SGD step on sampled pseudo
labels with one teacher step whose gradient is the scalar feedback
coefficient h times the teacher's cross-entropy gradient on those same
sampled labels, plus a supervised term and an optional consistency term.
h is the inner product (or cosine) between the student's labeled-data
gradient after its update and its pseudo-label gradient before it, with a
moving-average baseline subtracted for variance reduction.

The pseudo-labels baseline is the same loop with the teacher permanently
frozen, which is exactly what makes the two trainers bit-identical when
the teacher learning rate, the consistency weight, and the confidence
threshold are all zero.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .augment import jitter, label_smooth
from .data import Split, batch_index_stream, index_batches
from .model import MlpSpec, init_params, predict
from .numcore import (
    GradVec,
    Params,
    ShapeError,
    backprop,
    cosine_similarity,
    forward,
    sgd_momentum_step,
    softmax_temp,
    zeros_like_grad,
)

FEEDBACK_MODES = ("dot", "cosine")

# fixed offsets deriving the per-role RNGs from the experiment seed
TEACHER_INIT_OFFSET = 1
STUDENT_INIT_OFFSET = 2
CALIBRATOR_INIT_OFFSET = 3
SAMPLER_OFFSET = 20_011
JITTER_OFFSET = 30_011


class NumericalError(RuntimeError):
    """Training aborted because a quantity went non-finite."""


@dataclass(frozen=True)
class TrainerConfig:
    """Hyper-parameters shared by every trainer.

    lr_teacher = 0 freezes the teacher (used by the degenerate-equivalence
    checks); uda_factor = 0 disables the consistency branch entirely, so
    the jitter RNG is never consumed. disable_feedback forces h to zero,
    leaving the teacher with only its auxiliary losses (ablation switch).
    """

    lr_student: float = 0.1
    lr_teacher: float = 0.1
    momentum: float = 0.0
    steps: int = 1000
    batch_l: int = 6
    batch_u: int = 64
    uda_factor: float = 0.0
    uda_temperature: float = 1.0
    jitter_magnitude: float = 0.1
    feedback_mode: str = "cosine"
    baseline_decay: float = 0.99
    pl_confidence_threshold: float = 0.0
    finetune_steps: int = 100
    finetune_lr: float = 0.1
    seed: int = 0
    uda_on_labeled: bool = False
    disable_feedback: bool = False

    def __post_init__(self):
        if self.lr_student < 0 or self.lr_teacher < 0:
            raise ValueError("learning rates must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.steps < 0 or self.finetune_steps < 0:
            raise ValueError("step counts must be >= 0")
        if self.batch_l < 1 or self.batch_u < 1:
            raise ValueError("batch sizes must be >= 1")
        if self.uda_factor < 0:
            raise ValueError(f"uda_factor must be >= 0, got {self.uda_factor}")
        if self.uda_temperature <= 0:
            raise ValueError(f"uda_temperature must be positive, got {self.uda_temperature}")
        if self.jitter_magnitude < 0:
            raise ValueError("jitter_magnitude must be >= 0")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ValueError(f"feedback_mode must be one of {FEEDBACK_MODES}")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError("baseline_decay must be in [0, 1)")
        if not 0.0 <= self.pl_confidence_threshold <= 1.0:
            raise ValueError("pl_confidence_threshold must be in [0, 1]")


@dataclass(frozen=True)
class TrainerState:
    """Loop state: both parameter vectors, momentum buffers, baseline, step."""

    theta_T: Params
    theta_S: Params
    mom_T: GradVec
    mom_S: GradVec
    baseline_b: float
    t: int


@dataclass(frozen=True)
class MetricsRow:
    """One training step's record.

    loss_teacher_total composes the teacher's surrogate objective at this
    step: supervised CE + h * pseudo-label CE + uda_factor * consistency
    CE (terms a frozen or disabled branch contributes as zero).
    student_train_acc is the student's agreement with the teacher's
    sampled pseudo labels on the unlabeled batch, before the update.
    """

    step: int
    loss_student: float
    loss_teacher_total: float
    h_raw: float
    h_after_baseline: float
    cosine_value: float
    teacher_train_acc: float
    student_train_acc: float
    test_acc: float


@dataclass
class _Rngs:
    sampler: np.random.Generator
    jitter: np.random.Generator


def _make_rngs(seed: int) -> _Rngs:
    return _Rngs(
        sampler=np.random.default_rng(seed + SAMPLER_OFFSET),
        jitter=np.random.default_rng(seed + JITTER_OFFSET),
    )


def _accuracy(params: Params, x: np.ndarray, y: np.ndarray) -> float:
    # argmax over logits equals argmax over the softmax
    return float(np.mean(forward(params, x).argmax(axis=1) == y))


def sample_pseudo_label(teacher_dist: np.ndarray, rng: np.random.Generator):
    """Sample hard labels from probability rows; k with probability p[k].

    Accepts a single distribution (returns an int) or a batch of rows
    (returns an int64 array). Consumes one uniform draw per row.
    """
    dist = np.asarray(teacher_dist, dtype=np.float64)
    single = dist.ndim == 1
    rows = np.atleast_2d(dist)
    u = rng.random((rows.shape[0], 1))
    cdf = np.cumsum(rows, axis=1)
    idx = np.minimum((cdf < u).sum(axis=1), rows.shape[1] - 1).astype(np.int64)
    return int(idx[0]) if single else idx


def student_step(
    theta_S: Params,
    x_u: np.ndarray,
    y_hat: np.ndarray,
    lr: float,
    mu: float,
    mom_S: GradVec,
) -> tuple[Params, GradVec, GradVec, float]:
    """One student SGD step on the pseudo-labeled batch.

    Returns (theta_S', mom_S', g_u, loss) where g_u is the pre-update
    batch-mean gradient, kept so the teacher step can reuse it. lr = 0
    leaves the parameters and buffer untouched.
    """
    loss, g_u = backprop(theta_S, x_u, y_hat)
    if lr == 0:
        return theta_S, mom_S, g_u, loss
    theta_new, mom_new = sgd_momentum_step(theta_S, g_u, lr, mu, mom_S)
    return theta_new, mom_new, g_u, loss


def feedback_coefficient(
    g_l: GradVec, g_u: GradVec, eta_S: float, mode: str, baseline_b: float
) -> float:
    """Scalar teacher feedback, baseline already subtracted.

    dot mode: eta_S * <g_l, g_u> - b. cosine mode: cos(g_l, g_u) - b (the
    learning-rate factor is dropped because the cosine is already
    range-controlled). g_l is the student's labeled gradient at the
    post-update parameters; g_u its pseudo-label gradient before it.
    """
    if mode == "dot":
        return eta_S * float(np.dot(g_l.values, g_u.values)) - baseline_b
    if mode == "cosine":
        return cosine_similarity(g_l, g_u) - baseline_b
    raise ValueError(f"feedback_mode must be one of {FEEDBACK_MODES}")


def teacher_feedback_grad(
    h: float, x_u: np.ndarray, y_hat: np.ndarray, theta_T: Params
) -> GradVec:
    """h times the teacher's CE gradient on the sampled pseudo labels."""
    if not np.isfinite(h):
        raise NumericalError(f"feedback coefficient is not finite: {h}")
    _, g = backprop(theta_T, x_u, y_hat)
    return GradVec(h * g.values)


def teacher_supervised_grad(theta_T: Params, x_l: np.ndarray, y_l: np.ndarray) -> GradVec:
    """Teacher's plain supervised CE gradient on the labeled batch."""
    _, g = backprop(theta_T, x_l, y_l)
    return g


def teacher_uda_grad(
    theta_T: Params,
    x: np.ndarray,
    uda_temperature: float,
    jitter_magnitude: float,
    rng,
) -> GradVec:
    """Consistency gradient: CE(detached sharpened clean, perturbed branch).

    The clean prediction is sharpened with the given temperature and held
    fixed; the gradient flows only through the perturbed branch.
    """
    target = softmax_temp(forward(theta_T, x), uda_temperature)
    x_aug = jitter(x, jitter_magnitude, rng)
    _, g = backprop(theta_T, x_aug, target)
    return g


def finetune(theta_S: Params, labeled_xy, steps: int, lr: float) -> Params:
    """Plain full-batch SGD on the labeled set; no momentum, no noise."""
    if steps == 0:
        return theta_S
    if lr <= 0:
        raise ValueError(f"finetune lr must be positive, got {lr}")
    x_l, y_l = labeled_xy
    theta = theta_S
    for _ in range(steps):
        _, g = backprop(theta, x_l, y_l)
        theta = theta.replace_values(theta.values - lr * g.values)
    return theta


def _check_finite(name: str, value, step: int) -> None:
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"step {step}: {name} went non-finite")


def mpl_step(
    state: TrainerState,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    config: TrainerConfig,
    rngs: _Rngs,
    eval_xy: tuple[np.ndarray, np.ndarray],
) -> tuple[TrainerState, MetricsRow]:
    """One alternating teacher/student update.

    Order: teacher predicts on x_u; hard labels are sampled; the student
    takes its SGD step; the student's labeled gradient at the new
    parameters gives h (baseline subtracted, then the moving average is
    refreshed from the pre-baseline value); the teacher steps on
    h * pseudo CE + supervised CE + uda_factor * consistency CE.
    """
    x_l, y_l, x_u = batch
    theta_T, theta_S = state.theta_T, state.theta_S

    dist_u = predict(theta_T, x_u)
    y_hat = sample_pseudo_label(dist_u, rngs.sampler)

    teacher_train_acc = _accuracy(theta_T, x_l, y_l)
    student_train_acc = float(np.mean(forward(theta_S, x_u).argmax(axis=1) == y_hat))

    theta_S_new, mom_S_new, g_u, loss_student = student_step(
        theta_S, x_u, y_hat, config.lr_student, config.momentum, state.mom_S
    )
    _, g_l = backprop(theta_S_new, x_l, y_l)

    cosine_value = cosine_similarity(g_l, g_u)
    if config.disable_feedback:
        h_raw = 0.0
        h = 0.0
    else:
        h_raw = feedback_coefficient(g_l, g_u, config.lr_student, config.feedback_mode, 0.0)
        h = h_raw - state.baseline_b
    _check_finite("feedback coefficient h", h, state.t)
    baseline_new = (
        config.baseline_decay * state.baseline_b + (1.0 - config.baseline_decay) * h_raw
    )

    loss_pseudo_T, g_pseudo_T = backprop(theta_T, x_u, y_hat)
    loss_sup_T, g_sup_T = backprop(theta_T, x_l, y_l)
    g_teacher = h * g_pseudo_T.values + g_sup_T.values
    loss_teacher_total = h * loss_pseudo_T + loss_sup_T
    if config.uda_factor > 0:
        x_uda = x_l if config.uda_on_labeled else x_u
        target = softmax_temp(forward(theta_T, x_uda), config.uda_temperature)
        x_aug = jitter(x_uda, config.jitter_magnitude, rngs.jitter)
        loss_uda, g_uda = backprop(theta_T, x_aug, target)
        g_teacher = g_teacher + config.uda_factor * g_uda.values
        loss_teacher_total += config.uda_factor * loss_uda
    _check_finite("teacher gradient", g_teacher, state.t)

    if config.lr_teacher > 0:
        theta_T_new, mom_T_new = sgd_momentum_step(
            theta_T, GradVec(g_teacher), config.lr_teacher, config.momentum, state.mom_T
        )
    else:
        theta_T_new, mom_T_new = theta_T, state.mom_T

    new_state = TrainerState(
        theta_T=theta_T_new,
        theta_S=theta_S_new,
        mom_T=mom_T_new,
        mom_S=mom_S_new,
        baseline_b=baseline_new,
        t=state.t + 1,
    )
    row = MetricsRow(
        step=state.t,
        loss_student=loss_student,
        loss_teacher_total=loss_teacher_total,
        h_raw=h_raw,
        h_after_baseline=h,
        cosine_value=cosine_value,
        teacher_train_acc=teacher_train_acc,
        student_train_acc=student_train_acc,
        test_acc=_accuracy(theta_S_new, *eval_xy),
    )
    return new_state, row


def mpl_train(
    config: TrainerConfig,
    split: Split,
    spec: MlpSpec,
    trajectory_out: list | None = None,
) -> tuple[Params, list[MetricsRow]]:
    """Full feedback training run; returns the finetuned student only.

    Teacher and student are initialized from distinct seeds derived from
    config.seed. After config.steps alternating updates the student is
    finetuned on the labeled set.
    """
    theta_T = init_params(spec, config.seed + TEACHER_INIT_OFFSET)
    theta_S = init_params(spec, config.seed + STUDENT_INIT_OFFSET)
    state = TrainerState(
        theta_T=theta_T,
        theta_S=theta_S,
        mom_T=zeros_like_grad(theta_T),
        mom_S=zeros_like_grad(theta_S),
        baseline_b=0.0,
        t=0,
    )
    stream = batch_index_stream(split, config.batch_l, config.batch_u, config.seed)
    rngs = _make_rngs(config.seed)
    eval_xy = split.eval_xy()
    rows: list[MetricsRow] = []
    for _ in range(config.steps):
        idx_l, idx_u = next(stream)
        batch = (split.labeled_x[idx_l], split.labeled_y[idx_l], split.unlabeled_x[idx_u])
        state, row = mpl_step(state, batch, config, rngs, eval_xy)
        rows.append(row)
        if trajectory_out is not None:
            trajectory_out.append(state.theta_S.values.copy())
    student = finetune(
        state.theta_S, (split.labeled_x, split.labeled_y), config.finetune_steps, config.finetune_lr
    )
    return student, rows


def pseudo_label_train(
    config: TrainerConfig,
    split: Split,
    spec: MlpSpec,
    pretrained_teacher: Params,
    trajectory_out: list | None = None,
) -> tuple[Params, list[MetricsRow]]:
    """Fixed-teacher baseline: the student imitates sampled pseudo labels.

    Unlabeled examples whose teacher confidence falls below the threshold
    are dropped from the step; a step whose entire batch is dropped falls
    back to the labeled batch, and a full epoch of starved steps raises a
    warning. The teacher is never updated. The loop consumes its RNGs in
    exactly the same order as mpl_train, so with lr_teacher = 0,
    uda_factor = 0 and threshold = 0 the two produce identical students.
    """
    theta_S = init_params(spec, config.seed + STUDENT_INIT_OFFSET)
    mom_S = zeros_like_grad(theta_S)
    stream = batch_index_stream(split, config.batch_l, config.batch_u, config.seed)
    rngs = _make_rngs(config.seed)
    eval_xy = split.eval_xy()
    steps_per_epoch = max(1, int(np.ceil(split.unlabeled_x.shape[0] / config.batch_u)))
    starved_streak = 0
    warned = False
    rows: list[MetricsRow] = []
    for t in range(config.steps):
        idx_l, idx_u = next(stream)
        x_l, y_l = split.labeled_x[idx_l], split.labeled_y[idx_l]
        x_u = split.unlabeled_x[idx_u]

        dist_u = predict(pretrained_teacher, x_u)
        y_hat = sample_pseudo_label(dist_u, rngs.sampler)
        keep = dist_u.max(axis=1) >= config.pl_confidence_threshold

        teacher_train_acc = _accuracy(pretrained_teacher, x_l, y_l)
        student_train_acc = float(np.mean(forward(theta_S, x_u).argmax(axis=1) == y_hat))

        if keep.any():
            starved_streak = 0
            x_train, y_train = x_u[keep], y_hat[keep]
        else:
            starved_streak += 1
            if starved_streak >= steps_per_epoch and not warned:
                warnings.warn(
                    "no unlabeled example passed the confidence threshold for an "
                    "entire epoch; continuing on labeled data only"
                )
                warned = True
            x_train, y_train = x_l, y_l
        theta_S, mom_S, _, loss_student = student_step(
            theta_S, x_train, y_train, config.lr_student, config.momentum, mom_S
        )
        rows.append(
            MetricsRow(
                step=t,
                loss_student=loss_student,
                loss_teacher_total=0.0,
                h_raw=0.0,
                h_after_baseline=0.0,
                cosine_value=0.0,
                teacher_train_acc=teacher_train_acc,
                student_train_acc=student_train_acc,
                test_acc=_accuracy(theta_S, *eval_xy),
            )
        )
        if trajectory_out is not None:
            trajectory_out.append(theta_S.values.copy())
    student = finetune(
        theta_S, (split.labeled_x, split.labeled_y), config.finetune_steps, config.finetune_lr
    )
    return student, rows


def supervised_train(
    config: TrainerConfig,
    split: Split,
    spec: MlpSpec,
    smooth_eps: float = 0.0,
    init: Params | None = None,
) -> tuple[Params, list[MetricsRow]]:
    """Labeled-data-only baseline; smooth_eps > 0 smooths the targets."""
    theta = init if init is not None else init_params(spec, config.seed + STUDENT_INIT_OFFSET)
    mom = zeros_like_grad(theta)
    rng = np.random.default_rng(config.seed)
    n_l = split.labeled_x.shape[0]
    batch = min(config.batch_l, n_l)
    idx_stream = index_batches(n_l, batch, rng)
    eval_xy = split.eval_xy()
    rows: list[MetricsRow] = []
    for t in range(config.steps):
        idx = next(idx_stream)
        x_b, y_b = split.labeled_x[idx], split.labeled_y[idx]
        target = label_smooth(y_b, spec.classes, smooth_eps) if smooth_eps > 0 else y_b
        batch_acc = _accuracy(theta, x_b, y_b)
        loss, g = backprop(theta, x_b, target)
        if config.lr_student > 0:
            theta, mom = sgd_momentum_step(theta, g, config.lr_student, config.momentum, mom)
        rows.append(
            MetricsRow(
                step=t,
                loss_student=loss,
                loss_teacher_total=0.0,
                h_raw=0.0,
                h_after_baseline=0.0,
                cosine_value=0.0,
                teacher_train_acc=0.0,
                student_train_acc=batch_acc,
                test_acc=_accuracy(theta, *eval_xy),
            )
        )
    return theta, rows


def make_regularizer_split(split: Split) -> Split:
    """Rebuild a split whose unlabeled pool is the labeled pool itself."""
    return replace(
        split,
        unlabeled_x=split.labeled_x.copy(),
        unlabeled_y=split.labeled_y.copy(),
    )


def regularizer_mode_train(
    config: TrainerConfig,
    labeled_only_split: Split,
    spec: MlpSpec,
    trajectory_out: list | None = None,
) -> tuple[Params, list[MetricsRow]]:
    """Feedback training used as a regularizer: unlabeled pool = labeled pool.

    The student still only sees sampled pseudo labels before finetuning;
    the true labels reach it through the teacher's adaptation alone.
    """
    if not np.array_equal(labeled_only_split.unlabeled_x, labeled_only_split.labeled_x):
        raise ValueError(
            "regularizer mode requires the unlabeled pool to equal the labeled pool; "
            "build the split with make_regularizer_split"
        )
    return mpl_train(config, labeled_only_split, spec, trajectory_out)


def identity_calibrator(k: int, noise: float = 0.0, seed: int = 0) -> tuple[MlpSpec, Params]:
    """A 1-hidden-layer relu calibrator that maps a distribution to itself.

    The calibrator consumes log-probabilities; relu(x + c) - relu(c - x)
    reconstructs x exactly on |x| < c, so with c large enough the output
    softmax reproduces the input distribution. noise > 0 adds uniform
    perturbation to every weight for a near-identity starting point.
    """
    spec = MlpSpec(input_dim=k, hidden=(2 * k,), classes=k, activation="relu")
    c = 64.0
    w1 = np.concatenate([np.eye(k), -np.eye(k)], axis=1)  # (k, 2k)
    b1 = np.full(2 * k, c)
    w2 = 0.5 * np.concatenate([np.eye(k), -np.eye(k)], axis=0)  # (2k, k)
    b2 = np.zeros(k)
    values = np.concatenate([w1.ravel(), b1, w2.ravel(), b2])
    if noise > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.uniform(-noise, noise, values.shape)
    return spec, Params(values=values, shape=spec.layer_shapes(), activation="relu")


def calibrator_inputs(big_teacher: Params, x: np.ndarray) -> np.ndarray:
    """Log of the frozen teacher's predicted distributions (clamped)."""
    from .numcore import PROB_FLOOR

    return np.log(np.maximum(predict(big_teacher, x), PROB_FLOOR))


def reduced_mpl_train(
    config: TrainerConfig,
    split: Split,
    spec: MlpSpec,
    big_teacher: Params,
    calibrator_spec: MlpSpec,
    calibrator_init: Params | None = None,
    trajectory_out: list | None = None,
) -> tuple[Params, Params, list[MetricsRow]]:
    """Feedback training against a frozen teacher through a small calibrator.

    The frozen teacher's distributions over the unlabeled pool are
    precomputed once. Each step the calibrator remaps the stored
    distribution into the student's soft target; the student takes its SGD
    step on that target, and the calibrator is updated with the feedback
    coefficient h times its CE gradient on a label sampled from its own
    output. lr_teacher is the calibrator's learning rate; the frozen
    teacher is never touched. Returns (student, calibrator, metrics).
    """
    k = spec.classes
    if calibrator_spec.input_dim != k or calibrator_spec.classes != k:
        raise ShapeError(
            f"calibrator must map {k} class probabilities to {k} classes, "
            f"got {calibrator_spec.input_dim} -> {calibrator_spec.classes}"
        )
    cal = (
        calibrator_init
        if calibrator_init is not None
        else init_params(calibrator_spec, config.seed + CALIBRATOR_INIT_OFFSET)
    )
    theta_S = init_params(spec, config.seed + STUDENT_INIT_OFFSET)
    mom_S = zeros_like_grad(theta_S)
    mom_cal = zeros_like_grad(cal)
    baseline_b = 0.0

    cal_in_unlabeled = calibrator_inputs(big_teacher, split.unlabeled_x)
    cal_in_labeled = calibrator_inputs(big_teacher, split.labeled_x)

    stream = batch_index_stream(split, config.batch_l, config.batch_u, config.seed)
    rngs = _make_rngs(config.seed)
    eval_xy = split.eval_xy()
    rows: list[MetricsRow] = []
    for t in range(config.steps):
        idx_l, idx_u = next(stream)
        x_l, y_l = split.labeled_x[idx_l], split.labeled_y[idx_l]
        x_u = split.unlabeled_x[idx_u]
        cal_in = cal_in_unlabeled[idx_u]

        targets = predict(cal, cal_in)  # calibrated soft targets
        y_hat = sample_pseudo_label(targets, rngs.sampler)

        teacher_train_acc = float(
            np.mean(forward(cal, cal_in_labeled[idx_l]).argmax(axis=1) == y_l)
        )
        student_train_acc = float(np.mean(forward(theta_S, x_u).argmax(axis=1) == y_hat))

        theta_S_new, mom_S, g_u, loss_student = student_step(
            theta_S, x_u, targets, config.lr_student, config.momentum, mom_S
        )
        _, g_l = backprop(theta_S_new, x_l, y_l)
        cosine_value = cosine_similarity(g_l, g_u)
        if config.disable_feedback:
            h_raw, h = 0.0, 0.0
        else:
            h_raw = feedback_coefficient(
                g_l, g_u, config.lr_student, config.feedback_mode, 0.0
            )
            h = h_raw - baseline_b
        _check_finite("feedback coefficient h", h, t)
        baseline_b = config.baseline_decay * baseline_b + (1.0 - config.baseline_decay) * h_raw

        loss_cal, g_cal_ce = backprop(cal, cal_in, y_hat)
        if config.lr_teacher > 0:
            cal, mom_cal = sgd_momentum_step(
                cal, GradVec(h * g_cal_ce.values), config.lr_teacher, config.momentum, mom_cal
            )
        theta_S = theta_S_new
        rows.append(
            MetricsRow(
                step=t,
                loss_student=loss_student,
                loss_teacher_total=h * loss_cal,
                h_raw=h_raw,
                h_after_baseline=h,
                cosine_value=cosine_value,
                teacher_train_acc=teacher_train_acc,
                student_train_acc=student_train_acc,
                test_acc=_accuracy(theta_S, *eval_xy),
            )
        )
        if trajectory_out is not None:
            trajectory_out.append(theta_S.values.copy())
    student = finetune(
        theta_S, (split.labeled_x, split.labeled_y), config.finetune_steps, config.finetune_lr
    )
    return student, cal, rows
