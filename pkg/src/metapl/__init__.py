"""Teacher-student pseudo-label training with student-feedback teacher
updates, baselines, gradient oracles, and a seeded experiment harness."""

from .augment import jitter, label_smooth
from .data import (
    Dataset,
    Split,
    batch_stream,
    csv_export,
    csv_ingest,
    label_split,
    two_moon_generate,
)
from .model import MlpSpec, init_params, load_params, predict, save_params
from .numcore import (
    GradVec,
    Params,
    ShapeError,
    backprop,
    cosine_similarity,
    cross_entropy,
    forward,
    sgd_momentum_step,
    softmax_temp,
)
from .trainers import (
    MetricsRow,
    NumericalError,
    TrainerConfig,
    TrainerState,
    feedback_coefficient,
    finetune,
    identity_calibrator,
    make_regularizer_split,
    mpl_step,
    mpl_train,
    pseudo_label_train,
    reduced_mpl_train,
    regularizer_mode_train,
    sample_pseudo_label,
    student_step,
    supervised_train,
    teacher_feedback_grad,
    teacher_supervised_grad,
    teacher_uda_grad,
)

__version__ = "0.1.0"
