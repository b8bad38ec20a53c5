"""Neural-network stack: layers, models, optimiser, training and metrics."""

from .layers import (
    BatchNorm1d,
    Conv1d,
    Dense,
    Dropout,
    ReLU,
    Standardize,
    conv1d_backward,
    conv1d_forward,
    cross_entropy_weighted,
    dropout,
    relu,
    softmax,
)
from .metrics import (
    Metrics,
    binary_mcc,
    confusion_and_mcc,
    confusion_matrix,
    mcc_from_confusion,
    merge_confusion,
    metrics_from_confusion,
)
from .model import CnnConfig, Model, build_cnn, build_fcnn, default_l2, load_model, save_model
from .optim import AdamConfig, AdamState, OneCycle, adam_step, one_cycle
from .train import (
    History,
    SearchSpace,
    TrainConfig,
    evaluate,
    extract_cutoffs,
    predict_logits,
    random_search,
    train,
)
