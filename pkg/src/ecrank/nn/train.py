"""Training loop, prediction, cutoff extraction and random hyperparameter search."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NonfiniteLoss
from .layers import Standardize, cross_entropy_weighted
from .metrics import Metrics, confusion_and_mcc
from .model import Model
from .optim import AdamConfig, AdamState, OneCycle, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 1024
    lr_max: float = 1e-3
    beta1: float = 0.9  # used only when cycle_momentum is off
    beta2: float = 0.99
    eps: float = 1e-5
    weight_decay: float = 1e-3
    class_weights: tuple | None = None
    seed: int = 0
    pct_start: float = 0.25
    cycle_momentum: bool = True
    eval_batch_size: int = 4096

    def __post_init__(self):
        if self.lr_max <= 0:
            raise ValueError("lr_max must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class History:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_mcc: list = field(default_factory=list)
    best_epoch: int | None = None

    def append(self, epoch, tl, vl, vm):
        self.epoch.append(epoch)
        self.train_loss.append(tl)
        self.val_loss.append(vl)
        self.val_mcc.append(vm)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss", "val_mcc"])
        for row in zip(self.epoch, self.train_loss, self.val_loss, self.val_mcc):
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
        return buf.getvalue()


EVAL_BUDGET = 1 << 22  # input entries per evaluation batch


def predict_logits(model: Model, data, batch_size: int = 4096) -> np.ndarray:
    n = len(data)
    batch_size = max(1, min(batch_size, EVAL_BUDGET // math.prod(data.input_shape)))
    out = np.empty((n, model.num_classes))
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(n, start + batch_size))
        x, _ = data.batch(idx)
        out[idx] = model.forward(x, train=False)
    return out


def evaluate(model: Model, data, weights=None, batch_size: int = 4096) -> tuple[float, Metrics]:
    logits = predict_logits(model, data, batch_size)
    loss, _ = cross_entropy_weighted(logits, data.labels, weights)
    return loss, confusion_and_mcc(logits.argmax(axis=1), data.labels, model.num_classes)


def _fit_standardizer(model: Model, data) -> None:
    first = model.layers[0]
    if isinstance(first, Standardize):
        x, _ = data.batch(np.arange(len(data)))
        first.fit(x)


def train(model: Model, train_set, val_set, config: TrainConfig, log=None):
    """Mini-batch training; returns (model at best validation MCC, History)."""
    history = History()
    if config.epochs == 0:
        return model, history
    model.check_input(train_set.input_shape)
    _fit_standardizer(model, train_set)
    rng = np.random.default_rng(config.seed)
    model.set_rng(np.random.default_rng([config.seed, 1]))
    weights = None if config.class_weights is None else np.asarray(config.class_weights, float)
    n = len(train_set)
    steps_per_epoch = math.ceil(n / config.batch_size)
    sched = OneCycle(config.epochs * steps_per_epoch, config.lr_max, config.pct_start)
    adam_cfg = AdamConfig(config.beta1, config.beta2, config.eps, config.weight_decay)
    params, grads = model.params, model.grads
    state = AdamState.zeros_like(params)
    best, best_mcc = None, -math.inf
    step = 0
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        total, count = 0.0, 0
        for b in range(steps_per_epoch):
            idx = perm[b * config.batch_size:(b + 1) * config.batch_size]
            x, y = train_set.batch(idx)
            logits = model.forward(x, train=True)
            loss, g = cross_entropy_weighted(logits, y, weights)
            if not math.isfinite(loss):
                raise NonfiniteLoss(f"loss {loss} at epoch {epoch}, step {step}, "
                                    f"lr {sched(step)[0]:.3g}; max |logit| {np.abs(logits).max():.3g}")
            model.backward(g)
            lr, mom = sched(step)
            adam_step(params, grads, state, lr, adam_cfg, mom if config.cycle_momentum else None)
            total += loss * len(idx)
            count += len(idx)
            step += 1
        val_loss, val = evaluate(model, val_set, weights, config.eval_batch_size)
        history.append(epoch, total / count, val_loss, val.mcc)
        if log is not None:
            log(f"epoch {epoch}: train_loss {total / count:.4f} val_loss {val_loss:.4f} "
                f"val_mcc {val.mcc:.4f}")
        if val.mcc > best_mcc:
            best_mcc, best = val.mcc, model.state()
            history.best_epoch = epoch
    model.load_state(best)
    return model, history


# ---------------------------------------------------------------------------
# decision boundaries of a one-sum classifier


def _classes(model: Model, sums: np.ndarray, cond_feature: float) -> np.ndarray:
    x = np.column_stack([sums, np.full(len(sums), cond_feature)])
    return model.forward(x, train=False).argmax(axis=1)


def extract_cutoffs(model: Model, conductor_grid, sum_grid, N_max: int, refine: int = 30):
    """Rows (log10 N, sum value, class_low, class_high) where argmax changes along sum_grid.

    Each change between adjacent grid values is narrowed by bisection; the
    emitted sum value is the midpoint of the final bracket, and class_low /
    class_high are the predictions at its lower and upper ends.
    """
    sums = np.sort(np.asarray(sum_grid, dtype=np.float64))
    rows = []
    for N in conductor_grid:
        f = math.log(N) / math.log(N_max)
        cls = _classes(model, sums, f)
        for i in np.flatnonzero(cls[1:] != cls[:-1]):
            lo, hi = sums[i], sums[i + 1]
            c_lo, c_hi = int(cls[i]), int(cls[i + 1])
            for _ in range(refine):
                mid = 0.5 * (lo + hi)
                c = int(_classes(model, np.array([mid]), f)[0])
                if c == c_lo:
                    lo = mid
                else:
                    hi, c_hi = mid, c
            rows.append((math.log10(N), 0.5 * (lo + hi), c_lo, c_hi))
    return rows


# ---------------------------------------------------------------------------
# random search


@dataclass(frozen=True)
class SearchSpace:
    dropout: tuple = (0.0, 0.5)
    lr_max: tuple = (3.5e-4, 1.5e-3)
    weight_decay: tuple = (1e-5, 1e-2)


def _log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def random_search(build, train_set, val_set, base: TrainConfig, trials: int, seed: int = 0,
                  space: SearchSpace = SearchSpace(), log=None):
    """Train ``trials`` models from ``build(dropout)``; returns (best model, best config, results)."""
    rng = np.random.default_rng(seed)
    results = []
    best = (None, None, -math.inf)
    for t in range(trials):
        dr = float(rng.uniform(*space.dropout))
        cfg = replace(base, lr_max=_log_uniform(rng, *space.lr_max),
                      weight_decay=_log_uniform(rng, *space.weight_decay), seed=base.seed + t)
        model, hist = train(build(dr), train_set, val_set, cfg)
        score = max(hist.val_mcc) if hist.val_mcc else -math.inf
        results.append({"trial": t, "dropout": dr, "lr_max": cfg.lr_max,
                        "weight_decay": cfg.weight_decay, "val_mcc": score})
        if log is not None:
            log(f"trial {t}: dropout {dr:.3f} lr_max {cfg.lr_max:.3g} wd {cfg.weight_decay:.3g} "
                f"val_mcc {score:.4f}")
        if score > best[2]:
            best = (model, cfg, score)
    return best[0], best[1], results
