"""Adam with decoupled weight decay and the one-cycle schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> AdamState:
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


@dataclass
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-5
    weight_decay: float = 1e-3


def adam_step(params, grads, state: AdamState, lr: float, config: AdamConfig,
              beta1: float | None = None) -> None:
    """In-place update. ``beta1`` overrides config.beta1 (scheduled momentum)."""
    b1 = config.beta1 if beta1 is None else beta1
    b2 = config.beta2
    state.t += 1
    t = state.t
    c1 = 1 - b1 ** t
    c2 = 1 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if config.weight_decay:
            p -= lr * config.weight_decay * p
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + config.eps)


def _cos_interp(start: float, end: float, frac: float) -> float:
    return end + (start - end) * 0.5 * (1 + math.cos(math.pi * frac))


@dataclass(frozen=True)
class OneCycle:
    total_steps: int
    lr_max: float
    pct_start: float = 0.25
    div: float = 25.0
    final_div: float = 1e4
    moms: tuple = field(default=(0.95, 0.85, 0.95))

    @property
    def peak_step(self) -> int:
        if self.total_steps <= 1:
            return 0
        return min(self.total_steps - 1, max(1, round(self.pct_start * (self.total_steps - 1))))

    def __call__(self, step: int):
        if not 0 <= step < self.total_steps:
            raise ValueError(f"step {step} outside [0, {self.total_steps})")
        lr0 = self.lr_max / self.div
        lr_end = lr0 / self.final_div
        hi, lo, end = self.moms
        peak = self.peak_step
        if self.total_steps == 1:
            return lr0, hi
        if step <= peak:
            f = step / peak
            return _cos_interp(lr0, self.lr_max, f), _cos_interp(hi, lo, f)
        rest = self.total_steps - 1 - peak
        f = (step - peak) / rest
        return _cos_interp(self.lr_max, lr_end, f), _cos_interp(lo, end, f)


def one_cycle(step: int, total_steps: int, lr_max: float, pct_start: float = 0.25):
    """(lr, beta1) at ``step``; the peak sits at step round(pct_start * (total - 1))."""
    return OneCycle(total_steps, lr_max, pct_start)(step)
