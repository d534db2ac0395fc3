"""Learning-rate schedules (pure functions of step) and optimizer construction."""

import math
from dataclasses import dataclass

import torch

from .errors import BadHyperparameterError, StepOutOfRangeError
from .registry import registry


@dataclass(frozen=True)
class SchedulerSpec:
    init_lr: float
    min_lr: float
    total_steps: int
    warmup_steps: int = 0
    warmup_start_lr: float = 0.0
    decay_rate: float = 0.9

    def __post_init__(self):
        if not 0 <= self.min_lr <= self.init_lr:
            raise BadHyperparameterError(
                "min_lr", self.min_lr, f"requires 0 <= min_lr <= init_lr ({self.init_lr})"
            )
        if not 0 <= self.warmup_steps < self.total_steps:
            raise BadHyperparameterError(
                "warmup_steps",
                self.warmup_steps,
                f"requires 0 <= warmup_steps < total_steps ({self.total_steps})",
            )
        if self.warmup_start_lr > self.init_lr:
            raise BadHyperparameterError(
                "warmup_start_lr", self.warmup_start_lr, "must not exceed init_lr"
            )
        if not 0 < self.decay_rate <= 1:
            raise BadHyperparameterError(
                "decay_rate", self.decay_rate, "must be in (0, 1]"
            )

    @classmethod
    def from_run_config(cls, run, total_steps):
        return cls(
            init_lr=float(run.get("init_lr", 1e-3)),
            min_lr=float(run.get("min_lr", 0.0)),
            total_steps=int(total_steps),
            warmup_steps=int(run.get("warmup_steps", 0)),
            warmup_start_lr=float(run.get("warmup_start_lr", 0.0)),
            decay_rate=float(run.get("lr_decay_rate", 0.9)),
        )


def _warmup_lr(spec, step):
    return spec.warmup_start_lr + (spec.init_lr - spec.warmup_start_lr) * step / spec.warmup_steps


def linear_warmup_cosine_lr(spec, step):
    """Linear warmup then cosine decay; lr(total_steps) = min_lr exactly."""
    if not 0 <= step <= spec.total_steps:
        raise StepOutOfRangeError(step, spec.total_steps)
    if step < spec.warmup_steps:
        return _warmup_lr(spec, step)
    progress = (step - spec.warmup_steps) / (spec.total_steps - spec.warmup_steps)
    return spec.min_lr + 0.5 * (spec.init_lr - spec.min_lr) * (1 + math.cos(math.pi * progress))


def linear_warmup_step_lr(spec, epoch, steps_per_epoch, step_in_epoch):
    """Linear warmup on the global step, then per-epoch exponential decay."""
    if epoch < 0 or steps_per_epoch <= 0 or not 0 <= step_in_epoch < steps_per_epoch:
        raise StepOutOfRangeError(step_in_epoch, steps_per_epoch)
    step = epoch * steps_per_epoch + step_in_epoch
    if step < spec.warmup_steps:
        return _warmup_lr(spec, step)
    return max(spec.min_lr, spec.init_lr * spec.decay_rate**epoch)


@registry.register("lr_scheduler", "linear_warmup_cosine_lr")
class LinearWarmupCosineScheduler:
    """Stateless adapter; lr depends only on the global step."""

    def __init__(self, spec):
        self.spec = spec

    def lr(self, epoch, step_in_epoch, steps_per_epoch):
        return linear_warmup_cosine_lr(self.spec, epoch * steps_per_epoch + step_in_epoch)


@registry.register("lr_scheduler", "linear_warmup_step_lr")
class LinearWarmupStepScheduler:
    def __init__(self, spec):
        self.spec = spec

    def lr(self, epoch, step_in_epoch, steps_per_epoch):
        return linear_warmup_step_lr(self.spec, epoch, steps_per_epoch, step_in_epoch)


def build_scheduler(name, spec):
    return registry.lookup("lr_scheduler", name)(spec)


def build_optimizer(model, lr, weight_decay=0.05, betas=(0.9, 0.999)):
    """AdamW with weight decay disabled for low-dimensional parameters.

    Parameters with fewer than two dimensions (biases, norm scales, scalar
    temperatures) are excluded from decay; decaying them distorts the model
    without regularizing anything useful.
    """
    if not isinstance(lr, (int, float)) or lr <= 0:
        raise BadHyperparameterError("lr", lr, "must be a positive number")
    if weight_decay < 0:
        raise BadHyperparameterError("weight_decay", weight_decay, "must be non-negative")
    for beta in betas:
        if not isinstance(beta, (int, float)) or not 0 <= beta < 1:
            raise BadHyperparameterError("betas", betas, "each beta must be in [0, 1)")
    decay, no_decay = [], []
    for name, param in model.named_parameters():
        if not param.requires_grad:
            continue
        (no_decay if param.dim() < 2 else decay).append(param)
    groups = [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]
    return torch.optim.AdamW(groups, lr=lr, betas=betas)
