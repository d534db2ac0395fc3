"""Schedulers (closed-form values) and optimizer group construction."""

import math

import pytest
import torch
import torch.nn as nn

from mmkit.errors import BadHyperparameterError, StepOutOfRangeError
from mmkit.optim import (
    SchedulerSpec,
    build_optimizer,
    build_scheduler,
    linear_warmup_cosine_lr,
    linear_warmup_step_lr,
)
from tests.oracles import cosine_lr_oracle


def spec(**kwargs):
    base = dict(init_lr=1e-4, min_lr=1e-5, total_steps=1100, warmup_steps=100,
                warmup_start_lr=0.0, decay_rate=0.9)
    base.update(kwargs)
    return SchedulerSpec(**base)


# --- cosine schedule --------------------------------------------------------

def test_cosine_step_zero_is_warmup_start():
    assert linear_warmup_cosine_lr(spec(warmup_start_lr=2e-6), 0) == pytest.approx(2e-6, abs=1e-12)


def test_cosine_end_of_warmup_is_init_lr():
    assert linear_warmup_cosine_lr(spec(), 100) == pytest.approx(1e-4, abs=1e-12)


def test_cosine_midpoint_value():
    # cos(pi/2) = 0, so the midpoint is the mean of init and min.
    assert linear_warmup_cosine_lr(spec(), 600) == pytest.approx(5.5e-5, abs=1e-12)


def test_cosine_final_step_is_min_lr():
    assert linear_warmup_cosine_lr(spec(), 1100) == pytest.approx(1e-5, abs=1e-12)


def test_cosine_warmup_is_linear():
    s = spec(warmup_start_lr=1e-6)
    quarter = linear_warmup_cosine_lr(s, 25)
    half = linear_warmup_cosine_lr(s, 50)
    assert quarter == pytest.approx(1e-6 + 0.25 * (1e-4 - 1e-6), abs=1e-12)
    assert half == pytest.approx(1e-6 + 0.5 * (1e-4 - 1e-6), abs=1e-12)


def test_cosine_matches_oracle_everywhere():
    s = spec(warmup_start_lr=3e-6)
    for step in range(0, 1101, 7):
        expected = cosine_lr_oracle(
            init_lr=s.init_lr, min_lr=s.min_lr, warmup_steps=s.warmup_steps,
            warmup_start_lr=s.warmup_start_lr, total_steps=s.total_steps, step=step,
        )
        assert linear_warmup_cosine_lr(s, step) == pytest.approx(expected, abs=1e-12)


def test_cosine_monotone_decay_after_warmup():
    s = spec()
    values = [linear_warmup_cosine_lr(s, step) for step in range(100, 1101)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert min(values) >= s.min_lr - 1e-15
    assert max(values) <= s.init_lr + 1e-15


def test_cosine_step_out_of_range():
    with pytest.raises(StepOutOfRangeError):
        linear_warmup_cosine_lr(spec(), -1)
    with pytest.raises(StepOutOfRangeError):
        linear_warmup_cosine_lr(spec(), 1101)


def test_cosine_no_warmup_starts_at_init():
    s = spec(warmup_steps=0)
    assert linear_warmup_cosine_lr(s, 0) == pytest.approx(1e-4, abs=1e-12)


# --- step schedule ----------------------------------------------------------

def test_step_schedule_epoch_zero_post_warmup():
    s = spec(warmup_steps=0, total_steps=1000)
    assert linear_warmup_step_lr(s, 0, 100, 0) == pytest.approx(1e-4, abs=1e-12)


def test_step_schedule_decay_powers():
    s = SchedulerSpec(init_lr=1e-3, min_lr=0.0, total_steps=1000, warmup_steps=0,
                      warmup_start_lr=0.0, decay_rate=0.1)
    assert linear_warmup_step_lr(s, 2, 100, 0) == pytest.approx(1e-5, abs=1e-15)
    assert linear_warmup_step_lr(s, 1, 100, 50) == pytest.approx(1e-4, abs=1e-15)


def test_step_schedule_floors_at_min_lr():
    s = SchedulerSpec(init_lr=1e-3, min_lr=1e-5, total_steps=1000, warmup_steps=0,
                      warmup_start_lr=0.0, decay_rate=0.1)
    for epoch in range(2, 8):
        assert linear_warmup_step_lr(s, epoch, 100, 0) >= 1e-5


def test_step_schedule_warmup_uses_global_step():
    s = SchedulerSpec(init_lr=1e-3, min_lr=0.0, total_steps=1000, warmup_steps=150,
                      warmup_start_lr=0.0, decay_rate=0.5)
    # Global step 120 = epoch 1, step 20 with 100 steps/epoch: still warming up.
    assert linear_warmup_step_lr(s, 1, 100, 20) == pytest.approx(1e-3 * 120 / 150, abs=1e-12)


def test_step_schedule_bad_coordinates():
    s = spec()
    with pytest.raises(StepOutOfRangeError):
        linear_warmup_step_lr(s, -1, 100, 0)
    with pytest.raises(StepOutOfRangeError):
        linear_warmup_step_lr(s, 0, 100, 100)
    with pytest.raises(StepOutOfRangeError):
        linear_warmup_step_lr(s, 0, 0, 0)


# --- spec invariants --------------------------------------------------------

def test_spec_rejects_min_above_init():
    with pytest.raises(BadHyperparameterError):
        spec(min_lr=2e-4)


def test_spec_rejects_negative_min():
    with pytest.raises(BadHyperparameterError):
        spec(min_lr=-1e-6)


def test_spec_rejects_warmup_not_below_total():
    with pytest.raises(BadHyperparameterError):
        spec(warmup_steps=1100)
    with pytest.raises(BadHyperparameterError):
        spec(warmup_steps=-1)


def test_spec_rejects_warmup_start_above_init():
    with pytest.raises(BadHyperparameterError):
        spec(warmup_start_lr=2e-4)


def test_spec_rejects_bad_decay_rate():
    with pytest.raises(BadHyperparameterError):
        spec(decay_rate=0.0)
    with pytest.raises(BadHyperparameterError):
        spec(decay_rate=1.5)


def test_spec_from_run_config():
    run = {"init_lr": 0.001, "min_lr": 0.0003, "warmup_steps": 25, "lr_decay_rate": 0.8}
    s = SchedulerSpec.from_run_config(run, total_steps=500)
    assert (s.init_lr, s.min_lr, s.warmup_steps, s.total_steps) == (0.001, 0.0003, 25, 500)
    assert s.decay_rate == 0.8


# --- registered adapters ----------------------------------------------------

def test_adapters_agree_with_pure_functions():
    s = spec()
    cosine = build_scheduler("linear_warmup_cosine_lr", s)
    assert cosine.lr(5, 50, 100) == pytest.approx(linear_warmup_cosine_lr(s, 550), abs=1e-15)
    step = build_scheduler("linear_warmup_step_lr", s)
    assert step.lr(3, 10, 100) == pytest.approx(linear_warmup_step_lr(s, 3, 100, 10), abs=1e-15)


# --- optimizer construction -------------------------------------------------

class _Probe(nn.Module):
    def __init__(self):
        super().__init__()
        self.linear = nn.Linear(4, 4)
        self.norm = nn.LayerNorm(4)
        self.scale = nn.Parameter(torch.tensor(0.5))
        self.frozen = nn.Parameter(torch.zeros(3, 3), requires_grad=False)


def test_optimizer_groups_split_by_dimension():
    model = _Probe()
    opt = build_optimizer(model, lr=1e-3, weight_decay=0.05)
    assert isinstance(opt, torch.optim.AdamW)
    decay, no_decay = opt.param_groups
    assert decay["weight_decay"] == 0.05
    assert no_decay["weight_decay"] == 0.0
    assert decay["params"] == [model.linear.weight]
    # Biases, norm affine params and the scalar all dodge decay.
    assert set(map(id, no_decay["params"])) == {
        id(model.linear.bias), id(model.norm.weight), id(model.norm.bias), id(model.scale)
    }


def test_optimizer_skips_frozen_parameters():
    model = _Probe()
    opt = build_optimizer(model, lr=1e-3)
    all_params = [p for group in opt.param_groups for p in group["params"]]
    assert all(id(p) != id(model.frozen) for p in all_params)


def test_optimizer_applies_lr_and_betas():
    opt = build_optimizer(_Probe(), lr=2e-4, betas=(0.9, 0.98))
    for group in opt.param_groups:
        assert group["lr"] == 2e-4
        assert group["betas"] == (0.9, 0.98)


@pytest.mark.parametrize("bad", [0.0, -1e-3, "fast", None])
def test_optimizer_rejects_bad_lr(bad):
    with pytest.raises(BadHyperparameterError):
        build_optimizer(_Probe(), lr=bad)


def test_optimizer_rejects_bad_weight_decay():
    with pytest.raises(BadHyperparameterError):
        build_optimizer(_Probe(), lr=1e-3, weight_decay=-0.01)


@pytest.mark.parametrize("betas", [(0.9, 1.0), (-0.1, 0.99), ("0.9", 0.98), (1.5, 0.9)])
def test_optimizer_rejects_bad_betas(betas):
    with pytest.raises(BadHyperparameterError):
        build_optimizer(_Probe(), lr=1e-3, betas=betas)
