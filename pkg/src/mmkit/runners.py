"""Training lifecycle orchestration: epoch and iteration loops, checkpoints, resume.

Determinism contract: batch order is a pure function of (seed, epoch), and
per-sample augmentation RNG a pure function of (seed, epoch, index), so a
resumed run replays exactly the batches an uninterrupted run would see.
"""

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data.splits import collate
from .errors import IncompatibleArchError, NonFiniteLossError
from .models.checkpoint import (
    capture_rng_state,
    load_checkpoint,
    load_weights,
    restore_rng_state,
    save_checkpoint,
)
from .optim import SchedulerSpec, build_optimizer, build_scheduler
from .registry import registry
from .utils import append_jsonl, write_jsonl

logger = logging.getLogger("mmkit.runners")


@dataclass
class RunnerState:
    cur_epoch: int = 0
    cur_iters: int = 0
    best_agg: float = float("-inf")
    best_epoch: int = -1


@registry.register("runner", "runner_base")
class RunnerBase:
    """Epoch-based training: shuffle, step, validate, checkpoint per epoch.

    Optimizer, scheduler and batch plans are created lazily on first use.
    """

    progress_key = "epoch"

    def __init__(self, cfg, task, model, splits):
        self.cfg = cfg
        self.run = dict(cfg.run)
        self.task = task
        self.model = model
        self.splits = splits
        self.state = RunnerState()
        self.output_dir = Path(self.run.get("output_dir", "output"))
        self.seed = int(self.run.get("seed", 42))
        self.batch_size = int(self.run.get("batch_size_train", 16))
        self._optimizer = None
        self._scheduler = None

    # ---- lazily built components ----

    @property
    def train_split(self):
        return self.splits.get("train")

    @property
    def steps_per_epoch(self):
        return max(1, math.ceil(len(self.train_split) / self.batch_size))

    @property
    def max_epoch(self):
        return int(self.run.get("max_epoch", 0))

    @property
    def total_steps(self):
        return max(1, self.max_epoch * self.steps_per_epoch)

    @property
    def optimizer(self):
        if self._optimizer is None:
            self._optimizer = build_optimizer(
                self.model,
                lr=float(self.run.get("init_lr", 1e-3)),
                weight_decay=float(self.run.get("weight_decay", 0.05)),
                betas=tuple(self.run.get("betas", (0.9, 0.999))),
            )
        return self._optimizer

    @property
    def scheduler(self):
        if self._scheduler is None:
            spec = SchedulerSpec.from_run_config(self.run, self.total_steps)
            name = self.run.get("lr_sched", "linear_warmup_cosine_lr")
            self._scheduler = build_scheduler(name, spec)
        return self._scheduler

    # ---- deterministic batch plan ----

    def epoch_order(self, epoch):
        rng = np.random.default_rng(self.seed + epoch)
        return rng.permutation(len(self.train_split))

    def batches_for_epoch(self, epoch):
        """Yield collated batches in the seeded order for this epoch."""
        order = self.epoch_order(epoch)
        for start in range(0, len(order), self.batch_size):
            indices = order[start : start + self.batch_size]
            samples = [
                self.train_split.get_item(
                    int(i), rng=np.random.default_rng((self.seed, epoch, int(i)))
                )
                for i in indices
            ]
            yield collate(samples)

    # ---- logging and checkpoints ----

    def log_record(self, record):
        append_jsonl(self.output_dir / "log.txt", record)

    def _scheduler_state(self):
        return {
            "name": self.run.get("lr_sched", "linear_warmup_cosine_lr"),
            "spec": asdict(self.scheduler.spec),
            "step": self.state.cur_iters,
        }

    def save(self, tag):
        return save_checkpoint(
            self.output_dir / f"checkpoint_{tag}.pt",
            self.model,
            optimizer=self._optimizer,
            scheduler_state=self._scheduler_state(),
            epoch=self.state.cur_epoch,
            step=self.state.cur_iters,
            best_metric={"best_agg": self.state.best_agg, "best_epoch": self.state.best_epoch},
            config=self.cfg.to_dict() if hasattr(self.cfg, "to_dict") else None,
            rng_state=capture_rng_state(),
        )

    def resume(self, path):
        """Restore weights, optimizer, scheduler step, RNG and runner state."""
        payload = load_checkpoint(path)
        if payload["arch"] != self.model.arch:
            raise IncompatibleArchError(payload["arch"], self.model.arch)
        load_weights(self.model, payload)
        if payload.get("optimizer") is not None:
            self.optimizer.load_state_dict(payload["optimizer"])
        best = payload.get("best_metric") or {}
        self.state = RunnerState(
            cur_epoch=int(payload.get("epoch", 0)),
            cur_iters=int(payload.get("step", 0)),
            best_agg=best.get("best_agg", float("-inf")),
            best_epoch=best.get("best_epoch", -1),
        )
        if payload.get("rng_state") is not None:
            restore_rng_state(payload["rng_state"])
        logger.info("resumed from %s at %s=%d", path, self.progress_key, self.state.cur_epoch)

    # ---- training ----

    def _apply_lr(self, lr):
        for group in self.optimizer.param_groups:
            group["lr"] = lr

    def train_inner_epoch(self, epoch):
        """One pass of optimizer steps; returns mean loss components."""
        self.model.train()
        totals, count = {}, 0
        grad_clip = self.run.get("grad_clip")
        for step, batch in enumerate(self.batches_for_epoch(epoch)):
            lr = self.scheduler.lr(epoch, step, self.steps_per_epoch)
            self._apply_lr(lr)
            losses = self.task.train_step(self.model, batch)
            loss = losses["loss"]
            if not torch.isfinite(loss):
                raise NonFiniteLossError(self.state.cur_iters, float(loss.detach()))
            self.optimizer.zero_grad()
            loss.backward()
            if grad_clip:
                torch.nn.utils.clip_grad_norm_(self.model.parameters(), float(grad_clip))
            self.optimizer.step()
            if hasattr(self.model, "post_optimizer_step"):
                self.model.post_optimizer_step()
            self.state.cur_iters += 1
            for key, value in losses.items():
                totals[key] = totals.get(key, 0.0) + float(
                    value.detach() if torch.is_tensor(value) else value
                )
            count += 1
        self._last_lr = lr
        return {key: value / count for key, value in totals.items()}

    def evaluate_split(self, split_name, progress, write_results=True):
        result = self.task.evaluation(self.model, self.splits[split_name])
        record = {self.progress_key: progress, "split": split_name}
        record.update(result.to_record())
        record["lr"] = getattr(self, "_last_lr", float(self.run.get("init_lr", 0.0)))
        self.log_record(record)
        if write_results:
            write_jsonl(
                self.output_dir / "result" / f"{split_name}_epoch{progress}.ann",
                result.predictions,
            )
            append_jsonl(
                self.output_dir / "evaluate.log",
                {self.progress_key: progress, "split": split_name, **result.to_record()},
            )
        return result

    def _progress_span(self):
        """(current, last) positions of the outer loop in progress units."""
        return self.state.cur_epoch, self.max_epoch

    def _maybe_update_best(self, result, progress):
        if result.agg_metrics > self.state.best_agg:
            self.state.best_agg = result.agg_metrics
            self.state.best_epoch = progress
            self.save("best")

    def _load_best_for_test(self):
        best_path = self.output_dir / "checkpoint_best.pt"
        if best_path.is_file():
            load_weights(self.model, load_checkpoint(best_path))
            return
        logger.warning("no best checkpoint (no val split?); testing with latest weights")

    def train(self):
        """Full lifecycle; returns the best validation result (or the last eval)."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        resume_path = self.run.get("resume_ckpt")
        if resume_path:
            self.resume(resume_path)
        if self.run.get("evaluate"):
            return self.evaluate_only()

        best_result = None
        current, last = self._progress_span()
        while current < last:
            train_metrics = self.train_inner_epoch(current)
            record = {self.progress_key: current, "split": "train", "lr": self._last_lr}
            record.update(train_metrics)
            self.log_record(record)
            progress = current + 1
            self.state.cur_epoch = progress
            if "val" in self.splits:
                result = self.evaluate_split("val", current)
                if result.agg_metrics > self.state.best_agg:
                    best_result = result
                self._maybe_update_best(result, current)
            self.save("latest")
            current = progress

        if "test" in self.splits:
            self._load_best_for_test()
            test_result = self.evaluate_split("test", self.state.cur_epoch)
            if best_result is None:
                best_result = test_result
        return best_result

    def evaluate_only(self):
        """Evaluate val/test splits with current weights; writes no checkpoints."""
        last = None
        for split_name in ("val", "test"):
            if split_name in self.splits:
                last = self.evaluate_split(split_name, self.state.cur_epoch)
        if last is None:
            raise ValueError("no val or test split available to evaluate")
        return last


@registry.register("runner", "runner_iters")
class RunnerIters(RunnerBase):
    """Iteration-based training: fixed-size inner epochs over a cycling loader.

    The loader cycles one seeded permutation of the dataset, so batch 0
    reappears after len(dataset)/batch_size batches.
    """

    progress_key = "iters"

    @property
    def max_iters(self):
        return int(self.run["max_iters"])

    @property
    def iters_per_inner_epoch(self):
        return int(self.run["iters_per_inner_epoch"])

    @property
    def total_steps(self):
        return self.max_iters

    def cycle_order(self):
        rng = np.random.default_rng(self.seed)
        return rng.permutation(len(self.train_split))

    def batch_at(self, iteration):
        """Collated batch for a global iteration (cycling permutation)."""
        order = self.cycle_order()
        n_batches = max(1, math.ceil(len(order) / self.batch_size))
        start = (iteration % n_batches) * self.batch_size
        indices = order[start : start + self.batch_size]
        samples = [
            self.train_split.get_item(
                int(i), rng=np.random.default_rng((self.seed, iteration, int(i)))
            )
            for i in indices
        ]
        return collate(samples)

    def train_inner_epoch(self, start_iter):
        self.model.train()
        totals, count = {}, 0
        grad_clip = self.run.get("grad_clip")
        end = min(start_iter + self.iters_per_inner_epoch, self.max_iters)
        for iteration in range(start_iter, end):
            # inner-epoch/step split keeps step-decay meaningful while the
            # cosine schedule still sees the plain global iteration
            inner, within = divmod(iteration, self.iters_per_inner_epoch)
            lr = self.scheduler.lr(inner, within, self.iters_per_inner_epoch)
            self._apply_lr(lr)
            losses = self.task.train_step(self.model, self.batch_at(iteration))
            loss = losses["loss"]
            if not torch.isfinite(loss):
                raise NonFiniteLossError(iteration, float(loss.detach()))
            self.optimizer.zero_grad()
            loss.backward()
            if grad_clip:
                torch.nn.utils.clip_grad_norm_(self.model.parameters(), float(grad_clip))
            self.optimizer.step()
            if hasattr(self.model, "post_optimizer_step"):
                self.model.post_optimizer_step()
            self.state.cur_iters = iteration + 1
            for key, value in losses.items():
                totals[key] = totals.get(key, 0.0) + float(
                    value.detach() if torch.is_tensor(value) else value
                )
            count += 1
        self._last_lr = lr
        return {key: value / count for key, value in totals.items()}

    def _progress_span(self):
        return self.state.cur_iters, self.max_iters

    def train(self):
        self.output_dir.mkdir(parents=True, exist_ok=True)
        resume_path = self.run.get("resume_ckpt")
        if resume_path:
            self.resume(resume_path)
        if self.run.get("evaluate"):
            return self.evaluate_only()

        best_result = None
        current, last = self._progress_span()
        while current < last:
            train_metrics = self.train_inner_epoch(current)
            current = self.state.cur_iters
            record = {self.progress_key: current, "split": "train", "lr": self._last_lr}
            record.update(train_metrics)
            self.log_record(record)
            self.state.cur_epoch += 1
            if "val" in self.splits:
                result = self.evaluate_split("val", current)
                if result.agg_metrics > self.state.best_agg:
                    best_result = result
                self._maybe_update_best(result, current)
            self.save("latest")

        if "test" in self.splits:
            self._load_best_for_test()
            test_result = self.evaluate_split("test", self.state.cur_iters)
            if best_result is None:
                best_result = test_result
        return best_result


def setup_runner(cfg, task, model, splits):
    name = cfg.run.get("runner", "runner_base")
    runner_cls = registry.lookup("runner", name)
    return runner_cls(cfg, task, model, splits)
