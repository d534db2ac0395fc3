"""Task abstraction: per-task training steps and evaluation producing EvalResult."""

import math
from dataclasses import dataclass, field

from ..errors import ShapeError


@dataclass
class EvalResult:
    """Evaluation outcome: named metrics plus the scalar used for model selection.

    predictions carries per-sample output records for result files; it is not
    part of the metric payload.
    """

    metrics: dict
    agg_metrics: float
    predictions: list = field(default_factory=list)

    def __post_init__(self):
        for key, value in self.metrics.items():
            if not math.isfinite(value):
                raise ValueError(f"non-finite metric {key}={value}")
        if not math.isfinite(self.agg_metrics):
            raise ValueError(f"non-finite agg_metrics={self.agg_metrics}")

    def to_record(self):
        record = {k: v for k, v in self.metrics.items()}
        record["agg_metrics"] = self.agg_metrics
        return record


class BaseTask:
    """Shared plumbing: batch validation and config-driven loss weights."""

    name = None
    required_batch_keys = ("image", "text_input")

    def __init__(self, loss_weights=None, **kwargs):
        self.loss_weights = dict(loss_weights or {})
        self.options = kwargs

    @classmethod
    def from_config(cls, run_cfg):
        run = run_cfg.run if hasattr(run_cfg, "run") else dict(run_cfg)
        return cls(
            loss_weights=run.get("loss_weights"),
            num_beams=int(run.get("num_beams", 3)),
            max_len=int(run.get("max_len", 12)),
            k_test=int(run.get("k_test", 8)),
            prompt=str(run.get("prompt", "")),
        )

    def check_batch(self, batch):
        for key in self.required_batch_keys:
            if key not in batch or batch[key] is None:
                raise ShapeError(f"batch missing required key {key!r} for task {self.name}")
        n_img = batch["image"].shape[0]
        n_txt = len(batch["text_input"])
        if n_img != n_txt:
            raise ShapeError(f"batch image/text length mismatch: {n_img} vs {n_txt}")

    def weighted_total(self, components):
        """Total loss = sum of weight * component, weights default 1.0."""
        total = None
        for name, value in components.items():
            term = self.loss_weights.get(name, 1.0) * value
            total = term if total is None else total + term
        return total

    def train_step(self, model, batch):
        raise NotImplementedError

    def evaluation(self, model, splits):
        raise NotImplementedError
