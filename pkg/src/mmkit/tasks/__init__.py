"""Task registry: per-task train steps, evaluations, and inference primitives."""

from ..registry import registry
from .base import BaseTask, EvalResult
from .captioning import CaptioningTask
from .classification import ClassificationTask
from .inference import embed_gallery, multimodal_search, zero_shot_classify
from .metrics import (
    rankings_from_scores,
    recall_at_k,
    recall_from_rankings,
    sentence_bleu4,
    vqa_accuracy,
)
from .retrieval import RetrievalTask
from .vqa import VqaTask


def setup_task(run_cfg):
    """Instantiate the task named by cfg.run.task."""
    name = run_cfg.run.get("task") if hasattr(run_cfg, "run") else run_cfg["task"]
    task_cls = registry.lookup("task", name)
    return task_cls.from_config(run_cfg)


__all__ = [
    "BaseTask",
    "CaptioningTask",
    "ClassificationTask",
    "EvalResult",
    "RetrievalTask",
    "VqaTask",
    "embed_gallery",
    "multimodal_search",
    "rankings_from_scores",
    "recall_at_k",
    "recall_from_rankings",
    "sentence_bleu4",
    "setup_task",
    "vqa_accuracy",
    "zero_shot_classify",
]
