"""Desk-scale multimodal toolkit: registry-driven models, datasets, tasks, runners.

Importing the package registers every built-in component (models, tasks,
processors, dataset builders, schedulers, runners) and records the library
root used to resolve packaged default configs.
"""

from pathlib import Path

from .registry import registry

registry.register_value("library_root", str(Path(__file__).resolve().parent))

from . import config, data, models, optim, processors, runners, tasks, utils  # noqa: E402
from .config import RunConfig, build_run_config, load_config  # noqa: E402
from .data import load_dataset  # noqa: E402
from .models import extract_features, load_model  # noqa: E402
from .registry import Registry  # noqa: E402
from .tasks import setup_task  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "Registry",
    "RunConfig",
    "build_run_config",
    "config",
    "data",
    "extract_features",
    "load_config",
    "load_dataset",
    "load_model",
    "models",
    "optim",
    "processors",
    "registry",
    "runners",
    "setup_task",
    "tasks",
    "utils",
]
