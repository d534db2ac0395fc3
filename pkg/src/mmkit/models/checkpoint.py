"""Versioned checkpoint save/load with arch and shape validation."""

import os
import random
import tempfile

import numpy as np
import torch

from ..errors import (
    CorruptCheckpointError,
    IncompatibleArchError,
    WeightShapeMismatchError,
)

FORMAT_VERSION = 1
REQUIRED_KEYS = ("format_version", "arch", "model_type", "model")


def capture_rng_state():
    return {
        "python": random.getstate(),
        "numpy": np.random.get_state(),
        "torch": torch.get_rng_state(),
    }


def restore_rng_state(state):
    random.setstate(state["python"])
    np.random.set_state(state["numpy"])
    torch.set_rng_state(state["torch"])


def save_checkpoint(
    path,
    model,
    optimizer=None,
    scheduler_state=None,
    epoch=0,
    step=0,
    best_metric=None,
    config=None,
    rng_state=None,
):
    """Write a checkpoint atomically (temp file in target dir, then rename)."""
    payload = {
        "format_version": FORMAT_VERSION,
        "arch": model.arch,
        "model_type": model.model_type,
        "model": model.state_dict(),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "scheduler": scheduler_state,
        "epoch": epoch,
        "step": step,
        "best_metric": best_metric,
        "config": config,
        "rng_state": rng_state,
    }
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_checkpoint(path):
    """Read and structurally validate a checkpoint payload."""
    try:
        payload = torch.load(os.fspath(path), map_location="cpu", weights_only=False)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise CorruptCheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise CorruptCheckpointError(f"checkpoint {path} is not a mapping")
    missing = [k for k in REQUIRED_KEYS if k not in payload]
    if missing:
        raise CorruptCheckpointError(f"checkpoint {path} missing keys: {missing}")
    return payload


def load_weights(model, payload):
    """Load model weights from a payload, validating arch and tensor shapes."""
    if payload["arch"] != model.arch:
        raise IncompatibleArchError(model.arch, payload["arch"])
    state = payload["model"]
    own = model.state_dict()
    missing = sorted(set(own) - set(state))
    unexpected = sorted(set(state) - set(own))
    if missing or unexpected:
        raise CorruptCheckpointError(
            f"state dict mismatch: missing={missing} unexpected={unexpected}"
        )
    for name, tensor in state.items():
        if tuple(tensor.shape) != tuple(own[name].shape):
            raise WeightShapeMismatchError(
                name, tuple(own[name].shape), tuple(tensor.shape)
            )
    model.load_state_dict(state)
    return model
