"""Small IO and determinism helpers used across modules."""

import hashlib
import json
import os
import random
from pathlib import Path

import numpy as np
import torch

from mmkit.registry import registry

CACHE_ROOT_ENV = "MMKIT_CACHE_ROOT"


def library_root() -> Path:
    return Path(registry.get_value("library_root"))


def resolve_cache_root() -> Path:
    """Cache directory, in precedence order: env var, registry value, default."""
    env = os.environ.get(CACHE_ROOT_ENV)
    if env:
        return Path(env)
    if registry.has_value("cache_root"):
        return Path(registry.get_value("cache_root"))
    return Path.home() / ".cache" / "mmkit"


def set_seed(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dumps_record(record: dict) -> str:
    # Canonical form: sorted keys, compact separators.  Keeps generated
    # annotation files byte-identical across runs.
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(dumps_record(rec) + "\n")
    os.replace(tmp, path)


def read_jsonl(path):
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def append_jsonl(path, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(dumps_record(record) + "\n")
