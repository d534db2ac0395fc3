"""Hierarchical run configuration.

A run config is assembled from five layers merged in fixed precedence
(lowest first):

    library defaults < model defaults < dataset defaults < user file < CLI options

Model and dataset default files are discovered through the registry: each
registered model class advertises ``default_config_paths`` (model_type ->
path) and each dataset builder a ``default_config_path``, both relative to
the library root.

Merging is a deep merge over mappings; scalars and lists are replaced
wholesale by the higher-precedence layer.  A mapping colliding with a
scalar/list is a TypeConflictError, never a silent overwrite.
"""

import copy
from pathlib import Path

import yaml

from mmkit.errors import (
    ConfigParseError,
    MalformedOptionError,
    TypeConflictError,
    ValidationError,
)
from mmkit.registry import registry

_SCALARS = (str, int, float, bool, type(None))


class ConfigTree:
    """Nested mapping of scalars and scalar lists, addressed by dotted paths."""

    def __init__(self, root=None):
        self.root = root if root is not None else {}
        self._frozen = False

    @classmethod
    def from_dict(cls, mapping):
        _check_structure(mapping, path="")
        return cls(copy.deepcopy(mapping))

    def get(self, path, default=None):
        node = self.root
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, path, value):
        if self._frozen:
            raise RuntimeError("config tree is frozen")
        parts = path.split(".")
        node = self.root
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = node[part] = {}
            elif not isinstance(nxt, dict):
                raise TypeConflictError(path, type(nxt).__name__, "mapping")
            node = nxt
        node[parts[-1]] = value

    def freeze(self):
        self._frozen = True
        return self

    def to_dict(self):
        return copy.deepcopy(self.root)

    def __eq__(self, other):
        return isinstance(other, ConfigTree) and self.root == other.root

    def __repr__(self):
        return f"ConfigTree({self.root!r})"


def _check_structure(node, path):
    if isinstance(node, dict):
        for key, value in node.items():
            if not isinstance(key, str) or not key:
                raise ConfigParseError(path or "<config>", None, f"bad key {key!r}")
            if "." in key:
                raise ConfigParseError(
                    path or "<config>", None,
                    f"key {key!r} contains '.', which is reserved for path syntax",
                )
            _check_structure(value, f"{path}.{key}" if path else key)
    elif isinstance(node, list):
        for item in node:
            if not isinstance(item, _SCALARS):
                raise ConfigParseError(
                    path, None, "lists may only contain scalar values"
                )
    elif not isinstance(node, _SCALARS):
        raise ConfigParseError(path, None, f"unsupported value type {type(node).__name__}")


def load_config(path) -> ConfigTree:
    """Parse a YAML-subset config file into a tree. Scalar types are preserved."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ConfigParseError(str(path), line, str(getattr(exc, "problem", exc))) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError(str(path), 1, "top level of a config file must be a mapping")
    _check_structure(data, path="")
    return ConfigTree(data)


def merge(base: ConfigTree, override: ConfigTree) -> ConfigTree:
    """Deep merge; `override` wins for scalars/lists, mappings recurse.

    Neither input is modified.
    """
    return ConfigTree(_merge_nodes(base.root, override.root, path=""))


def _merge_nodes(base, override, path):
    base_is_map = isinstance(base, dict)
    over_is_map = isinstance(override, dict)
    if base_is_map and over_is_map:
        out = {k: copy.deepcopy(v) for k, v in base.items()}
        for key, value in override.items():
            child = f"{path}.{key}" if path else key
            if key in out:
                out[key] = _merge_nodes(out[key], value, child)
            else:
                out[key] = copy.deepcopy(value)
        return out
    if base_is_map != over_is_map:
        kinds = ("mapping" if base_is_map else "scalar",
                 "mapping" if over_is_map else "scalar")
        raise TypeConflictError(path, *kinds)
    return copy.deepcopy(override)


def coerce_literal(text: str):
    """Literal-syntax coercion for CLI overrides: bool, int, float, else string."""
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def apply_overrides(tree: ConfigTree, options) -> ConfigTree:
    """Apply "dotted.path=value" options; missing intermediate mappings are created."""
    out = ConfigTree(tree.to_dict())
    for option in options:
        if option.count("=") != 1:
            raise MalformedOptionError(option)
        path, raw = option.split("=")
        if not path or any(not part for part in path.split(".")):
            raise MalformedOptionError(option)
        out.set(path, coerce_literal(raw))
    return out


class RunConfig:
    """Finalized, validated, frozen run configuration."""

    def __init__(self, tree: ConfigTree):
        self.tree = tree.freeze()

    @property
    def run(self) -> dict:
        return self.tree.get("run") or {}

    @property
    def model(self) -> dict:
        return self.tree.get("model") or {}

    @property
    def datasets(self) -> dict:
        return self.tree.get("datasets") or {}

    def get(self, path, default=None):
        return self.tree.get(path, default)

    def to_dict(self):
        return self.tree.to_dict()


def validate(cfg) -> list:
    """Return [] iff the run config is valid, else messages naming dotted paths."""
    tree = cfg.tree if isinstance(cfg, RunConfig) else cfg
    messages = []
    run = tree.get("run")
    if not isinstance(run, dict) or not run.get("task"):
        messages.append("run.task: a task name is required")
    model = tree.get("model")
    if not isinstance(model, dict) or not model.get("arch"):
        messages.append("model.arch: a model architecture name is required")
    datasets = tree.get("datasets")
    if not isinstance(datasets, dict) or not datasets:
        messages.append("datasets: at least one dataset section is required")
    if isinstance(run, dict):
        max_epoch = run.get("max_epoch")
        max_iters = run.get("max_iters")
        if max_epoch is None and max_iters is None:
            messages.append("run.max_epoch / run.max_iters: exactly one must be set")
        elif max_epoch is not None and max_iters is not None:
            messages.append(
                "run.max_epoch and run.max_iters are both set; exactly one is allowed"
            )
        if max_iters is not None and run.get("iters_per_inner_epoch") is None:
            messages.append("run.iters_per_inner_epoch: required with run.max_iters")
        for key in ("init_lr", "min_lr", "warmup_start_lr"):
            value = run.get(key)
            if value is not None and (not isinstance(value, (int, float)) or value < 0):
                messages.append(f"run.{key}: must be a non-negative number, got {value!r}")
        for key in ("batch_size_train", "batch_size_eval"):
            value = run.get(key)
            if value is not None and (not isinstance(value, int) or value <= 0):
                messages.append(f"run.{key}: must be a positive integer, got {value!r}")
        warmup = run.get("warmup_steps")
        if warmup is not None and (not isinstance(warmup, int) or warmup < 0):
            messages.append(f"run.warmup_steps: must be a non-negative integer, got {warmup!r}")
        seed = run.get("seed")
        if seed is not None and not isinstance(seed, int):
            messages.append(f"run.seed: must be an integer, got {seed!r}")
    return messages


def _library_defaults_path():
    from mmkit.utils import library_root

    return library_root() / "configs" / "defaults.yaml"


def _model_default_tree(arch, model_type):
    from mmkit.models import default_config_path_for

    return load_config(default_config_path_for(arch, model_type))


def _dataset_default_tree(name):
    from mmkit.utils import library_root

    builder = registry.lookup("dataset_builder", name)
    rel = getattr(builder, "default_config_path", None)
    if rel is None:
        return None
    return load_config(library_root() / rel)


def build_run_config(user_cfg_path, options=()) -> RunConfig:
    """Assemble, merge, override and validate the full run configuration."""
    user = load_config(user_cfg_path)
    tree = load_config(_library_defaults_path())

    arch = user.get("model.arch")
    model_type = user.get("model.model_type", "base")
    if arch:
        tree = merge(tree, _model_default_tree(arch, model_type))

    datasets = user.get("datasets")
    if isinstance(datasets, dict):
        for name in datasets:
            default = _dataset_default_tree(name)
            if default is not None:
                tree = merge(tree, default)

    tree = merge(tree, user)
    tree = apply_overrides(tree, options)

    messages = validate(tree)
    if messages:
        raise ValidationError(messages)
    return RunConfig(tree)
