"""Model zoo: cards, unified loading, feature extraction, checkpoint IO."""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..config import load_config
from ..errors import ChecksumMismatchError, DuplicateNameError, NotFoundError
from ..processors import build_processor_pair
from ..registry import registry
from ..utils import library_root, resolve_cache_root, sha256_file
from .captioner import CaptionModel
from .checkpoint import (
    FORMAT_VERSION,
    capture_rng_state,
    load_checkpoint,
    load_weights,
    restore_rng_state,
    save_checkpoint,
)
from .dual_encoder import DualEncoderModel
from .features import FeatureBundle, extract_features
from .fusion_encoder import FusionEncoderModel
from .losses import itc_loss, itm_loss
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, UNK_ID, WordTokenizer


@dataclass(frozen=True)
class ModelCard:
    """Catalog entry mapping (arch, model_type) to config and optional weights."""

    arch: str
    model_type: str
    default_config: str
    checkpoint: Optional[str] = None
    checkpoint_sha256: Optional[str] = None


_CARDS = {}


def register_model_card(card):
    key = (card.arch, card.model_type)
    if key in _CARDS:
        raise DuplicateNameError("model", f"{card.arch}/{card.model_type}")
    _CARDS[key] = card
    return card


def model_types_for(arch):
    return sorted(mt for (a, mt) in _CARDS if a == arch)


def get_model_card(arch, model_type="base"):
    registry.lookup("model", arch)
    card = _CARDS.get((arch, model_type))
    if card is None:
        raise NotFoundError("model", f"{arch}/{model_type}", model_types_for(arch))
    return card


def default_config_path_for(arch, model_type="base"):
    card = get_model_card(arch, model_type)
    return library_root() / card.default_config


def _fetch_checkpoint(source, sha256=None, fetcher=None):
    """Materialize a checkpoint locally; verify and cache URL downloads."""
    from ..data.download import default_fetcher

    fetcher = fetcher or default_fetcher
    if not str(source).startswith(("http://", "https://")):
        return Path(source)
    dest = resolve_cache_root() / "checkpoints" / Path(str(source)).name
    dest.parent.mkdir(parents=True, exist_ok=True)
    if dest.is_file() and (sha256 is None or sha256_file(dest) == sha256):
        return dest
    for _ in range(2):
        fd, tmp = tempfile.mkstemp(dir=dest.parent, suffix=".part")
        os.close(fd)
        try:
            fetcher(str(source), tmp)
            if sha256 is None or sha256_file(tmp) == sha256:
                os.replace(tmp, dest)
                return dest
            actual = sha256_file(tmp)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
    raise ChecksumMismatchError(Path(str(source)).name, sha256, actual)


def _preprocess_from_config(cfg, is_eval):
    section = cfg.get("preprocess") or {}
    vis = build_processor_pair(section.get("vis_processor"), "image_eval", is_eval=is_eval)
    txt = build_processor_pair(section.get("text_processor"), "text_base", is_eval=is_eval)
    return vis, txt


def load_model(name, model_type="base", is_eval=False, checkpoint=None, fetcher=None):
    """Build a model from its card and return (model, vis_processors, text_processors).

    Processor dicts have "train" and "eval" slots.  With is_eval the train
    slot degrades to deterministic eval preprocessing and the model is put
    in eval mode.  A checkpoint declared on the card (or passed explicitly)
    is fetched, verified when a digest is known, and loaded.
    """
    card = get_model_card(name, model_type)
    cfg = load_config(library_root() / card.default_config)
    model_cls = registry.lookup("model", name)
    model = model_cls.from_config(cfg.get("model"))
    model.model_type = model_type

    source = checkpoint if checkpoint is not None else card.checkpoint
    if source is None:
        source = cfg.get("model.checkpoint")
    if source:
        path = _fetch_checkpoint(source, card.checkpoint_sha256, fetcher)
        load_weights(model, load_checkpoint(path))

    if is_eval:
        model.eval()
    vis_processors, text_processors = _preprocess_from_config(cfg, is_eval)
    return model, vis_processors, text_processors


def build_model_from_run_config(run_cfg):
    """Instantiate the model described by a merged run configuration."""
    model_cfg = dict(run_cfg.model)
    arch = model_cfg.get("arch")
    model_cls = registry.lookup("model", arch)
    model = model_cls.from_config(model_cfg)
    model.model_type = model_cfg.get("model_type", "base")
    source = model_cfg.get("checkpoint")
    if source:
        path = _fetch_checkpoint(source, model_cfg.get("checkpoint_sha256"))
        load_weights(model, load_checkpoint(path))
    return model


def generate(model, image, max_len=None, num_beams=3):
    """Caption a single image; returns the decoded string."""
    if image.dim() == 3:
        image = image.unsqueeze(0)
    return model.generate(image, num_beams=num_beams, max_len=max_len)[0]


def predict_answer(model, image, question, answer_list):
    """Pick the candidate answer with the highest decoder likelihood."""
    best, _ = model.rank_answers(image, question, answer_list)
    return best


register_model_card(ModelCard("clip_toy", "base", "configs/models/clip_toy_base.yaml"))
register_model_card(ModelCard("albef_toy", "base", "configs/models/albef_toy_base.yaml"))
register_model_card(
    ModelCard("blip_caption_toy", "base", "configs/models/blip_caption_toy_base.yaml")
)

__all__ = [
    "BOS_ID",
    "CaptionModel",
    "DualEncoderModel",
    "EOS_ID",
    "FORMAT_VERSION",
    "FeatureBundle",
    "FusionEncoderModel",
    "ModelCard",
    "PAD_ID",
    "UNK_ID",
    "WordTokenizer",
    "build_model_from_run_config",
    "capture_rng_state",
    "default_config_path_for",
    "extract_features",
    "generate",
    "get_model_card",
    "itc_loss",
    "itm_loss",
    "load_checkpoint",
    "load_model",
    "load_weights",
    "model_types_for",
    "predict_answer",
    "register_model_card",
    "restore_rng_state",
    "save_checkpoint",
]
