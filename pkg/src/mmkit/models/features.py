"""Unified feature extraction across model families."""

from dataclasses import dataclass
from typing import Optional

import torch

from ..errors import MissingModalityError, UnsupportedModeError

MODES = ("image", "text", "multimodal")


@dataclass
class FeatureBundle:
    """Per-mode outputs; fields not produced by the requested mode stay None.

    *_embeds are full token sequences from the encoders; *_embeds_proj are
    unit-normalized summary vectors in the shared contrastive space.
    """

    image_embeds: Optional[torch.Tensor] = None
    image_embeds_proj: Optional[torch.Tensor] = None
    text_embeds: Optional[torch.Tensor] = None
    text_embeds_proj: Optional[torch.Tensor] = None
    multimodal_embeds: Optional[torch.Tensor] = None


def _as_batch(image):
    if image.dim() == 3:
        return image.unsqueeze(0)
    return image


def _as_texts(text):
    if isinstance(text, str):
        return [text]
    return list(text)


def extract_features(model, sample, mode):
    """Extract features for a sample dict with optional "image" and "text_input".

    mode selects which encoder path runs; the other modality in the sample is
    ignored rather than required.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    image = sample.get("image")
    text = sample.get("text_input")
    if mode in ("image", "multimodal") and image is None:
        raise MissingModalityError(mode, "image")
    if mode in ("text", "multimodal") and text is None:
        raise MissingModalityError(mode, "text_input")
    if mode == "multimodal" and not getattr(model, "supports_multimodal", False):
        raise UnsupportedModeError(model.arch, mode)

    model.eval()
    with torch.no_grad():
        if mode == "image":
            tokens = model.encode_image(_as_batch(image))
            return FeatureBundle(
                image_embeds=tokens,
                image_embeds_proj=model.image_features_from_tokens(tokens),
            )
        if mode == "text":
            hidden, mask = model.encode_text(_as_texts(text))
            return FeatureBundle(
                text_embeds=hidden,
                text_embeds_proj=model.text_features_from_hidden(hidden),
            )
        return FeatureBundle(
            multimodal_embeds=model.multimodal_embeds(_as_batch(image), _as_texts(text))
        )
