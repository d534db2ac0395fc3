"""Dual-encoder model: separate image and text towers aligned contrastively."""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..registry import registry
from .layers import INIT_STD, ImageEncoder, TextEncoder, init_weights
from .losses import itc_loss
from .tokenizer import WordTokenizer


@registry.register("model", "clip_toy")
class DualEncoderModel(nn.Module):
    """Contrastive image-text model with no cross-modal interaction.

    Images and texts are embedded independently and compared by cosine
    similarity scaled by a learnable temperature.
    """

    arch = "clip_toy"
    supports_multimodal = False
    default_config_paths = {"base": "configs/models/clip_toy_base.yaml"}

    def __init__(
        self,
        vocab,
        image_size=64,
        patch_size=8,
        width=128,
        depth=2,
        n_heads=4,
        embed_dim=64,
        max_txt_len=16,
        temperature_init=0.07,
        temperature_min=0.001,
        temperature_max=0.5,
    ):
        super().__init__()
        self.tokenizer = WordTokenizer(vocab)
        self.embed_dim = embed_dim
        self.max_txt_len = max_txt_len
        self.model_type = "base"
        self.visual_encoder = ImageEncoder(image_size, patch_size, width, depth, n_heads)
        self.text_encoder = TextEncoder(
            self.tokenizer.vocab_size, max_txt_len, width, depth, n_heads
        )
        self.image_proj = nn.Linear(width, embed_dim)
        self.text_proj = nn.Linear(width, embed_dim)
        self.image_proj.apply(init_weights)
        self.text_proj.apply(init_weights)
        if not temperature_min < temperature_init <= temperature_max:
            raise ValueError(
                f"temperature_init {temperature_init} outside ({temperature_min}, {temperature_max}]"
            )
        self.temperature_min = temperature_min
        self.temperature_max = temperature_max
        self.log_tau = nn.Parameter(torch.tensor(math.log(temperature_init)))

    @classmethod
    def _config_kwargs(cls, cfg):
        return dict(
            vocab=list(cfg["vocab"]),
            image_size=int(cfg.get("image_size", 64)),
            patch_size=int(cfg.get("patch_size", 8)),
            width=int(cfg.get("width", 128)),
            depth=int(cfg.get("depth", 2)),
            n_heads=int(cfg.get("n_heads", 4)),
            embed_dim=int(cfg.get("embed_dim", 64)),
            max_txt_len=int(cfg.get("max_txt_len", 16)),
            temperature_init=float(cfg.get("temperature_init", 0.07)),
            temperature_min=float(cfg.get("temperature_min", 0.001)),
            temperature_max=float(cfg.get("temperature_max", 0.5)),
        )

    @classmethod
    def from_config(cls, cfg):
        return cls(**cls._config_kwargs(cfg))

    @property
    def temperature(self):
        """Current softmax temperature, clamped to its configured range."""
        return self.log_tau.exp().clamp(self.temperature_min, self.temperature_max)

    def post_optimizer_step(self):
        """Keep the raw parameter inside range so clamping never kills gradients."""
        with torch.no_grad():
            self.log_tau.clamp_(
                math.log(self.temperature_min), math.log(self.temperature_max)
            )

    def encode_image(self, images):
        return self.visual_encoder(images)

    def encode_text(self, texts):
        ids, mask = self.tokenizer.encode_batch(texts, self.max_txt_len)
        device = next(self.parameters()).device
        return self.text_encoder(ids.to(device), mask.to(device)), mask.to(device)

    def image_features_from_tokens(self, tokens):
        return F.normalize(self.image_proj(tokens[:, 0]), dim=-1)

    def text_features_from_hidden(self, hidden):
        return F.normalize(self.text_proj(hidden[:, 0]), dim=-1)

    def image_features(self, images):
        """(B, 3, S, S) -> (B, embed_dim) unit vectors."""
        return self.image_features_from_tokens(self.encode_image(images))

    def text_features(self, texts):
        """list of B strings -> (B, embed_dim) unit vectors."""
        hidden, _ = self.encode_text(texts)
        return self.text_features_from_hidden(hidden)

    def forward_pairs(self, images, texts):
        """Paired projections for a batch; inputs aligned by index."""
        return self.image_features(images), self.text_features(texts)

    def forward(self, samples):
        image_proj, text_proj = self.forward_pairs(samples["image"], samples["text_input"])
        loss = itc_loss(image_proj, text_proj, self.temperature)
        return {"loss": loss, "loss_itc": loss.detach()}
