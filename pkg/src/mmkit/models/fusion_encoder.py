"""Fusion-encoder model: dual towers plus cross-attention fusion and an ITM head."""

import torch.nn as nn

from ..registry import registry
from .dual_encoder import DualEncoderModel
from .layers import CrossBlock, init_weights
from .losses import itc_loss, itm_loss


@registry.register("model", "albef_toy")
class FusionEncoderModel(DualEncoderModel):
    """Contrastive towers with a fusion stack for fine-grained matching.

    The fusion blocks run text through cross-attention over image patch
    tokens; an ITM head on the fused summary token scores match vs mismatch.
    """

    arch = "albef_toy"
    supports_multimodal = True
    default_config_paths = {"base": "configs/models/albef_toy_base.yaml"}

    def __init__(self, *args, fusion_depth=2, itm_weight=1.0, **kwargs):
        super().__init__(*args, **kwargs)
        width = self.text_encoder.token_embed.embedding_dim
        n_heads = self.visual_encoder.blocks[0].attn.n_heads
        self.fusion_blocks = nn.ModuleList(
            CrossBlock(width, n_heads) for _ in range(fusion_depth)
        )
        self.fusion_norm = nn.LayerNorm(width)
        self.itm_head = nn.Linear(width, 2)
        self.fusion_blocks.apply(init_weights)
        self.fusion_norm.apply(init_weights)
        self.itm_head.apply(init_weights)
        self.itm_weight = itm_weight

    @classmethod
    def _config_kwargs(cls, cfg):
        kwargs = super()._config_kwargs(cfg)
        kwargs["fusion_depth"] = int(cfg.get("fusion_depth", 2))
        kwargs["itm_weight"] = float(cfg.get("itm_weight", 1.0))
        return kwargs

    def _fuse(self, image_tokens, texts):
        hidden, mask = self.encode_text(texts)
        x = hidden
        for block in self.fusion_blocks:
            x = block(x, kv=image_tokens, key_padding_mask=mask)
        return self.fusion_norm(x), mask

    def multimodal_embeds(self, images, texts):
        """(B, L, width) fused sequence; position 0 summarizes the pair."""
        fused, _ = self._fuse(self.encode_image(images), texts)
        return fused

    def itm_logits(self, images, texts, image_tokens=None):
        """(B, 2) logits; class 1 is "matched".  image_tokens, if given,
        skips re-encoding images (rerank loops reuse encodings)."""
        if image_tokens is None:
            image_tokens = self.encode_image(images)
        fused, _ = self._fuse(image_tokens, texts)
        return self.itm_head(fused[:, 0])

    def forward(self, samples):
        images, texts = samples["image"], samples["text_input"]
        image_proj, text_proj = self.forward_pairs(images, texts)
        loss_itc = itc_loss(image_proj, text_proj, self.temperature)
        loss_itm = itm_loss(self, images, texts)
        loss = loss_itc + self.itm_weight * loss_itm
        return {
            "loss": loss,
            "loss_itc": loss_itc.detach(),
            "loss_itm": loss_itm.detach(),
        }
