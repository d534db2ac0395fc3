"""Shared transformer building blocks for the toy encoders and decoder.

Attention is written out explicitly (scores, masking, softmax) rather than
via fused kernels so that the probability-simplex invariant is directly
inspectable in tests.
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

INIT_STD = 0.02
MASK_VALUE = float("-inf")


def init_weights(module):
    """Truncated-normal(0.02) weights, zero biases, identity layer norms."""
    if isinstance(module, (nn.Linear, nn.Embedding, nn.Conv2d)):
        nn.init.trunc_normal_(module.weight, std=INIT_STD)
        if getattr(module, "bias", None) is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.LayerNorm):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)


class MultiHeadAttention(nn.Module):
    """Multi-head attention over queries x_q and keys/values x_kv.

    key_padding_mask is True on valid key positions.  causal=True adds a
    lower-triangular mask and requires square (Lq == Lk) attention.
    """

    def __init__(self, dim, n_heads):
        super().__init__()
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} not divisible by n_heads {n_heads}")
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def attention_weights(self, x_q, x_kv, key_padding_mask=None, causal=False):
        """Post-softmax weights (B, heads, Lq, Lk); each row sums to one."""
        bsz, len_q, _ = x_q.shape
        len_k = x_kv.shape[1]
        q = self.q_proj(x_q).view(bsz, len_q, self.n_heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(x_kv).view(bsz, len_k, self.n_heads, self.head_dim).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if key_padding_mask is not None:
            scores = scores.masked_fill(~key_padding_mask[:, None, None, :], MASK_VALUE)
        if causal:
            future = torch.triu(
                torch.ones(len_q, len_k, dtype=torch.bool, device=x_q.device), diagonal=1
            )
            scores = scores.masked_fill(future, MASK_VALUE)
        return F.softmax(scores, dim=-1)

    def forward(self, x_q, x_kv=None, key_padding_mask=None, causal=False):
        if x_kv is None:
            x_kv = x_q
        bsz, len_q, dim = x_q.shape
        weights = self.attention_weights(x_q, x_kv, key_padding_mask, causal)
        v = self.v_proj(x_kv).view(bsz, x_kv.shape[1], self.n_heads, self.head_dim)
        out = weights @ v.transpose(1, 2)
        out = out.transpose(1, 2).reshape(bsz, len_q, dim)
        return self.out_proj(out)


class MLP(nn.Module):
    def __init__(self, dim, hidden_mult=4):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden_mult * dim)
        self.fc2 = nn.Linear(hidden_mult * dim, dim)

    def forward(self, x):
        return self.fc2(F.gelu(self.fc1(x)))


class EncoderBlock(nn.Module):
    """Pre-norm self-attention block."""

    def __init__(self, dim, n_heads):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, n_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = MLP(dim)

    def forward(self, x, key_padding_mask=None):
        x = x + self.attn(self.norm1(x), key_padding_mask=key_padding_mask)
        x = x + self.mlp(self.norm2(x))
        return x


class CrossBlock(nn.Module):
    """Pre-norm block with self-attention plus optional cross-attention.

    When kv is None the cross-attention sub-layer is skipped entirely, so
    the same block serves both unimodal and fused passes.
    """

    def __init__(self, dim, n_heads):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.self_attn = MultiHeadAttention(dim, n_heads)
        self.norm_cross = nn.LayerNorm(dim)
        self.cross_attn = MultiHeadAttention(dim, n_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = MLP(dim)

    def forward(self, x, kv=None, key_padding_mask=None, causal=False):
        x = x + self.self_attn(self.norm1(x), key_padding_mask=key_padding_mask, causal=causal)
        if kv is not None:
            x = x + self.cross_attn(self.norm_cross(x), x_kv=kv)
        x = x + self.mlp(self.norm2(x))
        return x


class ImageEncoder(nn.Module):
    """Patch-embedding ViT: conv patchify, prepend CLS, add positions, encode."""

    def __init__(self, image_size, patch_size, width, depth, n_heads):
        super().__init__()
        if image_size % patch_size != 0:
            raise ValueError(f"image_size {image_size} not divisible by patch_size {patch_size}")
        self.n_patches = (image_size // patch_size) ** 2
        self.patch_embed = nn.Conv2d(3, width, kernel_size=patch_size, stride=patch_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, width))
        self.pos_embed = nn.Parameter(torch.zeros(1, 1 + self.n_patches, width))
        self.blocks = nn.ModuleList(EncoderBlock(width, n_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(width)
        self.apply(init_weights)
        nn.init.trunc_normal_(self.cls_token, std=INIT_STD)
        nn.init.trunc_normal_(self.pos_embed, std=INIT_STD)

    def forward(self, images):
        """(B, 3, S, S) float -> (B, 1 + n_patches, width); index 0 is CLS."""
        x = self.patch_embed(images).flatten(2).transpose(1, 2)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat([cls, x], dim=1) + self.pos_embed
        for block in self.blocks:
            x = block(x)
        return self.norm(x)


class TextEncoder(nn.Module):
    """Bidirectional token encoder; position 0 (the BOS slot) is the summary token."""

    def __init__(self, vocab_size, max_len, width, depth, n_heads):
        super().__init__()
        self.token_embed = nn.Embedding(vocab_size, width)
        self.pos_embed = nn.Parameter(torch.zeros(1, max_len, width))
        self.blocks = nn.ModuleList(EncoderBlock(width, n_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(width)
        self.apply(init_weights)
        nn.init.trunc_normal_(self.pos_embed, std=INIT_STD)

    def forward(self, ids, mask):
        """ids (B, L) long, mask (B, L) bool -> (B, L, width)."""
        x = self.token_embed(ids) + self.pos_embed[:, : ids.shape[1]]
        for block in self.blocks:
            x = block(x, key_padding_mask=mask)
        return self.norm(x)
