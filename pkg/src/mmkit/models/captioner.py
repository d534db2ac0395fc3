"""Caption model: image encoder plus a causal text decoder with cross-attention."""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import EmptyAnswerListError, EmptyCaptionError
from ..registry import registry
from .layers import INIT_STD, CrossBlock, ImageEncoder, init_weights
from .tokenizer import BOS_ID, EOS_ID, PAD_ID, WordTokenizer


@registry.register("model", "blip_caption_toy")
class CaptionModel(nn.Module):
    """Autoregressive captioner trained with teacher-forced language modeling.

    The decoder doubles as a text encoder (cross-attention skipped) and as a
    multimodal encoder (cross-attention over image tokens), so the model also
    supports feature extraction and answer ranking.
    """

    arch = "blip_caption_toy"
    supports_multimodal = True
    default_config_paths = {"base": "configs/models/blip_caption_toy_base.yaml"}

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
    ):
        super().__init__()
        self.tokenizer = WordTokenizer(vocab)
        self.embed_dim = embed_dim
        self.max_txt_len = max_txt_len
        self.model_type = "base"
        self.visual_encoder = ImageEncoder(image_size, patch_size, width, depth, n_heads)
        self.token_embed = nn.Embedding(self.tokenizer.vocab_size, width)
        self.pos_embed = nn.Parameter(torch.zeros(1, max_txt_len, width))
        self.blocks = nn.ModuleList(CrossBlock(width, n_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(width)
        self.lm_head = nn.Linear(width, self.tokenizer.vocab_size)
        self.image_proj = nn.Linear(width, embed_dim)
        self.text_proj = nn.Linear(width, embed_dim)
        for mod in (self.token_embed, self.norm, self.lm_head, self.image_proj, self.text_proj):
            mod.apply(init_weights)
        self.blocks.apply(init_weights)
        nn.init.trunc_normal_(self.pos_embed, std=INIT_STD)

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
        )

    @classmethod
    def from_config(cls, cfg):
        return cls(**cls._config_kwargs(cfg))

    def encode_image(self, images):
        return self.visual_encoder(images)

    def _device(self):
        return next(self.parameters()).device

    def decode_hidden(self, ids, mask, image_tokens=None):
        """Causal decoder states (B, L, width); cross-attention only if image_tokens given."""
        x = self.token_embed(ids) + self.pos_embed[:, : ids.shape[1]]
        for block in self.blocks:
            x = block(x, kv=image_tokens, key_padding_mask=mask, causal=True)
        return self.norm(x)

    def logits(self, ids, mask, image_tokens=None):
        return self.lm_head(self.decode_hidden(ids, mask, image_tokens))

    def encode_text(self, texts):
        ids, mask = self.tokenizer.encode_batch(texts, self.max_txt_len)
        device = self._device()
        ids, mask = ids.to(device), mask.to(device)
        return self.decode_hidden(ids, mask), mask

    def multimodal_embeds(self, images, texts):
        ids, mask = self.tokenizer.encode_batch(texts, self.max_txt_len)
        device = self._device()
        return self.decode_hidden(ids.to(device), mask.to(device), self.encode_image(images))

    def image_features_from_tokens(self, tokens):
        return F.normalize(self.image_proj(tokens[:, 0]), dim=-1)

    def text_features_from_hidden(self, hidden):
        # Causal attention: the last real position has seen the full text, but
        # the summary convention across models is position 0, which here only
        # sees BOS.  Mean-pool instead so the summary reflects the whole text.
        return F.normalize(self.text_proj(hidden.mean(dim=1)), dim=-1)

    def lm_loss(self, images, captions):
        """Teacher-forced next-token cross-entropy, averaged over real tokens."""
        for cap in captions:
            if not cap.split():
                raise EmptyCaptionError()
        ids, mask = self.tokenizer.encode_batch(captions, self.max_txt_len)
        device = self._device()
        ids, mask = ids.to(device), mask.to(device)
        logits = self.logits(ids, mask, self.encode_image(images))
        targets = ids[:, 1:]
        logits = logits[:, :-1]
        keep = targets != PAD_ID
        return F.cross_entropy(logits[keep], targets[keep])

    def forward(self, samples):
        loss = self.lm_loss(samples["image"], samples["text_input"])
        return {"loss": loss, "loss_lm": loss.detach()}

    _BANNED_CONTINUATIONS = (PAD_ID, BOS_ID)

    def _step_logprobs(self, seqs, image_tokens):
        """Next-token log-probs (n, V) for a list of prefix id lists."""
        device = self._device()
        ids = torch.tensor(seqs, dtype=torch.long, device=device)
        mask = torch.ones_like(ids, dtype=torch.bool)
        kv = image_tokens.expand(ids.shape[0], -1, -1)
        logits = self.logits(ids, mask, kv)[:, -1]
        logits[:, list(self._BANNED_CONTINUATIONS)] = float("-inf")
        return F.log_softmax(logits, dim=-1)

    def _beam_search(self, image_tokens, max_len, num_beams):
        # beams: (cumulative logprob, ids, finished); ties broken by insertion
        # order so decoding is fully deterministic.
        beams = [(0.0, [BOS_ID], False)]
        for _ in range(max_len - 1):
            if all(done for _, _, done in beams):
                break
            active = [(i, b) for i, b in enumerate(beams) if not b[2]]
            logprobs = self._step_logprobs([b[1] for _, b in active], image_tokens)
            candidates = [b for b in beams if b[2]]
            for (_, (score, ids, _)), row in zip(active, logprobs):
                top = torch.topk(row, min(num_beams, row.shape[0]))
                for logp, tok in zip(top.values.tolist(), top.indices.tolist()):
                    candidates.append((score + logp, ids + [tok], tok == EOS_ID))
            indexed = list(enumerate(candidates))
            indexed.sort(key=lambda pair: (-pair[1][0], pair[0]))
            beams = [b for _, b in indexed[:num_beams]]
        finished = [b for b in beams if b[2]] or beams
        best = max(enumerate(finished), key=lambda pair: (pair[1][0], -pair[0]))[1]
        return best[1]

    @torch.no_grad()
    def generate(self, images, num_beams=3, max_len=None):
        """Decode one caption per image.  num_beams=1 is greedy decoding."""
        if num_beams < 1:
            raise ValueError(f"num_beams must be >= 1, got {num_beams}")
        max_len = self.max_txt_len if max_len is None else min(max_len, self.max_txt_len)
        self.eval()
        image_tokens = self.encode_image(images)
        captions = []
        for i in range(images.shape[0]):
            ids = self._beam_search(image_tokens[i : i + 1], max_len, num_beams)
            captions.append(self.tokenizer.decode(ids))
        return captions

    @torch.no_grad()
    def rank_answers(self, image, question, answers):
        """Score candidate answers by decoder log-likelihood given the question.

        Returns (best_answer, scores); scores[i] is the summed log-prob of
        answer i's tokens (and EOS) after the question prefix.  Ties keep the
        earliest candidate.
        """
        if not answers:
            raise EmptyAnswerListError()
        self.eval()
        image_tokens = self.encode_image(_single_batch(image))
        prefix = [BOS_ID] + self.tokenizer.word_ids(question)
        prefix = prefix[: self.max_txt_len - 2]
        scores = []
        for answer in answers:
            seq = prefix + self.tokenizer.word_ids(answer) + [EOS_ID]
            seq = seq[: self.max_txt_len]
            device = self._device()
            ids = torch.tensor([seq], dtype=torch.long, device=device)
            mask = torch.ones_like(ids, dtype=torch.bool)
            logprobs = F.log_softmax(self.logits(ids, mask, image_tokens), dim=-1)
            total = 0.0
            for t in range(len(prefix) - 1, len(seq) - 1):
                total += float(logprobs[0, t, seq[t + 1]])
            scores.append(total)
        best = 0
        for i, s in enumerate(scores):
            if s > scores[best]:
                best = i
        return answers[best], scores


def _single_batch(image):
    if image.dim() == 3:
        return image.unsqueeze(0)
    return image
