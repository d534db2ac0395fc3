"""Image-text retrieval: contrastive training and bidirectional recall evaluation."""

import torch

from ..errors import ShapeError
from ..models.losses import itc_loss, itm_loss
from ..registry import registry
from .base import BaseTask, EvalResult
from .metrics import rankings_from_scores, recall_from_rankings


@registry.register("task", "retrieval")
class RetrievalTask(BaseTask):
    name = "retrieval"
    ks = (1, 5, 10)

    def train_step(self, model, batch):
        self.check_batch(batch)
        images, texts = batch["image"], list(batch["text_input"])
        image_proj, text_proj = model.forward_pairs(images, texts)
        components = {"itc": itc_loss(image_proj, text_proj, model.temperature)}
        if hasattr(model, "itm_logits"):
            components["itm"] = itm_loss(model, images, texts)
        out = {"loss": self.weighted_total(components)}
        out.update({f"loss_{name}": value.detach() for name, value in components.items()})
        return out

    def _gather(self, model, split):
        samples = [split.get_item(i) for i in range(len(split))]
        images = torch.stack([s.image for s in samples])
        texts = [s.text_input for s in samples]
        model.eval()
        with torch.no_grad():
            image_proj = model.image_features(images)
            text_proj = model.text_features(texts)
        return samples, images, texts, image_proj, text_proj

    def _rerank(self, orderings, itm_scores_fn, n_gallery):
        """Stable rerank of each query's top-k candidates by ITM match score.

        Stability means equal ITM scores preserve the contrastive order, so a
        constant itm_head is a no-op.
        """
        depth = min(self.options.get("k_test", 8), n_gallery)
        reranked = []
        for q, order in enumerate(orderings):
            top = [int(g) for g in order[:depth]]
            scores = itm_scores_fn(q, top)
            resorted = sorted(range(len(top)), key=lambda i: (-float(scores[i]), i))
            reranked.append([top[i] for i in resorted] + [int(g) for g in order[depth:]])
        return reranked

    def evaluation(self, model, split, image_proj=None, text_proj=None):
        samples, images, texts, computed_img, computed_txt = self._gather(model, split)
        image_proj = computed_img if image_proj is None else image_proj
        text_proj = computed_txt if text_proj is None else text_proj
        n = len(samples)
        if image_proj.shape[0] != n or text_proj.shape[0] != n:
            raise ShapeError(
                f"projection rows ({image_proj.shape[0]}, {text_proj.shape[0]}) "
                f"do not match {n} annotation records"
            )
        sims = (image_proj @ text_proj.t()).numpy()

        # Ground truth by caption equality: an image matches every position
        # holding an identical caption, so duplicates are never false negatives.
        gt = {
            i: {j for j, other in enumerate(texts) if other == texts[i]} for i in range(n)
        }
        i2t = rankings_from_scores(sims)
        t2i = rankings_from_scores(sims.T)

        if hasattr(model, "itm_logits"):
            with torch.no_grad():
                image_tokens = model.encode_image(images)

                def score_texts(q, candidates):
                    kv = image_tokens[q : q + 1].expand(len(candidates), -1, -1)
                    logits = model.itm_logits(None, [texts[c] for c in candidates], kv)
                    return logits[:, 1]

                def score_images(q, candidates):
                    logits = model.itm_logits(
                        None, [texts[q]] * len(candidates), image_tokens[candidates]
                    )
                    return logits[:, 1]

                i2t = self._rerank(i2t, score_texts, n)
                t2i = self._rerank(t2i, score_images, n)

        ks = [k for k in self.ks if k <= n] or [1]
        forward = recall_from_rankings(i2t, gt, ks)
        backward = recall_from_rankings(t2i, gt, ks)
        metrics = {f"img2txt_{key}": value for key, value in forward.items()}
        metrics.update({f"txt2img_{key}": value for key, value in backward.items()})
        agg = 0.5 * (forward["R@1"] + backward["R@1"])
        predictions = [
            {
                "instance_id": samples[i].instance_id,
                "top_text": texts[int(i2t[i][0])],
                "top_text_index": int(i2t[i][0]),
            }
            for i in range(n)
        ]
        return EvalResult(metrics=metrics, agg_metrics=agg, predictions=predictions)
