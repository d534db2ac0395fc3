"""Captioning: teacher-forced LM training and BLEU/exact-match evaluation."""

import torch

from ..registry import registry
from .base import BaseTask, EvalResult
from .metrics import sentence_bleu4


@registry.register("task", "captioning")
class CaptioningTask(BaseTask):
    name = "captioning"

    def train_step(self, model, batch):
        self.check_batch(batch)
        components = {"lm": model.lm_loss(batch["image"], list(batch["text_input"]))}
        out = {"loss": self.weighted_total(components)}
        out.update({f"loss_{name}": value.detach() for name, value in components.items()})
        return out

    def evaluation(self, model, split):
        samples = [split.get_item(i) for i in range(len(split))]
        images = torch.stack([s.image for s in samples])
        captions = model.generate(
            images,
            num_beams=self.options.get("num_beams", 3),
            max_len=self.options.get("max_len", 12),
        )
        bleu_total, exact_total = 0.0, 0
        predictions = []
        for sample, caption in zip(samples, captions):
            raw_refs = sample.extras.get("references") or [sample.text_input]
            refs = [split.text_processor(r) for r in raw_refs]
            bleu_total += sentence_bleu4(caption.split(), [r.split() for r in refs])
            exact_total += int(any(caption == r for r in refs))
            predictions.append({"instance_id": sample.instance_id, "caption": caption})
        n = len(samples)
        metrics = {"bleu4": bleu_total / n, "exact_match": exact_total / n}
        return EvalResult(metrics=metrics, agg_metrics=metrics["bleu4"], predictions=predictions)
