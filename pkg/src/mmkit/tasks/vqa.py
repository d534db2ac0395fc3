"""VQA: question+answer LM training and rank-based closed-set evaluation."""

import torch

from ..processors import TextProcessor
from ..registry import registry
from .base import BaseTask, EvalResult
from .metrics import vqa_accuracy

_normalizer = TextProcessor()


def _best_answer(answers):
    """Highest-weight annotator answer; ties keep annotation order."""
    best, best_weight = None, float("-inf")
    for entry in answers:
        weight = float(entry.get("weight", 1.0))
        if weight > best_weight:
            best, best_weight = entry["answer"], weight
    return best


@registry.register("task", "vqa")
class VqaTask(BaseTask):
    name = "vqa"

    def train_step(self, model, batch):
        self.check_batch(batch)
        texts = []
        for question, extras in zip(batch["text_input"], batch["extras"]):
            answer = _best_answer(extras["answers"])
            texts.append(f"{question} {_normalizer(answer)}")
        components = {"lm": model.lm_loss(batch["image"], texts)}
        out = {"loss": self.weighted_total(components)}
        out.update({f"loss_{name}": value.detach() for name, value in components.items()})
        return out

    def candidate_answers(self, split):
        """Sorted unique normalized answers over the split: the closed answer set."""
        seen = set()
        for i in range(len(split)):
            record = split.records[i]
            for entry in record.answers or ():
                seen.add(_normalizer(entry["answer"]))
        return sorted(seen)

    def evaluation(self, model, split):
        candidates = self.candidate_answers(split)
        acc_total = 0.0
        predictions = []
        for i in range(len(split)):
            sample = split.get_item(i)
            predicted, _ = model.rank_answers(sample.image, sample.text_input, candidates)
            annotations = [_normalizer(e["answer"]) for e in sample.extras["answers"]]
            acc_total += vqa_accuracy(predicted, annotations)
            predictions.append(
                {
                    "instance_id": sample.instance_id,
                    "question": sample.text_input,
                    "answer": predicted,
                }
            )
        metrics = {"accuracy": acc_total / len(split)}
        return EvalResult(
            metrics=metrics, agg_metrics=metrics["accuracy"], predictions=predictions
        )
