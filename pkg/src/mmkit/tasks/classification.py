"""Zero-shot classification over a split's label set."""

from ..models.losses import itc_loss
from ..registry import registry
from .base import BaseTask, EvalResult
from .inference import zero_shot_classify


@registry.register("task", "classification")
class ClassificationTask(BaseTask):
    name = "classification"

    def train_step(self, model, batch):
        # Labels are text, so training is plain contrastive alignment.
        self.check_batch(batch)
        image_proj, text_proj = model.forward_pairs(batch["image"], list(batch["text_input"]))
        components = {"itc": itc_loss(image_proj, text_proj, model.temperature)}
        out = {"loss": self.weighted_total(components)}
        out.update({f"loss_{name}": value.detach() for name, value in components.items()})
        return out

    def _ground_truth(self, sample):
        label = sample.extras.get("label")
        return label if label is not None else sample.text_input

    def evaluation(self, model, split):
        samples = [split.get_item(i) for i in range(len(split))]
        labels = sorted({self._ground_truth(s) for s in samples})
        prompt = self.options.get("prompt", "")
        correct = 0
        predictions = []
        for sample in samples:
            predicted, _ = zero_shot_classify(model, sample.image, labels, prompt)
            correct += int(predicted == self._ground_truth(sample))
            predictions.append({"instance_id": sample.instance_id, "label": predicted})
        metrics = {"accuracy": correct / len(samples)}
        return EvalResult(
            metrics=metrics, agg_metrics=metrics["accuracy"], predictions=predictions
        )
