"""Split containers and samples.

A DatasetSplit is an indexable collection of annotation records bound to
a visual and a text processor.  Eval-mode access is deterministic; train
augmentation randomness comes only from the RNG the caller passes to
get_item, so loaders can derive per-(epoch, index) streams for exact
resume.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

TASK_SHAPES = ("caption", "retrieval", "vqa", "classification")


@dataclass
class Sample:
    image: object  # float tensor (3,S,S) or None
    text_input: str
    instance_id: str
    extras: dict = field(default_factory=dict)


class DatasetSplit:
    def __init__(self, records, vis_processor, text_processor, task_shape,
                 media_root, dataset_name="", split_name=""):
        if task_shape not in TASK_SHAPES:
            raise ValueError(f"unknown task shape {task_shape!r}")
        self.records = list(records)
        self.vis_processor = vis_processor
        self.text_processor = text_processor
        self.task_shape = task_shape
        self.media_root = Path(media_root)
        self.dataset_name = dataset_name
        self.split_name = split_name

    def __len__(self):
        return len(self.records)

    def load_image(self, index):
        record = self.records[index]
        path = self.media_root / record.image
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))

    def raw_text(self, index) -> str:
        record = self.records[index]
        if self.task_shape == "vqa":
            return record.question or ""
        caps = record.captions()
        return caps[0] if caps else ""

    def processed_text(self, index) -> str:
        return self.text_processor(self.raw_text(index))

    def get_item(self, index, rng=None) -> Sample:
        if not 0 <= index < len(self.records):
            raise IndexError(f"index {index} out of range for split of {len(self.records)}")
        record = self.records[index]
        image = self.vis_processor(self.load_image(index), rng=rng)
        extras = {}
        if record.answers is not None:
            extras["answers"] = record.answers
        if record.label is not None:
            extras["label"] = record.label
        if self.task_shape in ("caption", "retrieval") and record.caption is not None:
            extras["references"] = record.captions()
        return Sample(
            image=image,
            text_input=self.processed_text(index),
            instance_id=record.instance_id,
            extras=extras,
        )

    def __getitem__(self, index):
        return self.get_item(index)


def collate(samples) -> dict:
    """Stack images, keep texts/ids/extras as aligned lists."""
    batch = {
        "image": torch.stack([s.image for s in samples]) if samples[0].image is not None else None,
        "text_input": [s.text_input for s in samples],
        "instance_id": [s.instance_id for s in samples],
        "extras": [s.extras for s in samples],
    }
    return batch
