"""Dataset cards and annotation records.

A card describes where a dataset's annotation files live (URL or local
path), their sha256 checksums, and where media files are rooted.
Annotation files are UTF-8 JSON lines, one record per line, with the
fields of AnnotationRecord.
"""

import re
from dataclasses import dataclass, field, asdict

from mmkit.errors import AnnotationParseError

_SHA256_RE = re.compile(r"^[0-9a-f]{64}$")


@dataclass
class SplitSpec:
    name: str
    url: str  # http(s) URL or local filesystem path
    sha256: str
    record_count: int = 0


@dataclass
class DatasetCard:
    name: str
    splits: list
    media_root: str = ""
    description: str = ""

    def __post_init__(self):
        self.splits = [s if isinstance(s, SplitSpec) else SplitSpec(**s) for s in self.splits]
        names = [s.name for s in self.splits]
        if len(names) != len(set(names)):
            raise ValueError(f"duplicate split names in card {self.name!r}: {names}")
        for s in self.splits:
            if not _SHA256_RE.match(s.sha256):
                raise ValueError(
                    f"card {self.name!r} split {s.name!r}: sha256 must be 64 lowercase hex chars"
                )

    def split(self, name) -> SplitSpec:
        for s in self.splits:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self):
        return asdict(self)


@dataclass
class AnnotationRecord:
    instance_id: str
    image: str
    caption: object = None  # str or list of str
    question: str = None
    answers: list = None  # list of {"answer": str, "weight": float}
    label: object = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj, index):
        if not isinstance(obj, dict):
            raise AnnotationParseError(index, "record is not an object")
        image = obj.get("image")
        if not image or not isinstance(image, str):
            raise AnnotationParseError(index, "missing or empty 'image' path")
        caption = obj.get("caption")
        question = obj.get("question")
        label = obj.get("label")
        if caption is None and question is None and label is None:
            raise AnnotationParseError(
                index, "record needs at least one of caption/question/label"
            )
        answers = obj.get("answers")
        if answers is not None:
            if not isinstance(answers, list) or not all(
                isinstance(a, dict) and "answer" in a for a in answers
            ):
                raise AnnotationParseError(index, "'answers' must be a list of {answer, weight}")
        known = {"instance_id", "image", "caption", "question", "answers", "label"}
        extra = {k: v for k, v in obj.items() if k not in known}
        return cls(
            instance_id=str(obj.get("instance_id", index)),
            image=image,
            caption=caption,
            question=question,
            answers=answers,
            label=label,
            extra=extra,
        )

    def captions(self):
        """All reference captions as a list (may be empty)."""
        if self.caption is None:
            return []
        if isinstance(self.caption, list):
            return list(self.caption)
        return [self.caption]


def parse_records(rows):
    """Parse a list of decoded JSONL objects, validating each record."""
    return [AnnotationRecord.from_json(obj, i) for i, obj in enumerate(rows)]
