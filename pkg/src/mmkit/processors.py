"""Image and text preprocessing.

Image processors turn an HxWx3 uint8 pixel grid into a normalized float
tensor of shape 3xSxS.  Eval mode is fully deterministic (resize shorter
side, center crop); train mode applies a seeded random resized crop plus
horizontal flip.  Text processors clean and truncate raw strings.

Resize semantics: bilinear interpolation with align-corners=false, i.e.
output pixel centers are mapped into the input grid at
``(i + 0.5) * scale - 0.5``.  Golden value: a 2x2 image resized to 1x1
yields the mean of the four input pixels.
"""

import math

import numpy as np
import torch
import torch.nn.functional as F

from mmkit.errors import BadChannelCountError
from mmkit.registry import registry

DEFAULT_MEAN = (0.5, 0.5, 0.5)
DEFAULT_STD = (0.5, 0.5, 0.5)
PUNCTUATION = ".,!?;:\"'"


def _to_float_chw(raw):
    """Accept HxWx3 uint8 (numpy or PIL image) and return a float32 CxHxW tensor in [0,1]."""
    arr = np.asarray(raw)
    if arr.ndim != 3 or arr.shape[2] != 3:
        got = arr.shape[2] if arr.ndim == 3 else arr.ndim
        raise BadChannelCountError(got)
    tensor = torch.from_numpy(arr.astype(np.float32)) / 255.0
    return tensor.permute(2, 0, 1)


def _resize(img, height, width):
    # img: (C,H,W) float. align_corners=False matches the documented semantics.
    return F.interpolate(
        img.unsqueeze(0), size=(height, width), mode="bilinear", align_corners=False
    ).squeeze(0)


def _center_crop(img, size):
    _, h, w = img.shape
    top = (h - size) // 2
    left = (w - size) // 2
    return img[:, top : top + size, left : left + size]


class ImageProcessor:
    """Shared pipeline; `train_augment` selects the stochastic branch."""

    def __init__(self, image_size=224, mean=DEFAULT_MEAN, std=DEFAULT_STD,
                 train_augment=False, min_scale=0.5, max_scale=1.0, flip_prob=0.5):
        if image_size <= 0:
            raise ValueError(f"image_size must be positive, got {image_size}")
        if any(s <= 0 for s in std):
            raise ValueError(f"std components must be positive, got {std}")
        self.image_size = int(image_size)
        self.mean = torch.tensor(mean, dtype=torch.float32).view(3, 1, 1)
        self.std = torch.tensor(std, dtype=torch.float32).view(3, 1, 1)
        self.train_augment = bool(train_augment)
        self.min_scale = float(min_scale)
        self.max_scale = float(max_scale)
        self.flip_prob = float(flip_prob)

    @classmethod
    def from_config(cls, cfg=None):
        cfg = cfg or {}
        return cls(
            image_size=cfg.get("image_size", 224),
            mean=cfg.get("mean", DEFAULT_MEAN),
            std=cfg.get("std", DEFAULT_STD),
            train_augment=cfg.get("train_augment", cls is ImageTrainProcessor),
            min_scale=cfg.get("min_scale", 0.5),
            max_scale=cfg.get("max_scale", 1.0),
        )

    def __call__(self, raw, rng=None):
        img = _to_float_chw(raw)
        size = self.image_size
        if self.train_augment:
            rng = rng if rng is not None else np.random.default_rng()
            img = self._random_resized_crop(img, rng)
            if rng.random() < self.flip_prob:
                img = torch.flip(img, dims=[2])
        else:
            _, h, w = img.shape
            scale = size / min(h, w)
            img = _resize(img, max(size, round(h * scale)), max(size, round(w * scale)))
            img = _center_crop(img, size)
        return (img - self.mean) / self.std

    def _random_resized_crop(self, img, rng):
        _, h, w = img.shape
        area = h * w
        for _ in range(10):
            target_area = area * rng.uniform(self.min_scale, self.max_scale)
            aspect = math.exp(rng.uniform(math.log(3 / 4), math.log(4 / 3)))
            cw = int(round(math.sqrt(target_area * aspect)))
            ch = int(round(math.sqrt(target_area / aspect)))
            if 0 < cw <= w and 0 < ch <= h:
                top = int(rng.integers(0, h - ch + 1))
                left = int(rng.integers(0, w - cw + 1))
                crop = img[:, top : top + ch, left : left + cw]
                return _resize(crop, self.image_size, self.image_size)
        # Fallback: central square.
        side = min(h, w)
        crop = _center_crop(img, side)
        return _resize(crop, self.image_size, self.image_size)


@registry.register("processor", "image_eval")
class ImageEvalProcessor(ImageProcessor):
    pass


@registry.register("processor", "image_train")
class ImageTrainProcessor(ImageProcessor):
    def __init__(self, **kwargs):
        kwargs.setdefault("train_augment", True)
        super().__init__(**kwargs)


@registry.register("processor", "text_base")
class TextProcessor:
    """Cleans text: lowercase, strip punctuation, collapse whitespace,
    truncate to `max_words` words, prepend `prompt` (in that order)."""

    def __init__(self, lowercase=True, strip_punct=True, max_words=30, prompt=""):
        if max_words < 1:
            raise ValueError(f"max_words must be >= 1, got {max_words}")
        self.lowercase = bool(lowercase)
        self.strip_punct = bool(strip_punct)
        self.max_words = int(max_words)
        self.prompt = prompt

    @classmethod
    def from_config(cls, cfg=None):
        cfg = cfg or {}
        return cls(
            lowercase=cfg.get("lowercase", True),
            strip_punct=cfg.get("strip_punct", True),
            max_words=cfg.get("max_words", 30),
            prompt=cfg.get("prompt", ""),
        )

    def __call__(self, raw: str) -> str:
        text = raw
        if self.lowercase:
            text = text.lower()
        if self.strip_punct:
            text = text.translate(str.maketrans("", "", PUNCTUATION))
        words = text.split()[: self.max_words]
        return self.prompt + " ".join(words)


def build_processor(name, cfg=None):
    """Construct a registered processor from a config mapping."""
    ctor = registry.lookup("processor", name)
    return ctor.from_config(dict(cfg) if cfg else {})


def build_processor_pair(section, default_name, is_eval=False):
    """Build {train, eval} processors from a config section with those keys.

    With `is_eval`, the train slot is replaced by the eval processor so no
    stochastic transform can leak into evaluation pipelines.
    """
    section = section or {}

    def _one(key):
        sub = dict(section.get(key) or {})
        name = sub.pop("name", default_name)
        return build_processor(name, sub)

    eval_proc = _one("eval")
    train_proc = eval_proc if is_eval else _one("train")
    return {"train": train_proc, "eval": eval_proc}
