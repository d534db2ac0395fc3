"""Synthetic desk-scale image-text corpus: colored shapes on white.

Every image is a 64x64 render of one shape in one color, captioned
"a <color> <shape>".  Generation is fully deterministic in (n, seed):
the same call writes byte-identical annotations and images, so cards can
carry precomputed checksums.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from mmkit.data.cards import DatasetCard, SplitSpec
from mmkit.utils import sha256_file, write_jsonl

IMAGE_SIZE = 64
SHAPES = ("circle", "square", "triangle", "cross")
COLORS = ("red", "green", "blue", "yellow")
COLOR_RGB = {
    "red": (220, 40, 40),
    "green": (40, 170, 60),
    "blue": (50, 90, 220),
    "yellow": (235, 200, 40),
}


def render_shape(shape, color, cx, cy, r):
    """Draw one shape; returns an RGB PIL image."""
    img = Image.new("RGB", (IMAGE_SIZE, IMAGE_SIZE), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    rgb = COLOR_RGB[color]
    if shape == "circle":
        draw.ellipse((cx - r, cy - r, cx + r, cy + r), fill=rgb)
    elif shape == "square":
        draw.rectangle((cx - r, cy - r, cx + r, cy + r), fill=rgb)
    elif shape == "triangle":
        draw.polygon([(cx, cy - r), (cx - r, cy + r), (cx + r, cy + r)], fill=rgb)
    elif shape == "cross":
        arm = max(2, int(round(r * 0.35)))
        draw.rectangle((cx - arm, cy - r, cx + arm, cy + r), fill=rgb)
        draw.rectangle((cx - r, cy - arm, cx + r, cy + arm), fill=rgb)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return img


def split_sizes(n):
    """80/10/10 by index with floor; the remainder goes to train."""
    n_val = n // 10
    n_test = n // 10
    return n - n_val - n_test, n_val, n_test


def _assignment(i):
    # Latin-square enumeration: every run of 16 consecutive indices covers
    # all (shape, color) combinations, and neighbors differ in both factors.
    return SHAPES[i % 4], COLORS[(i + i // 4) % 4]


def _generate(n, seed, out_dir, record_fn):
    if n < 4 or n % 4 != 0:
        raise ValueError(f"n must be >= 4 and divisible by 4, got {n}")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        shape, color = _assignment(i)
        cx = 32 + int(rng.integers(-2, 3))
        cy = 32 + int(rng.integers(-2, 3))
        r = int(rng.integers(21, 27))
        rel = f"images/{i:05d}.png"
        render_shape(shape, color, cx, cy, r).save(out_dir / rel)
        records.append(record_fn(i, shape, color, rel))

    n_train, n_val, n_test = split_sizes(n)
    bounds = {
        "train": records[:n_train],
        "val": records[n_train : n_train + n_val],
        "test": records[n_train + n_val :],
    }
    specs = []
    for split, rows in bounds.items():
        path = out_dir / f"{split}.ann"
        write_jsonl(path, rows)
        specs.append(
            SplitSpec(name=split, url=str(path), sha256=sha256_file(path), record_count=len(rows))
        )
    return specs


def _write_card(card, out_dir):
    with open(Path(out_dir) / "card.json", "w", encoding="utf-8") as f:
        json.dump(card.to_dict(), f, indent=2, sort_keys=True)
    return card


def gen_shapes_dataset(n, seed, out_dir) -> DatasetCard:
    """Captioned corpus: caption = "a <color> <shape>"."""

    def record(i, shape, color, rel):
        return {"instance_id": f"shapes-{i:05d}", "image": rel, "caption": f"a {color} {shape}"}

    specs = _generate(n, seed, out_dir, record)
    card = DatasetCard(
        name="shapes_caption",
        splits=specs,
        media_root=str(out_dir),
        description=f"synthetic shapes corpus, n={n}, seed={seed}",
    )
    return _write_card(card, out_dir)


def gen_shapes_vqa(n, seed, out_dir) -> DatasetCard:
    """Question/answer corpus over the same renders.

    Even indices ask for the color, odd indices for the shape.
    """

    def record(i, shape, color, rel):
        if i % 2 == 0:
            question, answer = f"what color is the {shape}", color
        else:
            question, answer = "what shape is shown", shape
        return {
            "instance_id": f"shapes-vqa-{i:05d}",
            "image": rel,
            "question": question,
            "answers": [{"answer": answer, "weight": 1.0}],
        }

    specs = _generate(n, seed, out_dir, record)
    card = DatasetCard(
        name="shapes_vqa",
        splits=specs,
        media_root=str(out_dir),
        description=f"synthetic shapes VQA corpus, n={n}, seed={seed}",
    )
    return _write_card(card, out_dir)
