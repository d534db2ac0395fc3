"""Dataset layer: cards, records, generator determinism, cached downloads."""

import json

import pytest
import torch

from mmkit.data.builders import build_dataset, load_dataset
from mmkit.data.cards import AnnotationRecord, DatasetCard, parse_records
from mmkit.data.download import default_fetcher, download_and_cache
from mmkit.data.shapes import (
    COLORS,
    SHAPES,
    gen_shapes_dataset,
    gen_shapes_vqa,
    split_sizes,
)
from mmkit.data.splits import DatasetSplit, collate
from mmkit.errors import (
    AnnotationParseError,
    ChecksumMismatchError,
    FetchFailedError,
)
from mmkit.processors import ImageEvalProcessor, TextProcessor
from mmkit.utils import sha256_file

# --- cards and records ------------------------------------------------------

GOOD_SHA = "0" * 64


def test_card_rejects_duplicate_splits():
    with pytest.raises(ValueError):
        DatasetCard(
            name="d",
            splits=[
                {"name": "train", "url": "x", "sha256": GOOD_SHA},
                {"name": "train", "url": "y", "sha256": GOOD_SHA},
            ],
        )


def test_card_rejects_malformed_sha():
    with pytest.raises(ValueError):
        DatasetCard(name="d", splits=[{"name": "train", "url": "x", "sha256": "abc"}])
    with pytest.raises(ValueError):
        DatasetCard(name="d", splits=[{"name": "train", "url": "x", "sha256": "G" * 64}])


def test_card_split_lookup():
    card = DatasetCard(name="d", splits=[{"name": "val", "url": "x", "sha256": GOOD_SHA}])
    assert card.split("val").url == "x"
    with pytest.raises(KeyError):
        card.split("train")
    assert card.to_dict()["splits"][0]["name"] == "val"


def test_record_parses_minimal_caption():
    rec = AnnotationRecord.from_json({"image": "images/0.png", "caption": "a red circle"}, 3)
    assert rec.instance_id == "3"  # defaults to the line index
    assert rec.captions() == ["a red circle"]
    assert rec.extra == {}


def test_record_caption_list_and_extras():
    rec = AnnotationRecord.from_json(
        {"instance_id": "x1", "image": "i.png", "caption": ["a", "b"], "source": "synthetic"}, 0
    )
    assert rec.captions() == ["a", "b"]
    assert rec.extra == {"source": "synthetic"}
    assert AnnotationRecord.from_json({"image": "i.png", "label": 2}, 0).captions() == []


@pytest.mark.parametrize(
    "obj",
    [
        "not a dict",
        {"caption": "no image"},
        {"image": "", "caption": "empty image"},
        {"image": "i.png"},  # no caption/question/label
        {"image": "i.png", "question": "q", "answers": "yes"},
        {"image": "i.png", "question": "q", "answers": [{"weight": 1.0}]},
    ],
)
def test_record_rejects_malformed(obj):
    with pytest.raises(AnnotationParseError):
        AnnotationRecord.from_json(obj, 7)


def test_parse_records_reports_line_index():
    rows = [{"image": "a.png", "caption": "ok"}, {"image": ""}]
    with pytest.raises(AnnotationParseError) as exc:
        parse_records(rows)
    assert exc.value.index == 1
    assert "line 1" in str(exc.value)


# --- split sizing and generator ---------------------------------------------

@pytest.mark.parametrize("n, expected", [(64, (52, 6, 6)), (20, (16, 2, 2)), (4, (4, 0, 0)), (100, (80, 10, 10))])
def test_split_sizes_golden(n, expected):
    assert split_sizes(n) == expected


@pytest.mark.parametrize("n", range(4, 200, 4))
def test_split_sizes_partition(n):
    train, val, test = split_sizes(n)
    assert train + val + test == n
    assert val == test == n // 10
    assert train >= val


def test_generator_writes_verifiable_card(tmp_path):
    card = gen_shapes_dataset(16, 7, tmp_path / "corpus")
    assert card.name == "shapes_caption"
    assert [s.name for s in card.splits] == ["train", "val", "test"]
    assert [s.record_count for s in card.splits] == [14, 1, 1]
    for spec in card.splits:
        assert sha256_file(spec.url) == spec.sha256
    assert (tmp_path / "corpus" / "card.json").is_file()
    assert len(list((tmp_path / "corpus" / "images").glob("*.png"))) == 16


def test_generator_covers_all_shape_color_pairs(tmp_path):
    gen_shapes_dataset(16, 7, tmp_path / "c")
    captions = set()
    for split in ("train", "val", "test"):
        for row in map(json.loads, open(tmp_path / "c" / f"{split}.ann")):
            captions.add(row["caption"])
    assert captions == {f"a {color} {shape}" for shape in SHAPES for color in COLORS}


def test_generator_deterministic_in_n_and_seed(tmp_path):
    a = gen_shapes_dataset(20, 7, tmp_path / "a")
    b = gen_shapes_dataset(20, 7, tmp_path / "b")
    assert [s.sha256 for s in a.splits] == [s.sha256 for s in b.splits]
    # Same bytes on disk, not merely same annotations.
    for i in range(20):
        rel = f"images/{i:05d}.png"
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_generator_seed_changes_renders_not_captions(tmp_path):
    a = gen_shapes_dataset(20, 7, tmp_path / "a")
    c = gen_shapes_dataset(20, 8, tmp_path / "c")
    # Caption files do not depend on the geometry seed.
    assert [s.sha256 for s in a.splits] == [s.sha256 for s in c.splits]
    assert any(
        (tmp_path / "a" / f"images/{i:05d}.png").read_bytes()
        != (tmp_path / "c" / f"images/{i:05d}.png").read_bytes()
        for i in range(20)
    )


def test_generator_rejects_bad_n(tmp_path):
    for n in (0, 3, 18):
        with pytest.raises(ValueError):
            gen_shapes_dataset(n, 7, tmp_path / f"n{n}")


def test_vqa_generator_alternates_question_kinds(tmp_path):
    card = gen_shapes_vqa(8, 7, tmp_path / "vqa")
    rows = [json.loads(line) for line in open(tmp_path / "vqa" / "train.ann")]
    assert card.name == "shapes_vqa"
    for i, row in enumerate(rows):
        answer = row["answers"][0]["answer"]
        if i % 2 == 0:
            assert row["question"].startswith("what color")
            assert answer in COLORS
        else:
            assert row["question"] == "what shape is shown"
            assert answer in SHAPES


# --- splits and collation ---------------------------------------------------

def toy_split(tmp_path, task_shape="caption"):
    card = gen_shapes_dataset(8, 7, tmp_path / "src")
    rows = [json.loads(line) for line in open(card.split("train").url)]
    return DatasetSplit(
        parse_records(rows),
        vis_processor=ImageEvalProcessor(image_size=32),
        text_processor=TextProcessor(max_words=16),
        task_shape=task_shape,
        media_root=tmp_path / "src",
    )


def test_split_item_contract(tmp_path):
    split = toy_split(tmp_path)
    sample = split.get_item(0)
    assert sample.image.shape == (3, 32, 32)
    assert sample.text_input == "a red circle"
    assert sample.instance_id == "shapes-00000"
    assert sample.extras["references"] == ["a red circle"]
    with pytest.raises(IndexError):
        split.get_item(len(split))
    with pytest.raises(IndexError):
        split.get_item(-1)


def test_split_rejects_unknown_task_shape(tmp_path):
    with pytest.raises(ValueError):
        DatasetSplit([], None, None, "caption2", tmp_path)


def test_vqa_split_uses_question_text(tmp_path):
    card = gen_shapes_vqa(8, 7, tmp_path / "src")
    rows = [json.loads(line) for line in open(card.split("train").url)]
    split = DatasetSplit(
        parse_records(rows),
        vis_processor=ImageEvalProcessor(image_size=32),
        text_processor=TextProcessor(),
        task_shape="vqa",
        media_root=tmp_path / "src",
    )
    sample = split.get_item(0)
    assert sample.text_input.startswith("what color")
    assert sample.extras["answers"][0]["answer"] in COLORS


def test_collate_stacks_and_aligns(tmp_path):
    split = toy_split(tmp_path)
    batch = collate([split.get_item(i) for i in range(4)])
    assert batch["image"].shape == (4, 3, 32, 32)
    assert torch.equal(batch["image"][2], split.get_item(2).image)
    assert batch["text_input"] == [split.get_item(i).text_input for i in range(4)]
    assert len(batch["instance_id"]) == len(batch["extras"]) == 4


# --- download and cache -----------------------------------------------------

def serve_corpus(fixture_server, n=8):
    """Generate a corpus inside the fixture server docroot; return a card
    whose split URLs point at the server."""
    card = gen_shapes_dataset(n, 7, fixture_server.docroot)
    remote = []
    for spec in card.splits:
        remote.append(
            {
                "name": spec.name,
                "url": f"{fixture_server.base_url}/{spec.name}.ann",
                "sha256": spec.sha256,
                "record_count": spec.record_count,
            }
        )
    return DatasetCard(name="shapes_remote", splits=remote, media_root=str(fixture_server.docroot))


def test_download_fetches_then_reuses_cache(fixture_server, tmp_path):
    card = serve_corpus(fixture_server)
    cache = tmp_path / "cache"

    manifest = download_and_cache(card, cache)
    assert set(manifest) == {"train", "val", "test"}
    for name, path in manifest.items():
        assert path.is_file()
        assert sha256_file(path) == card.split(name).sha256
    assert fixture_server.total_hits == 3

    # Warm cache: checksums verify locally, so the second call fetches nothing.
    again = download_and_cache(card, cache)
    assert again == manifest
    assert fixture_server.total_hits == 3


def test_download_repairs_tampered_cache(fixture_server, tmp_path):
    card = serve_corpus(fixture_server)
    cache = tmp_path / "cache"
    manifest = download_and_cache(card, cache)
    hits_before = fixture_server.total_hits

    manifest["val"].write_text("tampered\n", encoding="utf-8")
    repaired = download_and_cache(card, cache)
    assert sha256_file(repaired["val"]) == card.split("val").sha256
    # Exactly one re-fetch: the tampered split only.
    assert fixture_server.total_hits == hits_before + 1


def test_download_mismatch_raises_after_retry(fixture_server, tmp_path):
    card = serve_corpus(fixture_server)
    bad = DatasetCard(
        name="shapes_remote",
        splits=[
            {
                "name": "train",
                "url": f"{fixture_server.base_url}/train.ann",
                "sha256": "f" * 64,  # never matches the served bytes
            }
        ],
    )
    with pytest.raises(ChecksumMismatchError) as exc:
        download_and_cache(bad, tmp_path / "cache")
    assert exc.value.split == "train"
    assert exc.value.expected == "f" * 64
    # One fetch plus one retry, then the error.
    assert fixture_server.hits.get("/train.ann") == 2
    assert not (tmp_path / "cache" / "shapes_remote" / "train.ann").exists()


def test_fetch_failure_surfaces_url(fixture_server, tmp_path):
    with pytest.raises(FetchFailedError) as exc:
        default_fetcher(f"{fixture_server.base_url}/absent.ann", tmp_path / "out")
    assert "absent.ann" in str(exc.value)
    with pytest.raises(FetchFailedError):
        default_fetcher(str(tmp_path / "missing-local-file"), tmp_path / "out")


def test_download_accepts_local_paths(tmp_path):
    card = gen_shapes_dataset(8, 7, tmp_path / "src")
    manifest = download_and_cache(card, tmp_path / "cache")
    assert manifest["train"].read_bytes() == (tmp_path / "src" / "train.ann").read_bytes()


# --- builders ---------------------------------------------------------------

def test_build_dataset_splits_and_processor_slots():
    splits = build_dataset(
        "shapes_caption",
        {
            "gen": {"n": 20, "seed": 7},
            "vis_processor": {
                "train": {"name": "image_train", "image_size": 64},
                "eval": {"name": "image_eval", "image_size": 64},
            },
        },
    )
    assert {name: len(split) for name, split in splits.items()} == {
        "train": 16, "val": 2, "test": 2,
    }
    assert splits["train"].vis_processor.train_augment is True
    assert splits["val"].vis_processor.train_augment is False
    assert splits["test"].vis_processor.train_augment is False
    sample = splits["val"].get_item(0)
    assert sample.image.shape == (3, 64, 64)
    assert sample.text_input.startswith("a ")


def test_build_dataset_generator_is_cached(cache_root):
    build_dataset("shapes_caption", {"gen": {"n": 8, "seed": 3}})
    src = cache_root / "_generated" / "shapes_caption-n8-seed3"
    marker = src / "card.json"
    stamp = marker.stat().st_mtime_ns
    build_dataset("shapes_caption", {"gen": {"n": 8, "seed": 3}})
    assert marker.stat().st_mtime_ns == stamp  # not regenerated


def test_load_dataset_uses_packaged_defaults():
    splits = load_dataset("shapes_caption")
    assert {name: len(split) for name, split in splits.items()} == {
        "train": 52, "val": 6, "test": 6,
    }
    assert splits["train"].task_shape == "caption"
    ids = [r.instance_id for r in splits["train"].records]
    assert len(set(ids)) == len(ids)


def test_load_dataset_vqa_defaults():
    splits = load_dataset("shapes_vqa")
    assert splits["train"].task_shape == "vqa"
    sample = splits["train"].get_item(1)
    assert sample.extras["answers"][0]["weight"] == 1.0
