from mmkit.data.cards import AnnotationRecord, DatasetCard, SplitSpec, parse_records
from mmkit.data.download import default_fetcher, download_and_cache, sync_media
from mmkit.data.shapes import gen_shapes_dataset, gen_shapes_vqa
from mmkit.data.splits import DatasetSplit, Sample, collate
from mmkit.data.builders import (
    DatasetBuilder,
    build_dataset,
    load_dataset,
)

__all__ = [
    "AnnotationRecord",
    "DatasetCard",
    "SplitSpec",
    "parse_records",
    "default_fetcher",
    "download_and_cache",
    "sync_media",
    "gen_shapes_dataset",
    "gen_shapes_vqa",
    "DatasetSplit",
    "Sample",
    "collate",
    "DatasetBuilder",
    "build_dataset",
    "load_dataset",
]
