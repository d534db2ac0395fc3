"""Checksum-verified annotation download with an idempotent local cache.

Cache layout: ``<cache_root>/<dataset>/<split>.ann`` (annotations) and
``<cache_root>/<dataset>/images/...`` (media).  Files are written to a
temp name and renamed into place, so concurrent callers converge and a
crash never leaves a half-written cache entry.
"""

import os
import shutil
import tempfile
import urllib.request
from pathlib import Path

from mmkit.errors import ChecksumMismatchError, FetchFailedError
from mmkit.utils import sha256_file


def default_fetcher(url, dest):
    """Copy `url` (http(s) URL or local path) to `dest`."""
    if url.startswith(("http://", "https://")):
        try:
            with urllib.request.urlopen(url) as resp, open(dest, "wb") as out:
                shutil.copyfileobj(resp, out)
        except Exception as exc:
            raise FetchFailedError(url, exc) from exc
    else:
        src = Path(url)
        if not src.is_file():
            raise FetchFailedError(url, FileNotFoundError(url))
        shutil.copyfile(src, dest)


def _fetch_verified(spec, target, fetcher):
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".part")
    os.close(fd)
    try:
        fetcher(spec.url, tmp)
        actual = sha256_file(tmp)
        if actual != spec.sha256:
            return actual
        os.replace(tmp, target)
        return None
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def download_and_cache(card, cache_root, fetcher=None) -> dict:
    """Ensure every split of `card` is cached and verified; return split -> path.

    Cached files whose checksum already matches are not fetched again.  A
    stale or tampered cache entry triggers one re-fetch; if the fetched
    content still mismatches, ChecksumMismatchError is raised.
    """
    fetcher = fetcher or default_fetcher
    dataset_dir = Path(cache_root) / card.name
    dataset_dir.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for spec in card.splits:
        target = dataset_dir / f"{spec.name}.ann"
        if target.is_file() and sha256_file(target) == spec.sha256:
            manifest[spec.name] = target
            continue
        actual = _fetch_verified(spec, target, fetcher)
        if actual is not None:
            actual = _fetch_verified(spec, target, fetcher)
            if actual is not None:
                raise ChecksumMismatchError(spec.name, spec.sha256, actual)
        manifest[spec.name] = target
    return manifest


def sync_media(src_root, cache_root, dataset_name) -> Path:
    """Mirror a local media tree into the cache layout; returns the dataset dir.

    Only copies files that are missing at the destination.
    """
    src_root = Path(src_root)
    dest = Path(cache_root) / dataset_name / "images"
    src_images = src_root / "images"
    if src_images.is_dir():
        dest.mkdir(parents=True, exist_ok=True)
        for path in sorted(src_images.rglob("*")):
            if path.is_file():
                rel = path.relative_to(src_images)
                out = dest / rel
                if not out.exists():
                    out.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(path, out)
    return Path(cache_root) / dataset_name
