"""Shared fixtures: isolated cache root, trained toy models, fixture HTTP server.

The two training fixtures are session-scoped because they dominate suite
runtime (~1.5 min combined); every test that needs a converged model reuses
them.
"""

import http.server
import json
import os
import threading
import time
from pathlib import Path
from types import SimpleNamespace

import pytest
import torch

@pytest.fixture(scope="session", autouse=True)
def cache_root(tmp_path_factory):
    """Isolate every test from the user-level cache directory."""
    root = tmp_path_factory.mktemp("mmkit-cache")
    os.environ["MMKIT_CACHE_ROOT"] = str(root)
    yield root


@pytest.fixture(scope="session")
def shapes_splits(cache_root):
    """The 64-pair retrieval corpus with its run-config processors."""
    from mmkit.config import build_run_config
    from mmkit.data.builders import build_dataset
    from mmkit.utils import library_root

    cfg = build_run_config(library_root() / "configs/runs/retrieval_shapes.yaml")
    return build_dataset("shapes_caption", cfg)


@pytest.fixture(scope="session")
def retrieval_run(cache_root, tmp_path_factory):
    """Full AC-2 training run through the real runner pipeline."""
    from mmkit.config import build_run_config
    from mmkit.data.builders import build_dataset
    from mmkit.models import build_model_from_run_config
    from mmkit.runners import setup_runner
    from mmkit.tasks import setup_task
    from mmkit.utils import library_root, set_seed

    out = tmp_path_factory.mktemp("retrieval-run")
    cfg = build_run_config(
        library_root() / "configs/runs/retrieval_shapes.yaml",
        [f"run.output_dir={out}"],
    )
    started = time.time()
    set_seed(cfg.run["seed"])
    splits = build_dataset("shapes_caption", cfg)
    model = build_model_from_run_config(cfg)
    task = setup_task(cfg)
    runner = setup_runner(cfg, task, model, splits)
    result = runner.train()
    elapsed = time.time() - started
    records = [json.loads(line) for line in open(out / "log.txt")]
    return SimpleNamespace(
        cfg=cfg,
        splits=splits,
        out_dir=Path(out),
        model=model,  # holds the best-val weights after train()
        task=task,
        result=result,
        log_records=records,
        elapsed=elapsed,
    )


@pytest.fixture(scope="session")
def caption_run(cache_root, tmp_path_factory):
    """Full AC-3 training run; exposes both best-val and final-iterate models."""
    from mmkit.config import build_run_config
    from mmkit.data.builders import build_dataset
    from mmkit.models import build_model_from_run_config
    from mmkit.models.checkpoint import load_checkpoint, load_weights
    from mmkit.runners import setup_runner
    from mmkit.tasks import setup_task
    from mmkit.utils import library_root, set_seed

    out = tmp_path_factory.mktemp("caption-run")
    cfg = build_run_config(
        library_root() / "configs/runs/caption_shapes.yaml",
        [f"run.output_dir={out}"],
    )
    started = time.time()
    set_seed(cfg.run["seed"])
    splits = build_dataset("shapes_caption", cfg)
    model = build_model_from_run_config(cfg)
    task = setup_task(cfg)
    runner = setup_runner(cfg, task, model, splits)
    result = runner.train()
    elapsed = time.time() - started
    latest = build_model_from_run_config(cfg)
    load_weights(latest, load_checkpoint(out / "checkpoint_latest.pt"))
    latest.eval()
    return SimpleNamespace(
        cfg=cfg,
        splits=splits,
        out_dir=Path(out),
        model=model,
        model_latest=latest,
        task=task,
        result=result,
        elapsed=elapsed,
    )


class FixtureServer:
    """Local HTTP file server with a per-path GET counter (download tests)."""

    def __init__(self, docroot):
        self.docroot = Path(docroot)
        self.hits = {}
        server = self

        class Handler(http.server.SimpleHTTPRequestHandler):
            def __init__(self, *args, **kwargs):
                super().__init__(*args, directory=str(server.docroot), **kwargs)

            def log_message(self, *args):
                pass

            def do_GET(self):
                server.hits[self.path] = server.hits.get(self.path, 0) + 1
                super().do_GET()

        self._httpd = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self):
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    @property
    def total_hits(self):
        return sum(self.hits.values())

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def fixture_server(tmp_path):
    docroot = tmp_path / "docroot"
    docroot.mkdir()
    server = FixtureServer(docroot)
    yield server
    server.stop()


@pytest.fixture(scope="session")
def service_client(cache_root, retrieval_run, caption_run):
    """TestClient over an app whose state embeds the trained models."""
    from fastapi.testclient import TestClient

    from mmkit.data.builders import load_dataset
    from mmkit.registry import registry
    from mmkit.service import GalleryIndex, ServiceState, create_app
    from mmkit.tasks.inference import embed_gallery

    split = retrieval_run.splits["train"]
    images = torch.stack([split.get_item(i).image for i in range(len(split))])
    proj = embed_gallery(retrieval_run.model, images)
    gallery = GalleryIndex(
        gallery_id="shapes_caption:train",
        ids=[record.instance_id for record in split.records],
        proj=proj,
        thumbnails=[f"/media/shapes_caption/{r.image}" for r in split.records],
    )
    eval_proc = registry.lookup("processor", "image_eval").from_config({"image_size": 64})
    state = ServiceState(
        models={"retrieval": retrieval_run.model, "caption": caption_run.model_latest},
        processors={"retrieval": eval_proc, "caption": eval_proc},
        galleries={gallery.gallery_id: gallery},
        datasets={
            "shapes_caption": retrieval_run.splits,
            "shapes_vqa": load_dataset("shapes_vqa"),
        },
    )
    app = create_app(state=state)
    with TestClient(app, raise_server_exceptions=False) as client:
        yield client
