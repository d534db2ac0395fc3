"""Single-sample inference primitives shared by the demo service and tasks."""

import torch
import torch.nn.functional as F

from ..errors import BadKError, DuplicateLabelsError, EmptyLabelsError
from ..processors import TextProcessor

_normalizer = TextProcessor()


def zero_shot_classify(model, image, labels, prompt=""):
    """Classify an image against free-text labels.

    Labels are normalized, prefixed with the prompt, embedded by the text
    tower, and scored by cosine similarity to the image projection with a
    softmax at the model temperature.  Returns (best_label, probabilities);
    ties keep the lower label index.
    """
    if not labels:
        raise EmptyLabelsError()
    processed = [_normalizer(label) for label in labels]
    duplicates = sorted({p for p in processed if processed.count(p) > 1})
    if duplicates:
        raise DuplicateLabelsError(duplicates)
    texts = [f"{prompt}{p}" for p in processed]
    if image.dim() == 3:
        image = image.unsqueeze(0)
    model.eval()
    with torch.no_grad():
        img_proj = model.image_features(image)[0]
        txt_proj = model.text_features(texts)
        logits = txt_proj @ img_proj / model.temperature
        probs = F.softmax(logits, dim=-1)
    best = int(torch.argmax(probs))
    return labels[best], probs


def multimodal_search(model, gallery_proj, query_text, k):
    """Top-k gallery rows by cosine similarity to the embedded query.

    Returns row indices best-first; ties broken by lower index.
    """
    n_gallery = gallery_proj.shape[0]
    if not 1 <= k <= n_gallery:
        raise BadKError(k, n_gallery)
    model.eval()
    with torch.no_grad():
        txt_proj = model.text_features([query_text])[0]
        scores = gallery_proj @ txt_proj
    order = sorted(range(n_gallery), key=lambda i: (-float(scores[i]), i))
    return order[:k], scores


def embed_gallery(model, images, batch_size=32):
    """Projected unit-norm embeddings (N, d) for a stack of images."""
    model.eval()
    chunks = []
    with torch.no_grad():
        for start in range(0, images.shape[0], batch_size):
            chunks.append(model.image_features(images[start : start + batch_size]))
    return torch.cat(chunks, dim=0)
