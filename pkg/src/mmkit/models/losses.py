"""Training objectives: contrastive alignment, match discrimination, captioning."""

import torch
import torch.nn.functional as F

from ..errors import DegenerateBatchError


def itc_loss(image_proj, text_proj, temperature):
    """Bidirectional InfoNCE over in-batch pairs.

    Both inputs are (B, D) unit-normalized projections; pair i is the only
    positive for row/column i.  temperature may be a tensor so the gradient
    reaches a learnable scale.
    """
    n = image_proj.shape[0]
    if n < 2:
        raise DegenerateBatchError(n)
    tau = float(temperature.detach() if torch.is_tensor(temperature) else temperature)
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    sim = image_proj @ text_proj.t() / temperature
    targets = torch.arange(n, device=sim.device)
    return 0.5 * (F.cross_entropy(sim, targets) + F.cross_entropy(sim.t(), targets))


def itm_loss(model, images, texts):
    """Binary image-text matching loss with shifted in-batch negatives.

    Negatives pair image i with text (i+1) mod B, so every image sees one
    matched and one mismatched caption.  Class 1 means matched.
    """
    n = len(texts)
    if n < 2:
        raise DegenerateBatchError(n)
    neg_texts = list(texts[1:]) + [texts[0]]
    logits_pos = model.itm_logits(images, list(texts))
    logits_neg = model.itm_logits(images, neg_texts)
    logits = torch.cat([logits_pos, logits_neg], dim=0)
    labels = torch.cat(
        [
            torch.ones(n, dtype=torch.long, device=logits.device),
            torch.zeros(n, dtype=torch.long, device=logits.device),
        ]
    )
    return F.cross_entropy(logits, labels)
