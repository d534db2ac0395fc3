"""Exact evaluation metrics: ranking recalls, sentence BLEU-4, VQA accuracy.

All tie-breaking is "lower index first" so every metric is deterministic.
"""

import math
from collections import Counter

import numpy as np

from ..errors import EmptyGroundTruthError

BLEU_MAX_ORDER = 4


def rankings_from_scores(scores):
    """Per-query gallery orderings, best first; ties broken by lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    n_gallery = scores.shape[1]
    orderings = []
    for row in scores:
        # lexsort uses the last key as primary: descending score, then index.
        orderings.append(np.lexsort((np.arange(n_gallery), -row)))
    return orderings


def recall_from_rankings(orderings, ground_truth, ks):
    """R@k over explicit orderings plus the 1-based median best rank."""
    best_ranks = []
    for q, order in enumerate(orderings):
        gt = set(ground_truth.get(q, ()))
        if not gt:
            raise EmptyGroundTruthError(q)
        position = {int(g): r for r, g in enumerate(order)}
        best_ranks.append(1 + min(position[g] for g in gt))
    best_ranks = np.asarray(best_ranks)
    result = {f"R@{k}": float(np.mean(best_ranks <= k)) for k in ks}
    result["median_rank"] = float(np.median(best_ranks))
    return result


def recall_at_k(scores, ground_truth, ks):
    """Ranking recalls for a (Nq, Ng) score matrix; higher score is better."""
    return recall_from_rankings(rankings_from_scores(scores), ground_truth, ks)


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu4(candidate, references):
    """Smoothed sentence BLEU with uniform 1..4-gram weights.

    candidate is a token list, references a list of token lists.  Orders with
    no candidate n-grams contribute precision 1; orders with zero matches get
    add-one smoothing ((m+1)/(c+1)).  An empty candidate scores 0.
    """
    if not candidate:
        return 0.0
    if not references or all(not r for r in references):
        return 0.0
    log_precisions = []
    for n in range(1, BLEU_MAX_ORDER + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            log_precisions.append(0.0)
            continue
        max_ref = Counter()
        for ref in references:
            for gram, count in _ngram_counts(ref, n).items():
                max_ref[gram] = max(max_ref[gram], count)
        matched = sum(min(count, max_ref[gram]) for gram, count in cand_counts.items())
        if matched == 0:
            log_precisions.append(math.log((matched + 1) / (total + 1)))
        else:
            log_precisions.append(math.log(matched / total))
    c = len(candidate)
    # closest reference length; ties prefer the shorter reference
    r = min((abs(len(ref) - c), len(ref)) for ref in references)[1]
    brevity = 1.0 if c >= r else math.exp(1 - r / c)
    return brevity * math.exp(sum(log_precisions) / BLEU_MAX_ORDER)


def vqa_accuracy(prediction, answers):
    """Per-question accuracy: min(matches/3, 1) given >= 3 annotator answers,
    otherwise exact match.  Inputs are already-normalized strings."""
    matches = sum(1 for a in answers if a == prediction)
    if len(answers) >= 3:
        return min(matches / 3.0, 1.0)
    return 1.0 if matches else 0.0
