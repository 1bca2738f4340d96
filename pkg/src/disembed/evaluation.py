"""Evaluation tasks: training-time ratio, multi-label R@K, tag AUC, triplet
prediction, and the per-variant report record."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigurationError
from .labelspace import LabelSpace

log = logging.getLogger(__name__)

_NORM_EPS = 1e-12


def _normalize_rows(E: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(E, axis=1, keepdims=True)
    return E / np.maximum(norms, _NORM_EPS)


def recall_at_k(query_labels, retrieved_label_sets) -> float:
    """Fraction of a query's labels covered by the union of the retrieved
    items' label sets.  Labels are multi-hot vectors; K is the number of
    retrieved sets."""
    q = np.asarray(query_labels) > 0
    if q.sum() == 0:
        raise ValueError("query must have at least one label")
    covered = np.zeros_like(q)
    for r in retrieved_label_sets:
        covered |= np.asarray(r) > 0
    return float((q & covered).sum() / q.sum())


def retrieval_recall(embeddings, labels, ks) -> dict[int, float]:
    """Mean multi-label R@K over all queries with at least one label.

    Candidates are all other items, ranked by descending cosine similarity
    with ties broken by ascending item index.  Zero-label queries are
    excluded from the average (logged).
    """
    E = _normalize_rows(np.asarray(embeddings, dtype=np.float64))
    L = np.asarray(labels) > 0
    n = len(E)
    sims = E @ E.T
    np.fill_diagonal(sims, -np.inf)
    order = np.argsort(-sims, axis=1, kind="stable")
    valid = L.sum(axis=1) > 0
    if (~valid).any():
        log.info("excluding %d zero-label queries from R@K", int((~valid).sum()))
    out = {}
    for k in ks:
        covered = L[order[:, :k]].any(axis=1)
        per_query = (L & covered).sum(axis=1) / np.maximum(L.sum(axis=1), 1)
        out[int(k)] = float(per_query[valid].mean())
    return out


def build_prototypes(embeddings, labels) -> np.ndarray:
    """Per-tag mean of embeddings over positive samples; zero for empty tags."""
    E = np.asarray(embeddings, dtype=np.float64)
    L = np.asarray(labels) > 0
    T = L.shape[1]
    protos = np.zeros((T, E.shape[1]))
    counts = L.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if len(empty):
        log.info("%d tag(s) without positives get zero prototypes", len(empty))
    for t in range(T):
        if counts[t]:
            protos[t] = E[L[:, t]].mean(axis=0)
    return protos


def auc_rank(pos_scores, neg_scores) -> float:
    """Exact ROC AUC of one tag via the rank statistic; ties credited 0.5."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("need at least one positive and one negative")
    ranks = rankdata(np.concatenate([pos, neg]))
    n_pos, n_neg = len(pos), len(neg)
    return float(
        (ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
    )


def auc_tags(score_matrix, label_matrix) -> float:
    """Macro-averaged per-tag ROC AUC; tags without both classes are skipped."""
    S = np.asarray(score_matrix, dtype=np.float64)
    L = np.asarray(label_matrix) > 0
    aucs = []
    skipped = 0
    for t in range(L.shape[1]):
        pos = S[L[:, t], t]
        neg = S[~L[:, t], t]
        if len(pos) == 0 or len(neg) == 0:
            skipped += 1
            continue
        aucs.append(auc_rank(pos, neg))
    if skipped:
        log.info("auc_tags skipped %d single-class tag(s)", skipped)
    if not aucs:
        raise ValueError("no evaluable tag has both positives and negatives")
    return float(np.mean(aucs))


def triplet_accuracy(
    embeddings,
    triplets,
    mode: str = "full",
    space: LabelSpace | None = None,
    disentangled: bool = False,
) -> float:
    """Fraction of triplets with cos(anchor, positive) > cos(anchor, negative).

    ``embeddings`` are pre-normalization full-space embeddings, one row per
    dataset item; triplets index into them.  mode="sub" restricts each triplet
    to its notion's mask coordinates and requires a disentangled model.
    Ties count as incorrect.
    """
    if mode not in ("full", "sub"):
        raise ValueError(f"unknown space mode: {mode!r}")
    if mode == "sub":
        if not disentangled:
            raise ConfigurationError(
                "sub-space triplet accuracy requires a disentangled model"
            )
        if space is None:
            raise ConfigurationError("sub mode needs the label space for masks")
    E = np.asarray(embeddings, dtype=np.float64)
    triplets = list(triplets)
    if not triplets:
        raise ValueError("no triplets to evaluate")
    correct = 0
    for t in triplets:
        ea, ep, en = E[t.anchor], E[t.positive], E[t.negative]
        if mode == "sub":
            if t.notion is None:
                raise ConfigurationError("track triplets carry no notion")
            sl = space.block_slice(t.notion)
            ea, ep, en = ea[sl], ep[sl], en[sl]
        na = max(np.linalg.norm(ea), _NORM_EPS)
        cp = np.dot(ea, ep) / (na * max(np.linalg.norm(ep), _NORM_EPS))
        cn = np.dot(ea, en) / (na * max(np.linalg.norm(en), _NORM_EPS))
        if cp > cn:
            correct += 1
    return correct / len(triplets)


def training_time_ratio(timings: dict) -> dict:
    """Each variant's training time divided by the fastest; minimum is 1.00."""
    if not timings:
        raise ValueError("empty timing map")
    if any(v <= 0 for v in timings.values()):
        raise ValueError("timings must be positive")
    fastest = min(timings.values())
    return {k: v / fastest for k, v in timings.items()}


@dataclass
class EvalReport:
    """Per-variant results for the four evaluation tasks.

    Wall-clock derived values (wall_seconds, training_time_ratio) live in
    dedicated fields so determinism checks can exclude them.
    """

    variant: dict
    recall_at: dict = field(default_factory=dict)
    auc: float | None = None
    triplet_accuracy: dict = field(default_factory=dict)  # (space, notion) -> value
    training_time_ratio: float | None = None
    wall_seconds: float | None = None
    epochs: int | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "variant": dict(self.variant),
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
            "auc": self.auc,
            "triplet_accuracy": {
                f"{sp}/{notion}": v
                for (sp, notion), v in self.triplet_accuracy.items()
            },
            "epochs": self.epochs,
            "error": self.error,
            "timing": {
                "wall_seconds": self.wall_seconds,
                "training_time_ratio": self.training_time_ratio,
            },
        }


def strip_timing(report_dict: dict) -> dict:
    """Remove wall-clock derived fields for bit-exact determinism checks."""
    import copy

    d = copy.deepcopy(report_dict)

    def scrub(node):
        if isinstance(node, dict):
            node.pop("timing", None)
            for v in node.values():
                scrub(v)
        elif isinstance(node, list):
            for v in node:
                scrub(v)

    scrub(d)
    return d
