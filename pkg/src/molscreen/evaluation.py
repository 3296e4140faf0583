"""Screening evaluation: pooled and per-target ROC AUC reports.

AUC is the Mann-Whitney statistic with midrank tie handling,

    (sum of positive ranks - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg),

which equals pairwise counting with ties credited 0.5. Reports carry the
pooled AUC over all pairs, one AUC per target, their mean with population
standard deviation, and how many targets clear each AUC threshold. Targets
whose evaluation pairs are single-class are listed as skipped rather than
silently dropped into the mean.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels
from .io import PairSample, ScreeningDataset
from .predictor import GraphCache, ModelParams, predict_many
from .validation import check_binary_labels

DEFAULT_THRESHOLDS = (0.7, 0.8, 0.9)

REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "total_auc",
        "mean_auc",
        "std_auc",
        "threshold_counts",
        "per_target",
        "skipped_targets",
        "n_targets",
    ],
    "properties": {
        "total_auc": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "mean_auc": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "std_auc": {"type": "number", "minimum": 0.0},
        "n_targets": {"type": "integer", "minimum": 0},
        "threshold_counts": {
            "type": "object",
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
        "per_target": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["auc", "n_pos", "n_neg"],
                "properties": {
                    "auc": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                    "n_pos": {"type": "integer", "minimum": 1},
                    "n_neg": {"type": "integer", "minimum": 1},
                },
            },
        },
        "skipped_targets": {"type": "array", "items": {"type": "string"}},
    },
}


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ordered = values[order]
    n = len(values)
    starts = np.flatnonzero(np.r_[True, ordered[1:] != ordered[:-1], True])
    ranks_sorted = np.empty(n, dtype=np.float64)
    for s, e in zip(starts[:-1], starts[1:]):
        ranks_sorted[s:e] = 0.5 * (s + 1 + e)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = ranks_sorted
    return ranks


def auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties 0.5)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores shape {scores.shape} != labels shape {labels.shape}")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(
            f"need both classes, got {n_pos} positives / {n_neg} negatives"
        )
    ranks = _midranks(scores)
    positive_rank_sum = float(ranks[labels == 1].sum())
    return (positive_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class TargetResult:
    auc: float
    n_pos: int
    n_neg: int


@dataclass
class EvalReport:
    """Screening report: pooled AUC, per-target AUCs, and threshold counts."""

    total_auc: float
    per_target: dict[str, TargetResult]
    mean_auc: float
    std_auc: float
    threshold_counts: dict[float, int]
    skipped_targets: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "total_auc": self.total_auc,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "n_targets": len(self.per_target),
            "threshold_counts": {
                f"{alpha:g}": count for alpha, count in self.threshold_counts.items()
            },
            "per_target": {
                target: {"auc": r.auc, "n_pos": r.n_pos, "n_neg": r.n_neg}
                for target, r in self.per_target.items()
            },
            "skipped_targets": list(self.skipped_targets),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_table(self) -> str:
        """Summary row plus a per-target breakdown, formatted for humans."""
        alphas = sorted(self.threshold_counts)
        header = ["Total AUC", "Mean AUC (± std.)"] + [f"AUC ≥ {a:g}" for a in alphas]
        row = [
            f"{self.total_auc:.3f}",
            f"{self.mean_auc:.3f} ± {self.std_auc:.3f}",
        ] + [str(self.threshold_counts[a]) for a in alphas]
        widths = [max(len(h), len(v)) for h, v in zip(header, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)),
            "  ".join(v.ljust(w) for v, w in zip(row, widths)),
            "",
            f"targets evaluated: {len(self.per_target)}"
            + (f", skipped (single-class): {', '.join(self.skipped_targets)}"
               if self.skipped_targets else ""),
        ]
        for target in sorted(self.per_target):
            r = self.per_target[target]
            lines.append(f"  {target}: auc={r.auc:.4f} (pos={r.n_pos}, neg={r.n_neg})")
        return "\n".join(lines) + "\n"


def evaluate_scores(
    scores,
    labels,
    targets,
    thresholds=DEFAULT_THRESHOLDS,
    strict: bool = False,
) -> EvalReport:
    """Build a report from already-computed pair scores grouped by target id."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = check_binary_labels(labels)
    targets = list(targets)
    if not (len(scores) == len(labels) == len(targets)):
        raise ValueError("scores, labels, and targets must have equal lengths")
    if len(scores) == 0:
        raise DegenerateLabels("no evaluation pairs")

    per_target: dict[str, TargetResult] = {}
    skipped: list[str] = []
    order: list[str] = []
    for t in targets:
        if t not in order:
            order.append(t)
    for target in order:
        mask = np.array([t == target for t in targets])
        n_pos = int(labels[mask].sum())
        n_neg = int(mask.sum()) - n_pos
        if n_pos == 0 or n_neg == 0:
            if strict:
                raise DegenerateLabels(
                    f"target {target!r} has {n_pos} positives / {n_neg} negatives",
                    target_id=target,
                )
            skipped.append(target)
            continue
        per_target[target] = TargetResult(
            auc=auc(scores[mask], labels[mask]), n_pos=n_pos, n_neg=n_neg
        )

    if not per_target:
        raise DegenerateLabels("every target is single-class; nothing to evaluate")
    values = np.array([r.auc for r in per_target.values()])
    counts = {alpha: int(np.sum(values >= alpha)) for alpha in thresholds}
    return EvalReport(
        total_auc=auc(scores, labels),
        per_target=per_target,
        mean_auc=float(values.mean()),
        std_auc=float(values.std()),
        threshold_counts=counts,
        skipped_targets=skipped,
    )


def evaluate(
    model: ModelParams,
    dataset: ScreeningDataset,
    pairs: list[PairSample] | None = None,
    thresholds=DEFAULT_THRESHOLDS,
    strict: bool = False,
    threads: int = 1,
    cache: GraphCache | None = None,
) -> EvalReport:
    """Score labeled pairs with the model and report AUCs grouped by pocket.

    Targets are scored independently (optionally fanned out over worker
    threads; results are collected in target order, so they do not depend
    on the thread count).
    """
    if pairs is None:
        pairs = dataset.eval_pairs
    if not pairs:
        raise DegenerateLabels("dataset has no evaluation pairs")
    cache = cache or GraphCache()

    by_target: dict[str, list[PairSample]] = {}
    for sample in pairs:
        by_target.setdefault(sample.pocket_id, []).append(sample)

    def score_group(samples: list[PairSample]) -> np.ndarray:
        return predict_many(dataset.pair_graphs(samples), model, cache)

    groups = list(by_target.values())
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scored = list(pool.map(score_group, groups))
    else:
        scored = [score_group(g) for g in groups]

    scores = np.concatenate(scored)
    flat = [s for g in groups for s in g]
    labels = [s.label for s in flat]
    target_ids = [s.pocket_id for s in flat]
    return evaluate_scores(scores, labels, target_ids, thresholds, strict)
