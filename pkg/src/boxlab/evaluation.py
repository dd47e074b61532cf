"""COCO-style detection metrics: greedy matching, interpolated AP, mAP/AR/F1.

The evaluation pipeline is pure per (class, IoU threshold) pair:

1. slice detections and ground truths by class;
2. per image, visit detections in descending score order (ties broken by
   input index), cap at ``max_detections_per_image``, and greedily match each
   one to the unmatched ground truth with the highest IoU >= threshold;
3. rank all of a class's detections globally by score and build the
   cumulative precision/recall curve;
4. AP is the mean of interpolated precision (max precision at recall >= r)
   at ``recall_samples`` evenly spaced recall points in [0, 1].

Aggregation takes unweighted class means: mAP over per-class APs, average
recall over (class, threshold) maximum achieved recalls, and F1 as the
harmonic mean of the two. A detection whose class never appears in the
ground truth is a false positive for its own class; such ground-truth-free
classes carry AP 0 and are skipped from aggregation unless
``EvalConfig.include_gt_free_classes`` is set.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import EmptyEvaluationError, InvalidBoxError, ValidationError
from .geometry import Box, area, iou

__all__ = [
    "DEFAULT_IOU_THRESHOLDS",
    "Detection",
    "GroundTruthAnnotation",
    "EvalConfig",
    "PerClassResult",
    "EvalReport",
    "match_detections",
    "average_precision",
    "max_achieved_recall",
    "evaluate",
    "aggregate",
    "f1",
]

# 0.50 to 0.95 in 0.05 increments; built from integer hundredths so each
# threshold is the exact float literal (0.6, not 0.6000000000000001).
DEFAULT_IOU_THRESHOLDS: tuple[float, ...] = tuple(i / 100 for i in range(50, 100, 5))


@dataclass(frozen=True)
class Detection:
    """One predicted box with class label and confidence."""

    image_id: Hashable
    class_id: Hashable
    box: Box
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruthAnnotation:
    """One labeled box; must have positive area."""

    image_id: Hashable
    class_id: Hashable
    box: Box

    def __post_init__(self) -> None:
        if area(self.box) <= 0.0:
            raise InvalidBoxError(
                f"ground-truth box must have positive area, got {self.box.as_tuple()}"
            )


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    max_detections_per_image: int = 100
    recall_samples: int = 101
    include_gt_free_classes: bool = False

    def __post_init__(self) -> None:
        ts = self.iou_thresholds
        if not ts or any(not 0.0 < t < 1.0 for t in ts) or any(
            b <= a for a, b in zip(ts, ts[1:])
        ):
            raise ValidationError(
                f"iou_thresholds must be strictly increasing within (0, 1), got {ts}"
            )
        if self.max_detections_per_image <= 0:
            raise ValidationError("max_detections_per_image must be positive")
        if self.recall_samples < 2:
            raise ValidationError("recall_samples must be at least 2")


@dataclass(frozen=True)
class PerClassResult:
    """AP and best recall per IoU threshold for one class."""

    class_id: Hashable
    ap_per_threshold: tuple[float, ...]
    recall_per_threshold: tuple[float, ...]
    ap_all: float
    ap_50: float
    num_ground_truths: int


@dataclass(frozen=True)
class EvalReport:
    """Per-class results plus the class-mean aggregates."""

    per_class: dict[Hashable, PerClassResult]
    map_all: float
    map_50: float
    average_recall: float
    f1: float


def f1(precision_like: float, recall_like: float) -> float:
    """Harmonic mean ``2pr/(p+r)``; defined as 0 when both inputs are 0."""
    if precision_like == 0.0 and recall_like == 0.0:
        return 0.0
    return 2.0 * precision_like * recall_like / (precision_like + recall_like)


def match_detections(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthAnnotation],
    t: float,
) -> tuple[list[bool], list[bool]]:
    """Greedy TP/FP matching for one (class, image) slice.

    Detections are visited in descending score order (ties broken by lower
    input index). A detection is a true positive iff some still-unmatched
    ground truth has IoU >= ``t``; among those the highest IoU wins (equal
    IoUs go to the lower ground-truth index), and each ground truth matches
    at most once.

    Returns:
        (tp flags aligned to the detection input order,
         matched flags aligned to the ground-truth input order).
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    tp_flags = [False] * len(dets)
    matched = [False] * len(gts)
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if matched[j]:
                continue
            overlap = iou(dets[i].box, gt.box)
            if overlap >= t and overlap > best_iou:
                best_j = j
                best_iou = overlap
        if best_j >= 0:
            tp_flags[i] = True
            matched[best_j] = True
    return tp_flags, matched


def _ranked_tp_flags(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthAnnotation],
    t: float,
    cfg: EvalConfig,
) -> list[bool]:
    """TP flags for one class across all images, in global score-rank order.

    Applies the per-image detection cap before matching; capped-out
    detections are dropped from the ranking entirely.
    """
    by_image: dict[Hashable, list[int]] = defaultdict(list)
    for i, det in enumerate(dets):
        by_image[det.image_id].append(i)
    gts_by_image: dict[Hashable, list[GroundTruthAnnotation]] = defaultdict(list)
    for gt in gts:
        gts_by_image[gt.image_id].append(gt)

    ranked: list[tuple[float, int, bool]] = []
    for image_id, indices in by_image.items():
        indices.sort(key=lambda i: (-dets[i].score, i))
        indices = indices[: cfg.max_detections_per_image]
        image_dets = [dets[i] for i in indices]
        tp_flags, _ = match_detections(image_dets, gts_by_image.get(image_id, []), t)
        for i, flag in zip(indices, tp_flags):
            ranked.append((-dets[i].score, i, flag))
    ranked.sort()
    return [flag for _, _, flag in ranked]


def _pr_curve(flags: Sequence[bool], n_gt: int) -> tuple[list[float], list[float]]:
    precisions: list[float] = []
    recalls: list[float] = []
    tp = 0
    for k, flag in enumerate(flags, start=1):
        tp += int(flag)
        precisions.append(tp / k)
        recalls.append(tp / n_gt)
    return precisions, recalls


def average_precision(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthAnnotation],
    t: float,
    cfg: EvalConfig = EvalConfig(),
) -> float:
    """Interpolated AP for one class across all images at one IoU threshold.

    Returns 0.0 when the class has no ground truths (whether it is skipped
    from aggregation in that case is the aggregator's policy decision).
    """
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0
    flags = _ranked_tp_flags(dets, gts, t, cfg)
    if not flags:
        return 0.0
    precisions, recalls = _pr_curve(flags, n_gt)

    # Interpolated precision: max precision over ranks with recall >= r.
    max_prec_from = precisions.copy()
    for k in range(len(max_prec_from) - 2, -1, -1):
        max_prec_from[k] = max(max_prec_from[k], max_prec_from[k + 1])

    total = 0.0
    denom = cfg.recall_samples - 1
    for j in range(cfg.recall_samples):
        r = j / denom
        k = bisect_left(recalls, r)
        if k < len(recalls):
            total += max_prec_from[k]
    return total / cfg.recall_samples


def max_achieved_recall(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthAnnotation],
    t: float,
    cfg: EvalConfig = EvalConfig(),
) -> float:
    """Best recall reachable with at most ``max_detections_per_image`` detections."""
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0
    flags = _ranked_tp_flags(dets, gts, t, cfg)
    return sum(flags) / n_gt


def _class_key(c: Hashable) -> tuple[bool, object]:
    # Deterministic class ordering even for mixed int/str ids.
    return (isinstance(c, str), c)


def evaluate(
    dets: Sequence[Detection],
    gts: Sequence[GroundTruthAnnotation],
    cfg: EvalConfig = EvalConfig(),
) -> EvalReport:
    """Full evaluation: per-class AP/recall at every threshold, then aggregates."""
    classes = {gt.class_id for gt in gts}
    if cfg.include_gt_free_classes:
        classes |= {det.class_id for det in dets}

    dets_by_class: dict[Hashable, list[Detection]] = defaultdict(list)
    for det in dets:
        dets_by_class[det.class_id].append(det)
    gts_by_class: dict[Hashable, list[GroundTruthAnnotation]] = defaultdict(list)
    for gt in gts:
        gts_by_class[gt.class_id].append(gt)

    results = []
    for class_id in sorted(classes, key=_class_key):
        class_dets = dets_by_class.get(class_id, [])
        class_gts = gts_by_class.get(class_id, [])
        aps = tuple(average_precision(class_dets, class_gts, t, cfg) for t in cfg.iou_thresholds)
        recalls = tuple(
            max_achieved_recall(class_dets, class_gts, t, cfg) for t in cfg.iou_thresholds
        )
        results.append(
            PerClassResult(
                class_id=class_id,
                ap_per_threshold=aps,
                recall_per_threshold=recalls,
                ap_all=sum(aps) / len(aps),
                ap_50=aps[_ap50_index(cfg.iou_thresholds)],
                num_ground_truths=len(class_gts),
            )
        )
    return aggregate(results)


def _ap50_index(thresholds: tuple[float, ...]) -> int:
    for i, t in enumerate(thresholds):
        if math.isclose(t, 0.5, abs_tol=1e-9):
            return i
    return 0


def aggregate(per_class: Sequence[PerClassResult]) -> EvalReport:
    """Unweighted class means: mAP, mAP@50, AR over (class, threshold), and F1."""
    if not per_class:
        raise EmptyEvaluationError("no class produced an evaluable result")
    n = len(per_class)
    map_all = sum(r.ap_all for r in per_class) / n
    map_50 = sum(r.ap_50 for r in per_class) / n
    recall_values = [rec for r in per_class for rec in r.recall_per_threshold]
    average_recall = sum(recall_values) / len(recall_values)
    return EvalReport(
        per_class={r.class_id: r for r in per_class},
        map_all=map_all,
        map_50=map_50,
        average_recall=average_recall,
        f1=f1(map_all, average_recall),
    )
