"""Independent oracles and samplers shared by the module and acceptance tests.

Everything here is deliberately naive and self-contained: no imports from the
package's computational internals, so these implementations stay independent
of the code paths they check.
"""

from __future__ import annotations

import random
from fractions import Fraction

from boxlab.geometry import Box
from boxlab.losses import LossKind

Tup4 = tuple[float, float, float, float]


# --- plain IoU used by the oracles (own code, no package calls) ------------


def tuple_iou(a: Tup4, b: Tup4) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    inter = iw * ih if (iw > 0 and ih > 0) else 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return inter / union


# --- rasterization oracle ---------------------------------------------------


def raster_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> Fraction:
    """IoU of integer-corner boxes by counting unit grid cells, as an exact rational."""
    x0 = min(a[0], b[0])
    y0 = min(a[1], b[1])
    x1 = max(a[2], b[2])
    y1 = max(a[3], b[3])
    inter = 0
    union = 0
    for x in range(x0, x1):
        for y in range(y0, y1):
            in_a = a[0] <= x < a[2] and a[1] <= y < a[3]
            in_b = b[0] <= x < b[2] and b[1] <= y < b[3]
            inter += in_a and in_b
            union += in_a or in_b
    return Fraction(inter, union)


# --- brute-force NMS oracle -------------------------------------------------


def brute_force_nms(
    boxes: list[Tup4], scores: list[float], threshold: float, max_keep: int
) -> list[int]:
    """Reference greedy NMS: O(n^2) scans, kept boxes suppress, strict '>'."""
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if len(kept) >= max_keep:
            break
        if all(tuple_iou(boxes[i], boxes[j]) <= threshold for j in kept):
            kept.append(i)
    return kept


def iou_matrix(boxes: list[Tup4]) -> list[list[float]]:
    """Dense pairwise IoU table so one instance can be replayed at many thresholds."""
    n = len(boxes)
    matrix = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            value = tuple_iou(boxes[i], boxes[j])
            matrix[i][j] = value
            matrix[j][i] = value
    return matrix


def brute_force_nms_from_matrix(
    matrix: list[list[float]], scores: list[float], threshold: float, max_keep: int
) -> list[int]:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    kept: list[int] = []
    for i in order:
        if len(kept) >= max_keep:
            break
        row = matrix[i]
        if all(row[j] <= threshold for j in kept):
            kept.append(i)
    return kept


# --- naive PR-curve AP oracle ------------------------------------------------


def naive_average_precision(
    dets: list[tuple[int, Tup4, float]],
    gts: list[tuple[int, Tup4]],
    threshold: float,
    max_per_image: int = 100,
    samples: int = 101,
) -> float:
    """AP for one class from quadratic scans: greedy per-image matching,
    explicit cumulative curve, explicit interpolation at each recall point.

    ``dets`` are (image_id, box, score) triples; ``gts`` are (image_id, box).
    """
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0

    image_ids = {d[0] for d in dets}
    ranked: list[tuple[float, int, bool]] = []
    for image_id in image_ids:
        det_indices = [i for i, d in enumerate(dets) if d[0] == image_id]
        det_indices.sort(key=lambda i: (-dets[i][2], i))
        det_indices = det_indices[:max_per_image]
        gt_indices = [j for j, g in enumerate(gts) if g[0] == image_id]
        taken: set[int] = set()
        for i in det_indices:
            best_j = None
            best_iou = 0.0
            for j in gt_indices:
                if j in taken:
                    continue
                overlap = tuple_iou(dets[i][1], gts[j][1])
                if overlap >= threshold and overlap > best_iou:
                    best_j = j
                    best_iou = overlap
            if best_j is not None:
                taken.add(best_j)
            ranked.append((-dets[i][2], i, best_j is not None))
    ranked.sort()
    flags = [tp for _, _, tp in ranked]

    cum_tp = []
    running = 0
    for flag in flags:
        running += int(flag)
        cum_tp.append(running)

    total = 0.0
    for j in range(samples):
        r = j / (samples - 1)
        best_prec = 0.0
        for k in range(len(flags)):
            if cum_tp[k] / n_gt >= r:
                best_prec = max(best_prec, cum_tp[k] / (k + 1))
        total += best_prec
    return total / samples


def naive_max_recall(
    dets: list[tuple[int, Tup4, float]],
    gts: list[tuple[int, Tup4]],
    threshold: float,
    max_per_image: int = 100,
) -> float:
    """Final recall of the same naive matching, for AR cross-checks."""
    n_gt = len(gts)
    if n_gt == 0:
        return 0.0
    image_ids = {d[0] for d in dets}
    matched = 0
    for image_id in image_ids:
        det_indices = [i for i, d in enumerate(dets) if d[0] == image_id]
        det_indices.sort(key=lambda i: (-dets[i][2], i))
        det_indices = det_indices[:max_per_image]
        gt_indices = [j for j, g in enumerate(gts) if g[0] == image_id]
        taken: set[int] = set()
        for i in det_indices:
            best_j = None
            best_iou = 0.0
            for j in gt_indices:
                if j in taken:
                    continue
                overlap = tuple_iou(dets[i][1], gts[j][1])
                if overlap >= threshold and overlap > best_iou:
                    best_j = j
                    best_iou = overlap
            if best_j is not None:
                taken.add(best_j)
                matched += 1
    return matched / n_gt


# --- samplers ----------------------------------------------------------------


def sample_box(
    rng: random.Random,
    coord_range: tuple[float, float] = (0.0, 10.0),
    size_range: tuple[float, float] = (0.5, 4.0),
) -> Box:
    lo, hi = coord_range
    w = rng.uniform(*size_range)
    h = rng.uniform(*size_range)
    x = rng.uniform(lo, hi - w)
    y = rng.uniform(lo, hi - h)
    return Box(x, y, x + w, y + h)


def sample_disjoint_pair(rng: random.Random) -> tuple[Box, Box]:
    while True:
        a = sample_box(rng)
        b = sample_box(rng)
        iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
        ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
        if iw < -1e-6 or ih < -1e-6:
            return a, b


def _clean_for_fd(gt: Box, pred: Box, kind: LossKind, margin: float) -> bool:
    g = gt.as_tuple()
    p = pred.as_tuple()
    if kind is LossKind.L1:
        return all(abs(gi - pi) > margin for gi, pi in zip(g, p))
    # Away from every min/max argument tie.
    if any(abs(gi - pi) <= margin for gi, pi in zip(g, p)):
        return False
    # Away from the overlap boundary on either axis.
    iw = min(g[2], p[2]) - max(g[0], p[0])
    ih = min(g[3], p[3]) - max(g[1], p[1])
    if abs(iw) <= margin or abs(ih) <= margin:
        return False
    if kind is LossKind.CIOU:
        # Away from the alpha gate at IoU = 0.5.
        inter = iw * ih if (iw > 0 and ih > 0) else 0.0
        union = (g[2] - g[0]) * (g[3] - g[1]) + (p[2] - p[0]) * (p[3] - p[1]) - inter
        if abs(inter / union - 0.5) <= margin:
            return False
    return True


def sample_clean_pair(
    rng: random.Random, kind: LossKind, margin: float = 1e-2
) -> tuple[Box, Box]:
    """A (gt, pred) pair at least ``margin`` away from non-differentiable configs."""
    while True:
        gt = sample_box(rng)
        pred = sample_box(rng)
        if _clean_for_fd(gt, pred, kind, margin):
            return gt, pred
