"""Proposal-stage algorithms: anchor generation, box-delta coding, NMS, assignment.

Anchors follow the classic pyramid recipe: one scale, several aspect ratios,
one anchor set per feature-map cell, base side = stride * scale, and
area-preserving ratio enumeration (width = base*sqrt(r), height = base/sqrt(r)).
Anchors are not clipped to image bounds; clipping policy belongs to callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidBoxError, ValidationError
from .geometry import Box

__all__ = [
    "AnchorConfig",
    "Anchor",
    "BoxDelta",
    "ScoredBox",
    "ProposalAssignment",
    "generate_anchors",
    "encode_delta",
    "decode_delta",
    "nms",
    "assign_proposals",
]


@dataclass(frozen=True)
class AnchorConfig:
    """Pyramid anchor specification: one scale, three ratios, four strides by default."""

    scale: int = 8
    aspect_ratios: tuple[float, ...] = (0.5, 1.0, 2.0)
    strides: tuple[int, ...] = (4, 8, 16, 32)

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValidationError(f"anchor scale must be positive, got {self.scale}")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValidationError(f"aspect ratios must be positive, got {self.aspect_ratios}")
        if (
            not self.strides
            or any(s <= 0 for s in self.strides)
            or any(b <= a for a, b in zip(self.strides, self.strides[1:]))
        ):
            raise ValidationError(
                f"strides must be strictly increasing positive integers, got {self.strides}"
            )


@dataclass(frozen=True)
class Anchor:
    """A generated anchor: its box, pyramid level, and (row, col) feature cell."""

    box: Box
    level: int
    cell: tuple[int, int]


@dataclass(frozen=True)
class BoxDelta:
    """Center offsets normalized by anchor size plus log width/height ratios."""

    tx: float
    ty: float
    tw: float
    th: float


@dataclass(frozen=True)
class ScoredBox:
    box: Box
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class ProposalAssignment:
    """Label for one proposal: positive iff its best ground-truth IoU exceeds the threshold."""

    proposal_index: int
    positive: bool
    gt_index: int | None
    iou: float


def generate_anchors(
    cfg: AnchorConfig, feature_sizes: Sequence[tuple[int, int]]
) -> list[Anchor]:
    """Tile anchors over each pyramid level.

    Args:
        cfg: anchor specification; ``feature_sizes`` must supply one
            (height, width) pair per stride.
        feature_sizes: feature-map sizes, finest level first.

    Returns:
        Anchors ordered by (level, row, col, ratio); exactly
        ``sum(H*W*len(ratios))`` of them. Each anchor at cell (row, col) on a
        level with stride s is centered at ((col+0.5)*s, (row+0.5)*s) with
        area (s*scale)^2 regardless of ratio.
    """
    if len(feature_sizes) != len(cfg.strides):
        raise ValidationError(
            f"expected {len(cfg.strides)} feature sizes (one per stride), "
            f"got {len(feature_sizes)}"
        )
    anchors: list[Anchor] = []
    for level, (stride, (height, width)) in enumerate(zip(cfg.strides, feature_sizes)):
        base = float(stride * cfg.scale)
        shapes = [(base * math.sqrt(r), base / math.sqrt(r)) for r in cfg.aspect_ratios]
        for row in range(height):
            cy = (row + 0.5) * stride
            for col in range(width):
                cx = (col + 0.5) * stride
                for w, h in shapes:
                    anchors.append(
                        Anchor(
                            box=Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2),
                            level=level,
                            cell=(row, col),
                        )
                    )
    return anchors


def _center_size(b: Box) -> tuple[float, float, float, float]:
    cx, cy = b.center()
    return cx, cy, b.width, b.height


def encode_delta(anchor: Box, target: Box) -> BoxDelta:
    """Encode ``target`` relative to ``anchor``: normalized center shift + log size ratio."""
    acx, acy, aw, ah = _center_size(anchor)
    if aw <= 0.0 or ah <= 0.0:
        raise InvalidBoxError(f"anchor must have positive extents, got {anchor.as_tuple()}")
    tcx, tcy, tw, th = _center_size(target)
    if tw <= 0.0 or th <= 0.0:
        raise InvalidBoxError(f"target must have positive extents, got {target.as_tuple()}")
    return BoxDelta(
        tx=(tcx - acx) / aw,
        ty=(tcy - acy) / ah,
        tw=math.log(tw / aw),
        th=math.log(th / ah),
    )


def decode_delta(anchor: Box, delta: BoxDelta) -> Box:
    """Invert :func:`encode_delta`."""
    acx, acy, aw, ah = _center_size(anchor)
    if aw <= 0.0 or ah <= 0.0:
        raise InvalidBoxError(f"anchor must have positive extents, got {anchor.as_tuple()}")
    cx = acx + delta.tx * aw
    cy = acy + delta.ty * ah
    w = aw * math.exp(delta.tw)
    h = ah * math.exp(delta.th)
    return Box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def _boxes_array(boxes: Sequence[Box]) -> np.ndarray:
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64).reshape(-1, 4)


def _iou_one_vs_many(box: np.ndarray, others: np.ndarray) -> np.ndarray:
    """IoU of one (4,) box against (N, 4) boxes; 0 where the union is empty."""
    iw = np.minimum(box[2], others[:, 2]) - np.maximum(box[0], others[:, 0])
    ih = np.minimum(box[3], others[:, 3]) - np.maximum(box[1], others[:, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area = (box[2] - box[0]) * (box[3] - box[1])
    areas = (others[:, 2] - others[:, 0]) * (others[:, 3] - others[:, 1])
    union = area + areas - inter
    return np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)


def nms(
    candidates: Sequence[ScoredBox],
    iou_threshold: float = 0.7,
    max_keep: int = 1000,
) -> list[int]:
    """Greedy non-maximum suppression.

    Candidates are visited in descending score order (ties broken by lower
    input index); each visited box is kept unless its IoU with an already-kept
    box exceeds ``iou_threshold`` (strictly). At most ``max_keep`` indices are
    returned, in the visit order. A pair of zero-area boxes counts as overlap 0.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValidationError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    if max_keep <= 0:
        raise ValidationError(f"max_keep must be positive, got {max_keep}")
    n = len(candidates)
    if n == 0:
        return []

    boxes = _boxes_array([c.box for c in candidates])
    scores = np.array([c.score for c in candidates], dtype=np.float64)
    order = np.lexsort((np.arange(n), -scores))

    alive = np.ones(n, dtype=bool)
    keep: list[int] = []
    for pos, idx in enumerate(order):
        if not alive[idx]:
            continue
        keep.append(int(idx))
        if len(keep) >= max_keep:
            break
        rest = order[pos + 1 :]
        rest = rest[alive[rest]]
        if rest.size:
            overlaps = _iou_one_vs_many(boxes[idx], boxes[rest])
            alive[rest[overlaps > iou_threshold]] = False
    return keep


def assign_proposals(
    proposals: Sequence[Box],
    gts: Sequence[Box],
    pos_threshold: float = 0.5,
) -> list[ProposalAssignment]:
    """Label each proposal against the ground-truth set.

    A proposal is positive iff its maximum IoU over ground truths exceeds
    ``pos_threshold`` (strictly). The argmax ground-truth index is recorded for
    every proposal that has one (ties go to the lower index); with no ground
    truths every proposal is negative with ``gt_index=None`` and IoU 0.
    """
    if not 0.0 < pos_threshold < 1.0:
        raise ValidationError(f"pos_threshold must be in (0, 1), got {pos_threshold}")
    if not gts:
        return [
            ProposalAssignment(i, positive=False, gt_index=None, iou=0.0)
            for i in range(len(proposals))
        ]
    gt_arr = _boxes_array(gts)
    out: list[ProposalAssignment] = []
    for i, prop in enumerate(proposals):
        ious = _iou_one_vs_many(np.array(prop.as_tuple()), gt_arr)
        best = int(np.argmax(ious))
        best_iou = float(ious[best])
        out.append(
            ProposalAssignment(
                proposal_index=i,
                positive=best_iou > pos_threshold,
                gt_index=best,
                iou=best_iou,
            )
        )
    return out
