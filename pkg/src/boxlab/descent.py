"""Gradient-descent simulator over the box losses.

Desk-scale check of the qualitative convergence behaviour of the loss
family: plain gradient descent on a single predicted box toward a fixed
target, with optional backtracking halving so that monotone descent can be
asserted. The headline facts it exposes:

* the IoU loss has exactly zero gradient on disjoint pairs, so descent
  never moves;
* the GIoU loss moves disjoint boxes into overlap;
* the DIoU loss reaches high overlap in fewer iterations than GIoU on a
  shared trial suite (it steers the center directly).
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, replace
from typing import Iterable

from .errors import BoxlabError, ValidationError
from .geometry import Box, area, intersection_area, iou
from .losses import GradVec, LossKind, loss

__all__ = [
    "DescentConfig",
    "TrajectoryPoint",
    "Trajectory",
    "PairSampler",
    "TrialRecord",
    "KindSummary",
    "ConvergenceStudy",
    "run_descent",
    "convergence_study",
    "trial_csv_rows",
]


@dataclass(frozen=True)
class DescentConfig:
    loss_kind: LossKind
    learning_rate: float = 0.1
    max_iters: int = 10_000
    success_iou: float = 0.9
    parameterization: str = "corner"  # "corner" or "center"
    backtracking: bool = False
    max_halvings: int = 20

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValidationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.success_iou <= 1.0:
            raise ValidationError(f"success_iou must be in (0, 1], got {self.success_iou}")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be non-negative")
        if self.parameterization not in ("corner", "center"):
            raise ValidationError(
                f"parameterization must be 'corner' or 'center', got {self.parameterization!r}"
            )


@dataclass(frozen=True)
class TrajectoryPoint:
    box: Box
    loss: float
    grad_norm: float


@dataclass(frozen=True)
class Trajectory:
    """Every visited iterate; ``converged_at`` is the step count at success, or None."""

    points: tuple[TrajectoryPoint, ...]
    converged_at: int | None
    final_iou: float

    @property
    def converged(self) -> bool:
        return self.converged_at is not None


def _repaired_box(x1: float, y1: float, x2: float, y2: float) -> Box:
    # Coordinate-order violations are repaired by swapping, not clamping,
    # so the gradient stays informative on the next step.
    if x2 < x1:
        x1, x2 = x2, x1
    if y2 < y1:
        y1, y2 = y2, y1
    return Box(x1, y1, x2, y2)


def _step(pred: Box, gradient: GradVec, step_size: float, parameterization: str) -> Box:
    g1, g2, g3, g4 = gradient
    if parameterization == "corner":
        return _repaired_box(
            pred.x_min - step_size * g1,
            pred.y_min - step_size * g2,
            pred.x_max - step_size * g3,
            pred.y_max - step_size * g4,
        )
    # Center/size step via the chain rule: dL/dc = dL/dx1 + dL/dx2,
    # dL/dw = (dL/dx2 - dL/dx1)/2. A negative size is the swap repair.
    cx, cy = pred.center()
    w = pred.width
    h = pred.height
    cx -= step_size * (g1 + g3)
    cy -= step_size * (g2 + g4)
    w = abs(w - step_size * (g3 - g1) / 2.0)
    h = abs(h - step_size * (g4 - g2) / 2.0)
    return Box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


def run_descent(init: Box, target: Box, cfg: DescentConfig) -> Trajectory:
    """Descend ``pred <- pred - lr * grad`` until IoU(pred, target) >= success_iou.

    Non-convergence is a result, not an error. The trajectory records every
    iterate including the initial box. Descent also stops early when the
    gradient is exactly zero (no future iterate can move) or, with
    backtracking enabled, when no step up to ``max_halvings`` halvings is
    non-increasing.
    """
    if area(target) <= 0.0:
        raise ValidationError(f"target must have positive area, got {target.as_tuple()}")

    pred = init
    points: list[TrajectoryPoint] = []
    converged_at: int | None = None
    steps = 0
    while True:
        result = loss(cfg.loss_kind, target, pred)
        grad_norm = math.sqrt(sum(g * g for g in result.gradient))
        points.append(TrajectoryPoint(pred, result.value, grad_norm))
        if iou(target, pred) >= cfg.success_iou:
            converged_at = steps
            break
        if steps >= cfg.max_iters or grad_norm == 0.0:
            break

        if cfg.backtracking:
            accepted = None
            step_size = cfg.learning_rate
            for _ in range(cfg.max_halvings + 1):
                candidate = _step(pred, result.gradient, step_size, cfg.parameterization)
                try:
                    candidate_value = loss(cfg.loss_kind, target, candidate).value
                except BoxlabError:
                    candidate_value = math.inf
                if candidate_value <= result.value:
                    accepted = candidate
                    break
                step_size /= 2.0
            if accepted is None:
                break
            pred = accepted
        else:
            pred = _step(pred, result.gradient, cfg.learning_rate, cfg.parameterization)
        steps += 1

    return Trajectory(
        points=tuple(points),
        converged_at=converged_at,
        final_iou=iou(target, pred),
    )


@dataclass(frozen=True)
class PairSampler:
    """Seeded sampler of (init, target) box pairs within a coordinate range."""

    seed: int = 0
    coord_range: tuple[float, float] = (0.0, 10.0)
    size_range: tuple[float, float] = (0.5, 3.0)
    disjoint: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.size_range[0] <= self.size_range[1]:
            raise ValidationError(f"size_range must be positive and ordered, got {self.size_range}")
        if self.coord_range[1] - self.coord_range[0] <= self.size_range[1]:
            raise ValidationError("coord_range must be wider than the largest box size")

    def sample_pairs(self, n: int) -> list[tuple[Box, Box]]:
        rng = random.Random(self.seed)
        pairs = []
        for _ in range(n):
            target = self._sample_box(rng)
            init = self._sample_box(rng)
            if self.disjoint:
                attempts = 0
                while intersection_area(init, target) > 0.0:
                    init = self._sample_box(rng)
                    attempts += 1
                    if attempts > 10_000:
                        raise ValidationError(
                            "could not sample a disjoint pair; enlarge coord_range"
                        )
            pairs.append((init, target))
        return pairs

    def _sample_box(self, rng: random.Random) -> Box:
        lo, hi = self.coord_range
        w = rng.uniform(*self.size_range)
        h = rng.uniform(*self.size_range)
        cx = rng.uniform(lo + w / 2.0, hi - w / 2.0)
        cy = rng.uniform(lo + h / 2.0, hi - h / 2.0)
        return Box(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    loss_kind: LossKind
    converged: bool
    iterations: int | None
    final_iou: float


@dataclass(frozen=True)
class KindSummary:
    loss_kind: LossKind
    trials: int
    convergence_rate: float
    median_iterations: float  # +inf when fewer than half the trials converge


@dataclass(frozen=True)
class ConvergenceStudy:
    records: tuple[TrialRecord, ...]
    summary: dict[LossKind, KindSummary]


def convergence_study(
    trials: int,
    loss_kinds: Iterable[LossKind],
    sampler: PairSampler,
    cfg: DescentConfig,
) -> ConvergenceStudy:
    """Run every loss kind over one shared randomized suite of (init, target) pairs.

    ``cfg.loss_kind`` is overridden per kind; everything else is shared, so
    median iteration counts are directly comparable across kinds.
    Non-converged trials count as +inf iterations in the median.
    """
    if trials < 30:
        raise ValidationError(f"need at least 30 trials for a meaningful study, got {trials}")
    kinds = sorted(set(loss_kinds), key=lambda k: k.value)
    if not kinds:
        raise ValidationError("loss_kinds must not be empty")

    pairs = sampler.sample_pairs(trials)
    records: list[TrialRecord] = []
    summary: dict[LossKind, KindSummary] = {}
    for kind in kinds:
        kind_cfg = replace(cfg, loss_kind=kind)
        iteration_counts: list[float] = []
        converged_count = 0
        for trial, (init, target) in enumerate(pairs):
            trajectory = run_descent(init, target, kind_cfg)
            records.append(
                TrialRecord(
                    trial=trial,
                    loss_kind=kind,
                    converged=trajectory.converged,
                    iterations=trajectory.converged_at,
                    final_iou=trajectory.final_iou,
                )
            )
            if trajectory.converged:
                converged_count += 1
                iteration_counts.append(float(trajectory.converged_at))  # type: ignore[arg-type]
            else:
                iteration_counts.append(math.inf)
        summary[kind] = KindSummary(
            loss_kind=kind,
            trials=trials,
            convergence_rate=converged_count / trials,
            median_iterations=float(statistics.median(iteration_counts)),
        )
    return ConvergenceStudy(records=tuple(records), summary=summary)


def trial_csv_rows(study: ConvergenceStudy) -> list[list[str]]:
    """Per-trial rows (trial id, loss kind, converged, iterations, final IoU)."""
    rows = [["trial", "loss_kind", "converged", "iterations", "final_iou"]]
    for record in study.records:
        rows.append(
            [
                str(record.trial),
                record.loss_kind.value,
                str(int(record.converged)),
                "" if record.iterations is None else str(record.iterations),
                repr(record.final_iou),
            ]
        )
    return rows
