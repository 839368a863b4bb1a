"""
Objective functions.

- cls_loss: binary cross-entropy on live probabilities
- seg_loss: per-pixel 13-way cross-entropy on parsing logits
- depth_loss: mean squared error on 32 x 32 depth maps
- overall_loss: weighted sum of the meta-train and meta-test stages

Every function works on torch tensors and keeps the autograd graph. The
weighting helpers also accept plain floats, which is how step reports
recompute their totals.

Author: Facet Development
"""

from dataclasses import dataclass, asdict, field
from typing import Any, Dict, Sequence, Union

import torch
import torch.nn.functional as F

from .triplet import TripletStats
from ..config.labels import N_PARSING_CLASSES
from ..utils.errors import ConfigError

PROB_EPS = 1e-7

Number = Union[float, torch.Tensor]


@dataclass(frozen=True)
class LossWeights:
    """
    Loss weights of the overall objective.

    Attributes:
        lambda_mtrn: Weight of the meta-train stage
        lambda_mtst: Weight of the meta-test stage
        lambda_cls: Classification weight
        lambda_dep: Depth weight
        lambda_seg: Segmentation weight
        lambda_trip: Triplet weight
    """

    lambda_mtrn: float = 1.0
    lambda_mtst: float = 1.0
    lambda_cls: float = 1.0
    lambda_dep: float = 10.0
    lambda_seg: float = 1.0
    lambda_trip: float = 0.5

    def __post_init__(self):
        negative = [k for k, v in asdict(self).items() if v < 0]
        if negative:
            raise ConfigError(f"Loss weights must be non-negative: {', '.join(negative)}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class LossBundle:
    """
    Loss values of one stage (or one domain within a stage).

    `total` is the stage combination lambda_cls*cls + lambda_dep*dep +
    lambda_seg*seg + lambda_trip*trip, with nothing else added.
    """

    cls: Number = 0.0
    trip: Number = 0.0
    seg: Number = 0.0
    dep: Number = 0.0
    total: Number = 0.0
    triplet_stats: TripletStats = field(default_factory=TripletStats)

    @classmethod
    def from_terms(
        cls_,
        weights: LossWeights,
        cls: Number = 0.0,
        trip: Number = 0.0,
        seg: Number = 0.0,
        dep: Number = 0.0,
        triplet_stats: TripletStats = TripletStats()
    ) -> "LossBundle":
        bundle = cls_(cls=cls, trip=trip, seg=seg, dep=dep, triplet_stats=triplet_stats)
        bundle.total = stage_total(bundle, weights)
        return bundle

    def detached(self) -> "LossBundle":
        """Copy with every value converted to a Python float."""
        def value(v: Number) -> float:
            return float(v.detach().item()) if isinstance(v, torch.Tensor) else float(v)

        return LossBundle(
            cls=value(self.cls),
            trip=value(self.trip),
            seg=value(self.seg),
            dep=value(self.dep),
            total=value(self.total),
            triplet_stats=self.triplet_stats,
        )

    def as_dict(self) -> Dict[str, Any]:
        bundle = self.detached()
        return {
            "cls": bundle.cls,
            "trip": bundle.trip,
            "seg": bundle.seg,
            "dep": bundle.dep,
            "total": bundle.total,
            "n_valid_triplets": self.triplet_stats.n_valid,
            "n_active_triplets": self.triplet_stats.n_active,
        }


def cls_loss(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """
    Mean binary cross-entropy -[y log p + (1 - y) log(1 - p)].

    Probabilities are clamped to [1e-7, 1 - 1e-7].

    Raises:
        ValueError: Length mismatch or empty input

    Example:
        >>> cls_loss(torch.tensor([0.5]), torch.tensor([1.0]))
        tensor(0.6931)
    """
    probs = probs.reshape(-1)
    labels = labels.reshape(-1).to(probs.dtype)
    if probs.shape[0] != labels.shape[0]:
        raise ValueError(f"cls_loss: {probs.shape[0]} probabilities vs {labels.shape[0]} labels")
    if probs.shape[0] == 0:
        raise ValueError("cls_loss: empty batch")
    p = probs.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -(labels * torch.log(p) + (1.0 - labels) * torch.log(1.0 - p)).mean()


def seg_loss(parsing_logits: torch.Tensor, parsing_gt: torch.Tensor) -> torch.Tensor:
    """
    Per-pixel softmax cross-entropy over the 13 parsing channels.

    Args:
        parsing_logits: B x 13 x H x W (or 13 x H x W)
        parsing_gt: B x H x W (or H x W) labels in 0..12

    Returns:
        Mean over pixels and batch

    Raises:
        ValueError: Shape mismatch or labels outside 0..12
    """
    if parsing_logits.ndim == 3:
        parsing_logits = parsing_logits.unsqueeze(0)
        parsing_gt = parsing_gt.unsqueeze(0)
    if parsing_logits.shape[1] != N_PARSING_CLASSES:
        raise ValueError(f"seg_loss: expected {N_PARSING_CLASSES} channels, got {parsing_logits.shape[1]}")
    if parsing_gt.shape != parsing_logits.shape[:1] + parsing_logits.shape[2:]:
        raise ValueError(
            f"seg_loss: logits {tuple(parsing_logits.shape)} and labels {tuple(parsing_gt.shape)} differ"
        )
    gt = parsing_gt.long()
    if gt.numel() and (gt.min() < 0 or gt.max() >= N_PARSING_CLASSES):
        raise ValueError(f"seg_loss: labels must lie in 0..{N_PARSING_CLASSES - 1}")
    return F.cross_entropy(parsing_logits, gt)


def depth_loss(depth_pred: torch.Tensor, depth_gt: torch.Tensor) -> torch.Tensor:
    """Mean squared error; shapes must match exactly."""
    if depth_pred.shape != depth_gt.shape:
        raise ValueError(
            f"depth_loss: prediction {tuple(depth_pred.shape)} vs ground truth {tuple(depth_gt.shape)}"
        )
    return F.mse_loss(depth_pred, depth_gt.to(depth_pred.dtype))


def stage_total(bundle: LossBundle, weights: LossWeights) -> Number:
    """lambda_cls*cls + lambda_dep*dep + lambda_seg*seg + lambda_trip*trip."""
    return (
        weights.lambda_cls * bundle.cls
        + weights.lambda_dep * bundle.dep
        + weights.lambda_seg * bundle.seg
        + weights.lambda_trip * bundle.trip
    )


def overall_loss(mtrn: LossBundle, mtst: LossBundle, weights: LossWeights) -> Number:
    """
    Overall objective: lambda_mtrn * stage(meta-train) + lambda_mtst * stage(meta-test).

    Example:
        >>> ones = LossBundle(cls=1.0, trip=1.0, seg=1.0, dep=1.0)
        >>> overall_loss(ones, ones, LossWeights())
        25.0
    """
    return weights.lambda_mtrn * stage_total(mtrn, weights) + weights.lambda_mtst * stage_total(mtst, weights)


def _sum_stats(bundles: Sequence[LossBundle]) -> TripletStats:
    stats = TripletStats()
    for b in bundles:
        stats = stats + b.triplet_stats
    return stats


def aggregate_meta_train(bundles: Sequence[LossBundle], weights: LossWeights) -> LossBundle:
    """Meta-train stage: every term averaged over the meta-train domains."""
    if not bundles:
        raise ValueError("aggregate_meta_train: no bundles")
    n = len(bundles)
    return LossBundle.from_terms(
        weights,
        cls=sum(b.cls for b in bundles) / n,
        trip=sum(b.trip for b in bundles) / n,
        seg=sum(b.seg for b in bundles) / n,
        dep=sum(b.dep for b in bundles) / n,
        triplet_stats=_sum_stats(bundles),
    )


def aggregate_meta_test(bundles: Sequence[LossBundle], weights: LossWeights) -> LossBundle:
    """
    Meta-test stage: cls and trip summed over the updated meta learners;
    dep and seg do not depend on theta_M and are counted once.
    """
    if not bundles:
        raise ValueError("aggregate_meta_test: no bundles")
    return LossBundle.from_terms(
        weights,
        cls=sum(b.cls for b in bundles),
        trip=sum(b.trip for b in bundles),
        seg=bundles[0].seg,
        dep=bundles[0].dep,
        triplet_stats=_sum_stats(bundles),
    )
