"""
Losses module for Facet.

Components:
- cls_loss, seg_loss, depth_loss: per-task objectives
- one_side_triplet_loss / mine_one_side_triplets: triplet loss with mining
- LossWeights, LossBundle, overall_loss: the weighted overall objective
"""

from .triplet import (
    TripletConfig,
    TripletStats,
    mine_one_side_triplets,
    one_side_triplet_loss,
    pairwise_squared_distances,
)
from .objectives import (
    LossWeights,
    LossBundle,
    cls_loss,
    seg_loss,
    depth_loss,
    stage_total,
    overall_loss,
    aggregate_meta_train,
    aggregate_meta_test,
)

__all__ = [
    "TripletConfig",
    "TripletStats",
    "mine_one_side_triplets",
    "one_side_triplet_loss",
    "pairwise_squared_distances",
    "LossWeights",
    "LossBundle",
    "cls_loss",
    "seg_loss",
    "depth_loss",
    "stage_total",
    "overall_loss",
    "aggregate_meta_train",
    "aggregate_meta_test",
]
