"""
Evaluation module for Facet.

Components:
- auc, hter, select_threshold, optimal_threshold, roc_points: metrics
- EvalReport: serialized evaluation of one test domain
- score_domain / evaluate_domain: scoring with a trained model
- grad_cam: class-discriminative saliency maps
"""

from .metrics import (
    EvalReport,
    auc,
    hter,
    select_threshold,
    optimal_threshold,
    roc_points,
    candidate_thresholds,
)
from .scoring import score_domain, evaluate_domain
from .grad_cam import grad_cam

__all__ = [
    "EvalReport",
    "auc",
    "hter",
    "select_threshold",
    "optimal_threshold",
    "roc_points",
    "candidate_thresholds",
    "score_domain",
    "evaluate_domain",
    "grad_cam",
]
