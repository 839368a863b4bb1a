"""
Evaluation metrics for Facet.

Scores are live probabilities: a sample is accepted as live when its score is
>= the threshold.

- auc: Mann-Whitney rank statistic (ties count half)
- hter: (FAR + FRR) / 2 at a fixed threshold
- select_threshold: equal-error-rate threshold of a dev split
- optimal_threshold: minimum-HTER threshold of a sweep
- roc_points: ROC curve

Author: Facet Development
"""

import json
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import roc_curve

from ..config.labels import LIVE, SPOOF
from ..utils.validators import validate_eval_report


def _check(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if scores.shape != labels.shape:
        raise ValueError(f"{scores.shape[0]} scores vs {labels.shape[0]} labels")
    if not np.isin(labels, (LIVE, SPOOF)).all():
        raise ValueError("labels must be 0 (spoof) or 1 (live)")
    if not ((labels == LIVE).any() and (labels == SPOOF).any()):
        raise ValueError("Both live and spoof samples are required")
    return scores, labels


def auc(scores, labels) -> float:
    """
    Area under the ROC curve.

    Equals the probability that a random live sample outscores a random spoof
    sample, ties counted half.

    Raises:
        ValueError: Only one label value present

    Example:
        >>> auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        1.0
    """
    scores, labels = _check(scores, labels)
    ranks = rankdata(scores)
    n_live = int((labels == LIVE).sum())
    n_spoof = len(labels) - n_live
    u = ranks[labels == LIVE].sum() - n_live * (n_live + 1) / 2.0
    return float(u / (n_live * n_spoof))


def hter(scores, labels, threshold: float) -> Tuple[float, float, float]:
    """
    False acceptance, false rejection and half total error rate.

    FAR is the spoof fraction with score >= threshold, FRR the live fraction
    with score < threshold.

    Returns:
        (far, frr, hter)
    """
    scores, labels = _check(scores, labels)
    far = float(np.mean(scores[labels == SPOOF] >= threshold))
    frr = float(np.mean(scores[labels == LIVE] < threshold))
    return far, frr, (far + frr) / 2.0


def candidate_thresholds(scores) -> np.ndarray:
    """Midpoints between consecutive distinct scores plus one value beyond each end."""
    unique = np.unique(np.asarray(scores, dtype=np.float64))
    midpoints = (unique[:-1] + unique[1:]) / 2.0
    return np.concatenate([
        [np.nextafter(unique[0], -np.inf)],
        midpoints,
        [np.nextafter(unique[-1], np.inf)],
    ])


def _sweep(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Rows of (threshold, far, frr) for every candidate threshold."""
    rows = [(t, *hter(scores, labels, t)[:2]) for t in candidate_thresholds(scores)]
    return np.asarray(rows, dtype=np.float64)


def select_threshold(dev_scores, dev_labels) -> float:
    """
    Equal-error-rate threshold of a dev split.

    Among the candidate thresholds, pick the one minimizing |FAR - FRR|;
    ties go to the lower HTER, then to the lower threshold.

    Example:
        >>> select_threshold([0.9, 0.9, 0.1, 0.1], [1, 1, 0, 0])
        0.5
    """
    scores, labels = _check(dev_scores, dev_labels)
    sweep = _sweep(scores, labels)
    thresholds, far, frr = sweep[:, 0], sweep[:, 1], sweep[:, 2]
    order = np.lexsort((thresholds, (far + frr) / 2.0, np.abs(far - frr)))
    return float(thresholds[order[0]])


def optimal_threshold(scores, labels) -> Tuple[float, float]:
    """(threshold, hter) of the minimum-HTER candidate threshold."""
    scores, labels = _check(scores, labels)
    sweep = _sweep(scores, labels)
    errors = (sweep[:, 1] + sweep[:, 2]) / 2.0
    best = int(np.argmin(errors))
    return float(sweep[best, 0]), float(errors[best])


def roc_points(scores, labels) -> Dict[str, List[float]]:
    """ROC curve as {fpr, tpr, thresholds} lists."""
    scores, labels = _check(scores, labels)
    fpr, tpr, thresholds = roc_curve(labels, scores, pos_label=LIVE)
    return {"fpr": fpr.tolist(), "tpr": tpr.tolist(), "thresholds": thresholds.tolist()}


@dataclass
class EvalReport:
    """
    Evaluation of one test domain.

    Attributes:
        scores: Live probabilities
        labels: Ground-truth labels
        auc: Area under the ROC curve
        threshold: Decision threshold (dev-split EER)
        far: False acceptance rate at the threshold
        frr: False rejection rate at the threshold
        hter: (far + frr) / 2
        domain: Test domain name
        roc: ROC points (fpr, tpr, thresholds)
    """

    scores: List[float]
    labels: List[int]
    auc: float
    threshold: float
    far: float
    frr: float
    hter: float
    domain: Optional[str] = None
    roc: Dict[str, List[float]] = field(default_factory=dict)

    @classmethod
    def build(cls, scores, labels, threshold: float, domain: Optional[str] = None) -> "EvalReport":
        scores, labels = _check(scores, labels)
        far, frr, half_total = hter(scores, labels, threshold)
        roc = roc_points(scores, labels)
        # JSON has no infinity; sklearn's first threshold is +inf.
        roc["thresholds"] = [t if np.isfinite(t) else None for t in roc["thresholds"]]
        return cls(
            scores=scores.tolist(),
            labels=labels.tolist(),
            auc=auc(scores, labels),
            threshold=float(threshold),
            far=far,
            frr=frr,
            hter=half_total,
            domain=domain,
            roc=roc,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: Union[str, Path]) -> Path:
        data = self.to_dict()
        is_valid, error = validate_eval_report(data)
        if not is_valid:
            raise ValueError(f"Refusing to write invalid report: {error}")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EvalReport":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        is_valid, error = validate_eval_report(data)
        if not is_valid:
            raise ValueError(f"Invalid report {path}: {error}")
        return cls(**data)
