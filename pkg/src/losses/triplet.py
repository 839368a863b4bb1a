"""
One-side triplet loss with batch-all / batch-hard mining.

Anchors are live samples only; positives are other live samples and negatives
are spoof samples, so live faces are pulled together while spoofs from any
domain are pushed away without being clustered themselves. The "normal"
variant also uses spoof anchors and is kept for comparison runs.

Distances are squared Euclidean, without embedding normalization.

Author: Facet Development
"""

from dataclasses import dataclass, asdict, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch

from ..config.labels import LIVE, SPOOF
from ..utils.errors import ConfigError

MINING_MODES = ("batch_all", "batch_hard")
VARIANTS = ("one_side", "normal")
REDUCTIONS = ("mean_active", "mean_valid", "sum")


@dataclass(frozen=True)
class TripletConfig:
    """
    Triplet loss settings.

    Attributes:
        margin: Hinge margin (>= 0)
        mining: batch_all or batch_hard
        variant: one_side (live anchors only) or normal (anchors of both classes)
        reduction: mean_active averages batch_all terms over triplets with a
            nonzero hinge and batch_hard terms over anchors; mean_valid averages
            over every mined triplet; sum adds them up
    """

    margin: float = 0.1
    mining: str = "batch_all"
    variant: str = "one_side"
    reduction: str = "mean_active"

    def __post_init__(self):
        if self.margin < 0:
            raise ConfigError(f"Triplet margin must be >= 0, got {self.margin}")
        if self.mining not in MINING_MODES:
            raise ConfigError(f"Unknown mining mode '{self.mining}', expected one of {MINING_MODES}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"Unknown triplet variant '{self.variant}', expected one of {VARIANTS}")
        if self.reduction not in REDUCTIONS:
            raise ConfigError(f"Unknown reduction '{self.reduction}', expected one of {REDUCTIONS}")

    def with_stage(self, mining: str, margin: float) -> "TripletConfig":
        return replace(self, mining=mining, margin=margin)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TripletStats:
    """Number of mined triplets and of triplets with a nonzero hinge term."""

    n_valid: int = 0
    n_active: int = 0

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)

    def __add__(self, other: "TripletStats") -> "TripletStats":
        return TripletStats(self.n_valid + other.n_valid, self.n_active + other.n_active)


def _as_numpy_labels(labels) -> np.ndarray:
    if isinstance(labels, torch.Tensor):
        labels = labels.detach().cpu().numpy()
    return np.asarray(labels).astype(np.int64).ravel()


def pairwise_squared_distances(embeddings: torch.Tensor) -> torch.Tensor:
    """B x B matrix of squared Euclidean distances."""
    diff = embeddings[:, None, :] - embeddings[None, :, :]
    return (diff ** 2).sum(dim=-1)


def mine_one_side_triplets(
    labels,
    mode: str = "batch_all",
    distances: Optional[np.ndarray] = None,
    variant: str = "one_side"
) -> np.ndarray:
    """
    Mine (anchor, positive, negative) index triples.

    Args:
        labels: Binary labels (1 live, 0 spoof)
        mode: batch_all enumerates every valid triple; batch_hard keeps, per
            anchor, the farthest positive and the closest negative
        distances: B x B distance matrix, required for batch_hard
        variant: one_side anchors on live samples only; normal also anchors
            on spoof samples (when at least two spoofs are present)

    Returns:
        int64 array of shape T x 3, rows in lexicographic anchor order

    Raises:
        ValueError: Fewer than 2 live or 1 spoof samples, unknown mode,
            or batch_hard without distances

    Example:
        >>> mine_one_side_triplets([1, 1, 1, 0, 0]).shape
        (12, 3)
    """
    y = _as_numpy_labels(labels)
    live = np.flatnonzero(y == LIVE)
    spoof = np.flatnonzero(y == SPOOF)
    if len(live) < 2 or len(spoof) < 1:
        raise ValueError(
            f"One-side triplet mining needs >= 2 live and >= 1 spoof samples, "
            f"got {len(live)} live / {len(spoof)} spoof"
        )
    if mode not in MINING_MODES:
        raise ValueError(f"Unknown mining mode '{mode}'")
    if mode == "batch_hard" and distances is None:
        raise ValueError("batch_hard mining needs a distance matrix")

    groups = [(live, spoof)]
    if variant == "normal" and len(spoof) >= 2:
        groups.append((spoof, live))

    triples = []
    for same, other in groups:
        for a in same:
            positives = same[same != a]
            if mode == "batch_all":
                for p in positives:
                    for n in other:
                        triples.append((a, p, n))
            else:
                p = positives[np.argmax(distances[a, positives])]
                n = other[np.argmin(distances[a, other])]
                triples.append((a, p, n))

    return np.asarray(sorted(triples), dtype=np.int64).reshape(-1, 3)


def one_side_triplet_loss(
    embeddings: torch.Tensor,
    labels,
    cfg: Optional[TripletConfig] = None
) -> Tuple[torch.Tensor, TripletStats]:
    """
    Hinge loss max(0, |e_a - e_p|^2 - |e_a - e_n|^2 + margin) over mined triples.

    Args:
        embeddings: B x D embeddings
        labels: B binary labels
        cfg: Margin, mining mode, variant and reduction

    Returns:
        (scalar loss, TripletStats)

    Raises:
        ValueError: Propagated from mining
    """
    cfg = cfg or TripletConfig()
    if embeddings.ndim != 2:
        raise ValueError(f"Embeddings must be B x D, got {tuple(embeddings.shape)}")

    distances = pairwise_squared_distances(embeddings)
    triples = mine_one_side_triplets(
        labels,
        mode=cfg.mining,
        distances=distances.detach().cpu().numpy() if cfg.mining == "batch_hard" else None,
        variant=cfg.variant,
    )
    index = torch.from_numpy(triples).to(embeddings.device)
    a, p, n = index[:, 0], index[:, 1], index[:, 2]
    terms = torch.relu(distances[a, p] - distances[a, n] + cfg.margin)

    n_valid = int(terms.shape[0])
    n_active = int((terms > 0).sum().item())

    if cfg.reduction == "sum":
        loss = terms.sum()
    elif cfg.reduction == "mean_valid" or cfg.mining == "batch_hard":
        loss = terms.mean()
    else:
        loss = terms.sum() / max(n_active, 1)

    return loss, TripletStats(n_valid=n_valid, n_active=n_active)
