"""
Fine-grained meta-learning step.

One step on an episode:
1. Meta-train: for every meta-train domain, classification, triplet, depth and
   segmentation losses on the current meta learner, and an inner update
   theta_M_i' = theta_M - inner_lr * grad(L_cls + L_trip).
2. Meta-test: classification and triplet losses of the meta-test batch through
   every theta_M_i'; depth and segmentation once.
3. Meta-optimization: one outer optimizer step on all four parameter groups
   with the weighted sum of both stages.

In first-order mode the inner gradient is a constant: the meta-test loss
reaches theta_M through theta_M_i' with identity Jacobian and does not reach
theta_F through the inner gradient.

Author: Facet Development
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, asdict, field
from typing import Any, Dict, List, Optional, Tuple

import torch

from ..data.episodes import EpisodeBatch, EpisodeSplit
from ..losses.objectives import (
    LossBundle,
    LossWeights,
    aggregate_meta_test,
    aggregate_meta_train,
    cls_loss,
    depth_loss,
    overall_loss,
    seg_loss,
)
from ..losses.triplet import TripletConfig, one_side_triplet_loss
from ..utils.errors import ConfigError, NumericalAbort

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetaConfig:
    """
    Meta-learning and outer optimizer settings.

    Attributes:
        inner_lr: Inner update rate of theta_M (> 0)
        lr: Outer Adam learning rate
        beta1: First-moment decay of Adam
        beta2: Second-moment decay of Adam
        weight_decay: L2 weight decay of the outer optimizer
        iterations: Training iterations
        second_order: Differentiate through the inner gradient
        meta_learning: False trains jointly on all source domains without
            the meta-train / meta-test split
        batch_size: Samples per domain batch
        stage1_margin: Triplet margin of the batch-all stage
        stage2_margin: Triplet margin of the batch-hard stage
        switch_iteration: First batch-hard iteration (None: iterations // 2)
        checkpoint_every: Checkpoint cadence in iterations
    """

    inner_lr: float = 1e-3
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 5e-5
    iterations: int = 1500
    second_order: bool = False
    meta_learning: bool = True
    batch_size: int = 20
    stage1_margin: float = 0.1
    stage2_margin: float = 0.3
    switch_iteration: Optional[int] = None
    checkpoint_every: int = 200

    def __post_init__(self):
        errors = []
        if not self.inner_lr > 0:
            errors.append(f"meta.inner_lr must be > 0, got {self.inner_lr}")
        if not self.lr > 0:
            errors.append(f"meta.lr must be > 0, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            errors.append("meta.beta1 and meta.beta2 must lie in [0, 1)")
        if self.weight_decay < 0:
            errors.append("meta.weight_decay must be >= 0")
        if self.iterations < 0:
            errors.append("meta.iterations must be >= 0")
        if self.batch_size < 3:
            errors.append("meta.batch_size must be >= 3 (2 live + 1 spoof)")
        if self.stage1_margin < 0 or self.stage2_margin < 0:
            errors.append("triplet margins must be >= 0")
        if self.switch_iteration is not None and not 0 <= self.switch_iteration <= self.iterations:
            errors.append(
                f"meta.switch_iteration must lie in [0, iterations={self.iterations}], "
                f"got {self.switch_iteration}"
            )
        if self.checkpoint_every < 1:
            errors.append("meta.checkpoint_every must be >= 1")
        if errors:
            raise ConfigError("; ".join(errors))

    @property
    def switch_at(self) -> int:
        return self.iterations // 2 if self.switch_iteration is None else self.switch_iteration

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def mining_stage(iteration: int, cfg: MetaConfig, base: Optional[TripletConfig] = None) -> TripletConfig:
    """
    Triplet settings for one iteration of the two-stage schedule.

    Batch-all mining with the small margin before `cfg.switch_at`, batch-hard
    mining with the larger margin from then on.
    """
    base = base or TripletConfig()
    if iteration < cfg.switch_at:
        return base.with_stage("batch_all", cfg.stage1_margin)
    return base.with_stage("batch_hard", cfg.stage2_margin)


@dataclass
class MetaStepReport:
    """
    Losses and gradient norms of one meta step.

    Attributes:
        meta_train: Per meta-train domain bundles (evaluated on theta_M)
        meta_test: Per updated learner bundles on the meta-test batch
        meta_train_stage: Meta-train bundles averaged over domains
        meta_test_stage: Meta-test bundles, cls/trip summed, dep/seg once
        total: overall_loss(meta_train_stage, meta_test_stage, weights)
        grad_norms: L2 gradient norm per parameter group
        meta_train_domains: Domain ids of the meta-train batches
        meta_test_domain: Domain id of the meta-test batch (None in joint training)
    """

    meta_train: Tuple[LossBundle, ...] = ()
    meta_test: Tuple[LossBundle, ...] = ()
    meta_train_stage: LossBundle = field(default_factory=LossBundle)
    meta_test_stage: LossBundle = field(default_factory=LossBundle)
    total: float = 0.0
    grad_norms: Dict[str, float] = field(default_factory=dict)
    meta_train_domains: List[int] = field(default_factory=list)
    meta_test_domain: Optional[int] = None

    def losses_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "mtrn": self.meta_train_stage.as_dict(),
            "mtst": self.meta_test_stage.as_dict(),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.losses_dict(),
            "meta_train": [b.as_dict() for b in self.meta_train],
            "meta_test": [b.as_dict() for b in self.meta_test],
            "grad_norms": dict(self.grad_norms),
            "meta_train_domains": list(self.meta_train_domains),
            "meta_test_domain": self.meta_test_domain,
        }


def inner_update(
    model,
    theta_M: Dict[str, torch.Tensor],
    pooled: torch.Tensor,
    labels: torch.Tensor,
    inner_lr: float,
    triplet: Optional[TripletConfig] = None,
    second_order: bool = False,
    include_triplet: bool = True
) -> Dict[str, torch.Tensor]:
    """
    One inner gradient step of the meta learner on a meta-train batch.

    Args:
        model: Network exposing `meta_forward(pooled, theta_M)`
        theta_M: Current meta-learner parameters (left unmodified)
        pooled: Pooled features of the meta-train batch
        labels: Batch labels
        inner_lr: Step size
        triplet: Triplet settings of the current stage
        second_order: Keep the graph of the inner gradient (and of theta_F)
        include_triplet: Add the triplet term to the inner objective

    Returns:
        Fresh parameters theta_M - inner_lr * grad(L_cls + L_trip)

    Example:
        >>> prime = inner_update(model, model.meta_parameters(), shared.pooled, y, 1e-3)
    """
    if not second_order:
        pooled = pooled.detach()
    embedding, logit = model.meta_forward(pooled, theta_M)
    loss = cls_loss(torch.sigmoid(logit), labels)
    if include_triplet:
        trip, _ = one_side_triplet_loss(embedding, labels, triplet)
        loss = loss + trip

    names = list(theta_M.keys())
    params = [theta_M[k] for k in names]
    grads = torch.autograd.grad(loss, params, create_graph=second_order, allow_unused=True)

    updated = OrderedDict()
    for name, param, grad in zip(names, params, grads):
        if grad is None:
            grad = torch.zeros_like(param)
        updated[name] = param - inner_lr * grad
    return updated


def _zero(reference: torch.Tensor) -> torch.Tensor:
    return reference.new_zeros(())


def _auxiliary_losses(model, shared, batch: EpisodeBatch) -> Tuple[torch.Tensor, torch.Tensor]:
    """(depth loss, segmentation loss) of one batch; theta_M plays no part."""
    dep = depth_loss(shared.depth_pred, batch.depth.to(shared.depth_pred.dtype))
    if getattr(model, "use_parsing", False) and shared.parsing_logits is not None:
        if batch.parsing is None:
            raise ValueError(f"Domain {batch.domain_id} batch has no parsing ground truth")
        seg = seg_loss(shared.parsing_logits, batch.parsing)
    else:
        seg = _zero(shared.pooled)
    return dep, seg


def _meta_bundle(model, pooled, labels, theta_M, triplet, weights, dep, seg) -> LossBundle:
    embedding, logit = model.meta_forward(pooled, theta_M)
    cls = cls_loss(torch.sigmoid(logit), labels)
    trip, stats = one_side_triplet_loss(embedding, labels, triplet)
    return LossBundle.from_terms(weights, cls=cls, trip=trip, seg=seg, dep=dep, triplet_stats=stats)


def meta_test_losses(
    model,
    theta_M_primes: List[Dict[str, torch.Tensor]],
    batch: EpisodeBatch,
    weights: LossWeights,
    triplet: Optional[TripletConfig] = None,
    shared=None
) -> List[LossBundle]:
    """
    Meta-test losses through every updated meta learner.

    Classification and triplet terms are computed once per theta_M_i';
    depth and segmentation are computed once and shared by every bundle.

    Args:
        model: Network
        theta_M_primes: Updated meta learners (at least one)
        batch: Meta-test batch
        weights: Loss weights (for the bundle totals)
        triplet: Triplet settings
        shared: Precomputed `model.shared_forward(batch.x)`

    Returns:
        One LossBundle per updated learner
    """
    if not theta_M_primes:
        raise ValueError("meta_test_losses needs at least one updated meta learner")
    shared = shared if shared is not None else model.shared_forward(batch.x)
    dep, seg = _auxiliary_losses(model, shared, batch)
    return [
        _meta_bundle(model, shared.pooled, batch.label, prime, triplet, weights, dep, seg)
        for prime in theta_M_primes
    ]


def meta_objective(
    model,
    episode: EpisodeSplit,
    cfg: MetaConfig,
    weights: LossWeights,
    triplet: Optional[TripletConfig] = None,
    inner_lr: Optional[float] = None
) -> Tuple[torch.Tensor, MetaStepReport]:
    """
    Build the overall objective of one episode without stepping.

    Args:
        model: Network
        episode: Meta-train / meta-test batches
        cfg: Meta configuration
        weights: Loss weights
        triplet: Triplet settings of the current stage
        inner_lr: Override of cfg.inner_lr (0 makes first- and second-order
            modes coincide)

    Returns:
        (total loss tensor, report with float bundles and no grad norms)
    """
    triplet = triplet or TripletConfig()
    inner_lr = cfg.inner_lr if inner_lr is None else inner_lr
    theta_M = model.meta_parameters()

    if not cfg.meta_learning:
        return _joint_objective(model, episode, weights, triplet, theta_M)

    train_bundles, primes = [], []
    for batch in episode.meta_train:
        shared = model.shared_forward(batch.x)
        dep, seg = _auxiliary_losses(model, shared, batch)
        train_bundles.append(
            _meta_bundle(model, shared.pooled, batch.label, theta_M, triplet, weights, dep, seg)
        )
        primes.append(inner_update(
            model, theta_M, shared.pooled, batch.label, inner_lr, triplet,
            second_order=cfg.second_order,
            include_triplet=weights.lambda_trip > 0,
        ))

    test_bundles = meta_test_losses(model, primes, episode.meta_test, weights, triplet)

    mtrn = aggregate_meta_train(train_bundles, weights)
    mtst = aggregate_meta_test(test_bundles, weights)
    total = overall_loss(mtrn, mtst, weights)

    report = _report(train_bundles, test_bundles, mtrn, mtst, weights)
    report.meta_train_domains = episode.meta_train_ids
    report.meta_test_domain = episode.meta_test.domain_id
    return total, report


def _joint_objective(model, episode, weights, triplet, theta_M):
    """Plain multi-task training on every source batch with the shared theta_M."""
    bundles = []
    for batch in episode.all_batches:
        shared = model.shared_forward(batch.x)
        dep, seg = _auxiliary_losses(model, shared, batch)
        bundles.append(_meta_bundle(model, shared.pooled, batch.label, theta_M, triplet, weights, dep, seg))

    mtrn = aggregate_meta_train(bundles, weights)
    mtst = LossBundle.from_terms(weights)
    total = overall_loss(mtrn, mtst, weights)

    report = _report(bundles, [], mtrn, mtst, weights)
    report.meta_train_domains = [b.domain_id for b in episode.all_batches]
    return total, report


def _report(train_bundles, test_bundles, mtrn, mtst, weights) -> MetaStepReport:
    mtrn_f, mtst_f = mtrn.detached(), mtst.detached()
    return MetaStepReport(
        meta_train=tuple(b.detached() for b in train_bundles),
        meta_test=tuple(b.detached() for b in test_bundles),
        meta_train_stage=mtrn_f,
        meta_test_stage=mtst_f,
        total=float(overall_loss(mtrn_f, mtst_f, weights)),
    )


def group_grad_norms(model) -> Dict[str, float]:
    """L2 norm of the accumulated gradients of every parameter group."""
    norms = {}
    for name, params in model.param_groups().items():
        squares = [p.grad.detach().pow(2).sum() for p in params if p.grad is not None]
        norms[name] = float(torch.stack(squares).sum().sqrt().item()) if squares else 0.0
    return norms


def meta_step(
    model,
    optimizer: torch.optim.Optimizer,
    episode: EpisodeSplit,
    cfg: MetaConfig,
    weights: LossWeights,
    triplet: Optional[TripletConfig] = None
):
    """
    One meta-optimization step.

    Args:
        model: Network (updated in place)
        optimizer: Outer optimizer over all parameter groups
        episode: Episode to learn from
        cfg: Meta configuration
        weights: Loss weights
        triplet: Triplet settings of the current stage

    Returns:
        (model, MetaStepReport)

    Raises:
        NumericalAbort: The overall loss is not finite; parameters untouched
    """
    model.train()
    optimizer.zero_grad(set_to_none=True)

    total, report = meta_objective(model, episode, cfg, weights, triplet)
    if not math.isfinite(report.total) or not torch.isfinite(total).item():
        raise NumericalAbort(f"Non-finite overall loss {report.total}", report=report)

    total.backward()
    report.grad_norms = group_grad_norms(model)
    optimizer.step()
    return model, report


def build_optimizer(model, cfg: MetaConfig) -> torch.optim.Adam:
    """Adam over all four parameter groups with the configured decay."""
    return torch.optim.Adam(
        model.parameters(),
        lr=cfg.lr,
        betas=(cfg.beta1, cfg.beta2),
        weight_decay=cfg.weight_decay,
    )
