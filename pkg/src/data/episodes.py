"""
Episode sampling for meta-learning.

Each training iteration partitions the N source domains into N-1 meta-train
domains and one meta-test domain and draws a label-balanced batch from every
domain. Domains are converted to 6-channel tensors once, when the sampler is
built; sampling only indexes into those tensors.

Author: Facet Development
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from .color import make_model_input, resize_mask
from .schema import DomainDataset
from ..config.labels import LIVE, SPOOF
from ..utils.errors import DataError

logger = logging.getLogger(__name__)

MIN_LIVE = 2
MIN_SPOOF = 1


@dataclass(frozen=True)
class EpisodeBatch:
    """
    One domain's batch inside an episode.

    Attributes:
        domain_id: Source domain index
        indices: Sample indices into the domain dataset (live first, then spoof)
        x: float32 B x 6 x H x W model input
        label: float32 B labels (1 live, 0 spoof)
        depth: float32 B x 32 x 32 depth ground truth
        parsing: int64 B x H x W parsing ground truth (None when not needed)
    """

    domain_id: int
    indices: np.ndarray
    x: torch.Tensor
    label: torch.Tensor
    depth: torch.Tensor
    parsing: Optional[torch.Tensor] = None

    @property
    def n_live(self) -> int:
        return int((self.label == LIVE).sum().item())

    @property
    def n_spoof(self) -> int:
        return int((self.label == SPOOF).sum().item())

    def __len__(self) -> int:
        return int(self.label.shape[0])


@dataclass(frozen=True)
class EpisodeSplit:
    """
    One iteration's partition of the source domains.

    Attributes:
        meta_train: Batches of the N-1 meta-train domains
        meta_test: Batch of the held-out meta-test domain
    """

    meta_train: Tuple[EpisodeBatch, ...]
    meta_test: EpisodeBatch

    def __post_init__(self):
        object.__setattr__(self, "meta_train", tuple(self.meta_train))
        if not self.meta_train:
            raise DataError("An episode needs at least one meta-train domain")
        train_ids = [b.domain_id for b in self.meta_train]
        if self.meta_test.domain_id in train_ids:
            raise DataError(
                f"Meta-test domain {self.meta_test.domain_id} also appears in meta-train {train_ids}"
            )
        for batch in self.all_batches:
            if batch.n_live < MIN_LIVE or batch.n_spoof < MIN_SPOOF:
                raise DataError(
                    f"Domain {batch.domain_id} batch has {batch.n_live} live / {batch.n_spoof} spoof, "
                    f"needs >= {MIN_LIVE} live and >= {MIN_SPOOF} spoof"
                )

    @property
    def all_batches(self) -> Tuple[EpisodeBatch, ...]:
        return self.meta_train + (self.meta_test,)

    @property
    def meta_train_ids(self) -> List[int]:
        return [b.domain_id for b in self.meta_train]


def batch_composition(batch_size: int) -> Tuple[int, int]:
    """(n_live, n_spoof) of a balanced batch: ceil(b/2) live, the rest spoof."""
    n_live = math.ceil(batch_size / 2)
    return n_live, batch_size - n_live


class _DomainTensors:
    """Pre-converted tensors of one domain."""

    def __init__(self, dataset: DomainDataset, image_size: Optional[int], with_parsing: bool):
        size = image_size or dataset.samples[0].image_size
        self.domain_id = dataset.domain_id
        self.name = dataset.name
        self.live_indices = dataset.indices_of(LIVE)
        self.spoof_indices = dataset.indices_of(SPOOF)

        inputs = np.stack([make_model_input(s, size) for s in dataset.samples])
        self.x = torch.from_numpy(inputs).permute(0, 3, 1, 2).contiguous()
        self.label = torch.from_numpy(dataset.labels.astype(np.float32))
        self.depth = torch.from_numpy(np.stack([s.depth_gt for s in dataset.samples]).astype(np.float32))
        self.parsing = None
        if with_parsing:
            masks = np.stack([resize_mask(s.parsing_gt, size) for s in dataset.samples])
            self.parsing = torch.from_numpy(masks.astype(np.int64))

    def batch(self, indices: np.ndarray) -> EpisodeBatch:
        index = torch.from_numpy(indices.astype(np.int64))
        return EpisodeBatch(
            domain_id=self.domain_id,
            indices=indices,
            x=self.x.index_select(0, index),
            label=self.label.index_select(0, index),
            depth=self.depth.index_select(0, index),
            parsing=None if self.parsing is None else self.parsing.index_select(0, index),
        )


class EpisodeSampler:
    """
    Draws meta-learning episodes from a fixed set of source domains.

    Attributes:
        batch_size: Samples per domain batch
        n_live: Live samples per batch
        n_spoof: Spoof samples per batch

    Example:
        >>> sampler = EpisodeSampler(domains, batch_size=20)
        >>> episode = sampler.sample(np.random.default_rng(0))
        >>> len(episode.meta_train)
        2
    """

    def __init__(
        self,
        domains: Sequence[DomainDataset],
        batch_size: int = 20,
        image_size: Optional[int] = None,
        with_parsing: bool = True
    ):
        """
        Args:
            domains: Source domains (at least two, distinct domain ids)
            batch_size: Samples drawn per domain and episode
            image_size: Side length of the model input; None keeps sample size
            with_parsing: Keep parsing ground truth tensors

        Raises:
            DataError: Too few domains, duplicate domain ids, or a domain that
                cannot fill the live/spoof share of a batch
        """
        if len(domains) < 2:
            raise DataError(f"Episode sampling needs >= 2 domains, got {len(domains)}")
        ids = [d.domain_id for d in domains]
        if len(set(ids)) != len(ids):
            raise DataError(f"Source domains must have distinct domain ids, got {ids}")

        self.batch_size = batch_size
        self.n_live, self.n_spoof = batch_composition(batch_size)
        if self.n_live < MIN_LIVE or self.n_spoof < MIN_SPOOF:
            raise DataError(
                f"batch_size {batch_size} cannot hold {MIN_LIVE} live and {MIN_SPOOF} spoof samples"
            )
        for dataset in domains:
            if dataset.n_live < self.n_live or dataset.n_spoof < self.n_spoof:
                raise DataError(
                    f"Domain '{dataset.name}' has {dataset.n_live} live / {dataset.n_spoof} spoof "
                    f"samples, a batch of {batch_size} needs {self.n_live} / {self.n_spoof}"
                )

        self._domains = [_DomainTensors(d, image_size, with_parsing) for d in domains]
        logger.debug("Episode sampler over %s, batch %d", [d.name for d in self._domains], batch_size)

    @property
    def n_domains(self) -> int:
        return len(self._domains)

    def _draw(self, domain: _DomainTensors, rng: np.random.Generator) -> EpisodeBatch:
        live = rng.choice(domain.live_indices, size=self.n_live, replace=False)
        spoof = rng.choice(domain.spoof_indices, size=self.n_spoof, replace=False)
        return domain.batch(np.concatenate([live, spoof]))

    def sample(self, rng: np.random.Generator) -> EpisodeSplit:
        """Pick a meta-test domain uniformly, then draw one batch per domain."""
        test_position = int(rng.integers(self.n_domains))
        batches = [self._draw(domain, rng) for domain in self._domains]
        return EpisodeSplit(
            meta_train=tuple(b for i, b in enumerate(batches) if i != test_position),
            meta_test=batches[test_position],
        )


def sample_episode(
    domains: Sequence[DomainDataset],
    batch_size: int,
    rng: np.random.Generator,
    image_size: Optional[int] = None
) -> EpisodeSplit:
    """
    Draw a single episode.

    Convenience wrapper around EpisodeSampler; training loops should build the
    sampler once and call `sample` repeatedly.
    """
    return EpisodeSampler(domains, batch_size, image_size).sample(rng)
