"""
Domain types for the Facet data pipeline.

Types:
- ImageSample: one face image with label, depth map, parsing mask and domain id
- DomainDataset: the samples of one domain for one split
- DomainShift: per-domain appearance shift used by the synthetic generator
- SynthConfig: synthetic generator configuration

All containers are immutable after construction and safe to share across
threads. Invariants are checked at construction time and violations raise
DataError.

Author: Facet Development
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple, Optional, Iterator

import numpy as np

from ..config.labels import LIVE, SPOOF, SPLITS
from ..utils.errors import DataError
from ..utils.validators import validate_sample


@dataclass(frozen=True, eq=False)
class ImageSample:
    """
    One face image with its supervision signals.

    Attributes:
        rgb: float32 H x W x 3 image in [0, 1]
        label: 1 for live, 0 for spoof
        depth_gt: float32 32 x 32 depth map in [0, 1] (all zeros for spoof)
        parsing_gt: uint8 H x W parsing mask with labels 0..12
        domain_id: index of the source domain
        sample_id: identifier used in the manifest
    """

    rgb: np.ndarray
    label: int
    depth_gt: np.ndarray
    parsing_gt: np.ndarray
    domain_id: int
    sample_id: str = ""

    def __post_init__(self):
        is_valid, error = validate_sample(
            self.rgb, self.label, self.depth_gt, self.parsing_gt, self.domain_id
        )
        if not is_valid:
            raise DataError(f"Invalid sample '{self.sample_id}': {error}")
        for array in (self.rgb, self.depth_gt, self.parsing_gt):
            array.setflags(write=False)

    @property
    def is_live(self) -> bool:
        return self.label == LIVE

    @property
    def image_size(self) -> int:
        return int(self.rgb.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageSample):
            return NotImplemented
        return (
            self.label == other.label
            and self.domain_id == other.domain_id
            and self.sample_id == other.sample_id
            and np.array_equal(self.rgb, other.rgb)
            and np.array_equal(self.depth_gt, other.depth_gt)
            and np.array_equal(self.parsing_gt, other.parsing_gt)
        )

    __hash__ = None


@dataclass(frozen=True)
class DomainDataset:
    """
    Samples of one domain for one split.

    Attributes:
        name: Domain name (directory name in the dataset layout)
        samples: Ordered samples
        split: One of train / dev / test
        domain_id: Domain index shared by every sample
    """

    name: str
    samples: Tuple[ImageSample, ...]
    split: str = "train"
    domain_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.split not in SPLITS:
            raise DataError(f"Domain '{self.name}': unknown split '{self.split}'")
        n_live = sum(1 for s in self.samples if s.label == LIVE)
        n_spoof = len(self.samples) - n_live
        if n_live < 1 or n_spoof < 1:
            raise DataError(
                f"Domain '{self.name}' ({self.split}) needs at least one live and one "
                f"spoof sample, has {n_live} live / {n_spoof} spoof"
            )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[ImageSample]:
        return iter(self.samples)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def indices_of(self, label: int) -> np.ndarray:
        """Indices of samples with the given label, in dataset order."""
        return np.flatnonzero(self.labels == label)

    @property
    def n_live(self) -> int:
        return int((self.labels == LIVE).sum())

    @property
    def n_spoof(self) -> int:
        return int((self.labels == SPOOF).sum())

    def with_split(self, split: str) -> "DomainDataset":
        """Copy of this dataset under another split name."""
        return replace(self, split=split)

    def subset(self, indices, split: Optional[str] = None) -> "DomainDataset":
        """Dataset made of the samples at `indices` (order preserved)."""
        return DomainDataset(
            name=self.name,
            samples=tuple(self.samples[int(i)] for i in indices),
            split=split or self.split,
            domain_id=self.domain_id,
        )


@dataclass(frozen=True)
class DomainShift:
    """
    Appearance shift of one synthetic domain.

    Attributes:
        hue_shift: Hue rotation in degrees
        blur_radius: Gaussian blur sigma in pixels
        noise_sigma: Additive Gaussian noise standard deviation
        spoof_period: Period of the spoof moire texture in pixels
    """

    hue_shift: float = 0.0
    blur_radius: float = 0.0
    noise_sigma: float = 0.01
    spoof_period: float = 4.0


# Cycled when more domains are requested than rows exist.
DEFAULT_SHIFTS: List[DomainShift] = [
    DomainShift(hue_shift=0.0, blur_radius=0.0, noise_sigma=0.010, spoof_period=4.0),
    DomainShift(hue_shift=25.0, blur_radius=0.6, noise_sigma=0.025, spoof_period=6.0),
    DomainShift(hue_shift=-20.0, blur_radius=0.3, noise_sigma=0.015, spoof_period=5.0),
    DomainShift(hue_shift=45.0, blur_radius=0.8, noise_sigma=0.035, spoof_period=7.0),
    DomainShift(hue_shift=-40.0, blur_radius=0.5, noise_sigma=0.020, spoof_period=4.5),
    DomainShift(hue_shift=70.0, blur_radius=0.2, noise_sigma=0.030, spoof_period=5.5),
]


def default_shifts(n_domains: int) -> List[DomainShift]:
    """Deterministic default shift table for `n_domains` domains."""
    return [DEFAULT_SHIFTS[i % len(DEFAULT_SHIFTS)] for i in range(n_domains)]


# Smallest image side at which every parsing region covers a pixel in live renders.
FULL_PARSING_SIZE = 32


@dataclass(frozen=True)
class SynthConfig:
    """
    Synthetic multi-domain generator configuration.

    Attributes:
        image_size: Side length in pixels (multiple of 8; 64 desk scale, 256 full).
            Below FULL_PARSING_SIZE the thin regions (eyebrows, lips) can fall
            between pixel centers, so live parsing masks may miss labels.
        n_domains: Number of domains (>= 2)
        samples_per_domain: Samples generated per domain (half live, half spoof)
        shifts: Per-domain appearance shifts; defaults to the built-in table
        spoof_strength: Blend weight of the moire texture in spoof renders
        seed: Base random seed
    """

    image_size: int = 64
    n_domains: int = 4
    samples_per_domain: int = 200
    shifts: Tuple[DomainShift, ...] = field(default_factory=tuple)
    spoof_strength: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.image_size <= 0 or self.image_size % 8 != 0:
            raise DataError(
                f"image_size must be a positive multiple of 8, got {self.image_size}"
            )
        if self.n_domains < 2:
            raise DataError(f"n_domains must be >= 2, got {self.n_domains}")
        if self.samples_per_domain < 4:
            raise DataError("samples_per_domain must be >= 4")
        if not 0.0 <= self.spoof_strength <= 1.0:
            raise DataError("spoof_strength must lie in [0, 1]")
        shifts = tuple(self.shifts) or tuple(default_shifts(self.n_domains))
        if len(shifts) < self.n_domains:
            raise DataError(
                f"{len(shifts)} domain shifts given for {self.n_domains} domains"
            )
        object.__setattr__(self, "shifts", shifts)

    @property
    def covers_all_parsing_labels(self) -> bool:
        """Whether live renders are guaranteed to contain all parsing labels."""
        return self.image_size >= FULL_PARSING_SIZE

    def domain_name(self, domain_index: int) -> str:
        return f"synth{domain_index}"
