"""
Synthetic multi-domain face anti-spoofing data.

Stands in for the real datasets so that every experiment is runnable offline.
Each domain renders ellipsoidal "faces" with a 13-region parsing layout and a
radially decaying depth map. Spoof samples reuse a live render composited with
the domain's periodic moire texture and carry an all-zero depth map. Domains
differ by hue rotation, blur, sensor noise and moire period, mimicking
illumination / device / attack variations between real datasets.

Key Features:
- Deterministic given (seed, domain index), independent of worker count
- Every parsing label present in every live render (image_size >= 32)
- Stratified, seeded dev-split carving

Author: Facet Development
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter

from .color import rgb_to_hsv, hsv_to_rgb
from .schema import FULL_PARSING_SIZE, DomainDataset, DomainShift, ImageSample, SynthConfig
from ..config.labels import DEPTH_SIZE, LIVE, SPOOF
from ..utils.errors import DataError

logger = logging.getLogger(__name__)

# Face geometry in normalized units (fraction of image side), relative to
# the face center. Ellipses: (cu, cv, ru, rv); boxes: (cu, cv, hu, hv).
FACE_ELLIPSE = (0.0, 0.0, 0.30, 0.38)
EAR_ELLIPSES = {"left_ear": (-0.31, 0.0, 0.05, 0.09), "right_ear": (0.31, 0.0, 0.05, 0.09)}
BROW_BOXES = {"left_brow": (-0.11, -0.15, 0.07, 0.02), "right_brow": (0.11, -0.15, 0.07, 0.02)}
RIM_ELLIPSES = [(-0.11, -0.07, 0.085, 0.055), (0.11, -0.07, 0.085, 0.055)]
BRIDGE_BOX = (0.0, -0.07, 0.04, 0.015)
EYE_ELLIPSES = {"left_eye": (-0.11, -0.07, 0.05, 0.025), "right_eye": (0.11, -0.07, 0.05, 0.025)}
NOSE_BOX = (0.0, 0.04, 0.035, 0.07)
MOUTH_ELLIPSE = (0.0, 0.20, 0.11, 0.05)
UPPER_LIP_BOX = (0.0, 0.175, 0.06, 0.018)
LOWER_LIP_BOX = (0.0, 0.225, 0.06, 0.018)

LABEL_INDEX = {
    "background": 0, "skin": 1, "left_brow": 2, "right_brow": 3,
    "left_eye": 4, "right_eye": 5, "eyeglasses": 6, "left_ear": 7,
    "right_ear": 8, "nose": 9, "mouth": 10, "upper_lip": 11, "lower_lip": 12,
}

FIXED_COLORS = {
    "left_brow": (0.20, 0.12, 0.08),
    "right_brow": (0.20, 0.12, 0.08),
    "eyeglasses": (0.05, 0.05, 0.06),
    "left_eye": (0.25, 0.18, 0.14),
    "right_eye": (0.25, 0.18, 0.14),
    "mouth": (0.35, 0.05, 0.06),
    "upper_lip": (0.78, 0.28, 0.32),
    "lower_lip": (0.70, 0.22, 0.27),
}


def _ellipse(u: np.ndarray, v: np.ndarray, shape: Tuple[float, float, float, float]) -> np.ndarray:
    cu, cv, ru, rv = shape
    return ((u - cu) / ru) ** 2 + ((v - cv) / rv) ** 2 <= 1.0


def _box(u: np.ndarray, v: np.ndarray, shape: Tuple[float, float, float, float]) -> np.ndarray:
    cu, cv, hu, hv = shape
    return (np.abs(u - cu) <= hu) & (np.abs(v - cv) <= hv)


def _face_coords(size: int, center: Tuple[float, float], scale: float) -> Tuple[np.ndarray, np.ndarray]:
    """Pixel-center coordinates in face units for a size x size grid."""
    axis = (np.arange(size) + 0.5) / size
    y, x = np.meshgrid(axis, axis, indexing="ij")
    return (x - center[0]) / scale, (y - center[1]) / scale


def _depth_profile(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Face-shaped depth: paraboloid dome plus a nose bump, zero off the face."""
    _, _, ru, rv = FACE_ELLIPSE
    r2 = (u / ru) ** 2 + (v / rv) ** 2
    dome = 0.85 * np.clip(1.0 - r2, 0.0, 1.0)
    nose = 0.15 * np.exp(-(u ** 2 + (v - NOSE_BOX[1]) ** 2) / (2 * 0.035 ** 2))
    depth = np.where(r2 <= 1.0, dome + nose, 0.0)
    return np.clip(depth, 0.0, 1.0)


def render_parsing(size: int, center: Tuple[float, float], scale: float) -> np.ndarray:
    """
    Rasterize the 13-region parsing layout.

    Regions are painted back to front; later regions overwrite earlier ones.
    Every label is present only when `size` is at least FULL_PARSING_SIZE.

    Args:
        size: Image side length
        center: Face center in normalized image coordinates
        scale: Face scale factor

    Returns:
        uint8 size x size mask with labels 0..12
    """
    u, v = _face_coords(size, center, scale)
    mask = np.zeros((size, size), dtype=np.uint8)

    for name, shape in EAR_ELLIPSES.items():
        mask[_ellipse(u, v, shape)] = LABEL_INDEX[name]
    mask[_ellipse(u, v, FACE_ELLIPSE)] = LABEL_INDEX["skin"]
    for name, shape in BROW_BOXES.items():
        mask[_box(u, v, shape)] = LABEL_INDEX[name]
    for shape in RIM_ELLIPSES:
        mask[_ellipse(u, v, shape)] = LABEL_INDEX["eyeglasses"]
    mask[_box(u, v, BRIDGE_BOX)] = LABEL_INDEX["eyeglasses"]
    for name, shape in EYE_ELLIPSES.items():
        mask[_ellipse(u, v, shape)] = LABEL_INDEX[name]
    mask[_box(u, v, NOSE_BOX)] = LABEL_INDEX["nose"]
    mask[_ellipse(u, v, MOUTH_ELLIPSE)] = LABEL_INDEX["mouth"]
    mask[_box(u, v, UPPER_LIP_BOX)] = LABEL_INDEX["upper_lip"]
    mask[_box(u, v, LOWER_LIP_BOX)] = LABEL_INDEX["lower_lip"]
    return mask


def render_depth(center: Tuple[float, float], scale: float, size: int = DEPTH_SIZE) -> np.ndarray:
    """Depth ground truth of a live face on a size x size grid."""
    u, v = _face_coords(size, center, scale)
    return _depth_profile(u, v)


def _quantize(values: np.ndarray) -> np.ndarray:
    """Round to 8-bit levels so PNG storage is lossless."""
    levels = np.clip(np.round(values * 255.0), 0, 255).astype(np.uint8)
    return levels.astype(np.float32) / np.float32(255.0)


class SyntheticFaceGenerator:
    """
    Renderer for one synthetic domain.

    Attributes:
        cfg: Generator configuration
        domain_index: Index of the domain being rendered
        shift: Appearance shift of this domain

    Example:
        >>> generator = SyntheticFaceGenerator(SynthConfig(image_size=64), 0)
        >>> dataset = generator.generate()
        >>> len(dataset)
        200
    """

    def __init__(self, cfg: SynthConfig, domain_index: int):
        if not 0 <= domain_index < cfg.n_domains:
            raise DataError(f"domain_index {domain_index} outside 0..{cfg.n_domains - 1}")
        self.cfg = cfg
        self.domain_index = domain_index
        self.shift: DomainShift = cfg.shifts[domain_index]
        self.rng = np.random.default_rng([cfg.seed, domain_index])

    def _render_live(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Render one live face: (rgb float64, parsing uint8, depth 32x32)."""
        size = self.cfg.image_size
        rng = self.rng
        center = (0.5 + rng.uniform(-0.03, 0.03), 0.5 + rng.uniform(-0.03, 0.03))
        scale = rng.uniform(0.95, 1.05)

        parsing = render_parsing(size, center, scale)
        u, v = _face_coords(size, center, scale)
        shading = 0.55 + 0.45 * _depth_profile(u, v)

        background = rng.uniform(0.1, 0.9, size=3)
        gradient = np.linspace(-0.08, 0.08, size)[None, :, None]
        rgb = np.broadcast_to(background, (size, size, 3)) + gradient

        skin = rng.uniform([0.55, 0.35, 0.25], [0.95, 0.75, 0.60])
        colors = dict(FIXED_COLORS)
        colors["skin"] = skin
        colors["left_ear"] = colors["right_ear"] = skin * 0.95
        colors["nose"] = skin * 0.90

        rgb = rgb.copy()
        for name, label in LABEL_INDEX.items():
            if label == 0:
                continue
            region = parsing == label
            rgb[region] = np.asarray(colors[name]) * shading[region][:, None]

        depth = render_depth(center, scale)
        return np.clip(rgb, 0.0, 1.0), parsing, depth

    def _moire(self) -> np.ndarray:
        """Periodic two-grating interference texture in [0, 1]."""
        size = self.cfg.image_size
        rng = self.rng
        period = self.shift.spoof_period
        theta = rng.uniform(0.0, np.pi)
        delta = 0.2
        y, x = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        g1 = np.sin(2 * np.pi * (x * np.cos(theta) + y * np.sin(theta)) / period + rng.uniform(0, 2 * np.pi))
        g2 = np.sin(
            2 * np.pi * (x * np.cos(theta + delta) + y * np.sin(theta + delta)) / (period * 1.1)
            + rng.uniform(0, 2 * np.pi)
        )
        return 0.5 + 0.25 * (g1 + g2)

    def _apply_shift(self, rgb: np.ndarray) -> np.ndarray:
        """Domain appearance shift: hue rotation, blur, sensor noise."""
        shift = self.shift
        if shift.hue_shift:
            hsv = rgb_to_hsv(rgb)
            hsv[..., 0] = (hsv[..., 0] + shift.hue_shift / 360.0) % 1.0
            rgb = hsv_to_rgb(hsv)
        if shift.blur_radius > 0:
            rgb = gaussian_filter(rgb, sigma=(shift.blur_radius, shift.blur_radius, 0))
        if shift.noise_sigma > 0:
            rgb = rgb + self.rng.normal(0.0, shift.noise_sigma, size=rgb.shape)
        return np.clip(rgb, 0.0, 1.0)

    def render_sample(self, label: int, index: int) -> ImageSample:
        """Render one sample with the given label."""
        rgb, parsing, depth = self._render_live()

        if label == SPOOF:
            strength = self.cfg.spoof_strength
            tint = self.rng.uniform(0.7, 1.0, size=3)
            texture = self._moire()[..., None] * tint
            flattened = 0.85 * rgb + 0.15 * rgb.mean(axis=(0, 1), keepdims=True)
            rgb = (1.0 - strength) * flattened + strength * texture
            depth = np.zeros_like(depth)

        rgb = self._apply_shift(rgb)
        name = self.cfg.domain_name(self.domain_index)
        return ImageSample(
            rgb=_quantize(rgb),
            label=label,
            depth_gt=_quantize(depth),
            parsing_gt=parsing,
            domain_id=self.domain_index,
            sample_id=f"{name}_{index:05d}",
        )

    def generate(self) -> DomainDataset:
        """Render the whole domain; live and spoof samples alternate."""
        samples = [
            self.render_sample(LIVE if i % 2 == 0 else SPOOF, i)
            for i in range(self.cfg.samples_per_domain)
        ]
        return DomainDataset(
            name=self.cfg.domain_name(self.domain_index),
            samples=tuple(samples),
            split="train",
            domain_id=self.domain_index,
        )


def generate_synthetic_domain(cfg: SynthConfig, domain_index: int) -> DomainDataset:
    """
    Generate one synthetic domain.

    Args:
        cfg: Generator configuration
        domain_index: Which domain to render (0-based)

    Returns:
        DomainDataset (split "train") with samples_per_domain samples

    Example:
        >>> ds = generate_synthetic_domain(SynthConfig(image_size=64, seed=3), 1)
        >>> ds.name
        'synth1'
    """
    dataset = SyntheticFaceGenerator(cfg, domain_index).generate()
    logger.debug("Generated %s: %d live / %d spoof", dataset.name, dataset.n_live, dataset.n_spoof)
    return dataset


def generate_domains(cfg: SynthConfig, workers: Optional[int] = None) -> List[DomainDataset]:
    """
    Generate every domain of a configuration, one thread per domain.

    Output order follows the domain index and does not depend on `workers`.
    """
    if not cfg.covers_all_parsing_labels:
        logger.warning(
            "image_size %d is below %d; live parsing masks may miss some labels",
            cfg.image_size, FULL_PARSING_SIZE,
        )
    workers = workers or cfg.n_domains
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: generate_synthetic_domain(cfg, i), range(cfg.n_domains)))


def carve_dev_split(
    dataset: DomainDataset,
    fraction: float = 0.2,
    seed: int = 0
) -> Tuple[DomainDataset, DomainDataset]:
    """
    Split a dataset into train and dev parts, stratified by label.

    Args:
        dataset: Source dataset
        fraction: Share of each label moved to dev
        seed: Seed of the deterministic carving

    Returns:
        (train, dev) datasets, each keeping dataset order

    Raises:
        DataError: If a label cannot keep at least one sample on each side
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"dev fraction must lie in (0, 1), got {fraction}")

    rng = np.random.default_rng([seed, dataset.domain_id, 7])
    dev_indices: List[int] = []
    for label in (LIVE, SPOOF):
        indices = dataset.indices_of(label)
        n_dev = max(1, int(round(fraction * len(indices))))
        if len(indices) - n_dev < 1:
            raise DataError(
                f"Domain '{dataset.name}' has too few samples with label {label} to carve a dev split"
            )
        dev_indices.extend(rng.permutation(indices)[:n_dev].tolist())

    dev_set = set(dev_indices)
    train_indices = [i for i in range(len(dataset)) if i not in dev_set]
    return (
        dataset.subset(train_indices, split="train"),
        dataset.subset(sorted(dev_set), split="dev"),
    )


def label_histogram(mask: np.ndarray, n_classes: int = len(LABEL_INDEX)) -> Dict[int, int]:
    """Pixel count per parsing label."""
    counts = np.bincount(mask.ravel(), minlength=n_classes)
    return {label: int(count) for label, count in enumerate(counts)}
