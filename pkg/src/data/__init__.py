"""
Data pipeline for Facet.

Components:
- ImageSample / DomainDataset: validated, immutable sample containers
- synthetic: offline multi-domain generator with domain shifts
- repository: on-disk manifest + PNG layout (save_domain / load_domain)
- color: RGB/HSV conversion and 6-channel model input
- episodes: meta-train / meta-test episode sampling
"""

from .schema import ImageSample, DomainDataset, DomainShift, SynthConfig
from .color import rgb_to_hsv, hsv_to_rgb, make_model_input
from .synthetic import generate_synthetic_domain, generate_domains, carve_dev_split
from .repository import save_domain, load_domain, load_domains, list_domains
from .episodes import EpisodeBatch, EpisodeSplit, EpisodeSampler, sample_episode

__all__ = [
    "ImageSample",
    "DomainDataset",
    "DomainShift",
    "SynthConfig",
    "rgb_to_hsv",
    "hsv_to_rgb",
    "make_model_input",
    "generate_synthetic_domain",
    "generate_domains",
    "carve_dev_split",
    "save_domain",
    "load_domain",
    "load_domains",
    "list_domains",
    "EpisodeBatch",
    "EpisodeSplit",
    "EpisodeSampler",
    "sample_episode",
]
