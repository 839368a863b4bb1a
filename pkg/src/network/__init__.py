"""
Network module for Facet.

Components:
- MultiTaskFASNet: extractor, depth head, parsing U-net with ASC, meta learner
- NetworkConfig: architecture hyperparameters
- ECA / ConvBlock: building blocks
- save_checkpoint / load_checkpoint: checkpoint directory format
"""

from .blocks import ConvBlock, ECA
from .model import (
    MultiTaskFASNet,
    NetworkConfig,
    NetworkParams,
    FeatureMap,
    ForwardOutputs,
    SharedOutputs,
    build_model,
    GROUP_NAMES,
)
from .checkpoint import Checkpoint, save_checkpoint, load_checkpoint

__all__ = [
    "ConvBlock",
    "ECA",
    "MultiTaskFASNet",
    "NetworkConfig",
    "NetworkParams",
    "FeatureMap",
    "ForwardOutputs",
    "SharedOutputs",
    "build_model",
    "GROUP_NAMES",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
