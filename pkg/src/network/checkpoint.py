"""
Checkpoint directory format.

    <dir>/extractor.pt      theta_F state dict
    <dir>/depth.pt          theta_D state dict
    <dir>/parsing.pt        theta_S state dict (absent without the parsing module)
    <dir>/meta_learner.pt   theta_M state dict
    <dir>/optimizer.pt      outer optimizer state (optional)
    <dir>/rng.pt            torch CPU generator state
    <dir>/meta.json         architecture, step, seed, numpy RNG state, resolved config

Save followed by load round-trips every tensor bit-exactly.

Author: Facet Development
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch

from .model import MultiTaskFASNet, NetworkConfig
from ..utils.errors import ConfigError, DataError

logger = logging.getLogger(__name__)

META_FILE = "meta.json"
GROUP_FILES = {
    "extractor": "extractor.pt",
    "depth": "depth.pt",
    "parsing": "parsing.pt",
    "meta": "meta_learner.pt",
}
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """
    Loaded checkpoint.

    Attributes:
        model: Network with restored weights
        step: Number of completed training iterations
        seed: Training seed
        config: Flattened run configuration recorded at save time
        optimizer_state: Outer optimizer state dict (None if not saved)
        numpy_rng_state: bit_generator state of the episode RNG
        torch_rng_state: torch CPU generator state
        path: Checkpoint directory
    """

    model: MultiTaskFASNet
    step: int = 0
    seed: Optional[int] = None
    config: Dict[str, Any] = field(default_factory=dict)
    optimizer_state: Optional[Dict[str, Any]] = None
    numpy_rng_state: Optional[Dict[str, Any]] = None
    torch_rng_state: Optional[torch.Tensor] = None
    path: Optional[Path] = None

    def restore_rng(self) -> np.random.Generator:
        """Episode RNG positioned exactly where training stopped."""
        rng = np.random.default_rng()
        if self.numpy_rng_state is not None:
            rng.bit_generator.state = self.numpy_rng_state
        return rng


def _modules(model: MultiTaskFASNet) -> Dict[str, torch.nn.Module]:
    modules = {"extractor": model.extractor, "depth": model.depth, "meta": model.meta}
    if model.parsing is not None:
        modules["parsing"] = model.parsing
    return modules


def save_checkpoint(
    path: Union[str, Path],
    model: MultiTaskFASNet,
    optimizer: Optional[torch.optim.Optimizer] = None,
    step: int = 0,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None
) -> Path:
    """
    Write a checkpoint directory.

    Args:
        path: Target directory (created if missing, files overwritten)
        model: Network to save
        optimizer: Outer optimizer whose state should be kept for resuming
        step: Completed iterations
        rng: Episode RNG to record
        seed: Training seed
        config: Flattened run configuration

    Returns:
        The checkpoint directory

    Raises:
        OSError: Disk failure, with the checkpoint path in the message
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        for name, module in _modules(model).items():
            torch.save(module.state_dict(), path / GROUP_FILES[name])
        if optimizer is not None:
            torch.save(optimizer.state_dict(), path / "optimizer.pt")
        torch.save(torch.get_rng_state(), path / "rng.pt")

        meta = {
            "format_version": FORMAT_VERSION,
            "architecture": model.cfg.to_dict(),
            "step": int(step),
            "seed": seed,
            "numpy_rng_state": rng.bit_generator.state if rng is not None else None,
            "config": config or {},
        }
        with open(path / META_FILE, "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2)
    except OSError as e:
        raise OSError(f"Failed to write checkpoint {path}: {e}") from e

    logger.debug("Saved checkpoint %s (step %d)", path, step)
    return path


def read_checkpoint_meta(path: Union[str, Path]) -> Dict[str, Any]:
    """Parse meta.json of a checkpoint directory."""
    meta_path = Path(path) / META_FILE
    if not meta_path.exists():
        raise DataError(f"Not a checkpoint directory (missing {meta_path})")
    with open(meta_path, "r", encoding="utf-8") as f:
        return json.load(f)


def load_checkpoint(
    path: Union[str, Path],
    expected: Optional[NetworkConfig] = None
) -> Checkpoint:
    """
    Load a checkpoint directory.

    Args:
        path: Checkpoint directory
        expected: Architecture the caller was configured with; a mismatch
            with the stored architecture is rejected

    Returns:
        Checkpoint with the restored model (eval mode)

    Raises:
        ConfigError: Stored architecture differs from `expected`
        DataError: Missing or unreadable checkpoint files
    """
    path = Path(path)
    meta = read_checkpoint_meta(path)
    stored = NetworkConfig.from_dict(meta["architecture"])

    if expected is not None and expected.to_dict() != stored.to_dict():
        mine, theirs = expected.to_dict(), stored.to_dict()
        diffs = [f"network.{k}: config {mine[k]!r} vs checkpoint {theirs[k]!r}"
                 for k in mine if mine[k] != theirs.get(k)]
        raise ConfigError("Checkpoint architecture mismatch: " + "; ".join(diffs))

    model = MultiTaskFASNet(stored)
    for name, module in _modules(model).items():
        file = path / GROUP_FILES[name]
        if not file.exists():
            raise DataError(f"Checkpoint {path} is missing {file.name}")
        module.load_state_dict(torch.load(file, map_location="cpu", weights_only=True))
    model.eval()

    optimizer_state = None
    if (path / "optimizer.pt").exists():
        optimizer_state = torch.load(path / "optimizer.pt", map_location="cpu", weights_only=True)
    torch_rng_state = None
    if (path / "rng.pt").exists():
        torch_rng_state = torch.load(path / "rng.pt", weights_only=True)

    return Checkpoint(
        model=model,
        step=int(meta.get("step", 0)),
        seed=meta.get("seed"),
        config=meta.get("config", {}),
        optimizer_state=optimizer_state,
        numpy_rng_state=meta.get("numpy_rng_state"),
        torch_rng_state=torch_rng_state,
        path=path,
    )
