"""
Run configuration for Facet.

One JSON file of flat dotted keys, for example:

    {
        "data.root": "data/synthetic",
        "data.test_domain": "synth3",
        "meta.iterations": 1500,
        "loss.lambda_trip": 0.5
    }

Every key has a default; unknown keys are rejected. `--set key=value` overrides
are applied on top of the file. All validation problems are reported together
in one ConfigError.

Author: Facet Development
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .settings import settings
from ..data.schema import DomainShift, SynthConfig
from ..losses.objectives import LossWeights
from ..losses.triplet import TripletConfig
from ..meta.engine import MetaConfig
from ..network.model import NetworkConfig
from ..utils.errors import ConfigError, FacetError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class DataSection(_Section):
    root: str = settings.DATA_ROOT
    train_domains: List[str] = Field(default_factory=list)  # empty: every domain but the test one
    test_domain: Optional[str] = None
    dev_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    image_size: int = Field(64, gt=0)
    workers: Optional[int] = Field(None, ge=1)


class ShiftSection(_Section):
    hue_shift: float = 0.0
    blur_radius: float = Field(0.0, ge=0.0)
    noise_sigma: float = Field(0.01, ge=0.0)
    spoof_period: float = Field(4.0, gt=0.0)


class SynthSection(_Section):
    image_size: int = Field(64, gt=0)
    n_domains: int = 4
    samples_per_domain: int = 200
    spoof_strength: float = 0.25
    shifts: List[ShiftSection] = Field(default_factory=list)  # empty: built-in table
    seed: int = 0


class NetworkSection(_Section):
    widths: List[int] = Field(default_factory=lambda: [32, 64, 128])
    asc_channels: int = 32
    meta_hidden: int = 128
    eca_kernel: int = 3
    use_parsing: bool = True
    use_asc: bool = True


class MetaSection(_Section):
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


class LossSection(_Section):
    lambda_mtrn: float = 1.0
    lambda_mtst: float = 1.0
    lambda_cls: float = 1.0
    lambda_dep: float = 10.0
    lambda_seg: float = 1.0
    lambda_trip: float = 0.5
    triplet_variant: str = "one_side"
    triplet_reduction: str = "mean_active"


class RunConfig(_Section):
    """
    Fully resolved run configuration.

    Example:
        >>> cfg = RunConfig.load("configs/desk.json", overrides=["meta.iterations=10"])
        >>> cfg.meta.iterations
        10
        >>> cfg.flatten()["loss.lambda_dep"]
        10.0
    """

    data: DataSection = Field(default_factory=DataSection)
    synth: SynthSection = Field(default_factory=SynthSection)
    network: NetworkSection = Field(default_factory=NetworkSection)
    meta: MetaSection = Field(default_factory=MetaSection)
    loss: LossSection = Field(default_factory=LossSection)
    output_dir: str = settings.OUTPUT_DIR
    seed: int = 0

    # ==================== Construction ====================

    @classmethod
    def from_flat(cls, flat: Dict[str, Any]) -> "RunConfig":
        """
        Build from flat dotted keys (nested objects are accepted as well).

        Raises:
            ConfigError: Listing every unknown or invalid key
        """
        try:
            cfg = cls.model_validate(unflatten(flat))
        except ValidationError as e:
            problems = [
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
                for err in e.errors()
            ]
            raise ConfigError("Invalid configuration:\n  " + "\n  ".join(problems)) from None
        cfg.check()
        return cfg

    @classmethod
    def load(
        cls,
        path: Optional[Union[str, Path]] = None,
        overrides: Iterable[str] = ()
    ) -> "RunConfig":
        """
        Read a config file and apply `key=value` overrides.

        Args:
            path: JSON file of flat dotted keys; None starts from defaults
            overrides: Strings like "meta.iterations=10" (values parsed as JSON
                when possible, otherwise kept as strings)
        """
        flat: Dict[str, Any] = {}
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise ConfigError(f"Config file not found: {path}")
            try:
                with open(path, "r", encoding="utf-8") as f:
                    loaded = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigError(f"Config file {path} must hold a JSON object")
            flat.update(flatten_dict(loaded))
        for item in overrides:
            key, value = parse_override(item)
            flat[key] = value
        return cls.from_flat(flat)

    def check(self) -> None:
        """Build every domain config once so their invariants are checked up front."""
        problems = []
        for build in (self.synth_config, self.network_config, self.meta_config,
                      self.loss_weights, self.triplet_config):
            try:
                build()
            except FacetError as e:
                problems.append(str(e))
        if self.data.image_size % 8 != 0:
            problems.append(f"data.image_size must be a multiple of 8, got {self.data.image_size}")
        if self.data.test_domain is not None and self.data.test_domain in self.data.train_domains:
            problems.append(f"data.test_domain '{self.data.test_domain}' is also a training domain")
        if problems:
            raise ConfigError("Invalid configuration:\n  " + "\n  ".join(problems))

    # ==================== Views ====================

    def synth_config(self) -> SynthConfig:
        try:
            return SynthConfig(
                image_size=self.synth.image_size,
                n_domains=self.synth.n_domains,
                samples_per_domain=self.synth.samples_per_domain,
                shifts=tuple(DomainShift(**s.model_dump()) for s in self.synth.shifts),
                spoof_strength=self.synth.spoof_strength,
                seed=self.synth.seed,
            )
        except ValueError as e:
            raise ConfigError(f"synth: {e}") from e

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(**{**self.network.model_dump(), "widths": tuple(self.network.widths)})

    def meta_config(self) -> MetaConfig:
        return MetaConfig(**self.meta.model_dump())

    def loss_weights(self) -> LossWeights:
        data = self.loss.model_dump()
        return LossWeights(**{k: v for k, v in data.items() if k.startswith("lambda_")})

    def triplet_config(self) -> TripletConfig:
        return TripletConfig(
            margin=self.meta.stage1_margin,
            variant=self.loss.triplet_variant,
            reduction=self.loss.triplet_reduction,
        )

    def flatten(self) -> Dict[str, Any]:
        """Fully resolved config as flat dotted keys."""
        return flatten_dict(self.model_dump())

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        return RunConfig.from_flat({**self.flatten(), **overrides})

    def dumps(self) -> str:
        return json.dumps(self.flatten(), indent=2, sort_keys=True)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps() + "\n", encoding="utf-8")
        return path


# ==================== Flat key helpers ====================

def flatten_dict(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested dict to dotted keys; lists are values, not descended into."""
    flat = {}
    for key, value in data.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_dict(value, f"{full}."))
        else:
            flat[full] = value
    return flat


def unflatten(flat: Dict[str, Any]) -> Dict[str, Any]:
    """Dotted keys to a nested dict."""
    nested: Dict[str, Any] = {}
    for key, value in flat.items():
        parts = key.split(".")
        node = nested
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Config key '{key}' conflicts with the value of '{part}'")
            node = child
        node[parts[-1]] = value
    return nested


def parse_override(item: str) -> Tuple[str, Any]:
    """Split "key=value"; the value is decoded as JSON when it parses."""
    if "=" not in item:
        raise ConfigError(f"Override '{item}' must look like key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"Override '{item}' has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value
