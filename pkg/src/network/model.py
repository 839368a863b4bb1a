"""
Multi-task face anti-spoofing network.

Four parameter groups:
- theta_F: feature extractor F (shared with the parsing U-net encoder)
- theta_D: depth estimator D
- theta_S: parsing decoder, attention-based skip connection (ASC) and ECA
- theta_M: meta learner M

Tensors follow the torch NCHW layout: inputs are B x 6 x H x W, parsing logits
B x 13 x H x W, depth predictions B x 32 x 32.

Author: Facet Development
"""

from collections import OrderedDict
from dataclasses import dataclass, asdict, field
from typing import Any, Dict, List, Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.func import functional_call

from .blocks import ConvBlock, ECA, UpStage, group_norm
from ..config.labels import DEPTH_SIZE, N_PARSING_CLASSES
from ..utils.errors import ConfigError

GROUP_NAMES = ("theta_F", "theta_D", "theta_S", "theta_M")


@dataclass(frozen=True)
class NetworkConfig:
    """
    Architecture hyperparameters.

    Attributes:
        in_channels: Input channels (RGB + HSV)
        widths: Channel widths of the three encoder blocks
        asc_channels: Output channels C_a of the attention skip branch
        meta_hidden: Hidden width of the meta learner (triplet embedding size)
        eca_kernel: ECA 1-D kernel size
        use_parsing: Build the parsing U-net (False drops L_Seg and the ASC)
        use_asc: Feed the attention skip feature to the meta learner
    """

    in_channels: int = 6
    widths: Tuple[int, int, int] = (32, 64, 128)
    asc_channels: int = 32
    meta_hidden: int = 128
    eca_kernel: int = 3
    use_parsing: bool = True
    use_asc: bool = True

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) != 3 or min(self.widths) < 1:
            raise ConfigError(f"network.widths must be three positive integers, got {self.widths}")
        for name in ("in_channels", "asc_channels", "meta_hidden", "eca_kernel"):
            if getattr(self, name) < 1:
                raise ConfigError(f"network.{name} must be positive")

    @property
    def asc_enabled(self) -> bool:
        return self.use_parsing and self.use_asc

    @property
    def pooled_dim(self) -> int:
        """Width of the pooled feature fed to the meta learner (C + C_a)."""
        return self.widths[-1] + (self.asc_channels if self.asc_enabled else 0)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["widths"] = list(self.widths)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetworkConfig":
        return cls(**{**data, "widths": tuple(data.get("widths", cls.widths))})


@dataclass
class FeatureMap:
    """Extractor output: B x C x h x w values plus the two encoder skips."""

    values: torch.Tensor
    skips: Tuple[torch.Tensor, torch.Tensor]


@dataclass
class SharedOutputs:
    """Everything that does not depend on theta_M."""

    feature: FeatureMap
    depth_pred: torch.Tensor
    parsing_logits: Optional[torch.Tensor]
    asc_feature: Optional[torch.Tensor]
    pooled: torch.Tensor


@dataclass
class ForwardOutputs:
    """
    Full forward pass.

    Attributes:
        depth_pred: B x 32 x 32 in [0, 1]
        parsing_logits: B x 13 x H x W (None without the parsing module)
        asc_feature: B x C_a x h x w (None without the ASC)
        pooled: B x (C + C_a) input of the meta learner
        embedding: B x meta_hidden first hidden layer of M (triplet embedding)
        logit: B live logits
        live_prob: B live probabilities in (0, 1)
    """

    depth_pred: torch.Tensor
    parsing_logits: Optional[torch.Tensor]
    asc_feature: Optional[torch.Tensor]
    pooled: torch.Tensor
    embedding: torch.Tensor
    logit: torch.Tensor
    live_prob: torch.Tensor


@dataclass
class NetworkParams:
    """Named view of the four parameter groups."""

    theta_F: Dict[str, nn.Parameter] = field(default_factory=OrderedDict)
    theta_D: Dict[str, nn.Parameter] = field(default_factory=OrderedDict)
    theta_S: Dict[str, nn.Parameter] = field(default_factory=OrderedDict)
    theta_M: Dict[str, nn.Parameter] = field(default_factory=OrderedDict)

    def groups(self) -> Dict[str, Dict[str, nn.Parameter]]:
        return {name: getattr(self, name) for name in GROUP_NAMES}

    def clone_meta(self) -> Dict[str, torch.Tensor]:
        """Independent copy of theta_M, detached from the live parameters."""
        return OrderedDict((k, v.detach().clone()) for k, v in self.theta_M.items())


class Extractor(nn.Module):
    """Feature extractor F: three ConvBlocks, each halving the spatial size."""

    def __init__(self, in_channels: int, widths: Tuple[int, int, int]):
        super().__init__()
        c1, c2, c3 = widths
        self.block1 = ConvBlock(in_channels, c1)
        self.block2 = ConvBlock(c1, c2)
        self.block3 = ConvBlock(c2, c3)

    def forward(self, x: torch.Tensor) -> FeatureMap:
        s1 = self.block1(x)
        s2 = self.block2(s1)
        return FeatureMap(values=self.block3(s2), skips=(s1, s2))


class DepthHead(nn.Module):
    """Depth estimator D: conv layer, resample to 32 x 32, conv layer, sigmoid."""

    def __init__(self, in_channels: int, hidden: int = 64):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, hidden, 3, padding=1, bias=False)
        self.norm = group_norm(hidden)
        self.conv2 = nn.Conv2d(hidden, 1, 3, padding=1)

    def forward(self, values: torch.Tensor) -> torch.Tensor:
        h = F.relu(self.norm(self.conv1(values)))
        h = F.interpolate(h, size=(DEPTH_SIZE, DEPTH_SIZE), mode="bilinear", align_corners=False)
        return torch.sigmoid(self.conv2(h)).squeeze(1)


class ParsingNet(nn.Module):
    """
    Parsing U-net decoder S with the attention-based skip connection.

    The decoder upsamples the extractor output three times. The first two
    stages concatenate the matching encoder skip; the last stage restores the
    input resolution. Its activation feeds both the 1x1 parsing head and the
    ASC branch (ConvBlock then ECA).
    """

    def __init__(self, widths: Tuple[int, int, int], asc_channels: int, eca_kernel: int):
        super().__init__()
        c1, c2, c3 = widths
        self.up1 = UpStage(c3, c2, c2)
        self.up2 = UpStage(c2, c1, c1)
        self.up3 = UpStage(c1, 0, c1)
        self.head = nn.Conv2d(c1, N_PARSING_CLASSES, 1)
        self.asc = ConvBlock(c1, asc_channels, downsample=False)
        self.eca = ECA(eca_kernel)

    def decode(self, feature: FeatureMap) -> Tuple[torch.Tensor, torch.Tensor]:
        """Returns (decoder_last, parsing_logits)."""
        s1, s2 = feature.skips
        h = self.up1(feature.values, s2)
        h = self.up2(h, s1)
        last = self.up3(h)
        return last, self.head(last)

    def attention_skip(self, decoder_last: torch.Tensor, grid: Tuple[int, int]) -> torch.Tensor:
        """ASC feature pooled to the extractor's h x w grid."""
        attended = self.eca(self.asc(decoder_last))
        return F.adaptive_avg_pool2d(attended, grid)


class MetaLearner(nn.Module):
    """Meta learner M: fc -> ReLU (triplet embedding) -> fc -> live logit."""

    def __init__(self, in_features: int, hidden: int):
        super().__init__()
        self.fc1 = nn.Linear(in_features, hidden)
        self.fc2 = nn.Linear(hidden, 1)

    def forward(self, pooled: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        embedding = F.relu(self.fc1(pooled))
        return embedding, self.fc2(embedding).squeeze(-1)


class MultiTaskFASNet(nn.Module):
    """
    Extractor, depth head, parsing U-net with ASC, and meta learner.

    The meta procedure composes `shared_forward` (independent of theta_M) with
    `meta_forward`, which evaluates M under substituted parameters.

    Example:
        >>> model = MultiTaskFASNet(NetworkConfig())
        >>> out = model(torch.rand(2, 6, 64, 64))
        >>> out.parsing_logits.shape
        torch.Size([2, 13, 64, 64])
    """

    def __init__(self, cfg: Optional[NetworkConfig] = None):
        super().__init__()
        self.cfg = cfg or NetworkConfig()
        self.extractor = Extractor(self.cfg.in_channels, self.cfg.widths)
        self.depth = DepthHead(self.cfg.widths[-1])
        self.parsing = (
            ParsingNet(self.cfg.widths, self.cfg.asc_channels, self.cfg.eca_kernel)
            if self.cfg.use_parsing else None
        )
        self.meta = MetaLearner(self.cfg.pooled_dim, self.cfg.meta_hidden)

    @property
    def use_parsing(self) -> bool:
        return self.parsing is not None

    @property
    def parsing_encoder(self) -> Extractor:
        """The parsing U-net encoder; the same module as the extractor."""
        return self.extractor

    def extract_features(self, x: torch.Tensor) -> FeatureMap:
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ValueError(
                f"Expected input B x {self.cfg.in_channels} x H x W, got {tuple(x.shape)}"
            )
        if x.shape[2] != x.shape[3] or x.shape[2] % 8 != 0:
            raise ValueError(f"Input must be square with side divisible by 8, got {tuple(x.shape[2:])}")
        return self.extractor(x)

    def estimate_depth(self, feature: FeatureMap) -> torch.Tensor:
        return self.depth(feature.values)

    def shared_from_features(self, feature: FeatureMap) -> SharedOutputs:
        depth_pred = self.estimate_depth(feature)
        parsing_logits = asc_feature = None
        pooled = feature.values.mean(dim=(2, 3))
        if self.parsing is not None:
            decoder_last, parsing_logits = self.parsing.decode(feature)
            if self.cfg.asc_enabled:
                asc_feature = self.parsing.attention_skip(decoder_last, feature.values.shape[2:])
                pooled = torch.cat([pooled, asc_feature.mean(dim=(2, 3))], dim=1)
        return SharedOutputs(
            feature=feature,
            depth_pred=depth_pred,
            parsing_logits=parsing_logits,
            asc_feature=asc_feature,
            pooled=pooled,
        )

    def shared_forward(self, x: torch.Tensor) -> SharedOutputs:
        return self.shared_from_features(self.extract_features(x))

    def meta_forward(
        self,
        pooled: torch.Tensor,
        theta_M: Optional[Dict[str, torch.Tensor]] = None
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Evaluate M, optionally under substituted parameters.

        Args:
            pooled: B x (C + C_a) pooled features
            theta_M: Replacement parameters keyed like `meta_parameters()`

        Returns:
            (embedding, logit)
        """
        if theta_M is None:
            return self.meta(pooled)
        return functional_call(self.meta, dict(theta_M), (pooled,))

    def forward(self, x: torch.Tensor, theta_M: Optional[Dict[str, torch.Tensor]] = None) -> ForwardOutputs:
        shared = self.shared_forward(x)
        embedding, logit = self.meta_forward(shared.pooled, theta_M)
        return ForwardOutputs(
            depth_pred=shared.depth_pred,
            parsing_logits=shared.parsing_logits,
            asc_feature=shared.asc_feature,
            pooled=shared.pooled,
            embedding=embedding,
            logit=logit,
            live_prob=torch.sigmoid(logit),
        )

    def classify(self, shared: SharedOutputs, theta_M: Optional[Dict[str, torch.Tensor]] = None):
        """(live_prob, embedding) for precomputed shared outputs."""
        embedding, logit = self.meta_forward(shared.pooled, theta_M)
        return torch.sigmoid(logit), embedding

    def gradcam_forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """(last extractor feature map, live logit) for saliency computation."""
        feature = self.extract_features(x)
        shared = self.shared_from_features(feature)
        _, logit = self.meta_forward(shared.pooled)
        return feature.values, logit

    def meta_parameters(self) -> Dict[str, nn.Parameter]:
        return OrderedDict(self.meta.named_parameters())

    def network_params(self) -> NetworkParams:
        return NetworkParams(
            theta_F=OrderedDict(self.extractor.named_parameters()),
            theta_D=OrderedDict(self.depth.named_parameters()),
            theta_S=OrderedDict(self.parsing.named_parameters()) if self.parsing is not None else OrderedDict(),
            theta_M=self.meta_parameters(),
        )

    def param_groups(self) -> Dict[str, List[nn.Parameter]]:
        return {name: list(group.values()) for name, group in self.network_params().groups().items()}


def build_model(cfg: Optional[NetworkConfig] = None, seed: Optional[int] = None) -> MultiTaskFASNet:
    """Construct a model; a seed makes the initialization reproducible."""
    if seed is not None:
        torch.manual_seed(seed)
    return MultiTaskFASNet(cfg)
