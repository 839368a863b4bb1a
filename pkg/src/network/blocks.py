"""
Building blocks of the multi-task network.

Normalization is per-sample (GroupNorm) throughout, so a forward pass never
depends on batch composition and there is no running-statistics state to
clone during inner updates.

Author: Facet Development
"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


def group_norm(channels: int) -> nn.GroupNorm:
    """GroupNorm with up to 8 groups; the group count always divides `channels`."""
    return nn.GroupNorm(math.gcd(8, channels), channels)


class ConvBlock(nn.Module):
    """
    Two (conv3x3, GroupNorm, ReLU) layers, optionally followed by 2x max pooling.

    Args:
        in_channels: Input channels
        out_channels: Output channels
        downsample: Halve the spatial size at the end
    """

    def __init__(self, in_channels: int, out_channels: int, downsample: bool = True):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
            group_norm(out_channels),
            nn.ReLU(inplace=False),
            nn.Conv2d(out_channels, out_channels, 3, padding=1, bias=False),
            group_norm(out_channels),
            nn.ReLU(inplace=False),
        )
        self.pool = nn.MaxPool2d(2) if downsample else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.pool(self.body(x))


class ECA(nn.Module):
    """
    Efficient channel attention.

    Global average pooling per channel, a 1-D convolution of size `kernel_size`
    across the channel axis, a sigmoid, and channelwise rescaling of the input.

    Example:
        >>> eca = ECA(kernel_size=3)
        >>> out = eca(torch.rand(2, 16, 8, 8))
    """

    def __init__(self, kernel_size: int = 3):
        super().__init__()
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError(f"ECA kernel size must be a positive odd integer, got {kernel_size}")
        self.conv = nn.Conv1d(1, 1, kernel_size, padding=kernel_size // 2, bias=False)

    def attention_weights(self, x: torch.Tensor) -> torch.Tensor:
        """Per-channel weights in (0, 1), shape B x C."""
        pooled = x.mean(dim=(2, 3))
        return torch.sigmoid(self.conv(pooled.unsqueeze(1)).squeeze(1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        weights = self.attention_weights(x)
        return x * weights[:, :, None, None]


class UpStage(nn.Module):
    """Bilinear 2x upsampling, optional skip concatenation, then a ConvBlock."""

    def __init__(self, in_channels: int, skip_channels: int, out_channels: int):
        super().__init__()
        self.skip_channels = skip_channels
        self.block = ConvBlock(in_channels + skip_channels, out_channels, downsample=False)

    def forward(self, x: torch.Tensor, skip: torch.Tensor = None) -> torch.Tensor:
        x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        if self.skip_channels:
            if skip is None:
                raise ValueError("Decoder stage expects an encoder skip, got None")
            if skip.shape[0] != x.shape[0] or skip.shape[1] != self.skip_channels \
                    or skip.shape[2:] != x.shape[2:]:
                raise ValueError(
                    f"Skip shape {tuple(skip.shape)} does not match decoder stage "
                    f"({x.shape[0]}, {self.skip_channels}, {x.shape[2]}, {x.shape[3]})"
                )
            x = torch.cat([x, skip], dim=1)
        return self.block(x)
