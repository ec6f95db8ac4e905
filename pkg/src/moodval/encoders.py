"""Desk-scale frame and clip encoders feeding the fusion models.

Both map their input to a fixed-width embedding (default 256). The clip
encoder keeps its time axis intact through all stages so per-block temporal
attention sees the full clip length.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import torch.nn.functional as F
from torch import nn


@dataclass(frozen=True)
class EncoderConfig:
    in_channels: int = 3
    widths: tuple[int, int, int, int] = (8, 16, 32, 64)
    embed_dim: int = 256

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(self.widths))
        if len(self.widths) != 4 or any(w < 1 for w in self.widths):
            raise ValueError(f"widths must be 4 positive stage widths, got {self.widths}")
        if self.in_channels < 1 or self.embed_dim < 1:
            raise ValueError("in_channels and embed_dim must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        data = dict(data)
        if "widths" in data:
            data["widths"] = tuple(data["widths"])
        return cls(**data)


class FrameEncoder(nn.Module):
    """Four stride-2 conv stages, global average pool, linear embedding."""

    def __init__(self, config: EncoderConfig = EncoderConfig()):
        super().__init__()
        self.config = config
        self.in_channels = config.in_channels
        self.output_dim = config.embed_dim
        self.input_attention: nn.Module | None = None
        stages = []
        prev = config.in_channels
        for width in config.widths:
            stages.append(
                nn.Sequential(
                    nn.Conv2d(prev, width, 3, stride=2, padding=1),
                    nn.BatchNorm2d(width),
                    nn.ReLU(inplace=True),
                )
            )
            prev = width
        self.stages = nn.Sequential(*stages)
        self.fc = nn.Linear(prev, config.embed_dim)

    def forward(self, x):
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"frame encoder expects (B, {self.in_channels}, H, W), got {tuple(x.shape)}"
            )
        if self.input_attention is not None:
            x = self.input_attention(x)
        x = self.stages(x)
        x = x.mean(dim=(2, 3))
        return self.fc(x)


class ResidualBlock3d(nn.Module):
    """Two 3x3x3 convolutions with a shortcut addition.

    Spatial stride applies at the first convolution; the time axis is never
    strided. An attached attention stack gates the transform output before
    the shortcut addition.
    """

    def __init__(self, in_channels: int, out_channels: int, spatial_stride: int = 1):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        stride = (1, spatial_stride, spatial_stride)
        self.conv1 = nn.Conv3d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.bn1 = nn.BatchNorm3d(out_channels)
        self.conv2 = nn.Conv3d(out_channels, out_channels, 3, padding=1)
        self.bn2 = nn.BatchNorm3d(out_channels)
        if in_channels != out_channels or spatial_stride != 1:
            self.shortcut = nn.Sequential(
                nn.Conv3d(in_channels, out_channels, 1, stride=stride),
                nn.BatchNorm3d(out_channels),
            )
        else:
            self.shortcut = nn.Identity()
        self.attention: nn.Module | None = None

    def forward(self, x):
        out = self.bn2(self.conv2(F.relu(self.bn1(self.conv1(x)))))
        if self.attention is not None:
            out = self.attention(out)
        return F.relu(out + self.shortcut(x))


class ClipEncoder(nn.Module):
    """Four residual 3D stages, global average pool, linear embedding.

    ``blocks`` exposes the residual blocks for within-block attention
    placement; ``input_attention`` hosts the outside-backbone variant.
    """

    def __init__(self, config: EncoderConfig = EncoderConfig()):
        super().__init__()
        self.config = config
        self.in_channels = config.in_channels
        self.output_dim = config.embed_dim
        self.input_attention: nn.Module | None = None
        blocks = []
        prev = config.in_channels
        for width in config.widths:
            blocks.append(ResidualBlock3d(prev, width, spatial_stride=2))
            prev = width
        self.blocks = nn.ModuleList(blocks)
        self.fc = nn.Linear(prev, config.embed_dim)

    def forward(self, x):
        if x.dim() != 5 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"clip encoder expects (B, {self.in_channels}, T, H, W), got {tuple(x.shape)}"
            )
        if self.input_attention is not None:
            x = self.input_attention(x)
        for block in self.blocks:
            x = block(x)
        x = x.mean(dim=(2, 3, 4))
        return self.fc(x)
