"""Spatial, channel, and temporal attention gates with sequential composition.

Feature maps are batched: rank-4 ``(B, C, H, W)`` frame features or rank-5
``(B, C, T, H, W)`` clip features. Every module multiplies its input by a
sigmoid gate, so shapes are preserved and |output| <= |input| elementwise.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

ATTENTION_KINDS = ("spatial", "channel", "temporal")
PLACEMENTS = ("within_block", "outside_backbone")

# Pre-sigmoid bias large enough that the gate rounds to exactly 1.0 in both
# float32 and float64; used by saturate_() to force identity gating in tests.
SATURATION_BIAS = 60.0


class AttentionConfigError(ValueError):
    """Invalid attention configuration."""


@dataclass(frozen=True)
class AttentionConfig:
    kinds: tuple[str, ...] = ("spatial", "channel")
    placement: str = "within_block"
    spatial_kernel: int = 7
    channel_reduction: int = 16

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not self.kinds:
            raise AttentionConfigError("kinds must be non-empty")
        if len(set(self.kinds)) != len(self.kinds):
            raise AttentionConfigError(f"duplicate attention kinds: {self.kinds}")
        for kind in self.kinds:
            if kind not in ATTENTION_KINDS:
                raise AttentionConfigError(
                    f"unknown attention kind {kind!r}; expected one of {ATTENTION_KINDS}"
                )
        if self.placement not in PLACEMENTS:
            raise AttentionConfigError(
                f"unknown placement {self.placement!r}; expected one of {PLACEMENTS}"
            )
        if self.spatial_kernel < 1 or self.spatial_kernel % 2 == 0:
            raise AttentionConfigError(
                f"spatial_kernel must be a positive odd integer, got {self.spatial_kernel}"
            )
        if self.channel_reduction < 1:
            raise AttentionConfigError(
                f"channel_reduction must be >= 1, got {self.channel_reduction}"
            )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AttentionConfig":
        data = dict(data)
        if "kinds" in data:
            data["kinds"] = tuple(data["kinds"])
        return cls(**data)


def _check_feature_map(x: torch.Tensor, module: str) -> None:
    if x.dim() not in (4, 5):
        raise AttentionConfigError(
            f"{module} expects a rank-4 (B,C,H,W) or rank-5 (B,C,T,H,W) "
            f"feature map, got rank-{x.dim()}"
        )


class SpatialAttention(nn.Module):
    """Per-location gate from channel-wise average and max descriptors.

    The two descriptors are stacked into a 2-channel map and convolved with a
    kernel x kernel filter ('same' padding); for clip features the filter is
    shared across timesteps.
    """

    def __init__(self, kernel: int = 7):
        super().__init__()
        if kernel < 1 or kernel % 2 == 0:
            raise AttentionConfigError(f"spatial kernel must be odd, got {kernel}")
        self.conv = nn.Conv2d(2, 1, kernel, padding=kernel // 2)

    def forward(self, x):
        _check_feature_map(x, "spatial attention")
        pooled = torch.cat([x.mean(dim=1, keepdim=True), x.amax(dim=1, keepdim=True)], dim=1)
        if x.dim() == 5:
            b, _, t, h, w = pooled.shape
            flat = pooled.permute(0, 2, 1, 3, 4).reshape(b * t, 2, h, w)
            gate = torch.sigmoid(self.conv(flat)).reshape(b, t, 1, h, w).permute(0, 2, 1, 3, 4)
        else:
            gate = torch.sigmoid(self.conv(pooled))
        return x * gate

    @torch.no_grad()
    def saturate_(self):
        self.conv.weight.zero_()
        self.conv.bias.fill_(SATURATION_BIAS)


class ChannelAttention(nn.Module):
    """Per-channel gate from global average and max pooling.

    Both descriptors pass through a shared two-layer perceptron with hidden
    width max(1, C // reduction); their outputs are summed before the sigmoid.
    """

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if channels < 1:
            raise AttentionConfigError(f"channels must be >= 1, got {channels}")
        if reduction < 1:
            raise AttentionConfigError(f"reduction must be >= 1, got {reduction}")
        hidden = max(1, channels // reduction)
        self.channels = channels
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, channels)

    def _mlp(self, v):
        return self.fc2(F.relu(self.fc1(v)))

    def forward(self, x):
        _check_feature_map(x, "channel attention")
        reduce_dims = tuple(range(2, x.dim()))
        avg = x.mean(dim=reduce_dims)
        mx = x.amax(dim=reduce_dims)
        gate = torch.sigmoid(self._mlp(avg) + self._mlp(mx))
        return x * gate.reshape(gate.shape + (1,) * (x.dim() - 2))

    @torch.no_grad()
    def saturate_(self):
        self.fc2.weight.zero_()
        self.fc2.bias.fill_(SATURATION_BIAS)


class TemporalAttention(nn.Module):
    """Per-timestep gate mirroring the channel design along the time axis."""

    def __init__(self, time_steps: int, reduction: int = 16):
        super().__init__()
        if time_steps < 1:
            raise AttentionConfigError(f"time_steps must be >= 1, got {time_steps}")
        hidden = max(1, time_steps // reduction)
        self.time_steps = time_steps
        self.fc1 = nn.Linear(time_steps, hidden)
        self.fc2 = nn.Linear(hidden, time_steps)

    def _mlp(self, v):
        return self.fc2(F.relu(self.fc1(v)))

    def forward(self, x):
        if x.dim() != 5:
            raise AttentionConfigError(
                f"temporal attention requires a rank-5 (B,C,T,H,W) input with a "
                f"time axis, got rank-{x.dim()}"
            )
        if x.shape[2] != self.time_steps:
            raise AttentionConfigError(
                f"temporal attention built for T={self.time_steps}, got T={x.shape[2]}"
            )
        avg = x.mean(dim=(1, 3, 4))
        mx = x.amax(dim=(1, 3, 4))
        gate = torch.sigmoid(self._mlp(avg) + self._mlp(mx))
        return x * gate.reshape(gate.shape[0], 1, self.time_steps, 1, 1)

    @torch.no_grad()
    def saturate_(self):
        self.fc2.weight.zero_()
        self.fc2.bias.fill_(SATURATION_BIAS)


class AttentionStack(nn.Sequential):
    """Attention modules applied sequentially, each consuming the previous output."""

    def __init__(self, kinds: tuple[str, ...], modules):
        super().__init__(*modules)
        self.kinds = tuple(kinds)

    def saturate_(self):
        for module in self:
            module.saturate_()


def build_attention(
    config: AttentionConfig, channels: int, time_steps: int | None = None
) -> AttentionStack:
    """Compose the configured attention kinds for a feature map of given shape.

    ``time_steps`` must be provided for pipelines with a time axis; requesting
    temporal attention without one is a configuration error.
    """
    modules = []
    for kind in config.kinds:
        if kind == "spatial":
            modules.append(SpatialAttention(config.spatial_kernel))
        elif kind == "channel":
            modules.append(ChannelAttention(channels, config.channel_reduction))
        else:
            if time_steps is None:
                raise AttentionConfigError(
                    "temporal attention requested for a pipeline without a time axis"
                )
            modules.append(TemporalAttention(time_steps, config.channel_reduction))
    return AttentionStack(config.kinds, modules)


def place_attention(backbone, config: AttentionConfig, time_steps: int | None = None):
    """Instrument a backbone with attention per the configured placement.

    within_block: a fresh stack gates each residual block's transform output
    before the shortcut addition. outside_backbone: one stack gates the raw
    input tensor before the backbone. Returns the backbone.
    """
    if config.placement == "within_block":
        blocks = getattr(backbone, "blocks", None)
        if not blocks:
            raise AttentionConfigError(
                f"{type(backbone).__name__} exposes no residual blocks; "
                "within_block placement is not available"
            )
        for block in blocks:
            block.attention = build_attention(config, block.out_channels, time_steps)
    else:
        backbone.input_attention = build_attention(config, backbone.in_channels, time_steps)
    return backbone
