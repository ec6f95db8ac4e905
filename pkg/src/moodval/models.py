"""ValNet, M-ValNet, and MDelta-ValNet: valence regression with mood / emotion-change context.

All three share the same projection-head recipe (four fc layers of 256, 128,
128, and `out` neurons, each hidden layer batch-normalised then ReLU-activated)
and differ in how many encoder branches feed it:

* valnet          frame encoder -> head -> valence            (1 output)
* m_valnet        clip ++ frame -> 512 -> head -> mood+valence (3+1 outputs)
* mdelta_valnet   clip ++ clip ++ frame -> 768 -> head -> mood+delta+valence
                  (3+3+1 outputs)

The valence output is linear while training and clamped to [-1, 1] in eval
mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import torch
import torch.nn.functional as F
from torch import nn

from .attention import AttentionConfig, AttentionConfigError, build_attention, place_attention
from .encoders import ClipEncoder, EncoderConfig, FrameEncoder

HEAD_HIDDEN = (256, 128, 128)


class ModelKind(str, Enum):
    VALNET = "valnet"
    M_VALNET = "m_valnet"
    MDELTA_VALNET = "mdelta_valnet"


@dataclass
class ModelOutput:
    valence: torch.Tensor
    mood_logits: torch.Tensor | None = None
    delta_logits: torch.Tensor | None = None


class ProjectionHead(nn.Module):
    """Four fc layers; each hidden layer is [batch-norm -> fc -> ReLU -> dropout],
    the final fc is bare."""

    def __init__(self, in_dim: int, out_dim: int, dropout: float = 0.5):
        super().__init__()
        layers = []
        prev = in_dim
        for width in HEAD_HIDDEN:
            layers += [
                nn.BatchNorm1d(prev),
                nn.Linear(prev, width),
                nn.ReLU(inplace=True),
                nn.Dropout(dropout),
            ]
            prev = width
        layers += [nn.BatchNorm1d(prev), nn.Linear(prev, out_dim)]
        self.layers = nn.Sequential(*layers)
        self.in_dim = in_dim
        self.out_dim = out_dim

    def forward(self, x):
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"head expects {self.in_dim} features, got {x.shape[-1]}")
        return self.layers(x)


class ValNet(nn.Module):
    """Frame-only valence regressor."""

    kind = ModelKind.VALNET

    def __init__(self, frame_encoder: FrameEncoder, dropout: float = 0.5):
        super().__init__()
        self.frame_encoder = frame_encoder
        self.fusion_dim = frame_encoder.output_dim
        self.head = ProjectionHead(self.fusion_dim, 1, dropout)

    def forward(self, frame) -> ModelOutput:
        z = self.head(self.frame_encoder(frame))
        valence = z[:, 0]
        if not self.training:
            valence = valence.clamp(-1.0, 1.0)
        return ModelOutput(valence=valence)


class MValNet(nn.Module):
    """Two branches: a clip encoder trained with mood labels plus the frame branch."""

    kind = ModelKind.M_VALNET

    def __init__(self, clip_encoder: ClipEncoder, frame_encoder: FrameEncoder,
                 dropout: float = 0.5):
        super().__init__()
        self.clip_encoder = clip_encoder
        self.frame_encoder = frame_encoder
        self.fusion_dim = clip_encoder.output_dim + frame_encoder.output_dim
        self.head = ProjectionHead(self.fusion_dim, 4, dropout)

    def forward(self, clip, frame) -> ModelOutput:
        u = self.clip_encoder(clip)
        v = self.frame_encoder(frame)
        z = self.head(torch.cat([u, v], dim=1))
        valence = z[:, 3]
        if not self.training:
            valence = valence.clamp(-1.0, 1.0)
        return ModelOutput(valence=valence, mood_logits=z[:, :3])


class MDeltaValNet(nn.Module):
    """Three branches: mood and delta clip encoders (independent parameters,
    identical structure) plus the frame branch."""

    kind = ModelKind.MDELTA_VALNET

    def __init__(self, mood_encoder: ClipEncoder, delta_encoder: ClipEncoder,
                 frame_encoder: FrameEncoder, dropout: float = 0.5):
        super().__init__()
        self.mood_encoder = mood_encoder
        self.delta_encoder = delta_encoder
        self.frame_encoder = frame_encoder
        dim = mood_encoder.output_dim
        self.mood_proj = nn.Linear(dim, dim)
        self.delta_proj = nn.Linear(dim, dim)
        self.fusion_dim = 2 * dim + frame_encoder.output_dim
        self.head = ProjectionHead(self.fusion_dim, 7, dropout)

    def forward(self, clip, frame) -> ModelOutput:
        u = F.relu(self.mood_proj(self.mood_encoder(clip)))
        v = F.relu(self.delta_proj(self.delta_encoder(clip)))
        w = self.frame_encoder(frame)
        z = self.head(torch.cat([u, v, w], dim=1))
        valence = z[:, 6]
        if not self.training:
            valence = valence.clamp(-1.0, 1.0)
        return ModelOutput(valence=valence, mood_logits=z[:, :3], delta_logits=z[:, 3:6])


def build_model(
    kind: ModelKind | str,
    encoder: EncoderConfig = EncoderConfig(),
    n_frames: int = 5,
    attention: AttentionConfig | None = None,
    frame_attention: bool = False,
    dropout: float = 0.5,
) -> nn.Module:
    """Assemble a model variant, instrumenting its clip encoders with attention.

    Attention instruments the clip branches; ``frame_attention`` additionally
    gates the frame branch's raw input (spatial/channel kinds only, since a
    single frame has no time axis).
    """
    kind = ModelKind(kind)
    frame_encoder = FrameEncoder(encoder)
    if attention is not None and frame_attention:
        if "temporal" in attention.kinds:
            raise AttentionConfigError(
                "temporal attention is not applicable to the frame-only pipeline"
            )
        frame_encoder.input_attention = build_attention(attention, encoder.in_channels)
    if kind is ModelKind.VALNET:
        if attention is not None and not frame_attention:
            raise AttentionConfigError(
                "valnet has no clip branch; set frame_attention=True to gate frames"
            )
        return ValNet(frame_encoder, dropout)
    if kind is ModelKind.M_VALNET:
        clip_encoder = ClipEncoder(encoder)
        if attention is not None:
            place_attention(clip_encoder, attention, time_steps=n_frames)
        return MValNet(clip_encoder, frame_encoder, dropout)
    mood_encoder = ClipEncoder(encoder)
    delta_encoder = ClipEncoder(encoder)
    if attention is not None:
        place_attention(mood_encoder, attention, time_steps=n_frames)
        place_attention(delta_encoder, attention, time_steps=n_frames)
    return MDeltaValNet(mood_encoder, delta_encoder, frame_encoder, dropout)
