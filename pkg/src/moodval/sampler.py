"""Incrementally growing clips with equal-spaced frame sub-sampling.

Clip geometry is defined over *usable-frame positions*: ordinal positions in
the (possibly confidence-filtered) timeline. Original frame indices are kept
in the emitted specs so gaps left by filtering never shrink a clip.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .annotations import (
    AnnotationError,
    DeltaLabel,
    MoodLabel,
    ParseError,
    ValenceTimeline,
    derive_delta,
    resolve_mood,
)


class SamplerError(ValueError):
    """Invalid sampler configuration or clip geometry."""


class InsufficientFramesError(SamplerError):
    """Timeline too short to emit a single clip."""


@dataclass(frozen=True)
class SamplerConfig:
    initial_length: int = 200
    stride: int = 3
    frames_per_clip: int = 5

    def __post_init__(self):
        if self.frames_per_clip < 2:
            raise SamplerError(f"frames_per_clip must be >= 2, got {self.frames_per_clip}")
        if self.initial_length <= self.frames_per_clip:
            raise SamplerError(
                f"initial_length ({self.initial_length}) must exceed "
                f"frames_per_clip ({self.frames_per_clip})"
            )
        if self.stride < 1:
            raise SamplerError(f"stride must be >= 1, got {self.stride}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerConfig":
        return cls(**data)


@dataclass(frozen=True)
class ClipSpec:
    """One training sample: a clip, its sub-sampled frames, and its targets."""

    video_id: str
    clip_start: int
    clip_end: int
    sampled_indices: tuple[int, ...]
    target_index: int
    mood: MoodLabel
    delta: DeltaLabel
    target_valence: float

    def __post_init__(self):
        object.__setattr__(self, "sampled_indices", tuple(self.sampled_indices))
        object.__setattr__(self, "mood", MoodLabel(self.mood))
        object.__setattr__(self, "delta", DeltaLabel(self.delta))
        idx = self.sampled_indices
        if len(idx) < 2:
            raise SamplerError(f"clip must sample at least 2 frames, got {len(idx)}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise SamplerError(f"sampled_indices must be strictly increasing: {idx}")
        if idx[0] != self.clip_start or idx[-1] != self.clip_end:
            raise SamplerError(
                f"sampled_indices must span [clip_start, clip_end]="
                f"[{self.clip_start}, {self.clip_end}], got {idx[0]}..{idx[-1]}"
            )
        if self.target_index <= self.clip_end:
            raise SamplerError(
                f"target_index ({self.target_index}) must follow clip_end ({self.clip_end})"
            )
        if not -1.0 <= self.target_valence <= 1.0:
            raise SamplerError(f"target_valence must lie in [-1, 1], got {self.target_valence}")


def subsample_indices(usable: Sequence[int], n: int) -> tuple[int, ...]:
    """Pick n equally spaced entries of ``usable`` (endpoints always included).

    Position j maps to round-half-up of j*(L-1)/(n-1) over the L usable
    entries; rounding is done in integer arithmetic so results are identical
    across platforms. For L == n this is the identity.
    """
    length = len(usable)
    if n < 2:
        raise SamplerError(f"need n >= 2 sampled frames, got {n}")
    if length < n:
        raise SamplerError(f"cannot sample {n} frames from {length} usable frames")
    span, slots = length - 1, n - 1
    positions = [(2 * j * span + slots) // (2 * slots) for j in range(n)]
    return tuple(usable[p] for p in positions)


def generate_clips(
    timeline: ValenceTimeline,
    config: SamplerConfig,
    mood: MoodLabel | None = None,
) -> list[ClipSpec]:
    """Enumerate clips of incrementally increasing length over a timeline.

    The first clip covers the first ``initial_length`` usable frames; each
    later clip's end advances by ``stride`` usable frames. A clip is emitted
    only while a successor frame exists to serve as its prediction target.
    """
    frames = timeline.frames
    usable = len(frames)
    if usable < config.initial_length + 1:
        raise InsufficientFramesError(
            f"timeline {timeline.video_id!r} has {usable} usable frames; "
            f"need at least {config.initial_length + 1}"
        )
    if mood is None:
        mood = resolve_mood(timeline)
    indices = [f.frame_index for f in frames]
    clips = []
    for end in range(config.initial_length - 1, usable - 1, config.stride):
        sampled = subsample_indices(indices[: end + 1], config.frames_per_clip)
        clips.append(
            ClipSpec(
                video_id=timeline.video_id,
                clip_start=indices[0],
                clip_end=indices[end],
                sampled_indices=sampled,
                target_index=indices[end + 1],
                mood=mood,
                delta=derive_delta(frames[0].valence, frames[end].valence),
                target_valence=frames[end + 1].valence,
            )
        )
    return clips


def attach_labels(clip: ClipSpec, timeline: ValenceTimeline, mood: MoodLabel) -> ClipSpec:
    """Recompute a clip's mood/delta/valence targets from its parent timeline."""
    by_index = {f.frame_index: f for f in timeline.frames}
    for idx in (*clip.sampled_indices, clip.target_index):
        if idx not in by_index:
            raise SamplerError(
                f"clip references frame {idx} missing from timeline {timeline.video_id!r}"
            )
    return dataclasses.replace(
        clip,
        mood=mood,
        delta=derive_delta(by_index[clip.clip_start].valence, by_index[clip.clip_end].valence),
        target_valence=by_index[clip.target_index].valence,
    )


def write_manifest(clips: Sequence[ClipSpec], path: str | Path) -> None:
    """Write clips as JSON Lines, one ClipSpec per line."""
    path = Path(path)
    lines = []
    for c in clips:
        lines.append(
            json.dumps(
                {
                    "video_id": c.video_id,
                    "clip_start": c.clip_start,
                    "clip_end": c.clip_end,
                    "sampled_indices": list(c.sampled_indices),
                    "target_index": c.target_index,
                    "mood": int(c.mood),
                    "delta": int(c.delta),
                    "target_valence": c.target_valence,
                },
                sort_keys=True,
            )
        )
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")


def read_manifest(path: str | Path) -> list[ClipSpec]:
    """Read a clip manifest, validating every record's invariants."""
    path = Path(path)
    clips = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                clips.append(
                    ClipSpec(
                        video_id=str(record["video_id"]),
                        clip_start=int(record["clip_start"]),
                        clip_end=int(record["clip_end"]),
                        sampled_indices=tuple(int(i) for i in record["sampled_indices"]),
                        target_index=int(record["target_index"]),
                        mood=MoodLabel(record["mood"]),
                        delta=DeltaLabel(record["delta"]),
                        target_valence=float(record["target_valence"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: missing or malformed field ({exc})") from exc
            except (SamplerError, AnnotationError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return clips
