"""Per-video valence annotations and the mood / emotion-change labels derived from them."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

CONFIDENCE_THRESHOLD = 0.85

# Band boundaries: |valence| above this is positive/negative, otherwise neutral.
# The boundaries themselves belong to the neutral band.
BAND_EDGE = 0.3


class AnnotationError(ValueError):
    """Invalid annotation data."""


class ParseError(AnnotationError):
    """Malformed annotation file; message carries the offending line number."""


class NoUsableFramesError(AnnotationError):
    """Confidence filtering removed every frame of a timeline."""


class MoodLabel(IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1


class DeltaLabel(IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1


class ValenceBand(IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1


@dataclass(frozen=True)
class FrameRecord:
    """One annotated video frame."""

    frame_index: int
    valence: float
    confidence: float = 1.0

    def __post_init__(self):
        if self.frame_index < 0:
            raise AnnotationError(f"frame_index must be non-negative, got {self.frame_index}")
        if not -1.0 <= self.valence <= 1.0:
            raise AnnotationError(f"valence must lie in [-1, 1], got {self.valence}")
        if not 0.0 <= self.confidence <= 1.0:
            raise AnnotationError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class ValenceTimeline:
    """Ordered per-frame valence records for one video.

    ``mood`` holds a ground-truth video-level label when the source provides
    one; when absent, :func:`resolve_mood` falls back to :func:`derive_mood`.
    """

    video_id: str
    frames: tuple[FrameRecord, ...]
    mood: MoodLabel | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise AnnotationError(f"timeline {self.video_id!r} has no frames")
        indices = [f.frame_index for f in self.frames]
        for prev, cur in zip(indices, indices[1:]):
            if cur <= prev:
                raise AnnotationError(
                    f"timeline {self.video_id!r}: frame indices must be strictly "
                    f"increasing ({prev} followed by {cur})"
                )

    def __len__(self):
        return len(self.frames)

    def valences(self) -> list[float]:
        return [f.valence for f in self.frames]


def band_of(valence: float) -> ValenceBand:
    """Band a valence value; the +/-0.3 boundaries belong to the neutral band."""
    if not -1.0 <= valence <= 1.0:
        raise AnnotationError(f"valence must lie in [-1, 1], got {valence}")
    if valence > BAND_EDGE:
        return ValenceBand.POSITIVE
    if valence < -BAND_EDGE:
        return ValenceBand.NEGATIVE
    return ValenceBand.NEUTRAL


def derive_mood(timeline: ValenceTimeline) -> MoodLabel:
    """Mood label of the band persisting over the most consecutive frames.

    Ties between equal-length runs go to the earliest run.
    """
    best_band: ValenceBand | None = None
    best_len = 0
    run_band: ValenceBand | None = None
    run_len = 0
    for frame in timeline.frames:
        band = band_of(frame.valence)
        if band is run_band:
            run_len += 1
        else:
            run_band = band
            run_len = 1
        if run_len > best_len:
            best_band = band
            best_len = run_len
    assert best_band is not None
    return MoodLabel(int(best_band))


def resolve_mood(timeline: ValenceTimeline) -> MoodLabel:
    """Ground-truth mood when annotated, otherwise derived from the valence stream."""
    if timeline.mood is not None:
        return timeline.mood
    return derive_mood(timeline)


def derive_delta(valence_first: float, valence_last: float, deadzone: float = 0.0) -> DeltaLabel:
    """Sign of the valence differential between two frames.

    Differentials with magnitude <= ``deadzone`` map to the neutral label;
    the default deadzone of 0 labels only exact zeros as neutral.
    """
    for v in (valence_first, valence_last):
        if not -1.0 <= v <= 1.0:
            raise AnnotationError(f"valence must lie in [-1, 1], got {v}")
    if deadzone < 0:
        raise AnnotationError(f"deadzone must be non-negative, got {deadzone}")
    diff = valence_last - valence_first
    if abs(diff) <= deadzone:
        return DeltaLabel.NEUTRAL
    return DeltaLabel.POSITIVE if diff > 0 else DeltaLabel.NEGATIVE


def filter_confidence(
    timeline: ValenceTimeline, threshold: float = CONFIDENCE_THRESHOLD
) -> ValenceTimeline:
    """Drop frames below the detection-confidence threshold, keeping original indices."""
    if not 0.0 <= threshold <= 1.0:
        raise AnnotationError(f"threshold must lie in [0, 1], got {threshold}")
    kept = tuple(f for f in timeline.frames if f.confidence >= threshold)
    if not kept:
        raise NoUsableFramesError(
            f"timeline {timeline.video_id!r}: no frames with confidence >= {threshold}"
        )
    return ValenceTimeline(timeline.video_id, kept, mood=timeline.mood)


def load_timeline(path: str | Path) -> ValenceTimeline:
    """Read a timeline from a JSON Lines annotation file.

    Line 1 is a header ``{"video_id": str, "mood": optional int}``; every
    further line is ``{"frame": int, "valence": float, "confidence": float}``.
    """
    path = Path(path)
    video_id: str | None = None
    mood: MoodLabel | None = None
    frames: list[FrameRecord] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if lineno == 1:
                if "video_id" not in record:
                    raise ParseError(f"{path}:1: header line must carry 'video_id'")
                video_id = str(record["video_id"])
                if record.get("mood") is not None:
                    try:
                        mood = MoodLabel(int(record["mood"]))
                    except ValueError as exc:
                        raise ParseError(f"{path}:1: mood must be one of -1/0/1") from exc
                continue
            try:
                frames.append(
                    FrameRecord(
                        frame_index=int(record["frame"]),
                        valence=float(record["valence"]),
                        confidence=float(record.get("confidence", 1.0)),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: missing or malformed field ({exc})") from exc
            except AnnotationError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if video_id is None:
        raise ParseError(f"{path}: empty annotation file")
    try:
        return ValenceTimeline(video_id, tuple(frames), mood=mood)
    except AnnotationError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def save_timeline(timeline: ValenceTimeline, path: str | Path) -> None:
    """Write a timeline in the JSON Lines annotation format (UTF-8, LF)."""
    path = Path(path)
    header: dict = {"video_id": timeline.video_id}
    if timeline.mood is not None:
        header["mood"] = int(timeline.mood)
    lines = [json.dumps(header, sort_keys=True)]
    for f in timeline.frames:
        lines.append(
            json.dumps(
                {"frame": f.frame_index, "valence": f.valence, "confidence": f.confidence},
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_annotation_dir(root: str | Path) -> list[ValenceTimeline]:
    """Load every ``*.jsonl`` annotation file under a directory, sorted by name."""
    root = Path(root)
    paths = sorted(root.glob("*.jsonl"))
    if not paths:
        raise AnnotationError(f"no annotation files (*.jsonl) under {root}")
    return [load_timeline(p) for p in paths]
