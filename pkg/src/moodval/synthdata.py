"""Synthetic affect videos with known latent valence.

Each video carries a per-video mood bias plus a smooth zero-mean excursion
process. Frames encode the latent redundantly: background luminance tracks
valence but is corrupted by per-frame observation noise, while a small square's
vertical position tracks the recent valence slope (with positional jitter).
Single frames are therefore noisy reads of the latent, but statistics over a
clip are clean, which is exactly what makes long-horizon context informative
for next-frame valence prediction.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import FrameRecord, MoodLabel, ValenceTimeline, band_of, save_timeline
from .sampler import SamplerConfig, generate_clips, write_manifest


class SynthError(ValueError):
    """Invalid generator configuration."""


@dataclass(frozen=True)
class SynthConfig:
    num_videos: int = 60
    frames_per_video: int = 400
    height: int = 32
    width: int = 32
    channels: int = 3
    mood_biases: tuple[float, ...] = (-0.5, 0.0, 0.5)
    tau: float = 30.0
    process_sd: float = 0.22
    obs_noise_sd: float = 0.25
    slope_window: int = 12
    slope_scale: float = 0.35
    slope_jitter_sd: float = 1.5
    square_size: int = 6
    train_fraction: float = 0.75
    seed: int = 0
    max_rejections: int = 100
    sampler: SamplerConfig = field(
        default_factory=lambda: SamplerConfig(initial_length=40, stride=3, frames_per_clip=5)
    )

    def __post_init__(self):
        object.__setattr__(self, "mood_biases", tuple(self.mood_biases))
        if min(self.num_videos, self.frames_per_video, self.height, self.width,
               self.channels, self.square_size) < 1:
            raise SynthError("sizes must be positive")
        if any(not -1.0 < b < 1.0 for b in self.mood_biases):
            raise SynthError(f"mood biases must lie inside (-1, 1), got {self.mood_biases}")
        if self.tau <= 0 or self.process_sd < 0 or self.obs_noise_sd < 0:
            raise SynthError("tau must be positive; noise amplitudes non-negative")
        if self.square_size >= min(self.height, self.width):
            raise SynthError("square must fit inside the frame")
        if not 0.0 < self.train_fraction < 1.0:
            raise SynthError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["mood_biases"] = list(self.mood_biases)
        data["sampler"] = self.sampler.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        data = dict(data)
        if "sampler" in data:
            data["sampler"] = SamplerConfig.from_dict(data["sampler"])
        if "mood_biases" in data:
            data["mood_biases"] = tuple(data["mood_biases"])
        return cls(**data)


@dataclass
class SynthVideo:
    video_id: str
    pixels: np.ndarray  # (T, C, H, W) float32
    timeline: ValenceTimeline
    mood: MoodLabel


def video_bias(config: SynthConfig, video_index: int) -> float:
    return config.mood_biases[video_index % len(config.mood_biases)]


def _longest_run_band(v: np.ndarray) -> int:
    bands = np.where(v > 0.3, 1, np.where(v < -0.3, -1, 0))
    best_band, best_len = 0, 0
    for band, group in itertools.groupby(bands):
        length = sum(1 for _ in group)
        if length > best_len:
            best_band, best_len = int(band), length
    return best_band


def generate_latent(config: SynthConfig, video_index: int) -> np.ndarray:
    """Latent valence: clamp(bias + OU excursion), resampled until the
    longest-run band matches the band of the video's bias."""
    bias = video_bias(config, video_index)
    intended = int(band_of(bias))
    rng = np.random.default_rng([config.seed, video_index, 0])
    rho = math.exp(-1.0 / config.tau)
    innovation_sd = config.process_sd * math.sqrt(1.0 - rho * rho)
    n = config.frames_per_video
    for _ in range(config.max_rejections):
        shocks = rng.normal(size=n)
        e = np.empty(n)
        e[0] = shocks[0] * config.process_sd
        for t in range(1, n):
            e[t] = rho * e[t - 1] + innovation_sd * shocks[t]
        v = np.clip(bias + e, -1.0, 1.0)
        if _longest_run_band(v) == intended:
            return v
    raise SynthError(
        f"video {video_index}: could not realise mood band {intended} in "
        f"{config.max_rejections} draws; bias {bias} too weak for process_sd "
        f"{config.process_sd}"
    )


def render(valence: np.ndarray, config: SynthConfig, video_index: int = 0) -> SynthVideo:
    """Render a latent valence sequence to pixels and its annotation timeline."""
    valence = np.asarray(valence, dtype=np.float64)
    n = valence.size
    rng = np.random.default_rng([config.seed, video_index, 1])
    h, w, c, sq = config.height, config.width, config.channels, config.square_size
    luminance = (valence + 1.0) / 2.0
    if config.obs_noise_sd > 0:
        luminance = luminance + rng.normal(0.0, config.obs_noise_sd, size=n)
    luminance = np.clip(luminance, 0.0, 1.0)

    lagged = valence[np.maximum(np.arange(n) - config.slope_window, 0)]
    slope = np.clip((valence - lagged) / config.slope_scale, -1.0, 1.0)
    rows = (1.0 - (slope + 1.0) / 2.0) * (h - sq)
    if config.slope_jitter_sd > 0:
        rows = rows + rng.normal(0.0, config.slope_jitter_sd, size=n)
    rows = np.clip(np.rint(rows), 0, h - sq).astype(np.int64)
    col = (w - sq) // 2

    pixels = np.empty((n, c, h, w), dtype=np.float32)
    pixels[:] = luminance[:, None, None, None].astype(np.float32)
    square_channel = 1 if c > 1 else 0
    for t in range(n):
        r = rows[t]
        pixels[t, :, r : r + sq, col : col + sq] = 0.0
        pixels[t, square_channel, r : r + sq, col : col + sq] = 1.0

    video_id = f"synth-{video_index:03d}"
    mood = MoodLabel(_longest_run_band(valence))
    timeline = ValenceTimeline(
        video_id,
        tuple(FrameRecord(t, float(valence[t]), 1.0) for t in range(n)),
        mood=mood,
    )
    return SynthVideo(video_id=video_id, pixels=pixels, timeline=timeline, mood=mood)


def generate_video(config: SynthConfig, video_index: int) -> SynthVideo:
    return render(generate_latent(config, video_index), config, video_index)


def split_videos(config: SynthConfig) -> tuple[list[int], list[int]]:
    """Disjoint train/val video indices, stratified over the mood-bias classes."""
    by_class: dict[int, list[int]] = {}
    for idx in range(config.num_videos):
        by_class.setdefault(idx % len(config.mood_biases), []).append(idx)
    train, val = [], []
    for _, members in sorted(by_class.items()):
        cut = max(1, round(config.train_fraction * len(members)))
        cut = min(cut, len(members) - 1) if len(members) > 1 else cut
        train.extend(members[:cut])
        val.extend(members[cut:])
    return sorted(train), sorted(val)


def build_benchmark(config: SynthConfig, out_dir: str | Path) -> dict:
    """Emit annotations, frame tensors, and train/val clip manifests.

    Returns the benchmark metadata (also written to benchmark.json).
    Regeneration with the same config is byte-identical.
    """
    out = Path(out_dir)
    (out / "annotations").mkdir(parents=True, exist_ok=True)
    (out / "frames").mkdir(exist_ok=True)
    (out / "manifests").mkdir(exist_ok=True)

    train_idx, val_idx = split_videos(config)
    split_of = {i: "train" for i in train_idx} | {i: "val" for i in val_idx}
    manifest_clips = {"train": [], "val": []}
    video_ids = {}
    for idx in range(config.num_videos):
        video = generate_video(config, idx)
        video_ids[idx] = video.video_id
        save_timeline(video.timeline, out / "annotations" / f"{video.video_id}.jsonl")
        np.save(out / "frames" / f"{video.video_id}.npy", video.pixels)
        sidecar = {
            "video_id": video.video_id,
            "shape": list(video.pixels.shape),
            "dtype": str(video.pixels.dtype),
        }
        (out / "frames" / f"{video.video_id}.json").write_text(
            json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8"
        )
        clips = generate_clips(video.timeline, config.sampler)
        manifest_clips[split_of[idx]].extend(clips)
    for split, clips in manifest_clips.items():
        write_manifest(clips, out / "manifests" / f"{split}.jsonl")

    meta = {
        "config": config.to_dict(),
        "splits": {
            "train": [video_ids[i] for i in train_idx],
            "val": [video_ids[i] for i in val_idx],
        },
        "n_clips": {split: len(clips) for split, clips in manifest_clips.items()},
    }
    (out / "benchmark.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return meta
