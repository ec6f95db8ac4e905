"""Resolve clip manifests against stored frame tensors and batch them for training.

Frames for video ``v`` live in ``<root>/frames/<v>.npy`` as float32
``(T, C, H, W)`` with a JSON sidecar; manifests index frames by their original
frame index, which equals the row number in the stored tensor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import torch

from .losses import class_indices
from .sampler import ClipSpec, read_manifest


class DataError(ValueError):
    """Manifest and frame store disagree."""


@dataclass
class ClipBatch:
    clips: torch.Tensor          # (B, C, T, H, W)
    frames: torch.Tensor         # (B, C, H, W) -- each clip's last frame
    mood: torch.Tensor           # (B,) class indices in {0, 1, 2}
    delta: torch.Tensor          # (B,) class indices in {0, 1, 2}
    target_valence: torch.Tensor  # (B,)
    indices: torch.Tensor        # (B,) rows into the owning dataset

    def __len__(self):
        return self.clips.shape[0]


class ClipDataset:
    """All clips of one manifest, backed by a single concatenated frame tensor."""

    def __init__(self, clips: Sequence[ClipSpec], frames_by_video: dict[str, np.ndarray]):
        if not clips:
            raise DataError("empty clip list")
        offsets: dict[str, int] = {}
        chunks = []
        total = 0
        for vid in sorted(frames_by_video):
            arr = np.asarray(frames_by_video[vid], dtype=np.float32)
            if arr.ndim != 4:
                raise DataError(f"frames for {vid!r} must be (T, C, H, W), got {arr.shape}")
            offsets[vid] = total
            total += arr.shape[0]
            chunks.append(arr)
        self.frames = torch.from_numpy(np.concatenate(chunks, axis=0))
        self.clip_specs = list(clips)
        n_samples = len(self.clip_specs)
        n_frames = len(self.clip_specs[0].sampled_indices)
        rows = np.empty((n_samples, n_frames), dtype=np.int64)
        mood = np.empty(n_samples, dtype=np.int64)
        delta = np.empty(n_samples, dtype=np.int64)
        target = np.empty(n_samples, dtype=np.float32)
        for i, clip in enumerate(self.clip_specs):
            if clip.video_id not in offsets:
                raise DataError(f"manifest references unknown video {clip.video_id!r}")
            base = offsets[clip.video_id]
            limit = frames_by_video[clip.video_id].shape[0]
            if len(clip.sampled_indices) != n_frames:
                raise DataError("clips mix different frames-per-clip counts")
            if clip.clip_end >= limit or clip.target_index >= limit:
                raise DataError(
                    f"clip in {clip.video_id!r} references frame beyond stored "
                    f"{limit} frames"
                )
            rows[i] = [base + idx for idx in clip.sampled_indices]
            mood[i] = int(clip.mood)
            delta[i] = int(clip.delta)
            target[i] = clip.target_valence
        self.clip_rows = torch.from_numpy(rows)
        self.mood = class_indices(torch.from_numpy(mood))
        self.delta = class_indices(torch.from_numpy(delta))
        self.target_valence = torch.from_numpy(target)

    @classmethod
    def from_benchmark(cls, root: str | Path, split: str) -> "ClipDataset":
        root = Path(root)
        manifest = root / "manifests" / f"{split}.jsonl"
        if not manifest.exists():
            raise DataError(f"no manifest {manifest}")
        clips = read_manifest(manifest)
        if not clips:
            raise DataError(f"manifest {manifest} is empty")
        frames_by_video = {}
        for vid in sorted({c.video_id for c in clips}):
            npy = root / "frames" / f"{vid}.npy"
            if not npy.exists():
                raise DataError(f"missing frame tensor {npy}")
            arr = np.load(npy)
            sidecar = root / "frames" / f"{vid}.json"
            if sidecar.exists():
                meta = json.loads(sidecar.read_text())
                if list(arr.shape) != list(meta.get("shape", arr.shape)):
                    raise DataError(f"{npy}: shape {arr.shape} disagrees with sidecar")
            frames_by_video[vid] = arr
        return cls(clips, frames_by_video)

    def __len__(self):
        return len(self.clip_specs)

    def gather(self, idx: torch.Tensor) -> ClipBatch:
        rows = self.clip_rows[idx]                       # (B, n)
        stacked = self.frames[rows]                      # (B, n, C, H, W)
        return ClipBatch(
            clips=stacked.permute(0, 2, 1, 3, 4).contiguous(),
            frames=stacked[:, -1].contiguous(),
            mood=self.mood[idx],
            delta=self.delta[idx],
            target_valence=self.target_valence[idx],
            indices=idx,
        )

    def batches(
        self,
        batch_size: int,
        shuffle: bool = False,
        generator: torch.Generator | None = None,
    ) -> Iterator[ClipBatch]:
        """Yield batches; a trailing single-sample batch is merged into its
        predecessor so train-mode batch norm always sees at least 2 samples."""
        if batch_size < 1:
            raise DataError(f"batch_size must be >= 1, got {batch_size}")
        n = len(self)
        order = torch.randperm(n, generator=generator) if shuffle else torch.arange(n)
        starts = list(range(0, n, batch_size))
        for i, start in enumerate(starts):
            stop = start + batch_size
            if i == len(starts) - 2 and n - (stop) == 1:
                stop = n  # absorb the would-be singleton
            yield self.gather(order[start:stop])
            if stop == n:
                break

    def evaluation_order(self) -> torch.Tensor:
        """Canonical clip order (video id, then target frame) so evaluation
        results do not depend on manifest ordering."""
        keyed = sorted(
            range(len(self.clip_specs)),
            key=lambda i: (self.clip_specs[i].video_id, self.clip_specs[i].target_index),
        )
        return torch.tensor(keyed, dtype=torch.int64)
