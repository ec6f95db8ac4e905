"""Pearson and concordance correlation coefficients plus per-video evaluation reports.

All statistics are population (1/N) moments; both coefficients return 0 by
convention when either series has zero variance, so they stay defined for
constant early-training predictions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np


class MetricError(ValueError):
    """Invalid metric input."""


@dataclass(frozen=True)
class PredictionSeries:
    """Frame-ordered ground-truth / prediction pairs for one video."""

    y_true: np.ndarray
    y_pred: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y_true", np.asarray(self.y_true, dtype=np.float64))
        object.__setattr__(self, "y_pred", np.asarray(self.y_pred, dtype=np.float64))
        if self.y_true.ndim != 1 or self.y_pred.ndim != 1:
            raise MetricError("series must be one-dimensional")
        if self.y_true.shape != self.y_pred.shape:
            raise MetricError(
                f"series lengths differ: {self.y_true.shape[0]} vs {self.y_pred.shape[0]}"
            )
        if self.y_true.size == 0:
            raise MetricError("series must be non-empty")

    def __len__(self):
        return self.y_true.size


def pcc(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Pearson correlation with population statistics; 0 if either std is 0."""
    y, p = _as_pair(y_true, y_pred)
    y_c = y - y.mean()
    p_c = p - p.mean()
    sd_y = np.sqrt(np.mean(y_c**2))
    sd_p = np.sqrt(np.mean(p_c**2))
    if sd_y == 0.0 or sd_p == 0.0:
        return 0.0
    return float(np.mean(y_c * p_c) / (sd_y * sd_p))


def ccc(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Concordance correlation: agreement with the 45-degree line.

    2*cov / (var_y + var_pred + (mean_y - mean_pred)^2), population statistics.
    """
    y, p = _as_pair(y_true, y_pred)
    mu_y, mu_p = y.mean(), p.mean()
    var_y = np.mean((y - mu_y) ** 2)
    var_p = np.mean((p - mu_p) ** 2)
    if var_y == 0.0 or var_p == 0.0:
        return 0.0
    cov = np.mean((y - mu_y) * (p - mu_p))
    return float(2.0 * cov / (var_y + var_p + (mu_y - mu_p) ** 2))


def _as_pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y_true, dtype=np.float64).ravel()
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise MetricError(f"series lengths differ: {y.size} vs {p.size}")
    if y.size < 2:
        raise MetricError(f"need at least 2 points, got {y.size}")
    return y, p


@dataclass(frozen=True)
class MetricReport:
    """Global and per-video agreement metrics.

    ``ccc``/``pcc`` are computed over the concatenation of all series (the
    headline numbers); ``mean_video_ccc`` averages the per-video values.
    """

    ccc: float
    pcc: float
    per_video: dict[str, float] = field(default_factory=dict)
    mean_video_ccc: float = 0.0
    n_frames: int = 0

    def to_dict(self) -> dict:
        return {
            "ccc": self.ccc,
            "pcc": self.pcc,
            "per_video": dict(sorted(self.per_video.items())),
            "mean_video_ccc": self.mean_video_ccc,
            "n_frames": self.n_frames,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        return cls(
            ccc=data["ccc"],
            pcc=data["pcc"],
            per_video=dict(data.get("per_video", {})),
            mean_video_ccc=data.get("mean_video_ccc", 0.0),
            n_frames=data.get("n_frames", 0),
        )


def evaluate(predictions: Mapping[str, PredictionSeries]) -> MetricReport:
    """Aggregate per-video prediction series into a MetricReport.

    Videos contributing fewer than 2 points are folded into the global
    concatenation but skipped in the per-video map.
    """
    if not predictions:
        raise MetricError("no prediction series to evaluate")
    all_true = np.concatenate([s.y_true for s in predictions.values()])
    all_pred = np.concatenate([s.y_pred for s in predictions.values()])
    per_video = {
        vid: ccc(s.y_true, s.y_pred) for vid, s in predictions.items() if len(s) >= 2
    }
    mean_video = float(np.mean(list(per_video.values()))) if per_video else 0.0
    return MetricReport(
        ccc=ccc(all_true, all_pred),
        pcc=pcc(all_true, all_pred),
        per_video=per_video,
        mean_video_ccc=mean_video,
        n_frames=int(all_true.size),
    )


def save_predictions(predictions: Mapping[str, PredictionSeries], path: str | Path,
                     frames: Mapping[str, np.ndarray] | None = None) -> None:
    """Write predictions as JSON Lines: {"video_id", "frame", "y", "y_hat"}."""
    lines = []
    for vid in sorted(predictions):
        series = predictions[vid]
        frame_ids = frames[vid] if frames is not None else range(len(series))
        for frame, y, y_hat in zip(frame_ids, series.y_true, series.y_pred):
            lines.append(
                json.dumps(
                    {"video_id": vid, "frame": int(frame), "y": float(y), "y_hat": float(y_hat)},
                    sort_keys=True,
                )
            )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8", newline="\n")


def load_predictions(path: str | Path) -> dict[str, PredictionSeries]:
    """Read a predictions JSONL file back into per-video series (frame-ordered)."""
    rows: dict[str, list[tuple[int, float, float]]] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                rows.setdefault(str(rec["video_id"]), []).append(
                    (int(rec["frame"]), float(rec["y"]), float(rec["y_hat"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise MetricError(f"{path}:{lineno}: malformed prediction record ({exc})") from exc
    out = {}
    for vid, triples in rows.items():
        triples.sort(key=lambda t: t[0])
        out[vid] = PredictionSeries(
            y_true=np.array([t[1] for t in triples]),
            y_pred=np.array([t[2] for t in triples]),
        )
    return out
