"""Dynamically weighted valence loss, branch cross-entropies, cumulative losses."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

MODEL_KINDS = ("valnet", "m_valnet", "mdelta_valnet")


class LossError(ValueError):
    """Invalid loss input."""


@dataclass(frozen=True)
class LossWeights:
    """Epoch-indexed weights of the MSE / (1 - CCC) valence-loss mixture."""

    epoch: int
    total_epochs: int
    alpha: float = 1.0
    k: int = 2

    def __post_init__(self):
        if self.total_epochs < 1:
            raise LossError(f"total_epochs must be >= 1, got {self.total_epochs}")
        if not 0 <= self.epoch <= self.total_epochs:
            raise LossError(f"epoch {self.epoch} outside [0, {self.total_epochs}]")
        if self.alpha <= 0:
            raise LossError(f"alpha must be positive, got {self.alpha}")
        if self.k < 1:
            raise LossError(f"k must be >= 1, got {self.k}")

    def resolve(self) -> tuple[float, float]:
        return dynamic_weights(self.epoch, self.total_epochs, self.alpha, self.k)


def dynamic_weights(
    epoch: int, total_epochs: int, alpha: float = 1.0, k: int = 2
) -> tuple[float, float]:
    """(f, g) = (alpha*(i/m)^k, 1 - (i/m)^k) for training epoch i of m.

    g dominates early so training starts correlation-driven; f takes over as
    epochs advance. With alpha = 1, f + g = 1 throughout.
    """
    LossWeights(epoch=epoch, total_epochs=total_epochs, alpha=alpha, k=k)
    ratio = (epoch / total_epochs) ** k
    return alpha * ratio, 1.0 - ratio


def batch_ccc(y_true: torch.Tensor, y_pred: torch.Tensor) -> torch.Tensor:
    """Differentiable concordance correlation over a batch.

    Same conventions as :mod:`moodval.metrics`: population statistics, and 0
    when either side has zero variance (that branch carries no gradient).
    """
    y = y_true.reshape(-1)
    p = y_pred.reshape(-1)
    if y.numel() != p.numel():
        raise LossError(f"batch lengths differ: {y.numel()} vs {p.numel()}")
    if y.numel() < 2:
        raise LossError(f"need at least 2 elements for CCC, got {y.numel()}")
    mu_y, mu_p = y.mean(), p.mean()
    var_y = ((y - mu_y) ** 2).mean()
    var_p = ((p - mu_p) ** 2).mean()
    if var_y.item() == 0.0 or var_p.item() == 0.0:
        return torch.zeros((), dtype=y.dtype, device=y.device)
    cov = ((y - mu_y) * (p - mu_p)).mean()
    return 2.0 * cov / (var_y + var_p + (mu_y - mu_p) ** 2)


def valence_loss(
    y_true: torch.Tensor, y_pred: torch.Tensor, f: float, g: float
) -> torch.Tensor:
    """f * MSE + g * (1 - CCC) over a batch of valence predictions."""
    y = y_true.reshape(-1)
    p = y_pred.reshape(-1)
    if y.numel() == 0:
        raise LossError("empty batch")
    if y.numel() != p.numel():
        raise LossError(f"batch lengths differ: {y.numel()} vs {p.numel()}")
    mse = ((p - y) ** 2).mean()
    if y.numel() < 2:
        return f * mse + g * torch.ones((), dtype=y.dtype, device=y.device)
    return f * mse + g * (1.0 - batch_ccc(y, p))


def class_indices(labels: torch.Tensor) -> torch.Tensor:
    """Map {-1, 0, +1} mood/delta labels to {0, 1, 2} class indices."""
    labels = labels.reshape(-1).long()
    if labels.numel() and (labels.min() < -1 or labels.max() > 1):
        raise LossError(f"labels must lie in {{-1, 0, 1}}, got range "
                        f"[{int(labels.min())}, {int(labels.max())}]")
    return labels + 1


def branch_cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean softmax cross-entropy for a 3-class mood or delta branch."""
    if logits.ndim != 2 or logits.shape[1] != 3:
        raise LossError(f"expected (batch, 3) logits, got {tuple(logits.shape)}")
    labels = labels.reshape(-1).long()
    if labels.numel() != logits.shape[0]:
        raise LossError(f"batch sizes differ: {logits.shape[0]} logits, {labels.numel()} labels")
    if labels.numel() == 0:
        raise LossError("empty batch")
    if labels.min() < 0 or labels.max() > 2:
        raise LossError(f"class indices must lie in {{0, 1, 2}}, got range "
                        f"[{int(labels.min())}, {int(labels.max())}]")
    return F.cross_entropy(logits, labels)


@dataclass(frozen=True)
class LossBreakdown:
    """Detached per-branch loss values recorded for bookkeeping."""

    mse: float
    one_minus_ccc: float
    valence: float
    mood: float | None
    delta: float | None
    total: float

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "one_minus_ccc": self.one_minus_ccc,
            "valence": self.valence,
            "mood": self.mood,
            "delta": self.delta,
            "total": self.total,
        }


def total_loss(
    kind: str,
    y_true: torch.Tensor,
    y_pred: torch.Tensor,
    f: float,
    g: float,
    mood_logits: torch.Tensor | None = None,
    mood_labels: torch.Tensor | None = None,
    delta_logits: torch.Tensor | None = None,
    delta_labels: torch.Tensor | None = None,
) -> tuple[torch.Tensor, LossBreakdown]:
    """Cumulative loss for a model kind: unweighted sum of its branch losses.

    valnet sums the valence branch alone; m_valnet adds mood cross-entropy;
    mdelta_valnet adds mood and delta cross-entropies. Label tensors carry
    class indices {0, 1, 2} (see :func:`class_indices`).
    """
    if kind not in MODEL_KINDS:
        raise LossError(f"unknown model kind {kind!r}")
    y = y_true.reshape(-1)
    p = y_pred.reshape(-1)
    if y.numel() == 0:
        raise LossError("empty batch")
    mse = ((p - y) ** 2).mean()
    one_minus_ccc = (
        1.0 - batch_ccc(y, p) if y.numel() >= 2
        else torch.ones((), dtype=y.dtype, device=y.device)
    )
    l_val = f * mse + g * one_minus_ccc
    total = l_val
    l_mood = l_delta = None
    if kind in ("m_valnet", "mdelta_valnet"):
        if mood_logits is None or mood_labels is None:
            raise LossError(f"{kind} requires mood logits and labels")
        l_mood = branch_cross_entropy(mood_logits, mood_labels)
        total = total + l_mood
    if kind == "mdelta_valnet":
        if delta_logits is None or delta_labels is None:
            raise LossError("mdelta_valnet requires delta logits and labels")
        l_delta = branch_cross_entropy(delta_logits, delta_labels)
        total = total + l_delta
    breakdown = LossBreakdown(
        mse=float(mse.detach()),
        one_minus_ccc=float(one_minus_ccc.detach()),
        valence=float(l_val.detach()),
        mood=None if l_mood is None else float(l_mood.detach()),
        delta=None if l_delta is None else float(l_delta.detach()),
        total=float(total.detach()),
    )
    return total, breakdown
