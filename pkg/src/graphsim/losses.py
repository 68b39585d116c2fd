"""Vector-space similarities and margin / Hamming training losses.

All functions take tensors (or arrays) whose last axis is the graph-vector
axis, so they apply equally to single vectors and to batches of them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .autodiff import Tensor, add, as_tensor, mul, reduce_sum, relu, scale, sub, tanh

FAMILIES = ("margin", "hamming")
MODES = ("pair", "triplet")


@dataclass(frozen=True)
class LossConfig:
    family: str = "margin"
    margin: float = 1.0
    mode: str = "pair"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"loss family must be one of {FAMILIES}, got {self.family!r}")
        if self.mode not in MODES:
            raise ValueError(f"loss mode must be one of {MODES}, got {self.mode!r}")
        if not self.margin > 0:
            raise ValueError(f"margin must be positive, got {self.margin}")


def _same_length(u: Tensor, v: Tensor) -> None:
    if u.shape != v.shape:
        raise ValueError(f"vector shapes differ: {u.shape} vs {v.shape}")


def euclidean_sq_distance(u, v) -> Tensor:
    u, v = as_tensor(u), as_tensor(v)
    _same_length(u, v)
    diff = sub(u, v)
    return reduce_sum(mul(diff, diff), axis=-1)


def hamming_similarity_approx(u, v) -> Tensor:
    """Mean of ``tanh(u) * tanh(v)``; takes pre-tanh vectors."""
    u, v = as_tensor(u), as_tensor(v)
    _same_length(u, v)
    return scale(reduce_sum(mul(tanh(u), tanh(v)), axis=-1), 1.0 / u.shape[-1])


def pair_margin_loss(d, t, margin: float = 1.0) -> Tensor:
    """``max(0, margin - t * (1 - d))``."""
    return relu(sub(margin, mul(t, sub(1.0, d))))


def triplet_margin_loss(d_pos, d_neg, margin: float = 1.0) -> Tensor:
    """``max(0, d_pos - d_neg + margin)``."""
    return relu(add(sub(d_pos, d_neg), margin))


def hamming_pair_loss(s, t) -> Tensor:
    """``(t - s)^2 / 4``."""
    diff = sub(t, s)
    return scale(mul(diff, diff), 0.25)


def hamming_triplet_loss(s_pos, s_neg) -> Tensor:
    """``((s_pos - 1)^2 + (s_neg + 1)^2) / 8``."""
    a = sub(s_pos, 1.0)
    b = add(s_neg, 1.0)
    return scale(add(mul(a, a), mul(b, b)), 0.125)


def similarity(family: str, u, v) -> Tensor:
    """Score where larger means more similar: ``1 - d`` or approximate Hamming."""
    if family == "margin":
        return sub(1.0, euclidean_sq_distance(u, v))
    return hamming_similarity_approx(u, v)


def batch_pair_loss(cfg: LossConfig, u, v, labels) -> Tensor:
    """Mean pair loss over a batch of vector pairs ``[B, H]`` with ``labels`` in {-1, 1}."""
    if cfg.family == "margin":
        per = pair_margin_loss(euclidean_sq_distance(u, v), labels, cfg.margin)
    else:
        per = hamming_pair_loss(hamming_similarity_approx(u, v), labels)
    return scale(reduce_sum(per), 1.0 / per.shape[0])


def batch_triplet_loss(cfg: LossConfig, anchor_pos, pos, anchor_neg, neg) -> Tensor:
    if cfg.family == "margin":
        per = triplet_margin_loss(euclidean_sq_distance(anchor_pos, pos),
                                  euclidean_sq_distance(anchor_neg, neg), cfg.margin)
    else:
        per = hamming_triplet_loss(hamming_similarity_approx(anchor_pos, pos),
                                   hamming_similarity_approx(anchor_neg, neg))
    return scale(reduce_sum(per), 1.0 / per.shape[0])
