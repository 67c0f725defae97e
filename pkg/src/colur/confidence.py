"""Confidence scoring and set construction: per-sample predictions, label
smoothing, teacher/student agreement partitioning at a joint-confidence
threshold, and the soft-label / feature mixing primitives."""

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ConfigError, ShapeError


@dataclass
class Prediction:
    probs: np.ndarray
    label: int        # argmax, lowest index on ties
    confidence: float  # max(probs)


@dataclass
class PartitionSets:
    """Index sets over a sample collection: teacher/student disagreements and
    agreements, each split at the joint-confidence threshold tau."""

    disagree: np.ndarray
    agree: np.ndarray
    joint_conf: np.ndarray
    high_disagree: np.ndarray
    low_disagree: np.ndarray
    high_agree: np.ndarray
    low_agree: np.ndarray


def predict(params, features):
    """One Prediction per row of features."""
    probs = nn.forward(params, features)
    labels = probs.argmax(axis=1)  # numpy argmax takes the lowest tied index
    confs = probs.max(axis=1)
    return [Prediction(p, int(l), float(c))
            for p, l, c in zip(probs, labels, confs)]


def smooth_label(label, gamma, num_classes):
    """(1-gamma) * onehot(label) + gamma/K."""
    if not (0.0 <= gamma <= 1.0):
        raise ConfigError(f"smooth rate must be in [0,1], got {gamma}")
    if not (0 <= label < num_classes):
        raise ConfigError(f"label {label} out of range for K={num_classes}")
    vec = np.full(num_classes, gamma / num_classes)
    vec[label] += 1.0 - gamma
    return vec


def joint_confidence(conf_a, conf_b):
    """Geometric mean of two confidence scores."""
    return float(np.sqrt(conf_a * conf_b))


def partition(preds_t, preds_u, tau):
    """Split sample indices by teacher/student label agreement, then split
    each side at joint confidence >= tau (high) vs < tau (low)."""
    if len(preds_t) != len(preds_u):
        raise ShapeError(
            f"prediction lists differ in length: {len(preds_t)} vs {len(preds_u)}")
    labels_t = np.array([p.label for p in preds_t])
    labels_u = np.array([p.label for p in preds_u])
    joint = np.sqrt(np.array([p.confidence for p in preds_t])
                    * np.array([p.confidence for p in preds_u]))
    disagree_mask = labels_t != labels_u
    idx = np.arange(len(preds_t))
    disagree = idx[disagree_mask]
    agree = idx[~disagree_mask]
    high = joint >= tau
    return PartitionSets(
        disagree=disagree,
        agree=agree,
        joint_conf=joint,
        high_disagree=idx[disagree_mask & high],
        low_disagree=idx[disagree_mask & ~high],
        high_agree=idx[~disagree_mask & high],
        low_agree=idx[~disagree_mask & ~high],
    )


def mix_soft_labels(probs_t, probs_u, beta_m):
    """beta_m * p_t + (1 - beta_m) * p_u."""
    probs_t = np.asarray(probs_t, dtype=np.float64)
    probs_u = np.asarray(probs_u, dtype=np.float64)
    if probs_t.shape != probs_u.shape:
        raise ShapeError(f"probs shapes differ: {probs_t.shape} vs {probs_u.shape}")
    return beta_m * probs_t + (1.0 - beta_m) * probs_u


def avg_soft_labels(probs_t, probs_u):
    """Elementwise mean of two probability vectors."""
    probs_t = np.asarray(probs_t, dtype=np.float64)
    probs_u = np.asarray(probs_u, dtype=np.float64)
    if probs_t.shape != probs_u.shape:
        raise ShapeError(f"probs shapes differ: {probs_t.shape} vs {probs_u.shape}")
    return 0.5 * (probs_t + probs_u)


def mixup(x1, p1, x2, p2, beta):
    """Convex blend of two (features, soft label) pairs at coefficient beta."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ShapeError(f"feature shapes differ: {x1.shape} vs {x2.shape}")
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise ShapeError(f"probs shapes differ: {p1.shape} vs {p2.shape}")
    return beta * x1 + (1.0 - beta) * x2, beta * p1 + (1.0 - beta) * p2


class BetaSampler:
    """Seeded symmetric Beta(alpha, alpha) stream built from two gamma draws."""

    def __init__(self, alpha, seed):
        if alpha <= 0:
            raise ConfigError(f"Beta parameter must be positive, got {alpha}")
        self.alpha = alpha
        self._rng = np.random.default_rng(seed)

    def sample(self):
        g1 = self._rng.gamma(self.alpha)
        g2 = self._rng.gamma(self.alpha)
        return float(g1 / (g1 + g2))
