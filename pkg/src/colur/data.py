"""Synthetic dataset generation, stratified splitting, symmetric and
asymmetric label-noise injection, noise statistics, and CSV round-trips."""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class Dataset:
    features: np.ndarray  # (N, d) float64
    labels: np.ndarray    # (N,) int64 class ids in [0, K)
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.features):
            raise ConfigError("labels length must match feature row count")
        if len(self.labels) and self.labels.max() >= self.num_classes:
            raise ConfigError("label id out of range for num_classes")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)


@dataclass
class NoiseSpec:
    kind: str                 # "symmetric" | "asymmetric"
    ratio: float
    superclass_map: list = None  # list of class-id groups, asymmetric only

    def __post_init__(self):
        if self.kind not in ("symmetric", "asymmetric"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if not (0.0 <= self.ratio <= 1.0):
            raise ConfigError(f"noise ratio must be in [0,1], got {self.ratio}")

    def validate_map(self, num_classes):
        if self.kind != "asymmetric":
            return
        if not self.superclass_map:
            raise ConfigError("noise.superclass_map required for asymmetric noise")
        seen = set()
        for group in self.superclass_map:
            if len(group) < 2:
                raise ConfigError(
                    "noise.superclass_map groups need at least 2 classes")
            for c in group:
                if c in seen:
                    raise ConfigError(
                        f"noise.superclass_map: class {c} appears twice")
                seen.add(c)
        if seen != set(range(num_classes)):
            raise ConfigError(
                "noise.superclass_map must cover every class exactly once")


@dataclass
class NoisyDataset:
    """Observed (possibly corrupted) dataset plus evaluation-only ground truth."""

    base: Dataset
    true_labels: np.ndarray
    noise_flags: np.ndarray
    noise_spec: NoiseSpec = None

    def __post_init__(self):
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        self.noise_flags = np.asarray(self.noise_flags, dtype=bool)

    @property
    def num_noisy(self):
        return int(self.noise_flags.sum())


def make_blobs(num_classes, per_class, dims, spread, seed):
    """K isotropic Gaussian clusters (sd=spread) with centers on a circle in
    the first two dims, adjacent centers 6*spread apart so classes are
    cleanly separable."""
    if num_classes < 2:
        raise ConfigError("need at least 2 classes")
    if per_class < 1:
        raise ConfigError("per_class must be >= 1")
    if dims < 2:
        raise ConfigError("need at least 2 feature dims")
    if spread <= 0:
        raise ConfigError("spread must be positive")
    radius = 3.0 * spread / np.sin(np.pi / num_classes)
    rng = np.random.default_rng(seed)
    feats = np.empty((num_classes * per_class, dims))
    labels = np.empty(num_classes * per_class, dtype=np.int64)
    for c in range(num_classes):
        angle = 2.0 * np.pi * c / num_classes
        center = np.zeros(dims)
        center[0] = radius * np.cos(angle)
        center[1] = radius * np.sin(angle)
        block = slice(c * per_class, (c + 1) * per_class)
        feats[block] = center + rng.normal(0.0, spread, size=(per_class, dims))
        labels[block] = c
    # deterministic shuffle so batches are class-mixed
    order = rng.permutation(len(labels))
    return Dataset(feats[order], labels[order], num_classes)


def split(dataset, ratio_initial, seed):
    """Class-stratified split: floor(ratio * N_c) of each class into the first
    part. Parts are disjoint and exhaustive."""
    if not (0.0 < ratio_initial < 1.0):
        raise ConfigError(f"split ratio must be in (0,1), got {ratio_initial}")
    rng = np.random.default_rng(seed)
    first, second = [], []
    for c in range(dataset.num_classes):
        idx = np.flatnonzero(dataset.labels == c)
        idx = rng.permutation(idx)
        n_first = int(np.floor(ratio_initial * len(idx)))
        if n_first < 1 or len(idx) - n_first < 1:
            raise ConfigError(
                f"split ratio {ratio_initial} leaves class {c} empty in one part")
        first.append(idx[:n_first])
        second.append(idx[n_first:])
    i0 = np.sort(np.concatenate(first))
    i1 = np.sort(np.concatenate(second))
    return dataset.subset(i0), dataset.subset(i1)


def _corrupt(dataset, eta, seed, alternatives):
    """Shared exact-count corruption: floor(eta*N) indices, each relabeled
    uniformly among alternatives(true_label)."""
    n = len(dataset)
    rng = np.random.default_rng(seed)
    n_noisy = int(np.floor(eta * n))
    chosen = rng.choice(n, size=n_noisy, replace=False)
    observed = dataset.labels.copy()
    flags = np.zeros(n, dtype=bool)
    for i in chosen:
        options = alternatives(int(dataset.labels[i]))
        observed[i] = options[rng.integers(len(options))]
        flags[i] = True
    noisy_base = Dataset(dataset.features, observed, dataset.num_classes)
    return noisy_base, flags


def inject_symmetric(dataset, eta, seed):
    """Replace floor(eta*N) labels by a uniformly random different class."""
    if dataset.num_classes < 2:
        raise ConfigError("symmetric noise needs at least 2 classes")
    spec = NoiseSpec("symmetric", eta)
    k = dataset.num_classes

    def alternatives(true):
        return [c for c in range(k) if c != true]

    base, flags = _corrupt(dataset, eta, seed, alternatives)
    return NoisyDataset(base, dataset.labels.copy(), flags, spec)


def inject_asymmetric(dataset, eta, superclass_map, seed):
    """Replace floor(eta*N) labels by a random other class from the same
    superclass group."""
    spec = NoiseSpec("asymmetric", eta, superclass_map)
    spec.validate_map(dataset.num_classes)
    group_of = {}
    for group in superclass_map:
        for c in group:
            group_of[c] = group

    def alternatives(true):
        return [c for c in group_of[true] if c != true]

    base, flags = _corrupt(dataset, eta, seed, alternatives)
    return NoisyDataset(base, dataset.labels.copy(), flags, spec)


def noise_stats(nd):
    """Per-class original/noisy/clean counts plus mean/std of noisy counts."""
    k = nd.base.num_classes
    original = np.bincount(nd.true_labels, minlength=k)
    noisy = np.bincount(nd.base.labels[nd.noise_flags], minlength=k)
    clean = np.bincount(nd.base.labels[~nd.noise_flags], minlength=k)
    return {
        "original": original,
        "noisy": noisy,
        "clean": clean,
        "noisy_mean": float(noisy.mean()),
        "noisy_std": float(noisy.std()),
    }


def save_dataset_csv(dataset, path):
    """Header f0..f{d-1},label; UTF-8, LF line endings."""
    d = dataset.features.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(d)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def save_noisy_csv(nd, path):
    """Dataset CSV plus true_label and is_noisy columns."""
    d = nd.base.features.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(d)]
                        + ["label", "true_label", "is_noisy"])
        for row, label, true, flag in zip(nd.base.features, nd.base.labels,
                                          nd.true_labels, nd.noise_flags):
            writer.writerow([repr(float(v)) for v in row]
                            + [int(label), int(true), int(flag)])


def _read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def load_dataset_csv(path, num_classes=None):
    header, rows = _read_rows(path)
    if header[-1] != "label" or not header[0].startswith("f"):
        raise IOError(f"{path}: expected header f0..f{{d-1}},label")
    d = len(header) - 1
    feats = np.array([[float(v) for v in r[:d]] for r in rows])
    labels = np.array([int(r[d]) for r in rows], dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if len(labels) else 0
    return Dataset(feats, labels, num_classes)


def load_noisy_csv(path, num_classes=None):
    header, rows = _read_rows(path)
    if header[-3:] != ["label", "true_label", "is_noisy"]:
        raise IOError(f"{path}: expected trailing columns "
                      "label,true_label,is_noisy")
    d = len(header) - 3
    feats = np.array([[float(v) for v in r[:d]] for r in rows])
    labels = np.array([int(r[d]) for r in rows], dtype=np.int64)
    true = np.array([int(r[d + 1]) for r in rows], dtype=np.int64)
    flags = np.array([bool(int(r[d + 2])) for r in rows])
    if num_classes is None:
        num_classes = int(max(labels.max(), true.max())) + 1 if len(labels) else 0
    base = Dataset(feats, labels, num_classes)
    return NoisyDataset(base, true, flags)
