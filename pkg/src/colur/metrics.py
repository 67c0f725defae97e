"""Evaluation metrics and deterministic report emission."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import EvalError


@dataclass
class MetricsReport:
    test_accuracy: float
    noisy_subset_error: float = None
    confusion: np.ndarray = None
    metadata: dict = field(default_factory=dict)


def _predict_labels(params, features):
    return nn.forward(params, features).argmax(axis=1)


def accuracy(params, dataset):
    """Fraction of argmax-correct predictions."""
    if len(dataset) == 0:
        raise EvalError("accuracy over an empty dataset")
    return float((_predict_labels(params, dataset.features)
                  == dataset.labels).mean())


def noisy_subset_error(params, nd):
    """Error rate against TRUE labels, restricted to the flagged samples."""
    flagged = np.flatnonzero(nd.noise_flags)
    if len(flagged) == 0:
        raise EvalError("noisy_subset_error needs at least one flagged sample")
    pred = _predict_labels(params, nd.base.features[flagged])
    return float((pred != nd.true_labels[flagged]).mean())


def confusion(params, features, ref_labels, num_classes):
    """K x K counts: entry (i, j) = samples with reference label i predicted j."""
    if len(features) == 0:
        raise EvalError("confusion matrix over an empty dataset")
    pred = _predict_labels(params, features)
    mat = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(mat, (np.asarray(ref_labels, dtype=np.int64), pred), 1)
    return mat


def penultimate_activations(params, features):
    """Activations of the last hidden layer, one row per sample."""
    acts = nn._forward_trace(params, features)
    return acts[-2] if len(acts) > 2 else acts[0]


REPORT_COLUMNS = ["test_accuracy", "noisy_subset_error", "config_hash",
                  "seed", "dataset", "timestamp"]


def emit_report(report, path, fmt="json"):
    """Deterministic serialization: sorted JSON keys, fixed CSV column order."""
    try:
        if fmt == "json":
            doc = {
                "test_accuracy": report.test_accuracy,
                "noisy_subset_error": report.noisy_subset_error,
                "confusion": report.confusion.tolist()
                if report.confusion is not None else None,
                "metadata": report.metadata,
            }
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                json.dump(doc, fh, indent=2, sort_keys=True)
                fh.write("\n")
        elif fmt == "csv":
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(REPORT_COLUMNS)
                meta = report.metadata
                writer.writerow([
                    repr(float(report.test_accuracy)),
                    repr(float(report.noisy_subset_error))
                    if report.noisy_subset_error is not None else "",
                    meta.get("config_hash", ""),
                    meta.get("seed", ""),
                    meta.get("dataset", ""),
                    meta.get("timestamp", ""),
                ])
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise IOError(f"failed writing report to {path}: {exc}") from exc


def load_report(path):
    """Inverse of emit_report for the JSON format."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    conf = np.array(doc["confusion"], dtype=np.int64) \
        if doc.get("confusion") is not None else None
    return MetricsReport(doc["test_accuracy"], doc.get("noisy_subset_error"),
                         conf, doc.get("metadata", {}))


def save_confusion_csv(mat, path):
    """K rows x K columns, header row of class ids."""
    k = mat.shape[0]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([str(c) for c in range(k)])
            for row in mat:
                writer.writerow([int(v) for v in row])
    except OSError as exc:
        raise IOError(f"failed writing confusion matrix to {path}: {exc}") from exc


def save_activations_csv(acts, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"h{i}" for i in range(acts.shape[1])])
        for row in acts:
            writer.writerow([repr(float(v)) for v in row])
