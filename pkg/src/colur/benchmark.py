"""Desk-scale restoration benchmark: four well-separated 2-d Gaussian blobs,
a 40/60 initial/incremental split, symmetric label noise, and the training
settings under which noisy incremental training visibly degrades the model."""

from . import data
from .pipeline import TrainSpec

NUM_CLASSES = 4
PER_CLASS = 250       # 1000 samples -> 400 initial / 600 incremental
TEST_PER_CLASS = 150
DIMS = 2
SPREAD = 0.5
SPLIT_RATIO = 0.4
LAYER_SIZES = [2, 64, 64, 4]

TRAIN_SPEC = TrainSpec(layer_sizes=LAYER_SIZES, lr=0.1, epochs=60,
                       batch_size=32, weight_decay=0.0)
# long, plain-SGD exposure to the noisy labels is what degrades the model
DEGRADE_EPOCHS = 400


def make_benchmark(seed, eta=0.5):
    """Returns (D0, noisy incremental set, test set) for one seed."""
    full = data.make_blobs(NUM_CLASSES, PER_CLASS, DIMS, SPREAD, seed)
    test = data.make_blobs(NUM_CLASSES, TEST_PER_CLASS, DIMS, SPREAD,
                           seed + 2000)
    d0, du = data.split(full, SPLIT_RATIO, seed + 1000)
    noisy = data.inject_symmetric(du, eta, seed + 3000)
    return d0, noisy, test


def degrade_spec():
    return TrainSpec(layer_sizes=LAYER_SIZES, lr=TRAIN_SPEC.lr,
                     epochs=DEGRADE_EPOCHS, batch_size=TRAIN_SPEC.batch_size,
                     weight_decay=TRAIN_SPEC.weight_decay)
