"""Confidence-oriented learning, unlearning and relearning for restoring
classifiers degraded by training on noisy-label data."""

from .data import (Dataset, NoiseSpec, NoisyDataset, inject_asymmetric,
                   inject_symmetric, make_blobs, noise_stats, split)
from .errors import ColurError, ConfigError, EvalError, ShapeError
from .nn import (GradBundle, MlpParams, OptimState, ascend, backward, descend,
                 forward, init_params, load_checkpoint, save_checkpoint,
                 soft_ce_loss)
from .confidence import (BetaSampler, PartitionSets, Prediction,
                         avg_soft_labels, joint_confidence, mix_soft_labels,
                         mixup, partition, predict, smooth_label)
from .pipeline import (LurConfig, PhaseTrace, TrainSpec, learn_incremental,
                       learn_initial, relearn_agreement_step,
                       relearn_mixup_step, run_colur, unlearn_step)
from .metrics import (MetricsReport, accuracy, confusion, emit_report,
                      load_report, noisy_subset_error)

__version__ = "0.1.0"
