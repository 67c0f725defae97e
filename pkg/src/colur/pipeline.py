"""Learn / unlearn / relearn orchestration.

A teacher model (copy of the original parameters) and the degraded student
alternate for N iterations: gradient-ascent unlearning of high-confidence
disagreements, mixup relearning of low-confidence samples against averaged
high-confidence agreement labels, and label-smoothed relearning of the
high-confidence agreements themselves.
"""

import csv
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import nn
from .confidence import BetaSampler, partition, predict, smooth_label
from .errors import ConfigError


@dataclass
class LurConfig:
    tau: float = 0.75          # joint-confidence threshold
    gamma: float = 0.25        # smooth rate for unlearning targets
    alpha_ls: float = 0.25     # smooth rate for agreement relearning
    alpha_mix: float = 0.75    # Beta(alpha, alpha) parameter for both mixes
    lambda_u: float = 0.01     # student learning rate
    lambda_t: float = 1e-4     # teacher learning rate
    iterations: int = 20
    epochs_per_phase: int = 1
    batch_size: int = 64
    seed: int = 0
    ul: bool = True
    ls: bool = True
    mp: bool = True
    teacher_unlearn: bool = False
    momentum: float = 0.9
    weight_decay: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.tau <= 1.0):
            raise ConfigError(f"tau must be in [0,1], got {self.tau}")
        for name in ("gamma", "alpha_ls"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0,1], got {v}")
        if self.alpha_mix <= 0:
            raise ConfigError(f"alpha_mix must be positive, got {self.alpha_mix}")
        for name in ("lambda_u", "lambda_t"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        for name in ("iterations", "epochs_per_phase", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")


@dataclass
class TrainSpec:
    """Plain supervised training settings for the learning phases."""

    layer_sizes: list
    lr: float = 0.05
    epochs: int = 40
    batch_size: int = 32
    momentum: float = 0.9
    weight_decay: float = 1e-3


@dataclass
class PhaseTrace:
    """One row per executed iteration phase."""

    rows: list = field(default_factory=list)

    def add(self, iteration, phase, parts, train_loss, test_acc):
        self.rows.append({
            "iteration": iteration,
            "phase": phase,
            "n_high_disagree": int(len(parts.high_disagree)),
            "n_low_disagree": int(len(parts.low_disagree)),
            "n_high_agree": int(len(parts.high_agree)),
            "n_low_agree": int(len(parts.low_agree)),
            "mean_joint_conf": float(parts.joint_conf.mean())
            if len(parts.joint_conf) else 0.0,
            "train_loss": float(train_loss) if train_loss is not None else "",
            "test_accuracy": float(test_acc) if test_acc is not None else "",
        })

    def note(self, text):
        self.rows.append({"iteration": -1, "phase": f"note:{text}",
                          "n_high_disagree": 0, "n_low_disagree": 0,
                          "n_high_agree": 0, "n_low_agree": 0,
                          "mean_joint_conf": 0.0, "train_loss": "",
                          "test_accuracy": ""})


TRACE_COLUMNS = ["iteration", "phase", "n_high_disagree", "n_low_disagree",
                 "n_high_agree", "n_low_agree", "mean_joint_conf",
                 "train_loss", "test_accuracy"]


def save_trace_csv(trace, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(trace.rows)


def save_trace_json(trace, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"rows": trace.rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def one_hot(labels, num_classes):
    out = np.zeros((len(labels), num_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _sgd_epochs(params, features, targets, lr, epochs, batch_size, rng,
                momentum, weight_decay, direction="descend"):
    """Mini-batch epochs over (features, targets); returns (params, last loss).

    Momentum buffers are created fresh here, so optimizer state never leaks
    across phase boundaries.
    """
    n = len(features)
    if n == 0 or epochs == 0:
        return params, None
    opt = nn.OptimState(lr=lr, momentum=momentum if direction == "descend" else 0.0,
                        weight_decay=weight_decay)
    last_loss = None
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            loss, grads = nn.backward(params, features[batch], targets[batch])
            if direction == "descend":
                params = nn.descend(params, grads, opt)
            else:
                params = nn.ascend(params, grads, opt)
            last_loss = loss
    return params, last_loss


def learn_initial(dataset, spec, seed):
    """Train a fresh MLP on one-hot labels; deterministic per seed."""
    if len(dataset) == 0:
        raise ConfigError("cannot train on an empty dataset")
    params = nn.init_params(spec.layer_sizes, seed)
    rng = np.random.default_rng(seed)
    targets = one_hot(dataset.labels, dataset.num_classes)
    params, _ = _sgd_epochs(params, dataset.features, targets, spec.lr,
                            spec.epochs, spec.batch_size, rng,
                            spec.momentum, spec.weight_decay)
    return params


def learn_incremental(theta0, dataset, spec, seed, epochs=None):
    """Continue training theta0 on the observed (possibly noisy) labels."""
    if dataset.num_classes != theta0.num_classes:
        raise ConfigError(
            f"dataset has {dataset.num_classes} classes but model outputs "
            f"{theta0.num_classes}")
    epochs = spec.epochs if epochs is None else epochs
    rng = np.random.default_rng(seed)
    targets = one_hot(dataset.labels, dataset.num_classes)
    params, _ = _sgd_epochs(theta0.copy(), dataset.features, targets, spec.lr,
                            epochs, spec.batch_size, rng,
                            spec.momentum, spec.weight_decay)
    return params


def unlearn_step(student, features, pred_labels, cfg, rng, lr=None):
    """One epoch of gradient ascent on label-smoothed predicted labels."""
    if len(features) == 0:
        return student, None
    k = student.num_classes
    targets = np.stack([smooth_label(int(y), cfg.gamma, k) for y in pred_labels])
    return _sgd_epochs(student, features, targets,
                       cfg.lambda_u if lr is None else lr,
                       cfg.epochs_per_phase, cfg.batch_size, rng,
                       cfg.momentum, cfg.weight_decay, direction="ascend")


def relearn_mixup_step(student, teacher, low_x, low_pt, low_pu,
                       high_x, high_pmix, cfg, rng, beta_sampler):
    """Blend each low-confidence sample's teacher/student soft labels, pair it
    with a random high-confidence agreement sample, mixup, then one descent
    epoch on student and teacher."""
    if len(low_x) == 0:
        return student, teacher, None
    if len(high_x) == 0:
        return student, teacher, None  # nothing confident to mix against
    n = len(low_x)
    mixed_x = np.empty_like(low_x)
    mixed_p = np.empty_like(low_pt)
    for i in range(n):
        beta_m = beta_sampler.sample()
        p_low = beta_m * low_pt[i] + (1.0 - beta_m) * low_pu[i]
        j = rng.integers(len(high_x))
        beta = beta_sampler.sample()
        mixed_x[i] = beta * low_x[i] + (1.0 - beta) * high_x[j]
        mixed_p[i] = beta * p_low + (1.0 - beta) * high_pmix[j]
    student, loss = _sgd_epochs(student, mixed_x, mixed_p, cfg.lambda_u,
                                cfg.epochs_per_phase, cfg.batch_size, rng,
                                cfg.momentum, cfg.weight_decay)
    teacher, _ = _sgd_epochs(teacher, mixed_x, mixed_p, cfg.lambda_t,
                             cfg.epochs_per_phase, cfg.batch_size, rng,
                             cfg.momentum, cfg.weight_decay)
    return student, teacher, loss


def relearn_agreement_step(student, teacher, features, agreed_labels, cfg, rng):
    """Descend both models on label-smoothed high-confidence agreements."""
    if len(features) == 0:
        return student, teacher, None
    k = student.num_classes
    targets = np.stack([smooth_label(int(y), cfg.alpha_ls, k)
                        for y in agreed_labels])
    student, loss = _sgd_epochs(student, features, targets, cfg.lambda_u,
                                cfg.epochs_per_phase, cfg.batch_size, rng,
                                cfg.momentum, cfg.weight_decay)
    teacher, _ = _sgd_epochs(teacher, features, targets, cfg.lambda_t,
                             cfg.epochs_per_phase, cfg.batch_size, rng,
                             cfg.momentum, cfg.weight_decay)
    return student, teacher, loss


def _test_acc(params, eval_dataset):
    if eval_dataset is None:
        return None
    probs = nn.forward(params, eval_dataset.features)
    return float((probs.argmax(axis=1) == eval_dataset.labels).mean())


def run_colur(theta_u, theta0, du_observed, cfg, eval_dataset=None,
              checkpoint_hook=None):
    """Refine the degraded student theta_u against a teacher initialized from
    theta0, alternating unlearning and relearning for cfg.iterations rounds.

    Returns (refined student, refined teacher, PhaseTrace). With every toggle
    off the student is returned bit-identical to the input.
    """
    student = theta_u.copy()
    teacher = theta0.copy()
    trace = PhaseTrace()
    ss = np.random.SeedSequence(cfg.seed)
    seed_rng, seed_beta = ss.spawn(2)
    rng = np.random.default_rng(seed_rng)
    beta_sampler = BetaSampler(cfg.alpha_mix, seed_beta)
    features = du_observed.features

    if len(features) == 0:
        trace.note("empty incremental dataset; nothing to refine")
        return student, teacher, trace

    for it in range(1, cfg.iterations + 1):
        preds_t = predict(teacher, features)
        preds_u = predict(student, features)
        parts = partition(preds_t, preds_u, cfg.tau)

        if cfg.ul:
            s_tau = parts.high_disagree
            labels_u = np.array([preds_u[i].label for i in s_tau])
            student, loss = unlearn_step(student, features[s_tau], labels_u,
                                         cfg, rng)
            trace.add(it, "unlearn", parts, loss, _test_acc(student, eval_dataset))
            if cfg.teacher_unlearn:
                labels_t = np.array([preds_t[i].label for i in s_tau])
                teacher, _ = unlearn_step(teacher, features[s_tau], labels_t,
                                          cfg, rng, lr=cfg.lambda_t)

        # agreement sets must reflect the post-unlearning student
        preds_t = predict(teacher, features)
        preds_u = predict(student, features)
        parts = partition(preds_t, preds_u, cfg.tau)

        if cfg.mp:
            low = np.concatenate([parts.low_disagree, parts.low_agree])
            low_pt = np.stack([preds_t[i].probs for i in low]) \
                if len(low) else np.empty((0, student.num_classes))
            low_pu = np.stack([preds_u[i].probs for i in low]) \
                if len(low) else np.empty((0, student.num_classes))
            high = parts.high_agree
            high_pmix = np.stack(
                [0.5 * (preds_t[i].probs + preds_u[i].probs) for i in high]) \
                if len(high) else np.empty((0, student.num_classes))
            if len(low) and not len(high):
                trace.note(f"iteration {it}: no high-confidence agreements "
                           "to pair with; mixup skipped")
            student, teacher, loss = relearn_mixup_step(
                student, teacher, features[low], low_pt, low_pu,
                features[high], high_pmix, cfg, rng, beta_sampler)
            trace.add(it, "relearn_mixup", parts, loss,
                      _test_acc(student, eval_dataset))

        if cfg.ls:
            high = parts.high_agree
            agreed = np.array([preds_u[i].label for i in high])
            student, teacher, loss = relearn_agreement_step(
                student, teacher, features[high], agreed, cfg, rng)
            trace.add(it, "relearn_agree", parts, loss,
                      _test_acc(student, eval_dataset))

        if not (cfg.ul or cfg.mp or cfg.ls):
            trace.note("all toggles off; identity pipeline")
            break

        if checkpoint_hook is not None:
            checkpoint_hook(it, student, teacher)

    return student, teacher, trace


def config_from_dict(d):
    """Build a LurConfig from a plain dict, rejecting unknown keys."""
    valid = set(LurConfig.__dataclass_fields__)
    unknown = set(d) - valid
    if unknown:
        raise ConfigError(f"unknown lur config keys: {sorted(unknown)}")
    return LurConfig(**d)


def config_to_dict(cfg):
    return asdict(cfg)
