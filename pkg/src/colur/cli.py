"""Command-line front-end: prepare / train / degrade / restore / eval / sweep.

Every command is driven by an ExperimentConfig (JSON file merged over
defaults, command-line flags win) and writes its artifacts under --out.
Identical config + seed reproduces every artifact byte for byte.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import data, metrics, nn, pipeline
from .errors import ColurError, ConfigError, EvalError, ShapeError
from .experiment import ExperimentConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

DEGRADATION_TRIGGER = 0.10  # accuracy-drop level that motivates restoration

VARIANT_TOGGLES = {
    "degrade": None,
    "colur": (True, True, True),
    "full": (True, True, True),
    "ul": (True, False, False),
    "ls": (False, True, False),
    "mp": (False, False, True),
    "ul+ls": (True, True, False),
    "ul+mp": (True, False, True),
    "ls+mp": (False, True, True),
}


def _toggle(value):
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def build_parser():
    parser = argparse.ArgumentParser(
        prog="colur",
        description="Restore a classifier degraded by noisy-label training "
                    "via confidence-oriented unlearning and relearning.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=["csv", "json"], default="json",
                       help="report format")

    common(sub.add_parser("prepare", help="generate dataset CSVs"))
    common(sub.add_parser("train", help="train the original model on D0"))
    common(sub.add_parser("degrade",
                          help="incrementally train on the noisy set"))

    p = sub.add_parser("restore", help="run the unlearn/relearn loop")
    common(p)
    p.add_argument("--toggle-ul", type=_toggle, default=None,
                   metavar="on|off", help="unlearning phase")
    p.add_argument("--toggle-ls", type=_toggle, default=None,
                   metavar="on|off", help="label-smoothed relearning phase")
    p.add_argument("--toggle-mp", type=_toggle, default=None,
                   metavar="on|off", help="mixup relearning phase")
    p.add_argument("--teacher-unlearn", type=_toggle, default=None,
                   metavar="on|off", help="also unlearn the teacher")
    p.add_argument("--save-every", type=int, default=0, metavar="N",
                   help="checkpoint the student every N iterations")

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True, help="model checkpoint")
    p.add_argument("--activations", action="store_true",
                   help="also dump penultimate-layer activations")

    p = sub.add_parser("sweep", help="noise-ratio x seed x variant grid")
    common(p)
    p.add_argument("--etas", default="0.1,0.25,0.5,0.75,0.9",
                   help="comma-separated noise ratios")
    p.add_argument("--seeds", default="0,1,2,3,4",
                   help="comma-separated seeds")
    p.add_argument("--variants", default="degrade,colur",
                   help="comma-separated subset of: "
                        + ",".join(sorted(VARIANT_TOGGLES)))
    return parser


def load_config(args, extra=None):
    overrides = dict(extra or {})
    if args.seed is not None:
        overrides["seed"] = args.seed
    return ExperimentConfig.load(args.config, overrides)


def _ensure_out(out):
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _datasets(cfg, out):
    """Prefer CSVs written by `prepare` in the out dir; otherwise rebuild
    deterministically from the config."""
    d0_path = os.path.join(out, "D0.csv")
    truth_path = os.path.join(out, "Du_truth.csv")
    test_path = os.path.join(out, "test.csv")
    if all(os.path.exists(p) for p in (d0_path, truth_path, test_path)):
        k = cfg.num_classes()
        d0 = data.load_dataset_csv(d0_path, k)
        noisy = data.load_noisy_csv(truth_path, k)
        test = data.load_dataset_csv(test_path, k)
        return d0, noisy, test
    return cfg.build_datasets()


def _report(cfg, test_acc, noisy_err, confusion=None):
    return metrics.MetricsReport(
        test_accuracy=test_acc,
        noisy_subset_error=noisy_err,
        confusion=confusion,
        metadata={
            "config_hash": cfg.config_hash(),
            "seed": cfg.tree["seed"],
            "dataset": cfg.dataset_descriptor(),
            "timestamp": "",
        })


def _emit(report, out, stem, fmt):
    path = os.path.join(out, f"{stem}.{fmt}")
    metrics.emit_report(report, path, fmt)
    return path


def _need(path, hint):
    if not os.path.exists(path):
        raise IOError(f"missing {path}; run `colur {hint}` first")
    return path


def cmd_prepare(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    d0, noisy, test = cfg.build_datasets()
    data.save_dataset_csv(d0, os.path.join(out, "D0.csv"))
    data.save_dataset_csv(noisy.base, os.path.join(out, "Du.csv"))
    data.save_noisy_csv(noisy, os.path.join(out, "Du_truth.csv"))
    data.save_dataset_csv(test, os.path.join(out, "test.csv"))
    stats = data.noise_stats(noisy)
    print(f"prepared {len(d0)} initial + {len(noisy.base)} incremental "
          f"({noisy.num_noisy} noisy) + {len(test)} test samples in {out}")
    print(f"per-class observed noisy counts: {stats['noisy'].tolist()} "
          f"(mean {stats['noisy_mean']:.2f}, std {stats['noisy_std']:.2f})")
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    d0, noisy, test = _datasets(cfg, out)
    theta0 = pipeline.learn_initial(d0, cfg.train_spec(), cfg.tree["seed"])
    nn.save_checkpoint(theta0, os.path.join(out, "theta0.ckpt"))
    acc = metrics.accuracy(theta0, test)
    err = metrics.noisy_subset_error(theta0, noisy) if noisy.num_noisy else None
    path = _emit(_report(cfg, acc, err), out, "report_original", args.format)
    print(f"original model: test accuracy {acc:.4f} -> {path}")
    return EXIT_OK


def cmd_degrade(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    d0, noisy, test = _datasets(cfg, out)
    theta0 = nn.load_checkpoint(_need(os.path.join(out, "theta0.ckpt"),
                                      "train"))
    theta_u = pipeline.learn_incremental(theta0, noisy.base,
                                         cfg.train_spec(degrade=True),
                                         cfg.tree["seed"] + 1)
    nn.save_checkpoint(theta_u, os.path.join(out, "theta_u.ckpt"))
    acc = metrics.accuracy(theta_u, test)
    err = metrics.noisy_subset_error(theta_u, noisy) if noisy.num_noisy else None
    path = _emit(_report(cfg, acc, err), out, "report_degrade", args.format)
    print(f"degraded model: test accuracy {acc:.4f} -> {path}")
    return EXIT_OK


def cmd_restore(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    d0, noisy, test = _datasets(cfg, out)
    theta0 = nn.load_checkpoint(_need(os.path.join(out, "theta0.ckpt"),
                                      "train"))
    theta_u = nn.load_checkpoint(_need(os.path.join(out, "theta_u.ckpt"),
                                       "degrade"))

    lur = pipeline.config_to_dict(cfg.lur_config())
    for key, flag in (("ul", args.toggle_ul), ("ls", args.toggle_ls),
                      ("mp", args.toggle_mp),
                      ("teacher_unlearn", args.teacher_unlearn)):
        if flag is not None:
            lur[key] = flag
    lur_cfg = pipeline.config_from_dict(lur)

    # degradation pre-check: restoration is motivated once accuracy has
    # dropped noticeably; run regardless, but say so
    drop = metrics.accuracy(theta0, test) - metrics.accuracy(theta_u, test)
    if drop < DEGRADATION_TRIGGER:
        print(f"note: accuracy drop {drop:.4f} is below the "
              f"{DEGRADATION_TRIGGER:.2f} trigger; restoring anyway")

    hook = None
    if args.save_every > 0:
        def hook(it, student, teacher, every=args.save_every):
            if it % every == 0:
                nn.save_checkpoint(student,
                                   os.path.join(out, f"iter_{it:03d}_student.ckpt"))

    student, teacher, trace = pipeline.run_colur(theta_u, theta0, noisy.base,
                                                 lur_cfg, eval_dataset=test,
                                                 checkpoint_hook=hook)
    nn.save_checkpoint(student, os.path.join(out, "theta_rl.ckpt"))
    nn.save_checkpoint(teacher, os.path.join(out, "teacher_rl.ckpt"))
    pipeline.save_trace_csv(trace, os.path.join(out, "trace.csv"))
    pipeline.save_trace_json(trace, os.path.join(out, "trace.json"))
    acc = metrics.accuracy(student, test)
    err = metrics.noisy_subset_error(student, noisy) if noisy.num_noisy else None
    path = _emit(_report(cfg, acc, err), out, "report_restore", args.format)
    print(f"restored model: test accuracy {acc:.4f} "
          f"(degraded {metrics.accuracy(theta_u, test):.4f}) -> {path}")
    return EXIT_OK


def cmd_eval(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    params = nn.load_checkpoint(_need(args.checkpoint, "train/degrade/restore"))
    d0, noisy, test = _datasets(cfg, out)
    if params.num_classes != test.num_classes:
        raise ShapeError(
            f"checkpoint outputs {params.num_classes} classes but the test "
            f"set has {test.num_classes}")
    acc = metrics.accuracy(params, test)
    err = metrics.noisy_subset_error(params, noisy) if noisy.num_noisy else None
    conf = metrics.confusion(params, test.features, test.labels,
                             test.num_classes)
    if not np.isfinite(acc):
        raise FloatingPointError("non-finite accuracy")
    path = _emit(_report(cfg, acc, err, conf), out, "report", args.format)
    metrics.save_confusion_csv(conf, os.path.join(out, "confusion.csv"))
    if args.activations:
        acts = metrics.penultimate_activations(params, test.features)
        metrics.save_activations_csv(acts,
                                     os.path.join(out, "activations.csv"))
    print(f"eval {args.checkpoint}: test accuracy {acc:.4f}"
          + (f", noisy-subset error {err:.4f}" if err is not None else "")
          + f" -> {path}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args)
    out = _ensure_out(args.out)
    try:
        etas = [float(v) for v in args.etas.split(",") if v != ""]
        seeds = [int(v) for v in args.seeds.split(",") if v != ""]
    except ValueError as exc:
        raise ConfigError(f"sweep grid: {exc}")
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not etas or not seeds or not variants:
        raise ConfigError("sweep needs nonempty --etas, --seeds, --variants")
    for eta in etas:
        if not (0.0 <= eta <= 1.0):
            raise ConfigError(f"noise.eta: must be in [0, 1], got {eta}")
    for name in variants:
        if name not in VARIANT_TOGGLES:
            raise ConfigError(f"unknown sweep variant {name!r}; choose from "
                              + ",".join(sorted(VARIANT_TOGGLES)))

    jobs = [(cfg.tree, eta, seed, variants) for eta in etas for seed in seeds]
    threads = max(1, int(os.environ.get("COLUR_THREADS", "1")))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            rows = list(pool.map(_run_cell, jobs))
    else:
        rows = [_run_cell(job) for job in jobs]

    columns = ["eta", "seed"]
    for name in variants:
        columns += [f"{name}_accuracy", f"{name}_noisy_error"]
    with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)

    summary_cols = ["eta", "variant", "n_seeds", "mean_accuracy",
                    "std_accuracy", "mean_noisy_error", "std_noisy_error"]
    with open(os.path.join(out, "sweep_summary.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=summary_cols,
                                lineterminator="\n")
        writer.writeheader()
        for eta in etas:
            cell = [r for r in rows if r["eta"] == eta]
            for name in variants:
                accs = np.array([float(r[f"{name}_accuracy"]) for r in cell])
                errs = np.array([float(e) for e in
                                 (r[f"{name}_noisy_error"] for r in cell)
                                 if e != ""])
                writer.writerow({
                    "eta": eta, "variant": name, "n_seeds": len(cell),
                    "mean_accuracy": repr(float(accs.mean())),
                    "std_accuracy": repr(float(accs.std())),
                    "mean_noisy_error": repr(float(errs.mean()))
                    if len(errs) else "",
                    "std_noisy_error": repr(float(errs.std()))
                    if len(errs) else "",
                })
    print(f"swept {len(etas)} noise ratios x {len(seeds)} seeds x "
          f"{len(variants)} variants -> {out}/sweep.csv, "
          f"{out}/sweep_summary.csv")
    return EXIT_OK


def _run_cell(job):
    tree, eta, seed, variants = job
    from .experiment import _merge
    merged = _merge(tree, {"seed": seed, "noise": {"eta": eta}})
    return _sweep_cell_impl(merged, eta, seed, variants)


def _sweep_cell_impl(tree, eta, seed, variants):
    cfg = ExperimentConfig(tree)
    d0, noisy, test = cfg.build_datasets()
    theta0 = pipeline.learn_initial(d0, cfg.train_spec(), seed)
    theta_u = pipeline.learn_incremental(theta0, noisy.base,
                                         cfg.train_spec(degrade=True),
                                         seed + 1)
    row = {"eta": eta, "seed": seed}
    for name in variants:
        toggles = VARIANT_TOGGLES[name]
        if toggles is None:
            model = theta_u
        else:
            lur = pipeline.config_to_dict(cfg.lur_config())
            lur["ul"], lur["ls"], lur["mp"] = toggles
            model, _, _ = pipeline.run_colur(
                theta_u, theta0, noisy.base, pipeline.config_from_dict(lur))
        row[f"{name}_accuracy"] = repr(metrics.accuracy(model, test))
        row[f"{name}_noisy_error"] = (
            repr(metrics.noisy_subset_error(model, noisy))
            if noisy.num_noisy else "")
    return row


COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "degrade": cmd_degrade,
    "restore": cmd_restore,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ShapeError, EvalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FloatingPointError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ColurError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
