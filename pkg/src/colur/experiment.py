"""Experiment configuration: JSON config files, cross-field validation with
field-path error messages, and the dataset/model builders the CLI drives."""

import hashlib
import json

from . import benchmark, data
from .errors import ConfigError
from .pipeline import TrainSpec, config_from_dict

DEFAULT_CONFIG = {
    "seed": 0,
    "dataset": {
        "kind": "blobs",
        "classes": benchmark.NUM_CLASSES,
        "per_class": benchmark.PER_CLASS,
        "test_per_class": benchmark.TEST_PER_CLASS,
        "dims": benchmark.DIMS,
        "spread": benchmark.SPREAD,
    },
    "split_ratio": benchmark.SPLIT_RATIO,
    "noise": {"kind": "symmetric", "eta": 0.5, "superclass_map": None},
    "net": {"layer_sizes": list(benchmark.LAYER_SIZES)},
    "optimizer": {
        "lr": benchmark.TRAIN_SPEC.lr,
        "epochs": benchmark.TRAIN_SPEC.epochs,
        "degrade_epochs": benchmark.DEGRADE_EPOCHS,
        "batch_size": benchmark.TRAIN_SPEC.batch_size,
        "momentum": benchmark.TRAIN_SPEC.momentum,
        "weight_decay": benchmark.TRAIN_SPEC.weight_decay,
    },
    "lur": {},
}


def _merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


class ExperimentConfig:
    """Validated view over the experiment config tree."""

    def __init__(self, tree):
        self.tree = tree
        self._validate()

    @classmethod
    def load(cls, path=None, overrides=None):
        tree = dict(DEFAULT_CONFIG)
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    user = json.load(fh)
            except OSError as exc:
                raise IOError(f"cannot read config {path}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}")
            if not isinstance(user, dict):
                raise ConfigError(f"config {path}: top level must be an object")
            tree = _merge(tree, user)
        if overrides:
            tree = _merge(tree, overrides)
        return cls(tree)

    def _fail(self, field_path, message):
        raise ConfigError(f"{field_path}: {message}")

    def _validate(self):
        t = self.tree
        known = {"seed", "dataset", "noise", "split_ratio", "net",
                 "optimizer", "lur"}
        for key in t:
            if key not in known:
                self._fail(key, "unknown config section")
        if not isinstance(t["seed"], int):
            self._fail("seed", "must be an integer")

        ds = t["dataset"]
        if ds.get("kind") not in ("blobs", "csv"):
            self._fail("dataset.kind", "must be 'blobs' or 'csv'")
        if ds["kind"] == "blobs":
            for key, lo in (("classes", 2), ("per_class", 1), ("dims", 2),
                            ("test_per_class", 1)):
                if not isinstance(ds.get(key), int) or ds[key] < lo:
                    self._fail(f"dataset.{key}", f"must be an integer >= {lo}")
            if not (isinstance(ds.get("spread"), (int, float))
                    and ds["spread"] > 0):
                self._fail("dataset.spread", "must be a positive number")
        else:
            for key in ("train", "test"):
                if not isinstance(ds.get(key), str):
                    self._fail(f"dataset.{key}", "must be a CSV file path")

        if not (isinstance(t["split_ratio"], (int, float))
                and 0.0 < t["split_ratio"] < 1.0):
            self._fail("split_ratio", "must be in (0, 1)")

        noise = t["noise"]
        if noise.get("kind") not in ("symmetric", "asymmetric"):
            self._fail("noise.kind", "must be 'symmetric' or 'asymmetric'")
        eta = noise.get("eta")
        if not (isinstance(eta, (int, float)) and 0.0 <= eta <= 1.0):
            self._fail("noise.eta", "must be in [0, 1]")
        if noise["kind"] == "asymmetric":
            smap = noise.get("superclass_map")
            if not smap:
                self._fail("noise.superclass_map",
                           "required for asymmetric noise")
            try:
                data.NoiseSpec("asymmetric", eta, smap).validate_map(
                    self.num_classes())
            except ConfigError as exc:
                self._fail("noise.superclass_map", str(exc))

        net = t["net"]
        sizes = net.get("layer_sizes")
        if (not isinstance(sizes, list) or len(sizes) < 2
                or any(not isinstance(s, int) or s <= 0 for s in sizes)):
            self._fail("net.layer_sizes",
                       "must be a list of >=2 positive integers")
        if t["dataset"]["kind"] == "blobs":
            if sizes[0] != ds["dims"]:
                self._fail("net.layer_sizes",
                           f"first extent {sizes[0]} must equal dataset.dims "
                           f"{ds['dims']}")
            if sizes[-1] != ds["classes"]:
                self._fail("net.layer_sizes",
                           f"last extent {sizes[-1]} must equal "
                           f"dataset.classes {ds['classes']}")

        opt = t["optimizer"]
        for key in ("lr", "momentum", "weight_decay"):
            if not isinstance(opt.get(key), (int, float)) or opt[key] < 0:
                self._fail(f"optimizer.{key}", "must be a nonnegative number")
        for key in ("epochs", "degrade_epochs", "batch_size"):
            if not isinstance(opt.get(key), int) or opt[key] < 1:
                self._fail(f"optimizer.{key}", "must be an integer >= 1")

        try:
            self.lur_config()
        except (ConfigError, TypeError) as exc:
            self._fail("lur", str(exc))

    def num_classes(self):
        ds = self.tree["dataset"]
        if ds["kind"] == "blobs":
            return ds["classes"]
        return data.load_dataset_csv(ds["train"]).num_classes

    def lur_config(self):
        lur = dict(self.tree["lur"])
        lur.setdefault("seed", self.tree["seed"])
        return config_from_dict(lur)

    def train_spec(self, degrade=False):
        opt = self.tree["optimizer"]
        return TrainSpec(
            layer_sizes=self.tree["net"]["layer_sizes"],
            lr=opt["lr"],
            epochs=opt["degrade_epochs"] if degrade else opt["epochs"],
            batch_size=opt["batch_size"],
            momentum=opt["momentum"],
            weight_decay=opt["weight_decay"],
        )

    def config_hash(self):
        canonical = json.dumps(self.tree, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def dataset_descriptor(self):
        ds = self.tree["dataset"]
        noise = self.tree["noise"]
        if ds["kind"] == "blobs":
            return (f"blobs(K={ds['classes']},per_class={ds['per_class']},"
                    f"d={ds['dims']},spread={ds['spread']})"
                    f"+{noise['kind']}(eta={noise['eta']})")
        return f"csv({ds['train']})+{noise['kind']}(eta={noise['eta']})"

    def build_datasets(self):
        """(D0, NoisyDataset over Du, test Dataset) from this config."""
        seed = self.tree["seed"]
        ds = self.tree["dataset"]
        noise = self.tree["noise"]
        if ds["kind"] == "blobs":
            full = data.make_blobs(ds["classes"], ds["per_class"], ds["dims"],
                                   ds["spread"], seed)
            test = data.make_blobs(ds["classes"], ds["test_per_class"],
                                   ds["dims"], ds["spread"], seed + 2000)
        else:
            full = data.load_dataset_csv(ds["train"])
            test = data.load_dataset_csv(ds["test"], full.num_classes)
        d0, du = data.split(full, self.tree["split_ratio"], seed + 1000)
        if noise["kind"] == "symmetric":
            noisy = data.inject_symmetric(du, noise["eta"], seed + 3000)
        else:
            noisy = data.inject_asymmetric(du, noise["eta"],
                                           noise["superclass_map"],
                                           seed + 3000)
        return d0, noisy, test
