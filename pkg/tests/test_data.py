"""Dataset generation, splitting, noise injection, and CSV round-trips."""

import numpy as np
import pytest

from colur import data
from colur.errors import ConfigError


def test_make_blobs_is_deterministic_and_balanced():
    a = data.make_blobs(4, 50, 3, 0.5, seed=7)
    b = data.make_blobs(4, 50, 3, 0.5, seed=7)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(np.bincount(a.labels), [50, 50, 50, 50])
    c = data.make_blobs(4, 50, 3, 0.5, seed=8)
    assert not np.array_equal(a.features, c.features)


def test_make_blobs_clusters_are_well_separated():
    ds = data.make_blobs(4, 200, 2, 0.5, seed=0)
    means = np.stack([ds.features[ds.labels == c].mean(axis=0)
                      for c in range(4)])
    for i in range(4):
        for j in range(i + 1, 4):
            gap = np.linalg.norm(means[i] - means[j])
            assert gap > 5.0 * 0.5  # adjacent centers sit 6 spreads apart


def test_make_blobs_validation():
    with pytest.raises(ConfigError):
        data.make_blobs(1, 10, 2, 0.5, 0)
    with pytest.raises(ConfigError):
        data.make_blobs(3, 10, 1, 0.5, 0)
    with pytest.raises(ConfigError):
        data.make_blobs(3, 10, 2, 0.0, 0)


def test_split_is_stratified_disjoint_exhaustive():
    ds = data.make_blobs(4, 25, 2, 0.5, seed=3)
    d0, du = data.split(ds, 0.4, seed=11)
    assert len(d0) + len(du) == len(ds)
    for c in range(4):
        assert (d0.labels == c).sum() == 10  # floor(0.4 * 25)
        assert (du.labels == c).sum() == 15
    # every original row appears exactly once across the two parts
    rows = {tuple(r) for r in ds.features}
    out = [tuple(r) for r in np.concatenate([d0.features, du.features])]
    assert len(out) == len(rows)
    assert set(out) == rows
    # same seed, same split
    e0, _ = data.split(ds, 0.4, seed=11)
    assert np.array_equal(d0.features, e0.features)


def test_split_rejects_degenerate_ratio():
    ds = data.make_blobs(2, 3, 2, 0.5, seed=0)
    with pytest.raises(ConfigError):
        data.split(ds, 0.1, seed=0)  # floor(0.1*3)=0, a class goes empty
    with pytest.raises(ConfigError):
        data.split(ds, 1.5, seed=0)


@pytest.mark.parametrize("eta", [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])
def test_symmetric_noise_exact_count_no_self_flips(eta):
    ds = data.make_blobs(4, 30, 2, 0.5, seed=1)
    for seed in range(5):
        nd = data.inject_symmetric(ds, eta, seed)
        expect = int(np.floor(eta * len(ds)))
        assert nd.num_noisy == expect
        flagged = nd.noise_flags
        assert np.all(nd.base.labels[flagged] != nd.true_labels[flagged])
        assert np.array_equal(nd.base.labels[~flagged],
                              nd.true_labels[~flagged])
        assert np.array_equal(nd.true_labels, ds.labels)
        assert np.array_equal(nd.base.features, ds.features)


def test_symmetric_flip_targets_cover_all_alternatives():
    ds = data.make_blobs(4, 40, 2, 0.5, seed=2)
    hits = np.zeros((4, 4), dtype=int)
    for seed in range(50):
        nd = data.inject_symmetric(ds, 0.5, seed)
        for true, obs in zip(nd.true_labels[nd.noise_flags],
                             nd.base.labels[nd.noise_flags]):
            hits[true, obs] += 1
    assert np.all(np.diag(hits) == 0)
    off = hits[~np.eye(4, dtype=bool)]
    assert np.all(off > 0)
    # roughly uniform over the 3 alternatives per class
    assert off.max() < 2.0 * off.min()


def test_asymmetric_noise_stays_inside_superclass():
    ds = data.make_blobs(4, 30, 2, 0.5, seed=4)
    groups = [[0, 1], [2, 3]]
    group_of = {0: 0, 1: 0, 2: 1, 3: 1}
    for seed in range(20):
        nd = data.inject_asymmetric(ds, 0.5, groups, seed)
        assert nd.num_noisy == int(np.floor(0.5 * len(ds)))
        for true, obs in zip(nd.true_labels[nd.noise_flags],
                             nd.base.labels[nd.noise_flags]):
            assert obs != true
            assert group_of[int(obs)] == group_of[int(true)]


def test_asymmetric_map_validation():
    ds = data.make_blobs(4, 10, 2, 0.5, seed=0)
    with pytest.raises(ConfigError):
        data.inject_asymmetric(ds, 0.3, [[0, 1], [2]], 0)      # singleton
    with pytest.raises(ConfigError):
        data.inject_asymmetric(ds, 0.3, [[0, 1], [1, 2, 3]], 0)  # duplicate
    with pytest.raises(ConfigError):
        data.inject_asymmetric(ds, 0.3, [[0, 1]], 0)           # incomplete
    with pytest.raises(ConfigError):
        data.NoiseSpec("symmetric", 1.2)
    with pytest.raises(ConfigError):
        data.NoiseSpec("salt", 0.1)


def test_noise_stats_counts_are_consistent():
    ds = data.make_blobs(4, 50, 2, 0.5, seed=5)
    nd = data.inject_symmetric(ds, 0.4, seed=6)
    stats = data.noise_stats(nd)
    assert stats["original"].sum() == len(ds)
    assert stats["noisy"].sum() == nd.num_noisy
    assert stats["clean"].sum() == len(ds) - nd.num_noisy
    assert abs(stats["noisy_mean"] - nd.num_noisy / 4) < 1e-12


def test_dataset_csv_round_trip_is_exact(tmp_path):
    ds = data.make_blobs(3, 20, 4, 0.7, seed=9)
    path = tmp_path / "ds.csv"
    data.save_dataset_csv(ds, path)
    back = data.load_dataset_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.num_classes == 3
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,f2,f3,label"


def test_noisy_csv_round_trip_is_exact(tmp_path):
    ds = data.make_blobs(3, 20, 2, 0.7, seed=10)
    nd = data.inject_symmetric(ds, 0.5, seed=11)
    path = tmp_path / "noisy.csv"
    data.save_noisy_csv(nd, path)
    back = data.load_noisy_csv(path)
    assert np.array_equal(back.base.features, nd.base.features)
    assert np.array_equal(back.base.labels, nd.base.labels)
    assert np.array_equal(back.true_labels, nd.true_labels)
    assert np.array_equal(back.noise_flags, nd.noise_flags)
    header = path.read_text().splitlines()[0]
    assert header == "f0,f1,label,true_label,is_noisy"


def test_csv_loader_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(IOError):
        data.load_noisy_csv(path)
