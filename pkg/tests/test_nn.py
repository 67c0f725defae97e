"""MLP core: gradients against finite differences, optimizer algebra,
checkpoint round-trips."""

import numpy as np
import pytest

from colur import nn
from colur.errors import ConfigError, ShapeError


def random_params(layer_sizes, seed):
    # init gives zero biases; perturb them so no pre-activation sits exactly
    # on the ReLU kink (where finite differences are undefined)
    params = nn.init_params(layer_sizes, seed)
    rng = np.random.default_rng(seed + 77)
    params.biases = [rng.normal(0.0, 0.1, size=b.shape) for b in params.biases]
    return params


def random_simplex(rng, shape):
    raw = rng.uniform(0.1, 1.0, size=shape)
    return raw / raw.sum(axis=-1, keepdims=True)


def fd_gradients(params, batch, targets, h=1e-5):
    """Central finite differences of the loss wrt every parameter."""
    grads_w = [np.zeros_like(w) for w in params.weights]
    grads_b = [np.zeros_like(b) for b in params.biases]
    for arrs, grads in ((params.weights, grads_w), (params.biases, grads_b)):
        for arr, g in zip(arrs, grads):
            flat = arr.ravel()
            gflat = g.ravel()
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + h
                lp = nn.soft_ce_loss(nn.forward(params, batch), targets)
                flat[j] = orig - h
                lm = nn.soft_ce_loss(nn.forward(params, batch), targets)
                flat[j] = orig
                gflat[j] = (lp - lm) / (2 * h)
    return grads_w, grads_b


def max_rel_error(analytic, numeric):
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(f), 1e-8)
        worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(42)
    for trial in range(5):
        sizes = [int(rng.integers(2, 5)), int(rng.integers(2, 6)),
                 int(rng.integers(2, 5))]
        params = random_params(sizes, 100 + trial)
        x = rng.normal(size=(4, sizes[0]))
        t = random_simplex(rng, (4, sizes[-1]))
        _, grads = nn.backward(params, x, t)
        fw, fb = fd_gradients(params, x, t)
        assert max_rel_error(grads.weights, fw) < 1e-6
        assert max_rel_error(grads.biases, fb) < 1e-6


def test_forward_rows_are_probabilities():
    params = random_params([3, 6, 4], 0)
    x = np.random.default_rng(1).normal(size=(50, 3))
    probs = nn.forward(params, x)
    assert probs.shape == (50, 4)
    assert np.all(probs >= 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_forward_shape_mismatch_raises():
    params = random_params([3, 4, 2], 0)
    with pytest.raises(ShapeError):
        nn.forward(params, np.zeros((5, 7)))


def test_init_is_deterministic_and_bounded():
    a = nn.init_params([4, 8, 3], 9)
    b = nn.init_params([4, 8, 3], 9)
    assert a.allclose_bytes(b)
    for w, sizes in zip(a.weights, [(8, 4), (3, 8)]):
        assert w.shape == sizes
        assert np.all(np.abs(w) <= 1.0 / np.sqrt(sizes[1]))
    assert all(np.all(bias == 0.0) for bias in a.biases)
    assert not a.allclose_bytes(nn.init_params([4, 8, 3], 10))


def test_init_rejects_bad_sizes():
    with pytest.raises(ConfigError):
        nn.init_params([5], 0)
    with pytest.raises(ConfigError):
        nn.init_params([5, 0, 2], 0)


def test_soft_ce_loss_known_value():
    probs = np.array([[0.5, 0.5], [0.9, 0.1]])
    targets = np.array([[1.0, 0.0], [1.0, 0.0]])
    expect = -(np.log(0.5) + np.log(0.9)) / 2
    assert abs(nn.soft_ce_loss(probs, targets) - expect) < 1e-12


def test_descend_matches_hand_unrolled_momentum():
    params = random_params([2, 3], 5)
    x = np.random.default_rng(6).normal(size=(4, 2))
    t = random_simplex(np.random.default_rng(7), (4, 3))
    lr, mom, wd = 0.1, 0.9, 0.01
    opt = nn.OptimState(lr=lr, momentum=mom, weight_decay=wd)

    # manual reference: v <- m v + g; theta <- theta - lr (v + wd theta)
    ref_w = [w.copy() for w in params.weights]
    ref_b = [b.copy() for b in params.biases]
    vel_w = [np.zeros_like(w) for w in ref_w]
    vel_b = [np.zeros_like(b) for b in ref_b]
    current = params
    for _ in range(3):
        _, grads = nn.backward(current, x, t)
        for i in range(len(ref_w)):
            vel_w[i] = mom * vel_w[i] + grads.weights[i]
            ref_w[i] = ref_w[i] - lr * (vel_w[i] + wd * ref_w[i])
            vel_b[i] = mom * vel_b[i] + grads.biases[i]
            ref_b[i] = ref_b[i] - lr * (vel_b[i] + wd * ref_b[i])
        current = nn.descend(current, grads, opt)
        for i in range(len(ref_w)):
            assert np.allclose(current.weights[i], ref_w[i], atol=1e-14)
            assert np.allclose(current.biases[i], ref_b[i], atol=1e-14)


def test_ascend_is_plain_addition():
    params = random_params([2, 4, 3], 11)
    x = np.random.default_rng(12).normal(size=(6, 2))
    t = random_simplex(np.random.default_rng(13), (6, 3))
    _, grads = nn.backward(params, x, t)
    opt = nn.OptimState(lr=0.05, momentum=0.0, weight_decay=0.0)
    out = nn.ascend(params, grads, opt)
    for w0, g, w1 in zip(params.weights, grads.weights, out.weights):
        assert np.array_equal(w1, w0 + 0.05 * g)
    for b0, g, b1 in zip(params.biases, grads.biases, out.biases):
        assert np.array_equal(b1, b0 + 0.05 * g)


def test_descend_then_ascend_round_trips_without_momentum():
    params = random_params([3, 5, 2], 21)
    x = np.random.default_rng(22).normal(size=(8, 3))
    t = random_simplex(np.random.default_rng(23), (8, 2))
    _, grads = nn.backward(params, x, t)
    opt = nn.OptimState(lr=0.2, momentum=0.0, weight_decay=0.0)
    down = nn.descend(params, grads, opt)
    back = nn.ascend(down, grads, nn.OptimState(lr=0.2, momentum=0.0,
                                                weight_decay=0.0))
    for w0, w1 in zip(params.weights, back.weights):
        assert np.allclose(w0, w1, atol=1e-15)


def test_nonfinite_update_raises():
    params = random_params([2, 2], 31)
    grads = nn.GradBundle([np.full_like(w, np.inf) for w in params.weights],
                          [np.zeros_like(b) for b in params.biases])
    with pytest.raises(FloatingPointError):
        nn.ascend(params, grads, nn.OptimState(lr=1.0, momentum=0.0,
                                               weight_decay=0.0))


def test_optim_state_validation():
    with pytest.raises(ConfigError):
        nn.OptimState(lr=-0.1)
    with pytest.raises(ConfigError):
        nn.OptimState(lr=0.1, momentum=1.0)
    with pytest.raises(ConfigError):
        nn.OptimState(lr=0.1, weight_decay=-1e-3)


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    params = random_params([4, 7, 7, 3], 41)
    path = tmp_path / "model.ckpt"
    nn.save_checkpoint(params, path)
    loaded = nn.load_checkpoint(path)
    assert loaded.layer_sizes == params.layer_sizes
    assert params.allclose_bytes(loaded)
    # the file itself must be reproducible too
    path2 = tmp_path / "model2.ckpt"
    nn.save_checkpoint(params, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_header_layout(tmp_path):
    params = random_params([2, 3], 51)
    path = tmp_path / "m.ckpt"
    nn.save_checkpoint(params, path)
    blob = path.read_bytes()
    assert blob.startswith(b"COLUR1")
    assert int.from_bytes(blob[6:14], "little") == 1         # layer count
    assert int.from_bytes(blob[14:22], "little") == 2        # input extent
    assert int.from_bytes(blob[22:30], "little") == 3        # output extent
    assert len(blob) == 30 + 8 * (3 * 2 + 3)


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOTACKPTxxxx")
    with pytest.raises(IOError):
        nn.load_checkpoint(path)
