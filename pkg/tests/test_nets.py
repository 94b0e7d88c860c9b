import math

import numpy as np
import pytest

from nnbid.nets import Adam, Mlp


def fd_weight_grads(net, x, upstream, h=1e-6):
    """Central differences of sum(out * upstream) wrt every parameter."""

    def loss():
        out, _ = net.forward(x)
        return float(np.sum(out * upstream))

    wg = [np.zeros_like(w) for w in net.weights]
    bg = [np.zeros_like(b) for b in net.biases]
    for i in range(net.n_layers):
        w = net.weights[i]
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + h
            up = loss()
            w[idx] = orig - h
            dn = loss()
            w[idx] = orig
            wg[i][idx] = (up - dn) / (2 * h)
        b = net.biases[i]
        for j in range(b.shape[0]):
            orig = b[j]
            b[j] = orig + h
            up = loss()
            b[j] = orig - h
            dn = loss()
            b[j] = orig
            bg[i][j] = (up - dn) / (2 * h)
    return wg, bg


def test_forward_shapes_and_range():
    rng = np.random.default_rng(0)
    net = Mlp([5, 16, 16, 3], rng)
    out, cache = net.forward(rng.normal(size=(7, 5)))
    assert out.shape == (7, 3)
    assert np.all(np.abs(out) < 1.0)
    assert len(cache) == 4
    with pytest.raises(ValueError):
        net.forward(np.zeros(5))


def test_final_scale_shrinks_output_layer():
    rng = np.random.default_rng(1)
    net = Mlp([4, 32, 2], rng, final_scale=0.01)
    assert np.abs(net.weights[-1]).max() < 0.01 / np.sqrt(32) + 1e-12
    assert np.abs(net.weights[0]).max() > 0.05


def test_hand_computed_single_path():
    # 1-1-1 net with known weights: out = tanh(w1 * tanh(w0*x + b0) + b1)
    net = Mlp([1, 1, 1], np.random.default_rng(0), final_scale=1.0)
    net.set_params([np.array([[0.5]]), np.array([[2.0]])],
                   [np.array([0.1]), np.array([-0.3])])
    x = np.array([[0.7]])
    out, cache = net.forward(x)
    h1 = math.tanh(0.5 * 0.7 + 0.1)
    expect = math.tanh(2.0 * h1 - 0.3)
    assert out[0, 0] == pytest.approx(expect, rel=1e-15)
    wg, bg, gx = net.backward(cache, np.array([[1.0]]))
    d_out = 1 - expect**2
    assert bg[1][0] == pytest.approx(d_out)
    assert wg[1][0, 0] == pytest.approx(d_out * h1)
    d_h1 = d_out * 2.0 * (1 - h1**2)
    assert bg[0][0] == pytest.approx(d_h1)
    assert wg[0][0, 0] == pytest.approx(d_h1 * 0.7)
    assert gx[0, 0] == pytest.approx(d_h1 * 0.5)


@pytest.mark.parametrize("out_act", ["tanh", "linear"])
def test_backward_matches_finite_differences(out_act):
    rng = np.random.default_rng(7)
    net = Mlp([3, 6, 5, 2], rng, out_activation=out_act, final_scale=1.0)
    x = rng.normal(size=(4, 3))
    upstream = rng.normal(size=(4, 2))
    _, cache = net.forward(x)
    wg, bg, gx = net.backward(cache, upstream)
    wg_fd, bg_fd = fd_weight_grads(net, x, upstream)
    for a, b in zip(wg, wg_fd):
        assert np.allclose(a, b, rtol=1e-6, atol=1e-8)
    for a, b in zip(bg, bg_fd):
        assert np.allclose(a, b, rtol=1e-6, atol=1e-8)
    # input gradient via FD too
    gx_fd = np.zeros_like(x)
    h = 1e-6
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        gx_fd[idx] = (np.sum(net.forward(xp)[0] * upstream)
                      - np.sum(net.forward(xm)[0] * upstream)) / (2 * h)
    assert np.allclose(gx, gx_fd, rtol=1e-6, atol=1e-8)


def test_backward_sums_over_batch():
    rng = np.random.default_rng(3)
    net = Mlp([2, 4, 1], rng, out_activation="linear", final_scale=1.0)
    xs = rng.normal(size=(5, 2))
    up = rng.normal(size=(5, 1))
    _, cache = net.forward(xs)
    wg, bg, _ = net.backward(cache, up)
    wg_sum = [np.zeros_like(w) for w in net.weights]
    bg_sum = [np.zeros_like(b) for b in net.biases]
    for i in range(5):
        _, c = net.forward(xs[i:i + 1])
        wgi, bgi, _ = net.backward(c, up[i:i + 1])
        for j in range(net.n_layers):
            wg_sum[j] += wgi[j]
            bg_sum[j] += bgi[j]
    for a, b in zip(wg, wg_sum):
        assert np.allclose(a, b)
    for a, b in zip(bg, bg_sum):
        assert np.allclose(a, b)


def test_zero_upstream_gives_zero_grads():
    rng = np.random.default_rng(4)
    net = Mlp([3, 8, 2], rng)
    x = rng.normal(size=(6, 3))
    _, cache = net.forward(x)
    wg, bg, gx = net.backward(cache, np.zeros((6, 2)))
    assert all(np.all(g == 0) for g in wg)
    assert all(np.all(g == 0) for g in bg)
    assert np.all(gx == 0)


def test_adam_first_step_is_lr_sized():
    # with fresh state a constant gradient moves each param by ~lr
    rng = np.random.default_rng(5)
    net = Mlp([2, 3, 1], rng, final_scale=1.0)
    w0, b0 = net.get_params()
    g_w = [np.full_like(w, 0.37) for w in net.weights]
    g_b = [np.full_like(b, -0.11) for b in net.biases]
    opt = Adam(net, lr=1e-3)
    opt.step(g_w, g_b)
    w1, b1 = net.get_params()
    for a, b in zip(w0, w1):
        assert np.allclose(a - b, 1e-3 * 0.37 / (0.37 + 1e-8))
    for a, b in zip(b0, b1):
        assert np.allclose(a - b, -1e-3 * 0.11 / (0.11 + 1e-8))


def test_adam_two_steps_hand_computed():
    net = Mlp([1, 1], np.random.default_rng(0), out_activation="linear", final_scale=1.0)
    net.set_params([np.array([[1.0]])], [np.array([0.0])])
    opt = Adam(net, lr=0.1, beta1=0.9, beta2=0.999, eps=1e-8)
    g1, g2 = 2.0, -1.0
    m = v = 0.0
    p = 1.0
    for t, g in [(1, g1), (2, g2)]:
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        mhat = m / (1 - 0.9**t)
        vhat = v / (1 - 0.999**t)
        p -= 0.1 * mhat / (math.sqrt(vhat) + 1e-8)
        opt.step([np.array([[g]])], [np.array([0.0])])
        assert net.weights[0][0, 0] == pytest.approx(p, rel=1e-12)


def test_adam_snapshot_restore():
    rng = np.random.default_rng(6)
    net = Mlp([2, 4, 1], rng)
    opt = Adam(net, lr=1e-2)
    g_w = [rng.normal(size=w.shape) for w in net.weights]
    g_b = [rng.normal(size=b.shape) for b in net.biases]
    opt.step(g_w, g_b)
    snap = opt.state_snapshot()
    w_ref, b_ref = net.get_params()
    opt.step(g_w, g_b)
    opt.restore(snap)
    net.set_params(w_ref, b_ref)
    opt.step(g_w, g_b)
    w_a, _ = net.get_params()
    # replaying the same step after restore reproduces the same parameters
    net.set_params(w_ref, b_ref)
    opt.restore(snap)
    opt.step(g_w, g_b)
    w_b, _ = net.get_params()
    for a, b in zip(w_a, w_b):
        assert np.array_equal(a, b)


def test_json_round_trip():
    rng = np.random.default_rng(8)
    net = Mlp([4, 10, 3], rng, out_activation="linear")
    clone = Mlp.from_json_dict(net.to_json_dict())
    x = rng.normal(size=(5, 4))
    assert np.array_equal(net.forward(x)[0], clone.forward(x)[0])
    bad = net.to_json_dict()
    bad["sizes"] = [4, 9, 3]
    with pytest.raises(ValueError):
        Mlp.from_json_dict(bad)


def test_set_params_validates():
    net = Mlp([2, 3], np.random.default_rng(0))
    with pytest.raises(ValueError):
        net.set_params([np.zeros((3, 2))], [np.zeros(3)])
    with pytest.raises(ValueError):
        net.set_params([], [])
