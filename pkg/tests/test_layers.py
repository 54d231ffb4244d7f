import numpy as np
import pytest

from candlecnn.nn import layers as L

from candlecnn.nn.model import Model

from gradcheck import TOL, check_layers, check_tiny_model, tiny_spec
from oracles import naive_conv


def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(1, 1, 5, 5))
    out, _ = L.conv2d_forward(x, np.ones((1, 1, 1, 1)), np.zeros(1))
    np.testing.assert_array_equal(out, x)


def test_conv_zero_weights_gives_bias():
    x = np.random.default_rng(0).normal(size=(2, 3, 4, 4))
    out, _ = L.conv2d_forward(x, np.zeros((2, 3, 3, 3)), np.array([1.5, -2.0]))
    assert np.all(out[:, 0] == 1.5) and np.all(out[:, 1] == -2.0)


@pytest.mark.parametrize("seed", range(5))
def test_conv_matches_six_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(1, 1, 5, 5))
    w = rng.normal(size=(1, 1, 3, 3))
    b = rng.normal(size=1)
    out, _ = L.conv2d_forward(x, w, b)
    assert np.max(np.abs(out - naive_conv(x, w, b))) <= 1e-12


def test_conv_multichannel_matches_oracle():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(2, 3, 6, 7))
    w = rng.normal(size=(4, 3, 3, 3))
    b = rng.normal(size=4)
    assert np.max(np.abs(L.conv2d_forward(x, w, b)[0] - naive_conv(x, w, b))) <= 1e-12


def test_conv_shape_errors():
    with pytest.raises(L.ShapeMismatch):
        L.conv2d_forward(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(L.ShapeMismatch):
        L.conv2d_forward(np.zeros((1, 1, 4, 4)), np.zeros((1, 1, 2, 2)), np.zeros(1))


def test_pool_examples():
    out, arg = L.maxpool2d_forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
    assert out.item() == 4.0 and arg.item() == 3  # bottom-right
    out, _ = L.maxpool2d_forward(np.full((1, 2, 4, 6), 7.0))
    assert out.shape == (1, 2, 2, 3) and np.all(out == 7.0)


def test_pool_tie_goes_to_first_in_scan():
    _, arg = L.maxpool2d_forward(np.array([[[[5.0, 5.0], [5.0, 5.0]]]]))
    assert arg.item() == 0


def test_pool_matches_brute_force():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 3, 4, 4))
    out, _ = L.maxpool2d_forward(x)
    for n in range(2):
        for c in range(3):
            for i in range(2):
                for j in range(2):
                    assert out[n, c, i, j] == max(x[n, c, 2 * i + a, 2 * j + b] for a in (0, 1) for b in (0, 1))


def test_pool_odd_dimension():
    with pytest.raises(L.OddDimension):
        L.maxpool2d_forward(np.zeros((1, 1, 3, 4)))


def test_pool_backward_conserves_gradient():
    rng = np.random.default_rng(5)
    pool = L.MaxPool2D()
    pool.forward(rng.normal(size=(2, 3, 6, 8)))
    d = rng.normal(size=(2, 3, 3, 4))
    dx = pool.backward(d)
    np.testing.assert_allclose(dx.sum(axis=(2, 3)), d.sum(axis=(2, 3)), atol=1e-12)
    assert np.count_nonzero(dx) == d.size


def test_relu_and_softmax_examples():
    assert L.relu(np.array(-3.0)) == 0 and L.relu(np.array(3.0)) == 3
    loss, p, _ = L.softmax_cross_entropy(np.array([[0.0, 0.0]]), np.array([0]))
    np.testing.assert_allclose(p, [[0.5, 0.5]])
    assert loss == pytest.approx(np.log(2), abs=1e-15)
    loss, p, _ = L.softmax_cross_entropy(np.array([[1000.0, 0.0]]), np.array([0]))
    assert np.isfinite(loss) and loss == 0.0
    np.testing.assert_allclose(p, [[1.0, 0.0]], atol=1e-300)


def test_softmax_rows_sum_to_one():
    logits = np.random.default_rng(0).normal(scale=30, size=(100, 2))
    loss, p, _ = L.softmax_cross_entropy(logits, np.zeros(100, dtype=int))
    assert np.max(np.abs(p.sum(axis=1) - 1)) <= 1e-12 and loss >= 0


def test_softmax_ce_shape_mismatch():
    with pytest.raises(L.ShapeMismatch):
        L.softmax_cross_entropy(np.zeros((3, 2)), np.zeros(2))


def test_dropout_identity_cases():
    x = np.random.default_rng(0).normal(size=(10, 10))
    for rate in (0.0, 0.5, 0.9):
        out, _ = L.dropout(x, rate, train=False, rng=None)
        assert out is x
    out, _ = L.dropout(x, 0.0, train=True, rng=np.random.default_rng(1))
    np.testing.assert_array_equal(out, x)
    with pytest.raises(L.NNError):
        L.dropout(x, 1.0, True, np.random.default_rng(1))


def test_dropout_monte_carlo():
    x = np.ones(10**6)
    out, mask = L.dropout(x, 0.5, True, np.random.default_rng(123))
    survivors = np.count_nonzero(out) / x.size
    assert abs(survivors - 0.5) <= 0.003
    assert abs(out.mean() - 1.0) <= 0.006
    assert set(np.unique(out)) == {0.0, 2.0}


def test_backward_before_forward():
    for layer in (L.ReLU(), L.MaxPool2D(), L.Flatten(), L.Dropout(0.5), L.Dense(2, 2), L.Conv2D(1, 1)):
        with pytest.raises(L.MissingCache):
            layer.backward(np.zeros((1, 2)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_layer_gradients(seed):
    errs = check_layers(seed)
    bad = {k: v for k, v in errs.items() if v >= TOL}
    assert not bad


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_tiny_model_gradients(seed):
    errs = check_tiny_model(seed)
    assert set(errs) == {"0.w", "0.b", "3.w", "3.b"}
    assert max(errs.values()) < TOL


def test_confident_correct_logits_have_vanishing_gradient():
    norms = []
    for scale in (1, 10, 40):
        _, _, g = L.softmax_cross_entropy(np.array([[scale, -scale], [-scale, scale]], float), np.array([0, 1]))
        norms.append(np.linalg.norm(g))
    assert norms[0] > norms[1] > norms[2] and norms[2] < 1e-30


def test_duplicated_batch_gives_same_mean_gradient():
    rng = np.random.default_rng(6)
    model = Model(tiny_spec(), dtype=np.float64, seed=3)
    x = rng.normal(size=(4, 3, 8, 8))
    y = np.array([0, 1, 0, 1])

    def grads(xb, yb):
        _, _, d = L.softmax_cross_entropy(model.forward(xb), yb)
        return model.backward(d)

    a = grads(x, y)
    b = grads(np.concatenate([x, x]), np.concatenate([y, y]))
    for k in a:
        np.testing.assert_allclose(a[k], b[k], rtol=1e-12, atol=1e-15)
