import numpy as np
import pytest

from indkg.autodiff import (
    Tensor,
    circular_correlation,
    concat,
    gather_rows,
    matmul,
    norm,
    relu,
    reshape,
    segment_sum,
    sigmoid,
    tmean,
    tsum,
)
from indkg.errors import NonFiniteGradient, ShapeMismatch
from indkg.model import gradient_check

from helpers import corr_oracle


def numeric_grad(f, x, eps=1e-6):
    g = np.zeros_like(x.data)
    flat, gflat = x.data.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = f().item()
        flat[i] = orig - eps
        down = f().item()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * eps)
    return g


def check(f, *leaves, tol=1e-7):
    for leaf in leaves:
        leaf.grad = None
    out = f()
    out.backward()
    for leaf in leaves:
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
        numeric = numeric_grad(f, leaf)
        assert np.allclose(analytic, numeric, atol=tol), (analytic, numeric)


def test_quadratic_probe():
    theta = Tensor(3.0, requires_grad=True)
    loss = theta * theta
    loss.backward()
    assert loss.item() == 9.0
    assert theta.grad == pytest.approx(6.0)


def test_constant_graph_zero_grad():
    w = Tensor(np.zeros(4), requires_grad=True)
    x = Tensor(np.random.default_rng(0).normal(size=4))
    loss = tsum(w * 0.0) + tsum(x)
    loss.backward()
    assert np.all(w.grad == 0.0)


def test_add_mul_broadcast():
    rng = np.random.default_rng(1)
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 1)), requires_grad=True)
    check(lambda: tsum((a + b) * b), a, b)


def test_matmul_all_shapes():
    rng = np.random.default_rng(2)
    A = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    B = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    v = Tensor(rng.normal(size=4), requires_grad=True)
    check(lambda: tsum(matmul(A, B)), A, B)
    check(lambda: tsum(matmul(v, B)), v, B)
    check(lambda: tsum(matmul(A, v)), A, v)
    u = Tensor(rng.normal(size=4), requires_grad=True)
    check(lambda: matmul(v, u), v, u)


def test_unary_ops():
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=6) + 0.1, requires_grad=True)
    check(lambda: tsum(relu(x)), x, tol=1e-6)
    check(lambda: tsum(sigmoid(x)), x)
    check(lambda: norm(x, 2.0), x, tol=1e-6)
    check(lambda: norm(x, 1.0), x, tol=1e-6)
    check(lambda: tmean(x * x), x)


def test_relu_subgradient_zero_at_kink():
    x = Tensor(np.array([0.0, -1.0, 2.0]), requires_grad=True)
    tsum(relu(x)).backward()
    assert x.grad.tolist() == [0.0, 0.0, 1.0]


def test_concat_reshape():
    rng = np.random.default_rng(4)
    a = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
    check(lambda: tsum(concat([a, b], axis=1) * 2.0), a, b)
    check(lambda: tsum(reshape(a, (6,)) * reshape(a, (6,))), a)


def test_gather_segment():
    rng = np.random.default_rng(5)
    H = Tensor(rng.normal(size=(5, 3)), requires_grad=True)
    idx = np.array([0, 2, 2, 4])
    seg = np.array([1, 0, 1, 0])
    check(lambda: tsum(segment_sum(gather_rows(H, idx), seg, 2)
                       * segment_sum(gather_rows(H, idx) * 1.0, seg, 2)), H)


def test_circular_correlation_matches_oracle():
    rng = np.random.default_rng(6)
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    out = circular_correlation(a, b)
    for row in range(3):
        assert np.allclose(out.data[row], corr_oracle(a.data[row], b.data[row]),
                           atol=1e-12)
    check(lambda: tsum(circular_correlation(a, b) * 1.5), a, b)


def test_circular_correlation_shape_error():
    a = Tensor(np.zeros((2, 4)))
    b = Tensor(np.zeros((2, 5)))
    with pytest.raises(ShapeMismatch):
        circular_correlation(a, b)


def test_backward_requires_scalar():
    x = Tensor(np.zeros(3), requires_grad=True)
    with pytest.raises(ShapeMismatch):
        (x * 2.0).backward()


def test_nonfinite_gradient_detected():
    x = Tensor(np.array([0.0]), requires_grad=True)
    from indkg.autodiff import sqrt
    with np.errstate(divide="ignore"), pytest.raises(NonFiniteGradient):
        tsum(sqrt(x)).backward()


def test_gradient_accumulates_across_backwards():
    x = Tensor(2.0, requires_grad=True)
    (x * x).backward()
    (x * x).backward()
    assert x.grad == pytest.approx(8.0)


def test_gradient_check_harness():
    rng = np.random.default_rng(7)
    W = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
    x = Tensor(rng.normal(size=4))
    err = gradient_check({"W": W}, lambda: tsum(relu(matmul(x, W))),
                         sample_frac=1.0, rng=np.random.default_rng(0))
    assert err < 1e-6
