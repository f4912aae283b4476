import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anmt import autodiff as ad
from anmt.autodiff import Tensor
from fdcheck import numeric_grad, rel_err

F64 = np.float64


def leaf(x):
    return Tensor(np.asarray(x, dtype=F64), requires_grad=True)


def grad_of(build, *inputs):
    ts = [leaf(x) for x in inputs]
    ad.backward(build(*ts))
    return [t.grad for t in ts]


def fd_of(build, *inputs):
    xs = [np.array(x, dtype=F64) for x in inputs]

    def value():
        with ad.no_grad():
            return float(build(*[Tensor(x) for x in xs]).data)

    return [numeric_grad(value, x) for x in xs]


def assert_fd(build, *inputs, tol=1e-6):
    with ad.precision(F64):
        an = grad_of(build, *inputs)
        fd = fd_of(build, *inputs)
    for a, f in zip(an, fd):
        assert rel_err(a, f) <= tol


RNG = np.random.default_rng(7)
W3 = RNG.normal(size=(3, 4, 5))      # fixed weights that make every op's output a non-trivial scalar


def weighted(t):
    w = Tensor(W3[tuple(slice(0, s) for s in t.shape)] if t.ndim == 3 else np.resize(W3, t.shape))
    return ad.sum_all(t * w)


# ---------------------------------------------------------------- forward examples

def test_matmul_examples():
    a = Tensor(np.array([[1., 2.], [3., 4.]]))
    assert np.array_equal(ad.matmul(Tensor(np.eye(2)), a).data, a.data)
    out = ad.matmul(Tensor(np.array([[1., 0.], [0., 0.]])), Tensor(np.array([[5., 6.], [7., 8.]])))
    assert np.array_equal(out.data, [[5, 6], [0, 0]])


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ad.ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_softmax_examples():
    assert np.allclose(ad.softmax(Tensor(np.zeros(2))).data, [0.5, 0.5])
    big = ad.softmax(Tensor(np.array([1000., 1000., 1000.]))).data
    assert np.all(np.isfinite(big)) and np.allclose(big, 1 / 3)
    logs = ad.softmax(Tensor(np.log(np.array([1., 2., 3.])))).data
    assert np.allclose(logs, [1 / 6, 2 / 6, 3 / 6], atol=1e-12)


def test_softmax_mask_zeroes_exactly():
    y = ad.softmax(Tensor(np.array([[1., 2., 3.]])), mask=np.array([[True, False, True]])).data
    assert y[0, 1] == 0.0 and abs(y.sum() - 1) < 1e-12


def test_layer_norm_examples():
    g, b = Tensor(np.ones(3)), Tensor(np.zeros(3))
    assert np.allclose(ad.layer_norm(Tensor(np.full((1, 3), 4.0)), g, b).data, 0.0)
    out = ad.layer_norm(Tensor(np.array([[1., 3.]])), Tensor(np.ones(2)), Tensor(np.zeros(2))).data
    assert np.allclose(out, [[-1, 1]], atol=1e-5)
    with pytest.raises(ad.ShapeError):
        ad.layer_norm(Tensor(np.ones((1, 3))), Tensor(np.ones(2)), Tensor(np.zeros(2)))


def test_cross_entropy_examples():
    loss = ad.cross_entropy(Tensor(np.zeros((4, 50))), [0, 1, 2, 49]).item()
    assert abs(loss - math.log(50)) < 1e-6 and abs(math.exp(loss) - 50) < 1e-4
    margins = [ad.cross_entropy(Tensor(np.array([[m, 0., 0.]])), [0]).item() for m in (1., 10., 40.)]
    assert margins[0] > margins[1] > margins[2] and margins[2] < 1e-15
    x = np.random.default_rng(3).normal(size=(2, 3))
    hand = -sum(math.log(math.exp(x[r, t]) / sum(math.exp(v) for v in x[r])) for r, t in ((0, 2), (1, 0))) / 2
    with ad.precision(F64):
        assert abs(ad.cross_entropy(Tensor(x), [2, 0]).item() - hand) < 1e-12


def test_cross_entropy_errors():
    with pytest.raises(IndexError):
        ad.cross_entropy(Tensor(np.zeros((2, 3))), [0, 3])
    with pytest.raises(ValueError):
        ad.cross_entropy(Tensor(np.zeros((2, 3))), [0, 1], mask=np.zeros(2, dtype=bool))


def test_cross_entropy_mask_ignores_padding():
    x = np.random.default_rng(1).normal(size=(3, 4))
    full = ad.cross_entropy(Tensor(x[:2]), [1, 2]).item()
    masked = ad.cross_entropy(Tensor(x), [1, 2, 0], mask=np.array([1, 1, 0], dtype=bool)).item()
    assert abs(full - masked) < 1e-6


def test_embedding_out_of_range():
    with pytest.raises(IndexError):
        ad.embedding(Tensor(np.zeros((3, 2))), np.array([3]))


# ---------------------------------------------------------------- backward

def test_backward_polynomial():
    x = leaf(3.0)
    ad.backward(ad.square(x))
    assert x.grad == pytest.approx(6.0)


def test_backward_constant_sum_softmax():
    x = leaf(np.random.default_rng(0).normal(size=5))
    ad.backward(ad.sum_all(ad.softmax(x)))
    assert np.allclose(x.grad, 0.0, atol=1e-12)


def test_backward_requires_scalar():
    with pytest.raises(ValueError):
        ad.backward(leaf(np.ones(3)) * 2.0)


def test_backward_accumulates_shared_nodes():
    x = leaf(2.0)
    y = x * x
    ad.backward(y + y)
    assert x.grad == pytest.approx(8.0)


def test_no_grad_records_nothing():
    x = leaf(np.ones(2))
    with ad.no_grad():
        y = ad.sum_all(x * 3.0)
    assert not y.requires_grad


def test_deep_chain_does_not_recurse():
    x = leaf(1.0)
    y = x
    for _ in range(5000):
        y = y * 1.0
    ad.backward(y)
    assert x.grad == pytest.approx(1.0)


# ---------------------------------------------------------------- finite differences, every primitive

R = np.random.default_rng(11)


def test_fd_matmul():
    assert_fd(lambda a, b: weighted(ad.matmul(a, b)), R.normal(size=(3, 4)), R.normal(size=(4, 2)))


def test_fd_matmul_batched_broadcast():
    assert_fd(lambda a, b: weighted(ad.matmul(a, b)), R.normal(size=(2, 3, 4)), R.normal(size=(4, 5)))


def test_fd_add_mul_broadcast():
    assert_fd(lambda a, b: weighted(a * b + b), R.normal(size=(3, 4)), R.normal(size=(4,)))


def test_fd_neg_relu_square():
    x = R.normal(size=(3, 4))
    x[np.abs(x) < 0.05] = 0.3                         # keep away from the kink
    assert_fd(lambda a: weighted(ad.relu(-a) + ad.square(a)), x)


def test_fd_reductions_and_shapes():
    assert_fd(lambda a: ad.mean_all(ad.square(ad.transpose(ad.reshape(a, (4, 3)), (1, 0)))), R.normal(size=(3, 4)))


def test_fd_concat():
    assert_fd(lambda a, b: weighted(ad.concat([a, b], axis=1)), R.normal(size=(3, 2)), R.normal(size=(3, 3)))


def test_fd_embedding_repeated_ids():
    ids = np.array([[0, 2, 2], [1, 0, 2]])
    assert_fd(lambda t: weighted(ad.embedding(t, ids)), R.normal(size=(3, 5)))


def test_fd_softmax_and_masked_softmax():
    mask = np.array([[True, True, False, True]])
    assert_fd(lambda a: weighted(ad.softmax(a)), R.normal(size=(3, 4)))
    assert_fd(lambda a: weighted(ad.softmax(a, mask=mask)), R.normal(size=(3, 4)))


def test_fd_log_softmax():
    assert_fd(lambda a: weighted(ad.log_softmax(a, axis=0)), R.normal(size=(3, 4)))


def test_fd_layer_norm():
    assert_fd(lambda x, g, b: weighted(ad.layer_norm(x, g, b)), R.normal(size=(3, 4)), R.normal(size=4),
              R.normal(size=4), tol=1e-5)


def test_fd_cross_entropy_masked():
    mask = np.array([[1, 1, 0], [1, 0, 0]], dtype=bool)
    assert_fd(lambda x: ad.cross_entropy(x, [[1, 2, 0], [3, 0, 0]], mask), R.normal(size=(2, 3, 4)))


def test_fd_dropout_fixed_mask():
    # dropout is inert under no_grad, so the oracle evaluates with recording on
    def build(a):
        return weighted(ad.dropout(a, 0.5, np.random.default_rng(5)))

    x = R.normal(size=(3, 4))
    with ad.precision(F64):
        (an,) = grad_of(build, x)
        fd = numeric_grad(lambda: float(build(Tensor(x)).data), x)
    assert rel_err(an, fd) <= 1e-6
    assert np.count_nonzero(an == 0) > 0


def test_dropout_inactive_without_rng_or_grad():
    x = leaf(np.ones(4))
    assert ad.dropout(x, 0.5, None) is x
    with ad.no_grad():
        assert ad.dropout(x, 0.5, np.random.default_rng(0)) is x


# ---------------------------------------------------------------- properties

@settings(max_examples=60, deadline=None)
@given(arrays(F64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
              elements=st.floats(-50, 50, allow_nan=False)))
def test_softmax_rows_sum_to_one(x):
    y = ad.softmax(Tensor(x)).data
    assert np.all(y >= 0) and np.allclose(y.sum(-1), 1.0, atol=1e-9)
    assert np.allclose(np.exp(ad.log_softmax(Tensor(x)).data), y, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1e3, 1e3, allow_nan=False), arrays(F64, (2, 5), elements=st.floats(-5, 5)))
def test_softmax_shift_invariant(c, x):
    assert np.allclose(ad.softmax(Tensor(x + c)).data, ad.softmax(Tensor(x)).data, atol=1e-9)


def test_precision_context_sets_dtype():
    assert ad.default_dtype() == np.float32
    with ad.precision(np.float64):
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32
