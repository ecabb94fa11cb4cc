"""Engine-level checks: every primitive op against central differences."""

import numpy as np
import pytest

from goalgraph.autodiff import tensor as T
from goalgraph.autodiff.gradcheck import grad_check
from goalgraph.autodiff.rng import RngStream
from goalgraph.autodiff.tensor import Parameter, ShapeMismatch, Tensor

TOL = 1e-6


def _param(rng, shape, name="p"):
    return Parameter(name, rng.normal(shape))


def test_backward_requires_scalar():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ShapeMismatch):
        (x * 2.0).backward()


def test_add_broadcast_grads():
    rng = RngStream(1)
    a = _param(rng, (3, 4), "a")
    b = _param(rng, (4,), "b")
    assert grad_check(lambda: T.tensor_sum((a + b) * (a + b)), [a, b]) < TOL


def test_mul_div_sub_grads():
    rng = RngStream(2)
    a = _param(rng, (2, 3), "a")
    b = Parameter("b", rng.uniform((2, 3), 0.5, 2.0))
    assert grad_check(lambda: T.tensor_sum(a * b - a / b), [a, b]) < TOL


def test_scalar_operand_keeps_dtype():
    x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
    assert (x * 2.0).dtype == np.float32
    assert (x + 1).dtype == np.float32
    assert (3.0 - x).dtype == np.float32


def test_matmul_grads_2d():
    rng = RngStream(3)
    a = _param(rng, (3, 4), "a")
    b = _param(rng, (4, 2), "b")
    assert grad_check(lambda: T.tensor_sum(T.matmul(a, b)), [a, b]) < TOL


def test_matmul_grads_batched():
    rng = RngStream(4)
    a = _param(rng, (5, 3, 4), "a")
    b = _param(rng, (4, 2), "b")

    def f():
        out = T.matmul(a, b)
        return T.tensor_sum(out * out)

    assert grad_check(f, [a, b]) < TOL


def test_matmul_shape_errors():
    a = Tensor(np.ones((2, 3)))
    with pytest.raises(ShapeMismatch):
        T.matmul(a, Tensor(np.ones((4, 2))))
    with pytest.raises(ShapeMismatch):
        T.matmul(a, Tensor(np.ones(3)))


def test_elementwise_grads():
    rng = RngStream(5)
    x = Parameter("x", rng.uniform((4, 3), -2.0, 2.0))
    for op in (T.exp, T.tanh, T.sigmoid, T.softplus, lambda t: T.leaky_relu(t, 0.1)):
        assert grad_check(lambda op=op: T.tensor_sum(op(x)), [x]) < TOL


def test_log_sqrt_abs_grads():
    rng = RngStream(6)
    x = Parameter("x", rng.uniform((4, 3), 0.2, 3.0))
    assert grad_check(lambda: T.tensor_sum(T.log(x)), [x]) < TOL
    assert grad_check(lambda: T.tensor_sum(T.sqrt(x)), [x]) < TOL
    y = Parameter("y", rng.uniform((4, 3), -3.0, -0.2))
    assert grad_check(lambda: T.tensor_sum(T.absolute(y)), [y]) < TOL


def test_pow_grad():
    rng = RngStream(7)
    x = Parameter("x", rng.uniform((3,), 0.5, 2.0))
    assert grad_check(lambda: T.tensor_sum(x ** 3), [x]) < TOL


def test_clamp_min_grad_is_zero_below_floor():
    x = Parameter("x", np.array([-1.0, 0.5, 2.0]))
    out = T.tensor_sum(T.clamp_min(x, 1.0))
    out.backward()
    assert np.array_equal(x.grad, [0.0, 0.0, 1.0])


def test_reductions_grads():
    rng = RngStream(8)
    x = _param(rng, (3, 4), "x")
    assert grad_check(lambda: T.tensor_sum(x * x), [x]) < TOL
    assert grad_check(lambda: T.mean(x * x), [x]) < TOL
    assert grad_check(lambda: T.tensor_sum(T.mean(x, axis=1) ** 2), [x]) < TOL
    assert grad_check(lambda: T.tensor_sum(T.tensor_sum(x, axis=0, keepdims=True) ** 2), [x]) < TOL


def test_shape_op_grads():
    rng = RngStream(9)
    x = _param(rng, (2, 3, 4), "x")
    assert grad_check(lambda: T.tensor_sum(T.reshape(x, (6, 4)) ** 2), [x]) < TOL
    assert grad_check(lambda: T.tensor_sum(T.swapaxes(x, 0, 2) ** 2), [x]) < TOL
    y = _param(rng, (1, 4), "y")
    assert grad_check(lambda: T.tensor_sum(T.broadcast_to(y, (3, 4)) ** 2), [y]) < TOL


def test_cumsum_forward_and_grad():
    rng = RngStream(12)
    x = _param(rng, (2, 4, 3), "x")
    out = T.cumsum(x, axis=1)
    assert np.allclose(out.values, np.cumsum(x.values, axis=1))
    assert grad_check(lambda: T.tensor_sum(T.cumsum(x, axis=1) ** 2), [x]) < TOL
    assert grad_check(lambda: T.tensor_sum(T.cumsum(x, axis=0) ** 2), [x]) < TOL
    # Hand oracle on a vector: d/dx_i sum_j cumsum(x)_j = n - i.
    v = Parameter("v", np.arange(1.0, 5.0))
    T.tensor_sum(T.cumsum(v, axis=0)).backward()
    assert np.array_equal(v.grad, np.array([4.0, 3.0, 2.0, 1.0]))


def test_getitem_accumulates_repeated_indices():
    x = Parameter("x", np.arange(5.0))
    idx = np.array([1, 1, 3])
    out = T.tensor_sum(x[idx])
    out.backward()
    assert np.array_equal(x.grad, [0.0, 2.0, 0.0, 1.0, 0.0])


def test_getitem_slice_grad():
    rng = RngStream(10)
    x = _param(rng, (4, 5), "x")
    assert grad_check(lambda: T.tensor_sum(x[1:3, ::2] ** 2), [x]) < TOL


def test_concat_stack_grads():
    rng = RngStream(11)
    a = _param(rng, (2, 3), "a")
    b = _param(rng, (4, 3), "b")
    assert grad_check(lambda: T.tensor_sum(T.concat([a, b], axis=0) ** 2), [a, b]) < TOL
    c = _param(rng, (2, 3), "c")
    assert grad_check(lambda: T.tensor_sum(T.stack([a, c], axis=1) ** 2), [a, c]) < TOL


def test_masked_softmax_forward_exact_zeros():
    x = Tensor(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]]))
    mask = np.array([[True, False, True], [False, False, False]])
    out = T.masked_softmax(x, mask)
    assert out.values[0, 1] == 0.0
    assert np.allclose(out.values[0].sum(), 1.0)
    assert np.array_equal(out.values[1], [0.0, 0.0, 0.0])


def test_masked_softmax_matches_plain_softmax_when_unmasked():
    rng = RngStream(12)
    x = rng.normal((3, 5))
    out = T.softmax(Tensor(x)).values
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    assert np.allclose(out, e / e.sum(axis=-1, keepdims=True), atol=1e-12)


def test_masked_softmax_grad():
    rng = RngStream(13)
    x = _param(rng, (4, 6), "x")
    mask = rng.uniform((4, 6)) > 0.3
    mask[2] = False  # one fully masked row
    mask[0] = True
    w = rng.normal((4, 6))

    def f():
        return T.tensor_sum(T.masked_softmax(x, mask) * w)

    assert grad_check(f, [x]) < TOL


def test_masked_softmax_extreme_logits_stable():
    x = Tensor(np.array([1000.0, -1000.0, 999.0]))
    out = T.masked_softmax(x, np.array([True, True, True]))
    assert np.isfinite(out.values).all()
    assert abs(out.values.sum() - 1.0) < 1e-12


def test_grad_accumulates_across_reuse():
    x = Parameter("x", np.array(2.0))
    y = x * x + x * 3.0  # dy/dx = 2x + 3 = 7
    y.backward()
    assert np.allclose(x.grad, 7.0)


def test_detach_blocks_gradient():
    x = Parameter("x", np.array([1.0, 2.0]))
    out = T.tensor_sum(x.detach() * x)
    out.backward()
    assert np.array_equal(x.grad, [1.0, 2.0])


def test_deep_chain_no_recursion_error():
    x = Parameter("x", np.array(1.0))
    y = x
    for _ in range(5000):
        y = y + 0.0
    y.backward()
    assert np.allclose(x.grad, 1.0)
