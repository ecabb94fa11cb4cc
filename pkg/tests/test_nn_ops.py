"""Building-block checks: trivial fixed points, equivariances, grad oracles."""

import numpy as np
import pytest

from goalgraph.autodiff import nn
from goalgraph.autodiff import tensor as T
from goalgraph.autodiff.gradcheck import grad_check
from goalgraph.autodiff.rng import RngStream
from goalgraph.autodiff.tensor import Parameter, Tensor

TOL = 1e-4


def _store_mlp(seed, dims):
    store = nn.ParameterStore()
    p = nn.init_mlp(store, RngStream(seed), "mlp", dims, dtype=np.float64)
    return store, p


# -- mlp ----------------------------------------------------------------------


def test_mlp_identity_layer():
    store = nn.ParameterStore()
    p = nn.init_mlp(store, RngStream(0), "m", [3, 3], dtype=np.float64)
    p.layers[0].w.values[:] = np.eye(3)
    p.layers[0].b.values[:] = 0.0
    x = np.array([[1.0, -2.0, 0.5]])
    assert np.array_equal(nn.mlp(p, Tensor(x)).values, x)


def test_mlp_zero_weights_gives_bias():
    store = nn.ParameterStore()
    p = nn.init_mlp(store, RngStream(0), "m", [4, 2], dtype=np.float64)
    p.layers[0].w.values[:] = 0.0
    out = nn.mlp(p, Tensor(np.ones((3, 4)))).values
    assert np.allclose(out, np.broadcast_to(p.layers[0].b.values, (3, 2)))


def test_mlp_grad_matches_finite_differences():
    store, p = _store_mlp(1, [3, 8, 2])
    rng = RngStream(2)
    x = Parameter("x", rng.normal((5, 3)))
    params = store.parameters() + [x]
    assert grad_check(lambda: T.tensor_sum(nn.mlp(p, x) ** 2), params) < TOL


# -- gru ----------------------------------------------------------------------


def _gru_params(seed, d_in, d_h, dtype=np.float64):
    store = nn.ParameterStore()
    return store, nn.init_gru(store, RngStream(seed), "gru", d_in, d_h, dtype=dtype)


def test_gru_zero_weights_fixed_point():
    store, p = _gru_params(0, 3, 4)
    for prm in store.parameters():
        prm.values[:] = 0.0
    h_seq, h_last = nn.gru(p, Tensor(np.random.default_rng(0).normal(size=(5, 3))))
    assert np.array_equal(h_seq.values, np.zeros((5, 4)))
    assert np.array_equal(h_last.values, np.zeros(4))


def test_gru_single_step_row_equals_last():
    store, p = _gru_params(1, 3, 4)
    h_seq, h_last = nn.gru(p, Tensor(RngStream(5).normal((1, 3))))
    assert h_seq.shape == (1, 4)
    assert np.array_equal(h_seq.values[0], h_last.values)


def test_gru_matches_stepwise_oracle():
    """Replays the recurrence with plain numpy, gate by gate."""
    store, p = _gru_params(2, 3, 4)
    rng = RngStream(6)
    x = rng.normal((4, 3))
    h_seq, _ = nn.gru(p, Tensor(x))
    d_h = 4

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    h = np.zeros(d_h)
    for t in range(4):
        gx = x[t] @ p.w_ih.values + p.b_ih.values
        gh = h @ p.w_hh.values + p.b_hh.values
        r = sig(gx[:d_h] + gh[:d_h])
        z = sig(gx[d_h:2 * d_h] + gh[d_h:2 * d_h])
        n = np.tanh(gx[2 * d_h:] + r * gh[2 * d_h:])
        h = (1.0 - z) * n + z * h
        assert np.allclose(h_seq.values[t], h, atol=1e-12)


def test_gru_batched_equals_sequential():
    store, p = _gru_params(3, 3, 5)
    rng = RngStream(7)
    xb = rng.normal((4, 6, 3))
    h_seq, h_last = nn.gru(p, Tensor(xb))
    for b in range(6):
        hs, hl = nn.gru(p, Tensor(xb[:, b, :]))
        assert np.allclose(h_seq.values[:, b, :], hs.values, atol=1e-12)
        assert np.allclose(h_last.values[b], hl.values, atol=1e-12)


def test_gru_grads_match_finite_differences():
    store, p = _gru_params(4, 2, 3)
    rng = RngStream(8)
    x = Parameter("x", rng.normal((3, 2)))
    h0 = Parameter("h0", rng.normal((1, 3)))

    def f():
        h_seq, h_last = nn.gru(p, T.reshape(x, (3, 1, 2)), h0)
        return T.tensor_sum(h_seq ** 2) + T.tensor_sum(h_last ** 2)

    assert grad_check(f, store.parameters() + [x, h0]) < TOL


# -- multi-head attention -----------------------------------------------------


def _mha(seed, d, heads, dtype=np.float64):
    store = nn.ParameterStore()
    return store, nn.init_mha(store, RngStream(seed), "mha", d, heads, dtype=dtype)


def test_mha_single_key_is_projected_value():
    store, p = _mha(0, 8, 2)
    rng = RngStream(9)
    q = Tensor(rng.normal((3, 8)))
    kv = Tensor(rng.normal((1, 8)))
    out = nn.multi_head_attention(p, q, kv).values
    v = kv.values @ p.wv.w.values + p.wv.b.values
    expected = v @ p.wo.w.values
    assert np.allclose(out, np.broadcast_to(expected, (3, 8)), atol=1e-12)


def test_mha_all_masked_outputs_exact_zero():
    store, p = _mha(1, 8, 4)
    rng = RngStream(10)
    q = Tensor(rng.normal((2, 8)))
    kv = Tensor(rng.normal((5, 8)))
    out = nn.multi_head_attention(p, q, kv, key_mask=np.zeros(5, dtype=bool))
    assert np.array_equal(out.values, np.zeros((2, 8)))


def test_mha_invariant_to_key_permutation():
    store, p = _mha(2, 8, 2)
    rng = RngStream(11)
    q = Tensor(rng.normal((3, 8)))
    kv = rng.normal((6, 8))
    mask = np.array([True, True, False, True, True, False])
    out = nn.multi_head_attention(p, q, Tensor(kv), key_mask=mask).values
    perm = np.array([4, 1, 5, 0, 3, 2])
    out_p = nn.multi_head_attention(p, q, Tensor(kv[perm]), key_mask=mask[perm]).values
    assert np.allclose(out, out_p, atol=1e-9)


def test_mha_masked_rows_never_influence_output():
    store, p = _mha(3, 8, 2)
    rng = RngStream(12)
    q = Tensor(rng.normal((2, 8)))
    kv = rng.normal((5, 8))
    mask = np.array([True, False, True, False, True])
    out = nn.multi_head_attention(p, q, Tensor(kv), key_mask=mask).values
    kv_zeroed = np.where(mask[:, None], kv, 0.0)
    out_z = nn.multi_head_attention(p, q, Tensor(kv_zeroed), key_mask=mask).values
    assert np.array_equal(out, out_z)


def test_mha_grads_match_finite_differences():
    store, p = _mha(4, 4, 2)
    rng = RngStream(13)
    q = Parameter("q", rng.normal((2, 4)))
    kv = Parameter("kv", rng.normal((3, 4)))
    mask = np.array([True, True, False])
    w = rng.normal((2, 4))  # generic scalarization keeps grad coords O(1)

    def f():
        return T.tensor_sum(nn.multi_head_attention(p, q, kv, key_mask=mask) * w)

    assert grad_check(f, store.parameters() + [q, kv]) < TOL


def test_mha_separate_values_tensor():
    store, p = _mha(5, 8, 2)
    rng = RngStream(14)
    q, k, v = (Tensor(rng.normal((2, 8))) for _ in range(3))
    out_kv = nn.multi_head_attention(p, q, k, v).values
    out_kk = nn.multi_head_attention(p, q, k).values
    assert not np.allclose(out_kv, out_kk)


# -- gat ----------------------------------------------------------------------


def _gat(seed, d, dtype=np.float64):
    store = nn.ParameterStore()
    return store, nn.init_gat(store, RngStream(seed), "gat", d, d, dtype=dtype)


def test_gat_single_node_self_loop():
    store, p = _gat(0, 4)
    x = Tensor(RngStream(15).normal((1, 4)))
    out = nn.gat_layer(p, x, np.zeros((1, 1), dtype=bool)).values
    s = x.values @ p.w.w.values
    expected = np.where(s > 0, s, 0.1 * s)
    assert np.allclose(out, expected, atol=1e-12)


def test_gat_node_relabeling_equivariance():
    store, p = _gat(1, 6)
    rng = RngStream(16)
    x = rng.normal((5, 6))
    adj = rng.uniform((5, 5)) > 0.5
    np.fill_diagonal(adj, False)
    mask = np.array([True, True, True, True, False])
    out = nn.gat_layer(p, Tensor(x), adj, mask).values
    perm = np.array([3, 0, 4, 1, 2])
    out_p = nn.gat_layer(p, Tensor(x[perm]), adj[perm][:, perm], mask[perm]).values
    assert np.allclose(out[perm], out_p, atol=1e-9)


def test_gat_masked_nodes_output_zero_and_never_influence():
    store, p = _gat(2, 4)
    rng = RngStream(17)
    x = rng.normal((4, 4))
    adj = np.ones((4, 4), dtype=bool)
    np.fill_diagonal(adj, False)
    mask = np.array([True, True, False, True])
    out = nn.gat_layer(p, Tensor(x), adj, mask).values
    assert np.array_equal(out[2], np.zeros(4))
    x_zeroed = np.where(mask[:, None], x, 0.0)
    out_z = nn.gat_layer(p, Tensor(x_zeroed), adj, mask).values
    assert np.array_equal(out, out_z)


def test_gat_aggregates_in_neighbors():
    """adjacency[i, j] is the edge i -> j; node j must see node i."""
    store, p = _gat(3, 4)
    rng = RngStream(18)
    x = rng.normal((3, 4))
    adj = np.zeros((3, 3), dtype=bool)
    adj[0, 2] = True  # 0 -> 2
    out = nn.gat_layer(p, Tensor(x), adj).values
    x2 = x.copy()
    x2[0] += 1.0
    out2 = nn.gat_layer(p, Tensor(x2), adj).values
    assert not np.allclose(out[2], out2[2])  # changing node 0 moves node 2
    assert np.allclose(out[1], out2[1], atol=1e-12)  # node 1 is isolated


def test_gat_grads_match_finite_differences():
    store, p = _gat(4, 4)
    rng = RngStream(19)
    x = Parameter("x", rng.normal((4, 4)))
    adj = rng.uniform((4, 4)) > 0.4
    np.fill_diagonal(adj, False)

    def f():
        return T.tensor_sum(nn.gat_layer(p, x, adj) ** 2)

    assert grad_check(f, store.parameters() + [x]) < TOL


# -- gumbel softmax ------------------------------------------------------------


def test_gumbel_softmax_valid_probability_vector():
    rng = RngStream(20)
    for trial in range(10):
        logits = Tensor(rng.normal((7,)))
        mask = rng.uniform((7,)) > 0.3
        if not mask.any():
            mask[0] = True
        out = nn.gumbel_softmax(logits, rng.gumbel((7,)), 1.0, mask).values
        assert (out >= 0).all()
        assert abs(out[mask].sum() - 1.0) < 1e-9
        assert np.array_equal(out[~mask], np.zeros((~mask).sum()))


def test_gumbel_softmax_low_temperature_is_argmax():
    rng = RngStream(21)
    logits = rng.normal((6,))
    g = rng.gumbel((6,))
    out = nn.gumbel_softmax(Tensor(logits), g, 1e-4).values
    onehot = np.zeros(6)
    onehot[np.argmax(logits + g)] = 1.0
    assert np.allclose(out, onehot, atol=1e-6)


def test_gumbel_softmax_all_masked_raises():
    with pytest.raises(nn.DegenerateInput):
        nn.gumbel_softmax(Tensor(np.zeros(3)), np.zeros(3), 1.0, np.zeros(3, dtype=bool))


def test_gumbel_softmax_grad_with_frozen_noise():
    rng = RngStream(22)
    logits = Parameter("lg", rng.normal((5,)))
    g = rng.gumbel((5,))
    w = rng.normal((5,))
    mask = np.array([True, True, True, False, True])

    def f():
        return T.tensor_sum(nn.gumbel_softmax(logits, g, 1.0, mask) * w)

    assert grad_check(f, [logits]) < TOL


# -- layer norm -----------------------------------------------------------------


def test_layer_norm_constant_row_is_shift():
    store = nn.ParameterStore()
    p = nn.init_norm(store, "ln", 4, dtype=np.float64)
    out = nn.layer_norm(p, Tensor(np.full((2, 4), 3.7))).values
    assert np.allclose(out, 0.0, atol=1e-12)
    p.beta.values[:] = 1.5
    out = nn.layer_norm(p, Tensor(np.full((2, 4), -2.0))).values
    assert np.allclose(out, 1.5, atol=1e-12)


def test_layer_norm_row_mean_equals_shift():
    store = nn.ParameterStore()
    p = nn.init_norm(store, "ln", 6, dtype=np.float64)
    p.beta.values[:] = 0.25
    out = nn.layer_norm(p, Tensor(RngStream(23).normal((4, 6)))).values
    assert np.allclose(out.mean(axis=-1), 0.25, atol=1e-6)


def test_layer_norm_grad_matches_finite_differences():
    store = nn.ParameterStore()
    p = nn.init_norm(store, "ln", 5, dtype=np.float64)
    rng = RngStream(24)
    x = Parameter("x", rng.normal((3, 5)))
    w = rng.normal((3, 5))

    def f():
        return T.tensor_sum(nn.layer_norm(p, x) * w)

    assert grad_check(f, store.parameters() + [x]) < TOL


# -- grad_check itself -----------------------------------------------------------


def test_grad_check_simple_quadratic():
    theta = Parameter("t", np.array([1.0, 2.0]))
    err = grad_check(lambda: T.tensor_sum(theta * theta), [theta])
    assert err < 1e-9
    theta.grad = None
    T.tensor_sum(theta * theta).backward()
    assert np.allclose(theta.grad, [2.0, 4.0])


def test_grad_check_constant_function():
    theta = Parameter("t", np.array([1.0, 2.0]))
    err = grad_check(lambda: T.tensor_sum(theta * 0.0), [theta])
    assert err < 1e-9


# -- rng stream -------------------------------------------------------------------


def test_rng_same_key_same_draw():
    a = RngStream(42).normal((4,))
    b = RngStream(42).normal((4,))
    assert np.array_equal(a, b)


def test_rng_counter_advances_and_restores():
    s = RngStream(7)
    first = s.normal((3,))
    second = s.normal((3,))
    assert not np.array_equal(first, second)
    resumed = RngStream.from_state({"seed": 7, "counter": 1})
    assert np.array_equal(resumed.normal((3,)), second)


def test_rng_derive_independent_substreams():
    root = RngStream(3)
    a = root.derive("gumbel", 5).normal((4,))
    b = root.derive("gumbel", 6).normal((4,))
    a2 = RngStream(3).derive("gumbel", 5).normal((4,))
    assert np.array_equal(a, a2)
    assert not np.array_equal(a, b)
    assert root.counter == 0  # derive never consumes parent draws


def test_parameter_store_rejects_duplicates():
    store = nn.ParameterStore()
    store.add(Parameter("w", np.zeros(2)))
    with pytest.raises(ValueError):
        store.add(Parameter("w", np.zeros(3)))
