"""Network building blocks on top of the tensor engine.

Everything here is functional: parameters travel in small dataclasses, the
ops take (params, inputs) and return tensors. A ParameterStore keeps the
flat name -> Parameter mapping that the optimizer and checkpoints use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .rng import RngStream
from .tensor import Parameter, Tensor


class DegenerateInput(ValueError):
    """An operation received input it cannot produce a meaningful output for."""


class ParameterStore:
    """Flat, insertion-ordered registry of named parameters."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise ValueError(f"duplicate parameter name: {param.name}")
        self._params[param.name] = param
        return param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def parameters(self) -> list[Parameter]:
        return list(self._params.values())

    def trainable(self) -> list[Parameter]:
        return [p for p in self._params.values() if p.trainable]

    def zero_grads(self):
        for p in self._params.values():
            p.grad = None

    def n_scalars(self) -> int:
        return sum(p.values.size for p in self._params.values())


# -- parameter bundles and their initializers --------------------------------


@dataclass
class LinearParams:
    w: Parameter  # [d_in, d_out]
    b: Parameter | None  # [d_out]


@dataclass
class MlpParams:
    layers: list[LinearParams]


@dataclass
class GruParams:
    w_ih: Parameter  # [d_in, 3*d_h], gate order r|z|n
    w_hh: Parameter  # [d_h, 3*d_h]
    b_ih: Parameter  # [3*d_h]
    b_hh: Parameter  # [3*d_h]


@dataclass
class MhaParams:
    wq: LinearParams
    wk: LinearParams  # bias-free: a shared key offset cancels inside softmax
    wv: LinearParams
    wo: LinearParams  # bias-free so fully masked attention stays exactly zero
    heads: int


@dataclass
class GatParams:
    w: LinearParams  # shared node transform, bias-free
    a_src: Parameter  # [d_out, 1]
    a_dst: Parameter  # [d_out, 1]


@dataclass
class NormParams:
    gamma: Parameter  # [d]
    beta: Parameter  # [d]


def _uniform_init(rng: RngStream, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(shape, -bound, bound, dtype=dtype)


def init_linear(store: ParameterStore, rng: RngStream, name: str, d_in: int, d_out: int,
                bias: bool = True, dtype=np.float32) -> LinearParams:
    w = store.add(Parameter(f"{name}.w", _uniform_init(rng, (d_in, d_out), d_in, dtype)))
    b = None
    if bias:
        b = store.add(Parameter(f"{name}.b", _uniform_init(rng, (d_out,), d_in, dtype)))
    return LinearParams(w, b)


def init_mlp(store: ParameterStore, rng: RngStream, name: str, dims: list[int],
             dtype=np.float32) -> MlpParams:
    """dims = [d_in, hidden..., d_out]; hidden layers get leaky-relu, last is linear."""
    layers = [init_linear(store, rng, f"{name}.{i}", dims[i], dims[i + 1], dtype=dtype)
              for i in range(len(dims) - 1)]
    return MlpParams(layers)


def init_gru(store: ParameterStore, rng: RngStream, name: str, d_in: int, d_h: int,
             dtype=np.float32) -> GruParams:
    return GruParams(
        w_ih=store.add(Parameter(f"{name}.w_ih", _uniform_init(rng, (d_in, 3 * d_h), d_h, dtype))),
        w_hh=store.add(Parameter(f"{name}.w_hh", _uniform_init(rng, (d_h, 3 * d_h), d_h, dtype))),
        b_ih=store.add(Parameter(f"{name}.b_ih", _uniform_init(rng, (3 * d_h,), d_h, dtype))),
        b_hh=store.add(Parameter(f"{name}.b_hh", _uniform_init(rng, (3 * d_h,), d_h, dtype))),
    )


def init_mha(store: ParameterStore, rng: RngStream, name: str, d_model: int, heads: int,
             dtype=np.float32) -> MhaParams:
    if d_model % heads != 0:
        raise ValueError(f"d_model {d_model} not divisible by heads {heads}")
    return MhaParams(
        wq=init_linear(store, rng, f"{name}.wq", d_model, d_model, dtype=dtype),
        wk=init_linear(store, rng, f"{name}.wk", d_model, d_model, bias=False, dtype=dtype),
        wv=init_linear(store, rng, f"{name}.wv", d_model, d_model, dtype=dtype),
        wo=init_linear(store, rng, f"{name}.wo", d_model, d_model, bias=False, dtype=dtype),
        heads=heads,
    )


def init_gat(store: ParameterStore, rng: RngStream, name: str, d_in: int, d_out: int,
             dtype=np.float32) -> GatParams:
    return GatParams(
        w=init_linear(store, rng, f"{name}.w", d_in, d_out, bias=False, dtype=dtype),
        a_src=store.add(Parameter(f"{name}.a_src", _uniform_init(rng, (d_out, 1), d_out, dtype))),
        a_dst=store.add(Parameter(f"{name}.a_dst", _uniform_init(rng, (d_out, 1), d_out, dtype))),
    )


def init_norm(store: ParameterStore, name: str, d: int, dtype=np.float32) -> NormParams:
    return NormParams(
        gamma=store.add(Parameter(f"{name}.gamma", np.ones(d, dtype=dtype))),
        beta=store.add(Parameter(f"{name}.beta", np.zeros(d, dtype=dtype))),
    )


def init_embedding(store: ParameterStore, rng: RngStream, name: str, n: int, d: int,
                   dtype=np.float32) -> Parameter:
    return store.add(Parameter(name, rng.normal((n, d), dtype=dtype) * np.asarray(0.02, dtype)))


# -- forward ops --------------------------------------------------------------


def linear(p: LinearParams, x: Tensor) -> Tensor:
    out = T.matmul(x, p.w)
    if p.b is not None:
        out = out + p.b
    return out


def mlp(p: MlpParams, x: Tensor, slope: float = 0.1) -> Tensor:
    for lp in p.layers[:-1]:
        x = T.leaky_relu(linear(lp, x), slope)
    return linear(p.layers[-1], x)


def gru(p: GruParams, x: Tensor, h0: Tensor | None = None) -> tuple[Tensor, Tensor]:
    """Run a GRU over a time-major sequence.

    x is [t, d_in] or [t, batch, d_in]; returns (h_seq, h_last) with matching
    leading shape. Gate order in the stacked weights is reset | update | cand.
    """
    squeeze = x.ndim == 2
    if squeeze:
        x = T.reshape(x, (x.shape[0], 1, x.shape[1]))
    t_len, batch, _ = x.shape
    d_h = p.w_hh.shape[0]
    if h0 is None:
        h = Tensor(np.zeros((batch, d_h), dtype=x.dtype))
    else:
        h = h0
    xg = linear(LinearParams(p.w_ih, p.b_ih), x)  # [t, batch, 3*d_h]
    steps = []
    for i in range(t_len):
        gates_x = xg[i]
        gates_h = T.matmul(h, p.w_hh) + p.b_hh
        r = T.sigmoid(gates_x[:, :d_h] + gates_h[:, :d_h])
        z = T.sigmoid(gates_x[:, d_h:2 * d_h] + gates_h[:, d_h:2 * d_h])
        n = T.tanh(gates_x[:, 2 * d_h:] + r * gates_h[:, 2 * d_h:])
        h = (1.0 - z) * n + z * h
        steps.append(h)
    h_seq = T.stack(steps, axis=0)  # [t, batch, d_h]
    if squeeze:
        return T.reshape(h_seq, (t_len, d_h)), T.reshape(h, (d_h,))
    return h_seq, h


def multi_head_attention(p: MhaParams, query: Tensor, keys: Tensor,
                         values: Tensor | None = None,
                         key_mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention, queries [nq, d] over keys/values [nk, d].

    values defaults to keys. key_mask marks real key rows; masked keys get
    exactly zero attention weight, and a query facing an all-masked key set
    returns an exactly zero row (the output projection carries no bias).
    """
    if values is None:
        values = keys
    nq = query.shape[0]
    nk = keys.shape[0]
    d_model = query.shape[1]
    h = p.heads
    d_head = d_model // h
    q = linear(p.wq, query)  # [nq, d_model]
    k = linear(p.wk, keys)
    v = linear(p.wv, values)
    q = T.swapaxes(T.reshape(q, (nq, h, d_head)), 0, 1)  # [h, nq, d_head]
    k = T.swapaxes(T.reshape(k, (nk, h, d_head)), 0, 1)
    v = T.swapaxes(T.reshape(v, (nk, h, d_head)), 0, 1)
    scores = T.matmul(q, T.swapaxes(k, 1, 2)) * (1.0 / np.sqrt(d_head))  # [h, nq, nk]
    if key_mask is None:
        key_mask = np.ones(nk, dtype=bool)
    attn = T.masked_softmax(scores, np.asarray(key_mask, dtype=bool)[None, None, :], axis=-1)
    ctx = T.matmul(attn, v)  # [h, nq, d_head]
    ctx = T.reshape(T.swapaxes(ctx, 0, 1), (nq, d_model))
    return linear(p.wo, ctx)


def gat_layer(p: GatParams, h: Tensor, adjacency: np.ndarray,
              node_mask: np.ndarray | None = None) -> Tensor:
    """One graph-attention round over a directed adjacency.

    adjacency[i, j] means an edge i -> j, so node i aggregates over its
    in-neighbors {j : adjacency[j, i]} plus itself. Padded nodes (node_mask
    false) neither send nor receive and come out exactly zero.
    """
    n = h.shape[0]
    if node_mask is None:
        node_mask = np.ones(n, dtype=bool)
    node_mask = np.asarray(node_mask, dtype=bool)
    s = linear(p.w, h)  # [n, d_out]
    score_dst = T.matmul(s, p.a_dst)  # [n, 1]
    score_src = T.matmul(s, p.a_src)  # [n, 1]
    scores = T.leaky_relu(score_dst + T.reshape(score_src, (1, n)), 0.1)  # [n_dst, n_src]
    allowed = np.asarray(adjacency, dtype=bool).T | np.eye(n, dtype=bool)
    allowed = allowed & node_mask[:, None] & node_mask[None, :]
    alpha = T.masked_softmax(scores, allowed, axis=1)
    return T.leaky_relu(T.matmul(alpha, s), 0.1)


def gumbel_softmax(logits: Tensor, noise: np.ndarray, tau: float,
                   mask: np.ndarray | None = None) -> Tensor:
    """Differentiable relaxed one-hot over the unmasked positions.

    noise is pre-drawn standard Gumbel, treated as a constant: gradients flow
    through the logits only, which keeps sampling reproducible under
    counter-based streams.
    """
    if mask is None:
        mask = np.ones(logits.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DegenerateInput("gumbel_softmax over an empty support")
    perturbed = (logits + np.asarray(noise, dtype=logits.dtype)) * (1.0 / float(tau))
    return T.masked_softmax(perturbed, mask, axis=-1)


def layer_norm(p: NormParams, x: Tensor, eps: float = 1e-5) -> Tensor:
    mu = T.mean(x, axis=-1, keepdims=True)
    centered = x - mu
    var = T.mean(centered * centered, axis=-1, keepdims=True)
    return centered / T.sqrt(var + eps) * p.gamma + p.beta
