"""Parameter storage, initialisation, MLP/GRU layers and the Adam optimiser."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .tensor import ShapeError, Tensor, add, concat, matmul, mul, relu, sigmoid, sub, take, tanh


class ParamStore:
    """Ordered mapping of parameter path to tensor, with Adam moments.

    Moments and the step counter live next to the parameters so that a
    checkpoint captures the complete optimiser state.
    """

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.adam_m: dict[str, np.ndarray] = {}
        self.adam_v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        self.adam_m[name] = np.zeros_like(t.value)
        self.adam_v[name] = np.zeros_like(t.value)
        return t

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self.params[name]
        except KeyError:
            raise KeyError(f"missing parameter {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self) -> Iterator[str]:
        return iter(self.params)

    def __len__(self) -> int:
        return len(self.params)

    def names(self) -> list[str]:
        return list(self.params)

    def tensors(self) -> list[Tensor]:
        return list(self.params.values())

    def num_values(self) -> int:
        return sum(t.value.size for t in self.params.values())

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, t in self.params.items():
            out.add(name, t.value.copy())
            out.adam_m[name] = self.adam_m[name].copy()
            out.adam_v[name] = self.adam_v[name].copy()
        out.step = self.step
        return out


def glorot_scaled_init(shape: Sequence[int], scale: float, rng: np.random.Generator) -> np.ndarray:
    """Glorot-uniform sample for a ``[fan_in, fan_out]`` weight, times ``scale``."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=tuple(shape)) * scale


@dataclass(frozen=True)
class MLPSpec:
    """Layer widths ``[d_in, h1, ..., d_out]``; ReLU after every layer but the last
    unless ``activate_last`` is set."""

    sizes: tuple[int, ...]
    activate_last: bool = False

    @property
    def num_layers(self) -> int:
        return len(self.sizes) - 1


def init_mlp(store: ParamStore, prefix: str, spec: MLPSpec, rng: np.random.Generator,
             scale: float = 1.0) -> None:
    for k in range(spec.num_layers):
        d_in, d_out = spec.sizes[k], spec.sizes[k + 1]
        store.add(f"{prefix}/l{k}/w", glorot_scaled_init((d_in, d_out), scale, rng))
        store.add(f"{prefix}/l{k}/b", np.zeros(d_out))


def mlp_apply(store: ParamStore, prefix: str, x, spec: MLPSpec) -> Tensor:
    h = x
    for k in range(spec.num_layers):
        w = store[f"{prefix}/l{k}/w"]
        b = store[f"{prefix}/l{k}/b"]
        if w.shape != (spec.sizes[k], spec.sizes[k + 1]):
            raise ShapeError(f"{prefix}/l{k}/w has shape {w.shape}, spec wants "
                             f"{(spec.sizes[k], spec.sizes[k + 1])}")
        h = add(matmul(h, w), b)
        if k < spec.num_layers - 1 or spec.activate_last:
            h = relu(h)
    return h


def init_gru(store: ParamStore, prefix: str, state_dim: int, input_dim: int,
             rng: np.random.Generator) -> None:
    d = state_dim + input_dim
    # update and reset gates share one weight matrix: columns [:D] -> z, [D:] -> r
    store.add(f"{prefix}/w_gates", glorot_scaled_init((d, 2 * state_dim), 1.0, rng))
    store.add(f"{prefix}/b_gates", np.zeros(2 * state_dim))
    store.add(f"{prefix}/w_cand", glorot_scaled_init((d, state_dim), 1.0, rng))
    store.add(f"{prefix}/b_cand", np.zeros(state_dim))


def gru_cell(store: ParamStore, prefix: str, state, inputs) -> Tensor:
    """new = (1 - z) * state + z * candidate."""
    w_gates = store[f"{prefix}/w_gates"]
    dim = w_gates.shape[1] // 2
    if state.shape[-1] != dim or w_gates.shape[0] != dim + inputs.shape[-1]:
        raise ShapeError(f"{prefix}: state {state.shape} / input {inputs.shape} do not fit "
                         f"gate weights {w_gates.shape}")
    gates = sigmoid(add(matmul(concat([state, inputs]), w_gates), store[f"{prefix}/b_gates"]))
    z = take(gates, 0, dim)
    r = take(gates, dim, 2 * dim)
    cand = tanh(add(matmul(concat([mul(r, state), inputs]), store[f"{prefix}/w_cand"]),
                    store[f"{prefix}/b_cand"]))
    return add(state, mul(z, sub(cand, state)))


class NonFiniteGradient(FloatingPointError):
    pass


def adam_step(store: ParamStore, grads: Mapping[str, np.ndarray], lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, applied in place."""
    for name, g in grads.items():
        p = store[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for parameter {name!r}")
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, g in grads.items():
        m = store.adam_m[name]
        v = store.adam_v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        store.params[name].value -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
