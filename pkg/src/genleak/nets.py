"""Feed-forward networks over flat parameter vectors, with reverse-mode gradients.

A network is described by a `NetworkSpec` (layer sizes + activations) and its
weights live in a single flat float64 vector. `forward` records the activation
tape needed by `backward`, which returns the gradient with respect to every
parameter *and* with respect to the network input, so networks can be chained
(an attacker feeding a frozen generator differentiates straight through both).

Inputs may be a single vector of shape (d,) or a batch of shape (rows, d).
For batched calls the parameter gradient is summed over rows; the caller owns
any 1/batch scaling by pre-scaling the output gradient.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "ACTIVATIONS",
    "NetworkSpec",
    "Tape",
    "param_count",
    "init_params",
    "unpack_params",
    "forward",
    "backward",
    "finite_diff_grad",
    "l2_distance",
]

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")


@dataclass(frozen=True)
class NetworkSpec:
    """Shape and activation choices of a fully-connected network.

    layer_sizes includes the input dimension first and the output dimension
    last. `hidden_activation` applies to every hidden layer, `output_activation`
    to the last affine layer. `l2_reg_coeff` is the weight-decay coefficient
    trainers add to their losses; it does not affect forward/backward here.
    """

    layer_sizes: tuple[int, ...]
    hidden_activation: str = "relu"
    output_activation: str = "identity"
    l2_reg_coeff: float = 0.0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("layer_sizes needs at least input and output sizes")
        if any(s <= 0 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        for name in (self.hidden_activation, self.output_activation):
            if name not in ACTIVATIONS:
                raise ValueError(f"unknown activation {name!r}, expected one of {ACTIVATIONS}")
        if self.l2_reg_coeff < 0:
            raise ValueError("l2_reg_coeff must be nonnegative")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    @property
    def num_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def activation_at(self, layer: int) -> str:
        return self.output_activation if layer == self.num_layers - 1 else self.hidden_activation


def param_count(spec: NetworkSpec) -> int:
    """Total parameter count: sum over layers of n_in*n_out + n_out."""
    sizes = spec.layer_sizes
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


def init_params(spec: NetworkSpec, seed: int) -> np.ndarray:
    """Deterministic Glorot-uniform weights, zero biases, as one flat vector."""
    rng = np.random.default_rng(seed)
    chunks = []
    sizes = spec.layer_sizes
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        chunks.append(rng.uniform(-limit, limit, size=n_in * n_out))
        chunks.append(np.zeros(n_out))
    return np.concatenate(chunks)


def unpack_params(spec: NetworkSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views of (W, b) per layer; layout is W then b, layer by layer."""
    params = np.asarray(params)
    if params.ndim != 1 or params.shape[0] != param_count(spec):
        raise ValueError(
            f"parameter vector has length {params.shape}, spec implies {param_count(spec)}"
        )
    layers = []
    offset = 0
    sizes = spec.layer_sizes
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = params[offset : offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = params[offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    return z  # identity


def _activation_deriv(name: str, a: np.ndarray) -> np.ndarray:
    # Derivatives are recoverable from the post-activation value for all four.
    if name == "relu":
        return (a > 0.0).astype(a.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(a)


@dataclass
class Tape:
    """Activation record of one forward pass; consumed by `backward`."""

    spec: NetworkSpec
    params: np.ndarray
    activations: list = field(default_factory=list)  # a_0 (input) .. a_L (output)
    single_input: bool = False


def forward(spec: NetworkSpec, params: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, Tape]:
    """Evaluate the network; returns (output, tape).

    x may be (d,) for one instance or (rows, d) for a batch; the output shape
    follows the input shape.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.input_size:
        raise ValueError(f"input has {x.shape[-1]} features, spec expects {spec.input_size}")
    layers = unpack_params(spec, params)
    acts = [x]
    a = x
    for i, (w, b) in enumerate(layers):
        a = _apply_activation(spec.activation_at(i), a @ w + b)
        acts.append(a)
    tape = Tape(spec=spec, params=params, activations=acts, single_input=single)
    return (a[0] if single else a), tape


def backward(
    spec: NetworkSpec,
    params: np.ndarray,
    tape: Tape,
    output_gradient: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse pass for a scalar loss.

    `output_gradient` is dLoss/dOutput with the output's shape. Returns
    (param_gradient, input_gradient): the flat gradient over all parameters
    (summed over batch rows) and the gradient w.r.t. the network input.
    """
    if tape.params is not params or tape.spec != spec:
        raise ValueError("stale tape: backward must receive the tape of the matching forward")
    gout = np.asarray(output_gradient, dtype=np.float64)
    if tape.single_input:
        gout = gout[None, :]
    acts = tape.activations
    if gout.shape != acts[-1].shape:
        raise ValueError(f"output_gradient shape {gout.shape} != output shape {acts[-1].shape}")

    layers = unpack_params(spec, params)
    grad = np.empty_like(params)
    grad_layers = unpack_params(spec, grad)

    delta = gout * _activation_deriv(spec.activation_at(spec.num_layers - 1), acts[-1])
    for i in range(spec.num_layers - 1, -1, -1):
        w, _ = layers[i]
        gw, gb = grad_layers[i]
        np.matmul(acts[i].T, delta, out=gw)
        np.sum(delta, axis=0, out=gb)
        delta = delta @ w.T
        if i > 0:
            delta *= _activation_deriv(spec.hidden_activation, acts[i])
    input_grad = delta[0] if tape.single_input else delta
    return grad, input_grad


def finite_diff_grad(loss_fn, params: np.ndarray, h: float, mode: str = "forward") -> np.ndarray:
    """Numerical gradient of a scalar loss over a flat parameter vector.

    mode "forward" is the one-sided difference (l(p + h e_i) - l(p)) / h used
    by black-box attacks; "central" is the higher-order two-sided stencil kept
    for test oracles.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    if mode not in ("forward", "central"):
        raise ValueError(f"unknown finite-difference mode {mode!r}")
    params = np.asarray(params, dtype=np.float64)
    grad = np.empty_like(params)
    probe = params.copy()
    if mode == "forward":
        base = float(loss_fn(params))
        for i in range(params.size):
            probe[i] = params[i] + h
            grad[i] = (float(loss_fn(probe)) - base) / h
            probe[i] = params[i]
    else:
        for i in range(params.size):
            probe[i] = params[i] + h
            up = float(loss_fn(probe))
            probe[i] = params[i] - h
            down = float(loss_fn(probe))
            grad[i] = (up - down) / (2.0 * h)
            probe[i] = params[i]
    return grad


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"l2_distance expects equal-length vectors, got {a.shape} and {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))
