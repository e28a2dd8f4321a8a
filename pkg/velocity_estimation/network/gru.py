"""
Stacked GRU with a leaky-ReLU, output dropout and a dense head.

Gate convention (stored in checkpoints as ``GATE_CONVENTION``):

    z  = sigmoid(W_z [x; h_prev] + b_z)
    r  = sigmoid(W_r [x; h_prev] + b_r)
    h~ = tanh(W_h [x; r*h_prev] + b_h)
    h  = z*h_prev + (1 - z)*h~

Everything is batched over a leading axis: inputs are (B, T, I) and the
single-sequence helpers wrap them as B = 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from velocity_estimation.data.frames import N_INPUTS, N_OUTPUTS
from velocity_estimation.network.activations import (
    DEFAULT_SLOPE,
    leaky_relu,
    leaky_relu_grad,
    sigmoid,
)

GATE_CONVENTION = "h=z*h_prev+(1-z)*h_tilde"
DEFAULT_DROPOUT = 0.075

PRESETS: Dict[str, Tuple[int, ...]] = {
    "rnn1": (64,),
    "rnn2": (32, 32),
}

SeedLike = Union[None, int, np.random.Generator]


def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class GruLayerParams:
    """Gate weights (hidden × (input + hidden)) and biases of one GRU layer."""

    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    PARAM_NAMES = ("W_z", "W_r", "W_h", "b_z", "b_r", "b_h")

    def __post_init__(self) -> None:
        hidden, width = self.W_z.shape
        for name in self.PARAM_NAMES:
            value = getattr(self, name)
            expected = (hidden, width) if name.startswith("W") else (hidden,)
            if value.shape != expected:
                raise ValueError(f"{name} has shape {value.shape}, expected {expected}")
        if width <= hidden:
            raise ValueError(f"Gate width {width} leaves no room for inputs (hidden {hidden})")

    @property
    def hidden_dim(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[1] - self.hidden_dim

    @classmethod
    def initialize(cls, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> "GruLayerParams":
        width = input_dim + hidden_dim
        return cls(
            W_z=xavier_uniform(rng, hidden_dim, width),
            W_r=xavier_uniform(rng, hidden_dim, width),
            W_h=xavier_uniform(rng, hidden_dim, width),
            b_z=np.zeros(hidden_dim),
            b_r=np.zeros(hidden_dim),
            b_h=np.zeros(hidden_dim),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruLayerParams":
        width = input_dim + hidden_dim
        return cls(*(np.zeros((hidden_dim, width)) for _ in range(3)),
                   *(np.zeros(hidden_dim) for _ in range(3)))


@dataclass
class GruNetwork:
    """GRU layers (layer k feeds k+1) followed by leaky-ReLU, dropout and a linear head."""

    layers: List[GruLayerParams]
    W_out: np.ndarray
    b_out: np.ndarray
    dropout: float = DEFAULT_DROPOUT
    slope: float = DEFAULT_SLOPE
    preset: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("A GRU network needs at least one layer")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        for below, above in zip(self.layers, self.layers[1:]):
            if above.input_dim != below.hidden_dim:
                raise ValueError(
                    f"Layer input {above.input_dim} does not match hidden size {below.hidden_dim} below it"
                )
        if self.W_out.shape != (self.b_out.shape[0], self.layers[-1].hidden_dim):
            raise ValueError(f"Dense head shape {self.W_out.shape} does not match the top layer")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.b_out.shape[0]

    @property
    def hidden_dims(self) -> Tuple[int, ...]:
        return tuple(layer.hidden_dim for layer in self.layers)

    @classmethod
    def create(
        cls,
        hidden_dims: Union[str, Sequence[int]] = "rnn1",
        input_dim: int = N_INPUTS,
        output_dim: int = N_OUTPUTS,
        dropout: float = DEFAULT_DROPOUT,
        slope: float = DEFAULT_SLOPE,
        seed: int = 0,
    ) -> "GruNetwork":
        """
        Build a Xavier-initialized network.

        Args:
            hidden_dims: Preset name (``rnn1``, ``rnn2``) or explicit layer sizes
            seed: Initialization seed
        """
        preset = None
        if isinstance(hidden_dims, str):
            if hidden_dims not in PRESETS:
                raise ValueError(f"Unknown preset {hidden_dims!r}, expected one of {sorted(PRESETS)}")
            preset, hidden_dims = hidden_dims, PRESETS[hidden_dims]
        rng = np.random.default_rng(seed)
        layers = []
        width = input_dim
        for hidden in hidden_dims:
            layers.append(GruLayerParams.initialize(width, int(hidden), rng))
            width = int(hidden)
        return cls(
            layers=layers,
            W_out=xavier_uniform(rng, output_dim, width),
            b_out=np.zeros(output_dim),
            dropout=dropout,
            slope=slope,
            preset=preset,
        )

    def parameters(self) -> Dict[str, np.ndarray]:
        """Parameter arrays (not copies) in checkpoint order."""
        params: Dict[str, np.ndarray] = {}
        for k, layer in enumerate(self.layers):
            for name in GruLayerParams.PARAM_NAMES:
                params[f"layer{k}.{name}"] = getattr(layer, name)
        params["dense.W"] = self.W_out
        params["dense.b"] = self.b_out
        return params

    def copy_parameters(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.parameters().items()}

    def load_parameters(self, values: Dict[str, np.ndarray]) -> None:
        """Overwrite parameters in place."""
        for name, target in self.parameters().items():
            if name not in values:
                raise KeyError(f"Missing parameter {name}")
            if values[name].shape != target.shape:
                raise ValueError(f"{name} has shape {values[name].shape}, expected {target.shape}")
            target[...] = values[name]

    def n_parameters(self) -> int:
        return sum(value.size for value in self.parameters().values())

    def with_dropout(self, dropout: float) -> "GruNetwork":
        """Copy sharing no arrays with this network."""
        clone = GruNetwork(
            layers=[GruLayerParams(*(getattr(layer, n).copy() for n in GruLayerParams.PARAM_NAMES))
                    for layer in self.layers],
            W_out=self.W_out.copy(),
            b_out=self.b_out.copy(),
            dropout=dropout,
            slope=self.slope,
            preset=self.preset,
        )
        return clone


def gru_cell_step(params: GruLayerParams, x: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """One GRU update; ``x`` and ``h_prev`` may carry a leading batch axis."""
    return _cell_forward(params, np.asarray(x, dtype=float), np.asarray(h_prev, dtype=float))[0]


def _cell_forward(params: GruLayerParams, x: np.ndarray, h_prev: np.ndarray):
    xh = np.concatenate([x, h_prev], axis=-1)
    z = sigmoid(xh @ params.W_z.T + params.b_z)
    r = sigmoid(xh @ params.W_r.T + params.b_r)
    xrh = np.concatenate([x, r * h_prev], axis=-1)
    h_tilde = np.tanh(xrh @ params.W_h.T + params.b_h)
    h = z * h_prev + (1.0 - z) * h_tilde
    return h, (xh, xrh, z, r, h_tilde, h_prev)


@dataclass
class ForwardCache:
    """Intermediate values kept for the backward pass."""

    steps: List[List[tuple]] = field(default_factory=list)  # [layer][t]
    top: Optional[np.ndarray] = None  # (B, T, H) top hidden states
    mask: Optional[np.ndarray] = None  # (B, T, H) dropout multipliers
    dropped: Optional[np.ndarray] = None  # (B, T, H) head inputs


def dropout_mask(shape: Tuple[int, ...], p: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted dropout multipliers: 0 with probability p, else 1/(1-p)."""
    if p == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def forward_batch(
    net: GruNetwork,
    inputs: np.ndarray,
    h0: Optional[Sequence[np.ndarray]] = None,
    train_mode: bool = False,
    dropout_seed: SeedLike = None,
    keep_cache: bool = False,
) -> Tuple[np.ndarray, List[np.ndarray], Optional[ForwardCache]]:
    """
    Batched forward pass.

    Args:
        inputs: (B, T, input_dim) normalized inputs
        h0: Per-layer initial hidden states (B, H); zeros if omitted
        train_mode: Apply dropout (the only train/eval difference)
        dropout_seed: Seed or generator for the dropout masks

    Returns:
        (outputs (B, T, output_dim), final hidden states per layer, cache or None)
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 3 or inputs.shape[2] != net.input_dim:
        raise ValueError(f"Expected inputs of shape (B, T, {net.input_dim}), got {inputs.shape}")
    batch, steps, _ = inputs.shape
    if h0 is None:
        h0 = [np.zeros((batch, layer.hidden_dim)) for layer in net.layers]

    cache = ForwardCache() if keep_cache else None
    sequence = inputs
    final_states: List[np.ndarray] = []
    for layer, h in zip(net.layers, h0):
        h = np.asarray(h, dtype=float)
        outputs = np.empty((batch, steps, layer.hidden_dim))
        layer_cache = []
        for t in range(steps):
            h, step_cache = _cell_forward(layer, sequence[:, t, :], h)
            outputs[:, t, :] = h
            if keep_cache:
                layer_cache.append(step_cache)
        if keep_cache:
            cache.steps.append(layer_cache)
        final_states.append(h)
        sequence = outputs

    activated = leaky_relu(sequence, net.slope)
    if train_mode and net.dropout > 0.0:
        mask = dropout_mask(activated.shape, net.dropout, _as_rng(dropout_seed))
    else:
        mask = np.ones_like(activated)
    dropped = activated * mask
    outputs = dropped @ net.W_out.T + net.b_out
    if keep_cache:
        cache.top, cache.mask, cache.dropped = sequence, mask, dropped
    return outputs, final_states, cache


def forward_sequence(
    net: GruNetwork,
    inputs: np.ndarray,
    h0: Optional[Sequence[np.ndarray]] = None,
    train_mode: bool = False,
    dropout_seed: SeedLike = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Forward one (T, input_dim) sequence; returns (T, output_dim) outputs and hT."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2:
        raise ValueError(f"Expected a (T, {net.input_dim}) sequence, got {inputs.shape}")
    batched_h0 = None if h0 is None else [np.asarray(h, dtype=float)[None, :] for h in h0]
    outputs, final_states, _ = forward_batch(net, inputs[None], batched_h0, train_mode, dropout_seed)
    return outputs[0], [h[0] for h in final_states]


def backward_batch(
    net: GruNetwork,
    cache: ForwardCache,
    grad_outputs: np.ndarray,
) -> Dict[str, np.ndarray]:
    """
    Reverse-mode gradients through the unrolled network.

    Args:
        cache: Cache from ``forward_batch(..., keep_cache=True)``
        grad_outputs: dLoss/dOutputs, shape (B, T, output_dim)

    Returns:
        Gradients keyed like ``net.parameters()``
    """
    grads = {name: np.zeros_like(value) for name, value in net.parameters().items()}
    batch, steps, _ = grad_outputs.shape

    flat_dropped = cache.dropped.reshape(batch * steps, -1)
    flat_grad = grad_outputs.reshape(batch * steps, -1)
    grads["dense.W"] = flat_grad.T @ flat_dropped
    grads["dense.b"] = flat_grad.sum(axis=0)

    d_above = (grad_outputs @ net.W_out) * cache.mask * leaky_relu_grad(cache.top, net.slope)

    for k in reversed(range(len(net.layers))):
        layer = net.layers[k]
        n_in = layer.input_dim
        dW_z, dW_r, dW_h = (grads[f"layer{k}.{n}"] for n in ("W_z", "W_r", "W_h"))
        db_z, db_r, db_h = (grads[f"layer{k}.{n}"] for n in ("b_z", "b_r", "b_h"))
        d_inputs = np.zeros((batch, steps, n_in))
        dh_next = np.zeros((batch, layer.hidden_dim))
        for t in reversed(range(steps)):
            xh, xrh, z, r, h_tilde, h_prev = cache.steps[k][t]
            dh = d_above[:, t, :] + dh_next

            dz = dh * (h_prev - h_tilde)
            dh_prev = dh * z
            da_h = dh * (1.0 - z) * (1.0 - h_tilde ** 2)
            dW_h += da_h.T @ xrh
            db_h += da_h.sum(axis=0)
            dxrh = da_h @ layer.W_h
            drh = dxrh[:, n_in:]
            dh_prev += drh * r
            dr = drh * h_prev

            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            dW_z += da_z.T @ xh
            db_z += da_z.sum(axis=0)
            dW_r += da_r.T @ xh
            db_r += da_r.sum(axis=0)
            dxh = da_z @ layer.W_z + da_r @ layer.W_r

            d_inputs[:, t, :] = dxrh[:, :n_in] + dxh[:, :n_in]
            dh_next = dh_prev + dxh[:, n_in:]
        d_above = d_inputs
    return grads
