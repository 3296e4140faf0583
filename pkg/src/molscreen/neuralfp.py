"""Learnable neural fingerprints of molecular graphs.

The forward pass stacks K *atom convolution* layers

    row_m = act(W @ a_m + sum_{i in N(m)} H[deg(m)] @ a_i + b)

where one neighbor matrix per degree class (1..5) is selected by the degree
of the center atom and multiplies every one of its neighbors; degree-0 atoms
get ``act(W @ a_m + b)``. The per-atom rows of the final layer are pooled by

    n = sum_m softmax(V @ a_m + c)

into a fixed-size vector whose entries lie in [0, M] and sum to the atom
count M. Because layers update all atoms simultaneously from the previous
layer and pooling is a plain sum, the fingerprint is invariant to atom
relabeling up to floating-point reassociation.

Gradients are computed by hand-written reverse mode over a tape of
intermediate values; accumulation order is fixed (atoms ascending, layers
descending) so results are bitwise reproducible. All arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ShapeMismatch, TapeMismatch
from .graphs import FEATURE_WIDTH, MAX_DEGREE, MolGraph, adjacency_matrix, encode_features
from .validation import ensure_molgraphs

ACTIVATIONS = ("relu", "sigmoid", "tanh")


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        e = np.exp(-np.abs(z))
        return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _activation_deriv(name: str, activated: np.ndarray) -> np.ndarray:
    # Derivatives are recoverable from the activation value itself.
    if name == "relu":
        return (activated > 0.0).astype(np.float64)
    if name == "sigmoid":
        return activated * (1.0 - activated)
    if name == "tanh":
        return 1.0 - activated * activated
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class ConvLayerParams:
    """Weights of one atom-convolution layer: W, five neighbor matrices, bias."""

    W: np.ndarray
    H: tuple[np.ndarray, ...]
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.H = tuple(np.asarray(h, dtype=np.float64) for h in self.H)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2:
            raise ShapeMismatch(f"W must be 2-d, got shape {self.W.shape}")
        if len(self.H) != MAX_DEGREE:
            raise ShapeMismatch(f"expected {MAX_DEGREE} neighbor matrices, got {len(self.H)}")
        for h in self.H:
            if h.shape != self.W.shape:
                raise ShapeMismatch(f"neighbor matrix shape {h.shape} != W shape {self.W.shape}")
        if self.b.shape != (self.W.shape[0],):
            raise ShapeMismatch(f"bias shape {self.b.shape} != ({self.W.shape[0]},)")

    @property
    def out_width(self) -> int:
        return self.W.shape[0]

    @property
    def in_width(self) -> int:
        return self.W.shape[1]

    def arrays(self):
        yield self.W
        yield from self.H
        yield self.b


@dataclass
class NeuralFpParams:
    """All weights of one fingerprint tower: K conv layers plus the pooling map."""

    layers: list[ConvLayerParams]
    V: np.ndarray
    c: np.ndarray
    activation: str = "relu"
    pool_per_layer: bool = False

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        if not self.layers:
            raise ShapeMismatch("at least one convolution layer is required")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.in_width != prev.out_width:
                raise ShapeMismatch(
                    f"layer input width {nxt.in_width} != previous output {prev.out_width}"
                )
        if self.V.ndim != 2 or self.V.shape[1] != self.layers[-1].out_width:
            raise ShapeMismatch(
                f"pooling matrix shape {self.V.shape} incompatible with layer "
                f"width {self.layers[-1].out_width}"
            )
        if self.c.shape != (self.V.shape[0],):
            raise ShapeMismatch(f"pooling bias shape {self.c.shape} != ({self.V.shape[0]},)")
        if self.pool_per_layer:
            widths = {layer.out_width for layer in self.layers}
            if len(widths) != 1:
                raise ShapeMismatch("per-layer pooling requires equal layer widths")
        for arr in self.arrays():
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters contain non-finite entries")

    @property
    def feature_width(self) -> int:
        return self.layers[0].in_width

    @property
    def fingerprint_size(self) -> int:
        return self.V.shape[0]

    def arrays(self):
        for layer in self.layers:
            yield from layer.arrays()
        yield self.V
        yield self.c

    def copy(self) -> "NeuralFpParams":
        return NeuralFpParams(
            layers=[
                ConvLayerParams(l.W.copy(), tuple(h.copy() for h in l.H), l.b.copy())
                for l in self.layers
            ],
            V=self.V.copy(),
            c=self.c.copy(),
            activation=self.activation,
            pool_per_layer=self.pool_per_layer,
        )

    def zeros_like(self) -> "NeuralFpParams":
        return NeuralFpParams(
            layers=[
                ConvLayerParams(
                    np.zeros_like(l.W),
                    tuple(np.zeros_like(h) for h in l.H),
                    np.zeros_like(l.b),
                )
                for l in self.layers
            ],
            V=np.zeros_like(self.V),
            c=np.zeros_like(self.c),
            activation=self.activation,
            pool_per_layer=self.pool_per_layer,
        )


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_neural_fp_params(
    rng: np.random.Generator,
    feature_width: int = FEATURE_WIDTH,
    conv_layers: tuple[int, ...] = (64, 64),
    fingerprint_size: int = 128,
    activation: str = "relu",
    pool_per_layer: bool = False,
) -> NeuralFpParams:
    """Seeded initialization: uniform variance-preserving weights, zero biases.

    Draw order is pinned (per layer: W then the five neighbor matrices, then
    the pooling matrix) so a given generator state always yields the same
    parameters.
    """
    layers = []
    in_width = feature_width
    for out_width in conv_layers:
        W = glorot_uniform(rng, out_width, in_width)
        H = tuple(glorot_uniform(rng, out_width, in_width) for _ in range(MAX_DEGREE))
        layers.append(ConvLayerParams(W, H, np.zeros(out_width)))
        in_width = out_width
    V = glorot_uniform(rng, fingerprint_size, in_width)
    return NeuralFpParams(
        layers=layers,
        V=V,
        c=np.zeros(fingerprint_size),
        activation=activation,
        pool_per_layer=pool_per_layer,
    )


@dataclass(frozen=True)
class NeuralFingerprint:
    """Pooled fingerprint vector together with the pooled atom count."""

    values: np.ndarray
    atom_count: int


@dataclass
class GraphTensors:
    """Precomputed per-graph arrays reused across forward passes."""

    features: np.ndarray
    adjacency: np.ndarray
    degree_groups: tuple[np.ndarray, ...]
    atom_count: int

    @classmethod
    def from_graph(cls, g: MolGraph) -> "GraphTensors":
        degrees = g.degrees()
        groups = tuple(
            np.flatnonzero(degrees == d) for d in range(1, MAX_DEGREE + 1)
        )
        return cls(
            features=encode_features(g),
            adjacency=adjacency_matrix(g),
            degree_groups=groups,
            atom_count=g.n_atoms,
        )


@dataclass
class _LayerTrace:
    x_in: np.ndarray
    neighbor_sum: np.ndarray
    preact: np.ndarray
    activated: np.ndarray


@dataclass
class FpTape:
    """Intermediate values of one forward pass, consumed by the backward pass."""

    params: NeuralFpParams
    tensors: GraphTensors
    layer_traces: list[_LayerTrace]
    softmax_rows: list[np.ndarray] = field(default_factory=list)


def _layer_forward(
    x: np.ndarray, tensors: GraphTensors, layer: ConvLayerParams, activation: str
) -> _LayerTrace:
    if x.shape[1] != layer.in_width:
        raise ShapeMismatch(
            f"feature width {x.shape[1]} != layer input width {layer.in_width}"
        )
    neighbor_sum = tensors.adjacency @ x
    preact = x @ layer.W.T + layer.b
    for d, idx in enumerate(tensors.degree_groups, start=1):
        if idx.size:
            preact[idx] += neighbor_sum[idx] @ layer.H[d - 1].T
    activated = _apply_activation(activation, preact)
    return _LayerTrace(x, neighbor_sum, preact, activated)


def atom_convolution_layer(
    features: np.ndarray, g: MolGraph, layer: ConvLayerParams, activation: str = "relu"
) -> np.ndarray:
    """One atom-convolution layer applied to explicit per-atom features."""
    features = np.asarray(features, dtype=np.float64)
    tensors = GraphTensors.from_graph(g)
    return _layer_forward(features, tensors, layer, activation).activated


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def _forward(tensors: GraphTensors, params: NeuralFpParams) -> tuple[np.ndarray, FpTape]:
    if tensors.features.shape[1] != params.feature_width:
        raise ShapeMismatch(
            f"graph feature width {tensors.features.shape[1]} != "
            f"parameter width {params.feature_width}"
        )
    tape = FpTape(params=params, tensors=tensors, layer_traces=[])
    x = tensors.features
    values = np.zeros(params.fingerprint_size)
    for layer in params.layers:
        trace = _layer_forward(x, tensors, layer, params.activation)
        tape.layer_traces.append(trace)
        x = trace.activated
        if params.pool_per_layer:
            rows = _softmax_rows(x @ params.V.T + params.c)
            tape.softmax_rows.append(rows)
            values += rows.sum(axis=0)
    if not params.pool_per_layer:
        rows = _softmax_rows(x @ params.V.T + params.c)
        tape.softmax_rows.append(rows)
        values = rows.sum(axis=0)
    return values, tape


def neural_fingerprint(
    g: MolGraph, params: NeuralFpParams
) -> tuple[NeuralFingerprint, FpTape]:
    """Fingerprint one graph; the returned tape feeds the backward pass."""
    values, tape = _forward(GraphTensors.from_graph(g), params)
    return NeuralFingerprint(values, g.n_atoms), tape


def _forward_values(tensors: GraphTensors, params: NeuralFpParams) -> np.ndarray:
    """Forward pass without tape bookkeeping (inference hot path)."""
    if tensors.features.shape[1] != params.feature_width:
        raise ShapeMismatch(
            f"graph feature width {tensors.features.shape[1]} != "
            f"parameter width {params.feature_width}"
        )
    x = tensors.features
    values = np.zeros(params.fingerprint_size)
    for layer in params.layers:
        neighbor_sum = tensors.adjacency @ x
        preact = x @ layer.W.T + layer.b
        for d, idx in enumerate(tensors.degree_groups, start=1):
            if idx.size:
                preact[idx] += neighbor_sum[idx] @ layer.H[d - 1].T
        x = _apply_activation(params.activation, preact)
        if params.pool_per_layer:
            values += _softmax_rows(x @ params.V.T + params.c).sum(axis=0)
    if not params.pool_per_layer:
        values = _softmax_rows(x @ params.V.T + params.c).sum(axis=0)
    return values


def _pool_backward(
    params: NeuralFpParams, rows: np.ndarray, activated: np.ndarray, upstream: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient of ``upstream . sum_m softmax(V a_m + c)`` for one pooled layer."""
    inner = rows @ upstream
    dlogits = rows * (upstream[np.newaxis, :] - inner[:, np.newaxis])
    dV = dlogits.T @ activated
    dc = dlogits.sum(axis=0)
    dact = dlogits @ params.V
    return dV, dc, dact


def neural_fingerprint_backward(
    tape: FpTape, upstream: np.ndarray
) -> tuple[NeuralFpParams, np.ndarray]:
    """Exact gradients of ``upstream @ fingerprint`` for every parameter.

    Returns a parameter-shaped gradient container and the gradient with
    respect to the input feature matrix.
    """
    params = tape.params
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (params.fingerprint_size,):
        raise TapeMismatch(
            f"upstream shape {upstream.shape} != ({params.fingerprint_size},)"
        )
    if len(tape.layer_traces) != len(params.layers):
        raise TapeMismatch("tape does not match the parameter layer count")

    grads = params.zeros_like()
    tensors = tape.tensors

    # Gradient flowing into each layer's activated output.
    dact_next = np.zeros_like(tape.layer_traces[-1].activated)
    if not params.pool_per_layer:
        dV, dc, dact = _pool_backward(
            params, tape.softmax_rows[-1], tape.layer_traces[-1].activated, upstream
        )
        grads.V += dV
        grads.c += dc
        dact_next = dact

    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        trace = tape.layer_traces[k]
        dact = dact_next
        if params.pool_per_layer:
            dV, dc, dpool = _pool_backward(
                params, tape.softmax_rows[k], trace.activated, upstream
            )
            grads.V += dV
            grads.c += dc
            dact = dact + dpool
        dz = dact * _activation_deriv(params.activation, trace.activated)
        glayer = grads.layers[k]
        glayer.W += dz.T @ trace.x_in
        glayer.b += dz.sum(axis=0)
        dneighbor = np.zeros_like(trace.neighbor_sum)
        for d, idx in enumerate(tensors.degree_groups, start=1):
            if idx.size:
                grad_h = glayer.H[d - 1]
                grad_h += dz[idx].T @ trace.neighbor_sum[idx]
                dneighbor[idx] = dz[idx] @ layer.H[d - 1]
        dact_next = dz @ layer.W + tensors.adjacency @ dneighbor

    return grads, dact_next


class NeuralFingerprinter(TransformerMixin, BaseEstimator):
    """Transformer from molecular graphs to learnable fingerprints.

    ``fit`` draws a fresh seeded parameter set; ``transform`` runs the
    forward pass only. Trained parameter sets can be attached directly via
    ``params_``.

    Parameters
    ----------
    conv_layers : tuple of int, default=(64, 64)
        Output width of each atom-convolution layer.
    fingerprint_size : int, default=128
        Length of the pooled fingerprint.
    activation : {"relu", "sigmoid", "tanh"}, default="relu"
    pool_per_layer : bool, default=False
        Also pool the intermediate layers (summed contributions).
    random_state : int, default=0
    """

    def __init__(
        self,
        conv_layers: tuple[int, ...] = (64, 64),
        fingerprint_size: int = 128,
        activation: str = "relu",
        pool_per_layer: bool = False,
        random_state: int = 0,
    ):
        self.conv_layers = conv_layers
        self.fingerprint_size = fingerprint_size
        self.activation = activation
        self.pool_per_layer = pool_per_layer
        self.random_state = random_state

    def fit(self, X, y=None):
        ensure_molgraphs(X)
        rng = np.random.default_rng(self.random_state)
        self.params_ = init_neural_fp_params(
            rng,
            feature_width=FEATURE_WIDTH,
            conv_layers=tuple(self.conv_layers),
            fingerprint_size=self.fingerprint_size,
            activation=self.activation,
            pool_per_layer=self.pool_per_layer,
        )
        return self

    def transform(self, X) -> np.ndarray:
        graphs = ensure_molgraphs(X)
        out = np.zeros((len(graphs), self.params_.fingerprint_size))
        for i, g in enumerate(graphs):
            out[i] = _forward(GraphTensors.from_graph(g), self.params_)[0]
        return out
