"""Dual-tower binding predictor and its noise-contrastive objective.

Each side of a (ligand, pocket) pair is fingerprinted (learnable neural
fingerprint or a fixed hashed fingerprint) and passed through its own MLP;
the binding probability is ``sigm(w . v)`` of the two embeddings. Training
maximizes

    L = (1/N) sum log y(positive pairs)
        + lam * (1/M) sum log(1 - y(sampled random pairs))

whose second term Monte-Carlo approximates the expectation over random
pairs; :func:`nce_loss` returns L and exact gradients of -L for every
trainable parameter. Log terms go through log-sigmoid identities
(``log y = -softplus(-z)``), so the objective and its gradients stay finite
for |z| well beyond 700.

Batched evaluation fingerprints each distinct graph once and accumulates
per-graph upstream gradients in first-appearance order, which keeps results
bitwise reproducible while making shared pockets cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ecfp import EcfpConfig, ecfp
from .errors import EmptyBatch, ShapeMismatch
from .graphs import MolGraph
from .neuralfp import (
    GraphTensors,
    NeuralFpParams,
    _forward,
    _forward_values,
    glorot_uniform,
    init_neural_fp_params,
    neural_fingerprint_backward,
)

MLP_ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softplus(x):
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def _mlp_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _mlp_activation_deriv(name: str, activated: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(activated)
    if name == "relu":
        return (activated > 0.0).astype(np.float64)
    if name == "sigmoid":
        return activated * (1.0 - activated)
    if name == "tanh":
        return 1.0 - activated * activated
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class MlpLayer:
    W: np.ndarray
    b: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.activation not in MLP_ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeMismatch(
                f"inconsistent layer shapes W{self.W.shape} b{self.b.shape}"
            )


@dataclass
class MlpParams:
    """Dense layers ending in an identity-activation embedding layer."""

    layers: list[MlpLayer]

    def __post_init__(self):
        if not self.layers:
            raise ShapeMismatch("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.W.shape[1] != prev.W.shape[0]:
                raise ShapeMismatch(
                    f"layer width {nxt.W.shape[1]} != previous output {prev.W.shape[0]}"
                )
        if self.layers[-1].activation != "identity":
            raise ValueError("the final MLP layer must use the identity activation")
        for arr in self.arrays():
            if not np.all(np.isfinite(arr)):
                raise ValueError("MLP parameters contain non-finite entries")

    @property
    def in_width(self) -> int:
        return self.layers[0].W.shape[1]

    @property
    def out_width(self) -> int:
        return self.layers[-1].W.shape[0]

    def arrays(self):
        for layer in self.layers:
            yield layer.W
            yield layer.b

    def copy(self) -> "MlpParams":
        return MlpParams(
            [MlpLayer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers]
        )

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            [
                MlpLayer(np.zeros_like(l.W), np.zeros_like(l.b), l.activation)
                for l in self.layers
            ]
        )


def init_mlp_params(
    rng: np.random.Generator,
    in_width: int,
    hidden: tuple[int, ...],
    out_width: int,
    activation: str = "relu",
) -> MlpParams:
    layers = []
    width = in_width
    for size in hidden:
        layers.append(MlpLayer(glorot_uniform(rng, size, width), np.zeros(size), activation))
        width = size
    layers.append(MlpLayer(glorot_uniform(rng, out_width, width), np.zeros(out_width), "identity"))
    return MlpParams(layers)


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Row-wise forward pass; the tape holds each layer's input and output."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.in_width:
        raise ShapeMismatch(f"input shape {x.shape} != (*, {params.in_width})")
    tape = []
    out = x
    for layer in params.layers:
        z = out @ layer.W.T + layer.b
        activated = _mlp_activation(layer.activation, z)
        tape.append((out, activated))
        out = activated
    return out, tape


def mlp_backward(
    params: MlpParams, tape: list, upstream: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Exact gradients of ``sum(upstream * output)`` plus the input gradient."""
    grads = params.zeros_like()
    d = np.asarray(upstream, dtype=np.float64)
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        x_in, activated = tape[k]
        dz = d * _mlp_activation_deriv(layer.activation, activated)
        grads.layers[k].W += dz.T @ x_in
        grads.layers[k].b += dz.sum(axis=0)
        d = dz @ layer.W
    return grads, d


# ------------------------------------------------------------------ model


def fingerprint_output_size(fp) -> int:
    if isinstance(fp, NeuralFpParams):
        return fp.fingerprint_size
    if isinstance(fp, EcfpConfig):
        return fp.width
    raise TypeError(f"unsupported fingerprint parameters: {type(fp).__name__}")


@dataclass
class ModelParams:
    """Both towers: fingerprint parameters (or fixed-hash settings) and MLPs."""

    ligand_fp: NeuralFpParams | EcfpConfig
    pocket_fp: NeuralFpParams | EcfpConfig
    ligand_mlp: MlpParams
    pocket_mlp: MlpParams

    def __post_init__(self):
        methods = {
            "neural" if isinstance(fp, NeuralFpParams) else "ecfp"
            for fp in (self.ligand_fp, self.pocket_fp)
        }
        if len(methods) != 1:
            raise ShapeMismatch("both towers must use the same fingerprint method")
        if self.ligand_mlp.out_width != self.pocket_mlp.out_width:
            raise ShapeMismatch(
                f"embedding widths differ: {self.ligand_mlp.out_width} vs "
                f"{self.pocket_mlp.out_width}"
            )
        for fp, mlp, side in (
            (self.ligand_fp, self.ligand_mlp, "ligand"),
            (self.pocket_fp, self.pocket_mlp, "pocket"),
        ):
            if fingerprint_output_size(fp) != mlp.in_width:
                raise ShapeMismatch(
                    f"{side} fingerprint size {fingerprint_output_size(fp)} != "
                    f"MLP input width {mlp.in_width}"
                )

    @property
    def fingerprint_method(self) -> str:
        return "neural" if isinstance(self.ligand_fp, NeuralFpParams) else "ecfp"

    @property
    def shared_fingerprint(self) -> bool:
        return self.ligand_fp is self.pocket_fp

    def copy(self) -> "ModelParams":
        if self.fingerprint_method == "neural":
            ligand_fp = self.ligand_fp.copy()
            pocket_fp = ligand_fp if self.shared_fingerprint else self.pocket_fp.copy()
        else:
            ligand_fp, pocket_fp = self.ligand_fp, self.pocket_fp
        return ModelParams(
            ligand_fp=ligand_fp,
            pocket_fp=pocket_fp,
            ligand_mlp=self.ligand_mlp.copy(),
            pocket_mlp=self.pocket_mlp.copy(),
        )

    def trainable_arrays(self):
        """Trainable parameter arrays in a pinned order (shared towers once)."""
        if isinstance(self.ligand_fp, NeuralFpParams):
            yield from self.ligand_fp.arrays()
            if not self.shared_fingerprint:
                yield from self.pocket_fp.arrays()
        yield from self.ligand_mlp.arrays()
        yield from self.pocket_mlp.arrays()

    def zeros_like_grads(self) -> "ModelGrads":
        if isinstance(self.ligand_fp, NeuralFpParams):
            ligand_fp = self.ligand_fp.zeros_like()
            pocket_fp = ligand_fp if self.shared_fingerprint else self.pocket_fp.zeros_like()
        else:
            ligand_fp = pocket_fp = None
        return ModelGrads(
            ligand_fp=ligand_fp,
            pocket_fp=pocket_fp,
            ligand_mlp=self.ligand_mlp.zeros_like(),
            pocket_mlp=self.pocket_mlp.zeros_like(),
        )


@dataclass
class ModelGrads:
    """Gradient containers mirroring :class:`ModelParams` (None for fixed towers)."""

    ligand_fp: NeuralFpParams | None
    pocket_fp: NeuralFpParams | None
    ligand_mlp: MlpParams
    pocket_mlp: MlpParams

    def arrays(self):
        if self.ligand_fp is not None:
            yield from self.ligand_fp.arrays()
            if self.pocket_fp is not self.ligand_fp:
                yield from self.pocket_fp.arrays()
        yield from self.ligand_mlp.arrays()
        yield from self.pocket_mlp.arrays()


def init_model_params(
    seed: int = 0,
    fingerprint: str = "neural",
    feature_width: int = 22,
    conv_layers: tuple[int, ...] = (64, 64),
    fingerprint_size: int = 128,
    ecfp_radius: int = 2,
    ecfp_width: int = 4096,
    mlp_hidden: tuple[int, ...] = (128,),
    embedding_size: int = 32,
    activation: str = "relu",
    shared_fingerprint: bool = False,
) -> ModelParams:
    """Seeded model initialization with a pinned parameter draw order."""
    rng = np.random.default_rng(seed)
    if fingerprint == "neural":
        ligand_fp = init_neural_fp_params(
            rng,
            feature_width=feature_width,
            conv_layers=tuple(conv_layers),
            fingerprint_size=fingerprint_size,
            activation=activation,
        )
        pocket_fp = (
            ligand_fp
            if shared_fingerprint
            else init_neural_fp_params(
                rng,
                feature_width=feature_width,
                conv_layers=tuple(conv_layers),
                fingerprint_size=fingerprint_size,
                activation=activation,
            )
        )
        fp_size = fingerprint_size
    elif fingerprint == "ecfp":
        ligand_fp = pocket_fp = EcfpConfig(radius=ecfp_radius, width=ecfp_width)
        fp_size = ecfp_width
    else:
        raise ValueError(f"unknown fingerprint method {fingerprint!r}")
    ligand_mlp = init_mlp_params(rng, fp_size, tuple(mlp_hidden), embedding_size, activation)
    pocket_mlp = init_mlp_params(rng, fp_size, tuple(mlp_hidden), embedding_size, activation)
    return ModelParams(ligand_fp, pocket_fp, ligand_mlp, pocket_mlp)


# ------------------------------------------------------------ batch engine


class GraphCache:
    """Optional cache of per-graph tensors and hashed fingerprints.

    Keys are ``(kind, id)``; safe whenever ids are unique per kind, as they
    are for any loaded dataset.
    """

    def __init__(self):
        self._tensors: dict = {}
        self._ecfp: dict = {}

    def tensors(self, g: MolGraph) -> GraphTensors:
        key = (g.kind, g.id)
        found = self._tensors.get(key)
        if found is None:
            found = GraphTensors.from_graph(g)
            self._tensors[key] = found
        return found

    def ecfp_values(self, g: MolGraph, config: EcfpConfig) -> np.ndarray:
        key = (g.kind, g.id, config.radius, config.width)
        found = self._ecfp.get(key)
        if found is None:
            found = ecfp(g, config).values.astype(np.float64)
            self._ecfp[key] = found
        return found


class _TowerBatch:
    """One tower's distinct graphs, fingerprints, tapes, and MLP state."""

    def __init__(self, graphs, fp, mlp, cache: GraphCache | None, need_grads: bool):
        self.fp = fp
        self.mlp = mlp
        index_of: dict[int, int] = {}
        self.unique: list[MolGraph] = []
        self.rows = np.empty(len(graphs), dtype=np.intp)
        for i, g in enumerate(graphs):
            slot = index_of.get(id(g))
            if slot is None:
                slot = len(self.unique)
                index_of[id(g)] = slot
                self.unique.append(g)
            self.rows[i] = slot

        self.tapes = []
        values = []
        for g in self.unique:
            if isinstance(fp, NeuralFpParams):
                tensors = cache.tensors(g) if cache else GraphTensors.from_graph(g)
                if need_grads:
                    v, tape = _forward(tensors, fp)
                    self.tapes.append(tape)
                else:
                    v = _forward_values(tensors, fp)
                values.append(v)
            else:
                if cache:
                    values.append(cache.ecfp_values(g, fp))
                else:
                    values.append(ecfp(g, fp).values.astype(np.float64))
        self.fingerprints = np.vstack(values)
        self.embeddings, self.mlp_tape = mlp_forward(mlp, self.fingerprints)

    def pair_embeddings(self) -> np.ndarray:
        return self.embeddings[self.rows]

    def backward(self, dz: np.ndarray, other_pair_embeddings: np.ndarray, grad_mlp, grad_fp):
        """Accumulate gradients for this tower given per-pair dL/dz."""
        dembed = np.zeros_like(self.embeddings)
        np.add.at(dembed, self.rows, dz[:, np.newaxis] * other_pair_embeddings)
        mlp_grads, dfingerprints = mlp_backward(self.mlp, self.mlp_tape, dembed)
        for acc, piece in zip(grad_mlp.arrays(), mlp_grads.arrays()):
            acc += piece
        if isinstance(self.fp, NeuralFpParams):
            for i, tape in enumerate(self.tapes):
                fp_grads, _ = neural_fingerprint_backward(tape, dfingerprints[i])
                for acc, piece in zip(grad_fp.arrays(), fp_grads.arrays()):
                    acc += piece


def _pair_logits(pairs, model: ModelParams, cache: GraphCache | None, need_grads: bool):
    ligands = [pair[0] for pair in pairs]
    pockets = [pair[1] for pair in pairs]
    lig = _TowerBatch(ligands, model.ligand_fp, model.ligand_mlp, cache, need_grads)
    poc = _TowerBatch(pockets, model.pocket_fp, model.pocket_mlp, cache, need_grads)
    w = lig.pair_embeddings()
    v = poc.pair_embeddings()
    z = np.einsum("ij,ij->i", w, v)
    return z, lig, poc, w, v


@dataclass(frozen=True)
class Prediction:
    """Binding score for one pair: raw logit and its sigmoid probability."""

    logit: float
    probability: float


def predict(ligand: MolGraph, pocket: MolGraph, model: ModelParams) -> Prediction:
    """Score a single (ligand, pocket) pair."""
    z = float(_pair_logits([(ligand, pocket)], model, None, need_grads=False)[0][0])
    return Prediction(logit=z, probability=float(sigmoid(z)))


def predict_logits(pairs, model: ModelParams, cache: GraphCache | None = None) -> np.ndarray:
    """Raw logits for a batch of (ligand, pocket) pairs."""
    if len(pairs) == 0:
        return np.zeros(0)
    return _pair_logits(list(pairs), model, cache, need_grads=False)[0]


def predict_many(pairs, model: ModelParams, cache: GraphCache | None = None) -> np.ndarray:
    """Binding probabilities for a batch of (ligand, pocket) pairs."""
    return sigmoid(predict_logits(pairs, model, cache))


def nce_loss_value(
    positives,
    negatives,
    model: ModelParams,
    negative_weight: float = 1.0,
    cache: GraphCache | None = None,
) -> float:
    """Objective value only (forward pass, no gradient bookkeeping)."""
    positives = list(positives)
    negatives = list(negatives)
    if not positives:
        raise EmptyBatch("no positive pairs in batch")
    if not negatives:
        raise EmptyBatch("no negative pairs in batch")
    z = _pair_logits(positives + negatives, model, cache, need_grads=False)[0]
    z_pos, z_neg = z[: len(positives)], z[len(positives) :]
    return float(-softplus(-z_pos).mean() - negative_weight * softplus(z_neg).mean())


def nce_loss(
    positives,
    negatives,
    model: ModelParams,
    negative_weight: float = 1.0,
    cache: GraphCache | None = None,
) -> tuple[float, ModelGrads]:
    """Value of the contrastive objective L and exact gradients of -L.

    ``positives`` and ``negatives`` are sequences of (ligand, pocket) graph
    pairs; the negatives are whatever random pairs the caller sampled.
    """
    positives = list(positives)
    negatives = list(negatives)
    if not positives:
        raise EmptyBatch("no positive pairs in batch")
    if not negatives:
        raise EmptyBatch("no negative pairs in batch")
    n_pos, n_neg = len(positives), len(negatives)

    z, lig, poc, w, v = _pair_logits(positives + negatives, model, cache, need_grads=True)
    z_pos, z_neg = z[:n_pos], z[n_pos:]

    loss = float(
        -softplus(-z_pos).mean() - negative_weight * softplus(z_neg).mean()
    )

    # d(-L)/dz: positives pull toward +inf, sampled negatives push toward -inf.
    dz = np.concatenate(
        [
            -sigmoid(-z_pos) / n_pos,
            negative_weight * sigmoid(z_neg) / n_neg,
        ]
    )
    grads = model.zeros_like_grads()
    lig.backward(dz, v, grads.ligand_mlp, grads.ligand_fp)
    poc.backward(dz, w, grads.pocket_mlp, grads.pocket_fp)
    return loss, grads
