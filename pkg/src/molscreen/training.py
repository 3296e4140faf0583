"""Seeded minibatch training of the dual-tower model.

Each epoch shuffles the positive pairs, and every minibatch draws fresh
random (ligand, pocket) pairs from the dataset as presumed negatives.
Random-pair sampling can optionally exclude pairs listed as positives,
which matters on small synthetic sets where collisions are not negligible.

Every random draw comes from a single generator seeded by the config, and
gradient reductions follow a fixed order, so a run is bitwise reproducible:
training twice with the same seed writes byte-identical parameter files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ExhaustedNegativeSpace, NonFiniteLoss
from .io import PairSample, ScreeningDataset
from .predictor import (
    GraphCache,
    ModelParams,
    init_model_params,
    nce_loss,
    predict_many,
    sigmoid,
)
from .validation import ensure_pairs

OPTIMIZERS = ("sgd", "adam")


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    negative_ratio: float = 1.0
    negative_weight: float = 1.0
    exclude_known_positives: bool = False
    holdout_fraction: float = 0.1
    early_stop_patience: int | None = None

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.negative_ratio <= 0 or self.negative_weight <= 0:
            raise ValueError("negative_ratio and negative_weight must be positive")
        if not (0.0 <= self.holdout_fraction < 1.0):
            raise ValueError("holdout_fraction must lie in [0, 1)")
        if self.early_stop_patience is not None and self.early_stop_patience <= 0:
            raise ValueError("early_stop_patience must be positive when set")


class _Optimizer:
    """SGD or bias-corrected Adam over a fixed list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], config: TrainConfig):
        self.params = params
        self.config = config
        self.t = 0
        if config.optimizer == "adam":
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        cfg = self.config
        self.t += 1
        if cfg.optimizer == "sgd":
            for p, g in zip(self.params, grads):
                p -= cfg.learning_rate * g
            return
        bias1 = 1.0 - cfg.beta1**self.t
        bias2 = 1.0 - cfg.beta2**self.t
        for i, (p, g) in enumerate(zip(self.params, grads)):
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g
            p -= cfg.learning_rate * (self.m[i] / bias1) / (
                np.sqrt(self.v[i] / bias2) + cfg.eps
            )


def sample_negatives(
    dataset: ScreeningDataset,
    count: int,
    rng: np.random.Generator,
    exclude_known_positives: bool = False,
) -> list[tuple[str, str]]:
    """Uniform independent draws of (ligand id, pocket id) pairs.

    With exclusion enabled, draws colliding with listed positives are
    rejected and redrawn; if every possible pair is a positive, raises
    :class:`ExhaustedNegativeSpace`.
    """
    ligand_ids = dataset.compound_ids
    pocket_ids = dataset.pocket_ids
    lig_draws = rng.integers(0, len(ligand_ids), size=count)
    poc_draws = rng.integers(0, len(pocket_ids), size=count)
    pairs = [(ligand_ids[i], pocket_ids[j]) for i, j in zip(lig_draws, poc_draws)]
    if not exclude_known_positives:
        return pairs
    known = dataset.positive_pair_set()
    if len(ligand_ids) * len(pocket_ids) <= len(known):
        raise ExhaustedNegativeSpace(
            "every (ligand, pocket) combination is a listed positive"
        )
    for k in range(count):
        while pairs[k] in known:
            pairs[k] = (
                ligand_ids[rng.integers(0, len(ligand_ids))],
                pocket_ids[rng.integers(0, len(pocket_ids))],
            )
    return pairs


@dataclass
class EpochRecord:
    epoch: int
    objective: float
    heldout_objective: float
    wall_ms: float


@dataclass
class TrainResult:
    model: ModelParams
    history: list[EpochRecord] = field(default_factory=list)
    stopped_early: bool = False


def _negative_count(n_positives: int, ratio: float) -> int:
    return max(1, int(round(ratio * n_positives)))


def train(dataset: ScreeningDataset, model: ModelParams, config: TrainConfig) -> TrainResult:
    """Minimize the negated contrastive objective by seeded minibatch steps.

    The input parameters are copied, never mutated. A fraction of the
    positives is held out; the per-epoch log records the minimized
    objective (-L) on the training batches and on the held-out split
    (scored against a fixed negative sample drawn up front).
    """
    if not dataset.positives:
        raise ValueError("dataset has no positive pairs to train on")
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    cache = GraphCache()

    positives = list(dataset.positives)
    n_hold = int(round(config.holdout_fraction * len(positives)))
    n_hold = min(n_hold, len(positives) - 1)
    order = rng.permutation(len(positives))
    holdout = [positives[i] for i in order[:n_hold]]
    training = [positives[i] for i in order[n_hold:]]

    heldout_pairs = None
    if holdout:
        neg_ids = sample_negatives(
            dataset,
            _negative_count(len(holdout), config.negative_ratio),
            rng,
            config.exclude_known_positives,
        )
        heldout_pairs = (
            dataset.pair_graphs(holdout),
            [(dataset.compound(a), dataset.pocket(b)) for a, b in neg_ids],
        )

    optimizer = _Optimizer(list(model.trainable_arrays()), config)
    history: list[EpochRecord] = []
    best = np.inf
    stale = 0
    stopped_early = False
    step = 0

    for epoch in range(config.epochs):
        started = time.perf_counter()
        perm = rng.permutation(len(training))
        batch_losses = []
        for lo in range(0, len(training), config.batch_size):
            batch = [training[i] for i in perm[lo : lo + config.batch_size]]
            neg_ids = sample_negatives(
                dataset,
                _negative_count(len(batch), config.negative_ratio),
                rng,
                config.exclude_known_positives,
            )
            loss, grads = nce_loss(
                dataset.pair_graphs(batch),
                [(dataset.compound(a), dataset.pocket(b)) for a, b in neg_ids],
                model,
                negative_weight=config.negative_weight,
                cache=cache,
            )
            objective = -loss
            if not np.isfinite(objective):
                raise NonFiniteLoss(step, objective)
            optimizer.step(list(grads.arrays()))
            batch_losses.append(objective)
            step += 1

        if heldout_pairs is not None:
            held_loss, _ = nce_loss(
                heldout_pairs[0],
                heldout_pairs[1],
                model,
                negative_weight=config.negative_weight,
                cache=cache,
            )
            heldout_objective = -held_loss
        else:
            heldout_objective = float("nan")

        record = EpochRecord(
            epoch=epoch,
            objective=float(np.mean(batch_losses)),
            heldout_objective=float(heldout_objective),
            wall_ms=(time.perf_counter() - started) * 1000.0,
        )
        history.append(record)

        if config.early_stop_patience is not None:
            monitored = (
                record.heldout_objective
                if np.isfinite(record.heldout_objective)
                else record.objective
            )
            if monitored < best:
                best = monitored
                stale = 0
            else:
                stale += 1
                if stale > config.early_stop_patience:
                    stopped_early = True
                    break

    return TrainResult(model=model, history=history, stopped_early=stopped_early)


def split_targets(
    dataset: ScreeningDataset, test_pockets
) -> tuple[ScreeningDataset, ScreeningDataset]:
    """Split by target: train keeps the other pockets' positives, test keeps
    the named pockets' positives and evaluation pairs."""
    test_set = set(test_pockets)
    unknown = test_set - set(dataset.pocket_ids)
    if unknown:
        raise ValueError(f"unknown test pockets: {sorted(unknown)}")
    train_pockets = {p: g for p, g in dataset.pockets.items() if p not in test_set}
    test_pockets_table = {p: g for p, g in dataset.pockets.items() if p in test_set}
    train = ScreeningDataset(
        compounds=dataset.compounds,
        pockets=train_pockets,
        positives=[s for s in dataset.positives if s.pocket_id not in test_set],
        eval_pairs=[s for s in dataset.eval_pairs or [] if s.pocket_id not in test_set],
    )
    test = ScreeningDataset(
        compounds=dataset.compounds,
        pockets=test_pockets_table,
        positives=[s for s in dataset.positives if s.pocket_id in test_set],
        eval_pairs=[s for s in dataset.eval_pairs or [] if s.pocket_id in test_set],
    )
    return train, test


class DualTowerBindingModel(BaseEstimator):
    """Trainable binding predictor with the estimator interface.

    ``fit`` consumes a :class:`ScreeningDataset` (positives only; negatives
    are sampled), ``predict_proba`` scores (ligand graph, pocket graph)
    pairs. Fitted parameters live in ``model_`` and the per-epoch log in
    ``history_``.
    """

    def __init__(
        self,
        fingerprint: str = "neural",
        conv_layers: tuple[int, ...] = (64, 64),
        fingerprint_size: int = 128,
        ecfp_radius: int = 2,
        ecfp_width: int = 4096,
        mlp_hidden: tuple[int, ...] = (128,),
        embedding_size: int = 32,
        activation: str = "relu",
        shared_fingerprint: bool = False,
        epochs: int = 30,
        batch_size: int = 32,
        learning_rate: float = 1e-3,
        optimizer: str = "adam",
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        negative_ratio: float = 1.0,
        negative_weight: float = 1.0,
        exclude_known_positives: bool = False,
        holdout_fraction: float = 0.1,
        early_stop_patience: int | None = None,
        random_state: int = 0,
    ):
        self.fingerprint = fingerprint
        self.conv_layers = conv_layers
        self.fingerprint_size = fingerprint_size
        self.ecfp_radius = ecfp_radius
        self.ecfp_width = ecfp_width
        self.mlp_hidden = mlp_hidden
        self.embedding_size = embedding_size
        self.activation = activation
        self.shared_fingerprint = shared_fingerprint
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.negative_ratio = negative_ratio
        self.negative_weight = negative_weight
        self.exclude_known_positives = exclude_known_positives
        self.holdout_fraction = holdout_fraction
        self.early_stop_patience = early_stop_patience
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            seed=self.random_state,
            negative_ratio=self.negative_ratio,
            negative_weight=self.negative_weight,
            exclude_known_positives=self.exclude_known_positives,
            holdout_fraction=self.holdout_fraction,
            early_stop_patience=self.early_stop_patience,
        )

    def _init_params(self) -> ModelParams:
        return init_model_params(
            seed=self.random_state,
            fingerprint=self.fingerprint,
            conv_layers=tuple(self.conv_layers),
            fingerprint_size=self.fingerprint_size,
            ecfp_radius=self.ecfp_radius,
            ecfp_width=self.ecfp_width,
            mlp_hidden=tuple(self.mlp_hidden),
            embedding_size=self.embedding_size,
            activation=self.activation,
            shared_fingerprint=self.shared_fingerprint,
        )

    def fit(self, dataset: ScreeningDataset, y=None):
        result = train(dataset, self._init_params(), self._train_config())
        self.model_ = result.model
        self.history_ = result.history
        self.stopped_early_ = result.stopped_early
        return self

    def decision_function(self, pairs) -> np.ndarray:
        from .predictor import predict_logits

        return predict_logits(ensure_pairs(pairs), self.model_)

    def predict_proba(self, pairs) -> np.ndarray:
        return sigmoid(self.decision_function(pairs))

    def predict(self, pairs) -> np.ndarray:
        return (self.predict_proba(pairs) >= 0.5).astype(np.int64)

    def score_samples(self, dataset: ScreeningDataset, samples: list[PairSample]) -> np.ndarray:
        return predict_many(dataset.pair_graphs(samples), self.model_)
