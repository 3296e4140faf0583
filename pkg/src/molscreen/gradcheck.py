"""Central-finite-difference verification of the analytic gradients.

Each instance draws a fresh small model and random graph pairs, computes
the analytic gradients of the minimized objective, and compares every
parameter against ``(f(p + h) - f(p - h)) / 2h`` where ``f`` evaluates the
objective through the forward pass only. The check forces a smooth
activation: relu kinks make finite differences unreliable without any
gradient bug being present.

Relative error uses ``|analytic - numeric| / max(|analytic|, |numeric|,
1e-5)``; the floor keeps roundoff noise on near-zero gradients from
registering as failures while still catching sign flips and wrong terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .predictor import GraphCache, ModelParams, init_model_params, nce_loss, nce_loss_value
from .synthetic import random_graph

SMOOTH_ACTIVATIONS = ("sigmoid", "tanh")

_BLOCKS = ("ligand_fp", "pocket_fp", "ligand_mlp", "pocket_mlp")


def _block_arrays(model: ModelParams, block: str):
    part = getattr(model, block)
    if part is None or not hasattr(part, "arrays"):
        return []
    if block == "pocket_fp" and getattr(model, "shared_fingerprint", False):
        return []
    return list(part.arrays())


def finite_difference_gradient(f, array: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function with respect to one array,
    perturbing entries in place."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        f_plus = f()
        flat[i] = original - h
        f_minus = f()
        flat[i] = original
        out[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


@dataclass
class GradCheckResult:
    max_rel_error: float
    per_block: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-5) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_instance(
    seed: int,
    activation: str = "sigmoid",
    atoms: tuple[int, int] = (3, 15),
    h: float = 1e-6,
) -> dict[str, float]:
    """Max relative error per parameter block for one random instance."""
    if activation not in SMOOTH_ACTIVATIONS:
        raise ValueError(f"gradient checking requires a smooth activation, not {activation!r}")
    rng = np.random.default_rng(seed)
    model = init_model_params(
        seed=seed,
        fingerprint="neural",
        conv_layers=(5, 5),
        fingerprint_size=6,
        mlp_hidden=(5,),
        embedding_size=3,
        activation=activation,
    )

    serial = iter(range(10**6))

    def draw_pair():
        ligand = random_graph(
            rng, int(rng.integers(atoms[0], atoms[1] + 1)), "compound", f"l{next(serial)}"
        )
        pocket = random_graph(
            rng, int(rng.integers(atoms[0], atoms[1] + 1)), "pocket", f"p{next(serial)}"
        )
        return ligand, pocket

    positives = [draw_pair()]
    negatives = [draw_pair()]
    cache = GraphCache()

    _, grads = nce_loss(positives, negatives, model, cache=cache)

    def objective() -> float:
        return -nce_loss_value(positives, negatives, model, cache=cache)

    errors: dict[str, float] = {}
    for block in _BLOCKS:
        analytic_arrays = _block_arrays(grads, block)
        param_arrays = _block_arrays(model, block)
        worst = 0.0
        for analytic, param in zip(analytic_arrays, param_arrays):
            numeric = finite_difference_gradient(objective, param, h)
            worst = max(worst, relative_error(analytic, numeric))
        if param_arrays:
            errors[block] = worst
    return errors


def gradient_check(
    seed: int = 0,
    instances: int = 20,
    activation: str = "sigmoid",
    atoms: tuple[int, int] = (3, 15),
    h: float = 1e-6,
    tolerance: float = 1e-4,
) -> GradCheckResult:
    """Run the finite-difference suite over seeded random instances."""
    per_block: dict[str, float] = {}
    for k in range(instances):
        errors = check_instance(seed + k, activation=activation, atoms=atoms, h=h)
        for block, err in errors.items():
            per_block[block] = max(per_block.get(block, 0.0), err)
    return GradCheckResult(
        max_rel_error=max(per_block.values()),
        per_block=per_block,
        tolerance=tolerance,
    )
