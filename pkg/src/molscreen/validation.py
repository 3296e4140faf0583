"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch
from .graphs import MolGraph


def ensure_molgraphs(X) -> list[MolGraph]:
    """Coerce an iterable of graphs to a list, rejecting anything else."""
    if isinstance(X, MolGraph):
        raise TypeError("expected a sequence of MolGraph, got a single graph")
    graphs = list(X)
    for item in graphs:
        if not isinstance(item, MolGraph):
            raise TypeError(f"expected MolGraph, got {type(item).__name__}")
    return graphs


def ensure_pairs(pairs) -> list[tuple[MolGraph, MolGraph]]:
    """Validate a sequence of (ligand graph, pocket graph) tuples."""
    out = []
    for pair in pairs:
        ligand, pocket = pair
        if not isinstance(ligand, MolGraph) or not isinstance(pocket, MolGraph):
            raise TypeError("pairs must contain (MolGraph, MolGraph) tuples")
        out.append((ligand, pocket))
    return out


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_matrix(name: str, arr, n_columns: int | None = None) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if n_columns is not None and arr.shape[1] != n_columns:
        raise ShapeMismatch(
            f"{name} has {arr.shape[1]} columns, expected {n_columns}"
        )
    return arr


def check_binary_labels(y) -> np.ndarray:
    y = np.asarray(y)
    values = np.unique(y)
    if not np.all(np.isin(values, (0, 1))):
        raise ValueError(f"labels must be 0/1, got values {values!r}")
    return y.astype(np.int64)
