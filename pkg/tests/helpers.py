"""Independent oracles used across the test suite.

These deliberately re-derive results from first principles (pair counting,
byte-level hashing, central differences) rather than calling the library
paths they check.
"""

import numpy as np

from molscreen import AtomRecord, Bond, MolGraph

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211


def fnv1a64_oracle(data: bytes) -> int:
    value = FNV_OFFSET
    for byte in data:
        value = ((value ^ byte) * FNV_PRIME) % 2**64
    return value


def brute_force_auc(scores, labels) -> float:
    """O(n^2) pair counting with ties credited 0.5."""
    scores = list(scores)
    labels = list(labels)
    wins = 0.0
    pairs = 0
    for s_pos, l_pos in zip(scores, labels):
        if l_pos != 1:
            continue
        for s_neg, l_neg in zip(scores, labels):
            if l_neg != 0:
                continue
            pairs += 1
            if s_pos > s_neg:
                wins += 1.0
            elif s_pos == s_neg:
                wins += 0.5
    return wins / pairs


def central_differences(objective, array, h=1e-6):
    """Gradient of a scalar function w.r.t. one array, via +/- h probes."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = objective()
        flat[i] = keep - h
        down = objective()
        flat[i] = keep
        gflat[i] = (up - down) / (2 * h)
    return grad


def max_rel_error(analytic, numeric, floor=1e-5) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def permute_graph(g: MolGraph, perm) -> MolGraph:
    """Relabel atoms so that old index i becomes perm[i]."""
    inverse = {perm[i]: i for i in range(g.n_atoms)}
    atoms = [g.atoms[inverse[j]] for j in range(g.n_atoms)]
    bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in g.bonds]
    return MolGraph(g.id, g.kind, atoms, bonds)


def chain_graph(elements, kind="compound", graph_id="chain", orders=None) -> MolGraph:
    """A simple path graph with the given element sequence."""
    atoms = [AtomRecord(el) for el in elements]
    orders = orders or ["single"] * (len(elements) - 1)
    bonds = [Bond(i, i + 1, orders[i]) for i in range(len(elements) - 1)]
    return MolGraph(graph_id, kind, atoms, bonds)
