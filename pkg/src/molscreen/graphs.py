"""Molecular graph data model and the fixed atom-feature encoding.

A :class:`MolGraph` is an undirected labeled graph of atoms; it represents
both small compounds and protein binding pockets, which are processed by
structurally identical fingerprint machinery. All types are immutable after
construction and every operation here is a pure function, so graphs can be
shared freely across threads.

The feature encoding is fully pinned: one row per atom with

* element one-hot over the 11-symbol vocabulary (11 columns),
* degree one-hot for degrees 1..5 (5 columns; degree-0 atoms, e.g. isolated
  ions in a pocket, leave the block all zero),
* formal charge clipped to [-2, 2] one-hot (5 columns),
* aromatic flag (1 column),

for a total width of 22. ``h_count`` is kept on the atom record (the hashed
fingerprint uses it) but is deliberately not part of this feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DanglingBond, DegreeExceeded, GraphError

ELEMENTS = ("C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "H", "X")
ELEMENT_INDEX = {el: i for i, el in enumerate(ELEMENTS)}

BOND_ORDERS = ("single", "double", "triple", "aromatic")
BOND_ORDER_CODE = {order: i + 1 for i, order in enumerate(BOND_ORDERS)}

GRAPH_KINDS = ("compound", "pocket")

MAX_DEGREE = 5
MIN_CHARGE, MAX_CHARGE = -4, 4

# element (11) + degree 1..5 (5) + charge -2..2 (5) + aromatic (1)
FEATURE_WIDTH = 22
_DEGREE_OFFSET = len(ELEMENTS)
_CHARGE_OFFSET = _DEGREE_OFFSET + MAX_DEGREE
_AROMATIC_COLUMN = _CHARGE_OFFSET + 5


@dataclass(frozen=True)
class AtomRecord:
    """One atom: element symbol, formal charge, aromaticity, explicit H count.

    Elements outside the vocabulary are mapped to ``"X"`` so that ingestion
    never fails on exotic chemistry.
    """

    element: str
    formal_charge: int = 0
    aromatic: bool = False
    h_count: int = 0

    def __post_init__(self):
        if self.element not in ELEMENT_INDEX:
            object.__setattr__(self, "element", "X")
        if not isinstance(self.formal_charge, int) or not (
            MIN_CHARGE <= self.formal_charge <= MAX_CHARGE
        ):
            raise GraphError(
                f"formal charge {self.formal_charge!r} outside [{MIN_CHARGE}, {MAX_CHARGE}]"
            )
        if not isinstance(self.h_count, int) or self.h_count < 0:
            raise GraphError(f"h_count {self.h_count!r} must be a non-negative integer")


@dataclass(frozen=True)
class Bond:
    """An undirected bond between atom indices ``a`` and ``b``."""

    a: int
    b: int
    order: str = "single"

    def __post_init__(self):
        if self.order not in BOND_ORDER_CODE:
            raise GraphError(f"unknown bond order {self.order!r}")
        if self.a == self.b:
            raise GraphError(f"self-bond on atom {self.a}")


class MolGraph:
    """An immutable atom graph (compound or pocket).

    Construction validates every invariant: bond indices in range, at most
    one bond per unordered atom pair, and atom degree at most 5. Bonds are
    stored with ascending endpoint indices; input order is preserved.
    """

    __slots__ = ("id", "kind", "atoms", "bonds", "_neighbors", "_order_by_pair")

    def __init__(self, id: str, kind: str, atoms, bonds=()):
        if kind not in GRAPH_KINDS:
            raise GraphError(f"graph {id!r}: unknown kind {kind!r}")
        atoms = tuple(atoms)
        if not atoms:
            raise GraphError(f"graph {id!r}: atom list is empty")
        n = len(atoms)

        normalized = []
        order_by_pair = {}
        adjacency = [[] for _ in range(n)]
        for bond in bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise DanglingBond(id, (bond.a, bond.b))
            a, b = (bond.a, bond.b) if bond.a < bond.b else (bond.b, bond.a)
            if (a, b) in order_by_pair:
                raise GraphError(f"graph {id!r}: duplicate bond between {a} and {b}")
            order_by_pair[(a, b)] = bond.order
            normalized.append(Bond(a, b, bond.order))
            adjacency[a].append(b)
            adjacency[b].append(a)

        for index, nbrs in enumerate(adjacency):
            if len(nbrs) > MAX_DEGREE:
                raise DegreeExceeded(id, index, len(nbrs))

        self.id = id
        self.kind = kind
        self.atoms = atoms
        self.bonds = tuple(normalized)
        self._neighbors = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
        self._order_by_pair = order_by_pair

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, index: int) -> tuple[int, ...]:
        """Sorted neighbor indices of one atom."""
        return self._neighbors[index]

    def degree(self, index: int) -> int:
        return len(self._neighbors[index])

    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self._neighbors], dtype=np.intp)

    def bond_order(self, a: int, b: int) -> str:
        """Order of the bond between two atoms; KeyError if not bonded."""
        key = (a, b) if a < b else (b, a)
        return self._order_by_pair[key]

    def __eq__(self, other):
        if not isinstance(other, MolGraph):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind == other.kind
            and self.atoms == other.atoms
            and self.bonds == other.bonds
        )

    def __hash__(self):
        return hash((self.id, self.kind, self.atoms, self.bonds))

    def __repr__(self):
        return (
            f"MolGraph(id={self.id!r}, kind={self.kind!r}, "
            f"atoms={self.n_atoms}, bonds={len(self.bonds)})"
        )


def adjacency(g: MolGraph) -> list[list[int]]:
    """Per-atom sorted neighbor index lists."""
    return [list(nbrs) for nbrs in g._neighbors]


def adjacency_matrix(g: MolGraph) -> np.ndarray:
    """Dense symmetric 0/1 adjacency matrix as float64."""
    n = g.n_atoms
    mat = np.zeros((n, n), dtype=np.float64)
    for bond in g.bonds:
        mat[bond.a, bond.b] = 1.0
        mat[bond.b, bond.a] = 1.0
    return mat


def encode_features(g: MolGraph) -> np.ndarray:
    """Fixed 0/1 feature matrix, one row of width 22 per atom, in atom order.

    Row ``m`` depends only on atom ``m``'s record and its degree in ``g``,
    so relabeling atoms permutes rows and changes nothing else.
    """
    rows = np.zeros((g.n_atoms, FEATURE_WIDTH), dtype=np.float64)
    for m, atom in enumerate(g.atoms):
        rows[m, ELEMENT_INDEX[atom.element]] = 1.0
        deg = g.degree(m)
        if deg > 0:
            rows[m, _DEGREE_OFFSET + deg - 1] = 1.0
        charge = min(max(atom.formal_charge, -2), 2)
        rows[m, _CHARGE_OFFSET + charge + 2] = 1.0
        if atom.aromatic:
            rows[m, _AROMATIC_COLUMN] = 1.0
    return rows
