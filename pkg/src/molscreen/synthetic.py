"""Seeded synthetic screening benchmarks with a planted pairwise rule.

Every pocket carries a hidden *motif*: a chordless path of special-element
atoms (drawn from N, S, F, Br) implanted into an otherwise random carbon
graph. A compound is active for a pocket exactly when it contains the
pocket's *complementary* motif (N<->O, S<->P, F<->Cl, Br<->I) as a path.
Special elements never occur outside implants and implanted paths never
get chord edges, so the rule is airtight and checkable with
:func:`contains_element_path`.

Because several targets share each motif class and a compound's motif is
drawn uniformly, a compound that is active for one target serves as a decoy
for targets with other motifs: the label depends on the pair, not the
compound, and no compound-only model can do well. The ``shared-pool`` mode
instead draws decoys from a common motif-free pool, so actives and decoys
differ in composition and a compound-only model looks deceptively strong;
that is the benchmark-bias construction.

Generation is fully determined by the spec's seed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import SpecInfeasible
from .graphs import ELEMENTS, MAX_DEGREE, AtomRecord, Bond, MolGraph
from .io import PairSample, write_graphs_jsonl, write_manifest

POCKET_MOTIF_ELEMENTS = ("N", "S", "F", "Br")
COMPLEMENT = {"N": "O", "S": "P", "F": "Cl", "Br": "I"}

DECOY_SHARING_MODES = ("per-target", "shared-pool")


@dataclass(frozen=True)
class SynthSpec:
    """Settings of one synthetic benchmark; the seed fixes everything."""

    n_targets: int = 12
    n_compounds: int = 6000
    actives_per_target: int = 50
    decoys_per_target: int = 950
    motif_length: int = 4
    decoy_sharing: str = "per-target"
    seed: int = 0
    n_motifs: int | None = None
    decoy_pool_size: int = 2000
    compound_atoms: tuple[int, int] = (10, 18)
    pocket_atoms: tuple[int, int] = (5, 8)

    def __post_init__(self):
        positives = (
            self.n_targets,
            self.n_compounds,
            self.actives_per_target,
            self.decoys_per_target,
            self.motif_length,
            self.decoy_pool_size,
        )
        if any(v <= 0 for v in positives):
            raise ValueError("all spec counts must be positive")
        if self.decoy_sharing not in DECOY_SHARING_MODES:
            raise ValueError(f"unknown decoy_sharing mode {self.decoy_sharing!r}")
        for lo, hi in (self.compound_atoms, self.pocket_atoms):
            if lo < 1 or hi < lo:
                raise ValueError("size ranges must satisfy 1 <= lo <= hi")
        if self.n_motifs is not None and self.n_motifs <= 0:
            raise ValueError("n_motifs must be positive when set")

    @property
    def resolved_n_motifs(self) -> int:
        return self.n_motifs if self.n_motifs is not None else min(4, self.n_targets)


def contains_element_path(g: MolGraph, sequence) -> bool:
    """True when the element sequence occurs along some simple path of ``g``."""
    sequence = tuple(sequence)
    if not sequence:
        return True
    elements = [a.element for a in g.atoms]

    def extend(atom: int, depth: int, visited: set[int]) -> bool:
        if depth == len(sequence):
            return True
        for nxt in g.neighbors(atom):
            if nxt not in visited and elements[nxt] == sequence[depth]:
                if extend(nxt, depth + 1, visited | {nxt}):
                    return True
        return False

    return any(
        elements[start] == sequence[0] and extend(start, 1, {start})
        for start in range(g.n_atoms)
    )


def _random_graph_body(
    rng: np.random.Generator,
    n_atoms: int,
    motif: tuple[str, ...],
    graph_id: str,
    kind: str,
) -> MolGraph:
    """Random tree plus ring edges, with the first ``len(motif)`` atoms as a
    pendant chordless path.

    The base tree touches the motif only at its first atom and ring edges
    stay among base atoms, so every implant has the same local topology
    (interior motif atoms have degree 2, the tip degree 1) regardless of the
    surrounding graph. That keeps the motif's learned features stable across
    graphs instead of entangled with random decoration.
    """
    span = len(motif)
    if span > n_atoms:
        raise SpecInfeasible(
            f"motif of length {span} does not fit in a {n_atoms}-atom graph"
        )
    elements = list(motif)
    h_counts = [0] * span
    for _ in range(n_atoms - span):
        elements.append("C" if rng.random() < 0.8 else "H")
        h_counts.append(int(rng.integers(0, 3)))

    bonds = [(i, i + 1) for i in range(span - 1)]
    degrees = [0] * n_atoms
    for a, b in bonds:
        degrees[a] += 1
        degrees[b] += 1
    start = span if span else 1
    for i in range(start, n_atoms):
        if i == span and span:
            j = 0  # the base tree hangs off the motif's first atom
        else:
            open_slots = [j for j in range(start, i) if degrees[j] < MAX_DEGREE]
            if not open_slots:
                open_slots = [j for j in range(i) if degrees[j] < MAX_DEGREE]
            j = int(open_slots[rng.integers(0, len(open_slots))])
        bonds.append((j, i))
        degrees[j] += 1
        degrees[i] += 1

    bonded = {tuple(sorted(b)) for b in bonds}
    for _ in range(int(rng.integers(0, n_atoms // 6 + 1))):
        u = int(rng.integers(0, n_atoms))
        v = int(rng.integers(0, n_atoms))
        key = (min(u, v), max(u, v))
        if (
            u == v
            or key in bonded
            or degrees[u] >= MAX_DEGREE
            or degrees[v] >= MAX_DEGREE
            or u < span
            or v < span
        ):
            continue
        bonds.append(key)
        bonded.add(key)
        degrees[u] += 1
        degrees[v] += 1

    atoms = [
        AtomRecord(element=elements[i], h_count=h_counts[i]) for i in range(n_atoms)
    ]
    return MolGraph(graph_id, kind, atoms, [Bond(a, b) for a, b in bonds])


def random_graph(
    rng: np.random.Generator, n_atoms: int, kind: str = "compound", graph_id: str = "g"
) -> MolGraph:
    """A random valid graph over the full element vocabulary (test utility)."""
    g = _random_graph_body(rng, n_atoms, (), graph_id, kind)
    atoms = [
        AtomRecord(
            element=ELEMENTS[rng.integers(0, len(ELEMENTS))],
            formal_charge=int(rng.integers(-2, 3)),
            aromatic=bool(rng.integers(0, 2)),
            h_count=int(rng.integers(0, 4)),
        )
        for _ in range(n_atoms)
    ]
    return MolGraph(graph_id, kind, atoms, g.bonds)


def _draw_motifs(rng: np.random.Generator, count: int, length: int) -> list[tuple[str, ...]]:
    """Distinct motif sequences, also distinct from each other's reversals."""
    alphabet = POCKET_MOTIF_ELEMENTS
    seen: set[tuple[str, ...]] = set()
    motifs: list[tuple[str, ...]] = []
    attempts = 0
    while len(motifs) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise SpecInfeasible(
                f"cannot draw {count} distinct motifs of length {length}"
            )
        motif = tuple(alphabet[rng.integers(0, len(alphabet))] for _ in range(length))
        if motif in seen or tuple(reversed(motif)) in seen:
            continue
        seen.add(motif)
        motifs.append(motif)
    return motifs


def _sample_ids(rng: np.random.Generator, ids: list[str], count: int, what: str) -> list[str]:
    if len(ids) < count:
        raise SpecInfeasible(f"need {count} {what}, only {len(ids)} available")
    chosen = rng.choice(len(ids), size=count, replace=False)
    return [ids[i] for i in chosen]


def generate_synthetic(spec: SynthSpec, out_dir) -> str:
    """Write compounds.jsonl, pockets.jsonl, and manifest.json; returns the
    manifest path."""
    rng = np.random.default_rng(spec.seed)
    n_motifs = spec.resolved_n_motifs
    if spec.motif_length > spec.compound_atoms[0]:
        raise SpecInfeasible(
            f"motif length {spec.motif_length} exceeds the minimum compound "
            f"size {spec.compound_atoms[0]}"
        )
    if spec.motif_length > spec.pocket_atoms[0]:
        raise SpecInfeasible(
            f"motif length {spec.motif_length} exceeds the minimum pocket "
            f"size {spec.pocket_atoms[0]}"
        )
    motifs = _draw_motifs(rng, n_motifs, spec.motif_length)
    complements = [tuple(COMPLEMENT[el] for el in m) for m in motifs]

    pockets = []
    for t in range(spec.n_targets):
        size = int(rng.integers(spec.pocket_atoms[0], spec.pocket_atoms[1] + 1))
        pockets.append(
            _random_graph_body(rng, size, motifs[t % n_motifs], f"t{t:03d}", "pocket")
        )

    compounds = []
    compound_motif: dict[str, int] = {}
    by_motif: list[list[str]] = [[] for _ in range(n_motifs)]
    for i in range(spec.n_compounds):
        motif_index = int(rng.integers(0, n_motifs))
        size = int(rng.integers(spec.compound_atoms[0], spec.compound_atoms[1] + 1))
        g = _random_graph_body(
            rng, size, complements[motif_index], f"c{i:05d}", "compound"
        )
        compounds.append(g)
        compound_motif[g.id] = motif_index
        by_motif[motif_index].append(g.id)

    if spec.decoy_sharing == "shared-pool":
        for i in range(spec.decoy_pool_size):
            size = int(rng.integers(spec.compound_atoms[0], spec.compound_atoms[1] + 1))
            compounds.append(_random_graph_body(rng, size, (), f"d{i:05d}", "compound"))
        decoy_pool = [g.id for g in compounds[spec.n_compounds :]]

    positives: list[PairSample] = []
    eval_pairs: list[PairSample] = []
    for t, pocket in enumerate(pockets):
        motif_index = t % n_motifs
        actives = _sample_ids(
            rng, by_motif[motif_index], spec.actives_per_target, "matching compounds"
        )
        if spec.decoy_sharing == "per-target":
            mismatched = [
                cid for m, ids in enumerate(by_motif) if m != motif_index for cid in ids
            ]
            decoys = _sample_ids(
                rng, mismatched, spec.decoys_per_target, "mismatched compounds"
            )
        else:
            decoys = _sample_ids(
                rng, decoy_pool, spec.decoys_per_target, "pool decoys"
            )
        for cid in actives:
            positives.append(PairSample(cid, pocket.id, 1))
            eval_pairs.append(PairSample(cid, pocket.id, 1))
        for cid in decoys:
            eval_pairs.append(PairSample(cid, pocket.id, 0))

    os.makedirs(out_dir, exist_ok=True)
    compounds_file = os.path.join(out_dir, "compounds.jsonl")
    pockets_file = os.path.join(out_dir, "pockets.jsonl")
    manifest_file = os.path.join(out_dir, "manifest.json")
    write_graphs_jsonl(compounds, compounds_file)
    write_graphs_jsonl(pockets, pockets_file)
    write_manifest(
        manifest_file, "compounds.jsonl", "pockets.jsonl", positives, eval_pairs
    )
    return manifest_file


def extract_motif(g: MolGraph, special_elements=POCKET_MOTIF_ELEMENTS) -> tuple[str, ...]:
    """Recover the implanted motif sequence from a generated graph.

    Special elements occur only on the implanted chordless path, so walking
    the special atoms from one endpoint reproduces the motif (orientation is
    immaterial: an undirected path contains a sequence iff it contains its
    reversal). Returns () for motif-free graphs such as pool decoys.
    """
    special = set(special_elements)
    members = [i for i, a in enumerate(g.atoms) if a.element in special]
    if not members:
        return ()
    if len(members) == 1:
        return (g.atoms[members[0]].element,)
    member_set = set(members)
    inner_neighbors = {
        i: [j for j in g.neighbors(i) if j in member_set] for i in members
    }
    endpoints = sorted(i for i in members if len(inner_neighbors[i]) == 1)
    if len(endpoints) != 2:
        raise ValueError(f"graph {g.id!r}: special atoms do not form a path")
    walk = [endpoints[0]]
    prev = None
    while walk[-1] != endpoints[1]:
        candidates = [j for j in inner_neighbors[walk[-1]] if j != prev]
        if len(candidates) != 1:
            raise ValueError(f"graph {g.id!r}: special atoms do not form a path")
        prev = walk[-1]
        walk.append(candidates[0])
    if len(walk) != len(members):
        raise ValueError(f"graph {g.id!r}: special atoms do not form a path")
    return tuple(g.atoms[i].element for i in walk)
