import numpy as np
import pytest

from molscreen import (
    AtomRecord,
    Bond,
    DanglingBond,
    DegreeExceeded,
    FEATURE_WIDTH,
    GraphError,
    MolGraph,
    adjacency,
    encode_features,
)
from molscreen.graphs import ELEMENT_INDEX
from molscreen.synthetic import random_graph

from helpers import permute_graph


def single_atom(element="C", **kw):
    return MolGraph("g", "compound", [AtomRecord(element, **kw)])


class TestConstruction:
    def test_unknown_element_maps_to_x(self):
        assert AtomRecord("Fe").element == "X"
        assert AtomRecord("Zz").element == "X"

    def test_charge_range_enforced(self):
        AtomRecord("C", formal_charge=-4)
        AtomRecord("C", formal_charge=4)
        with pytest.raises(GraphError):
            AtomRecord("C", formal_charge=5)
        with pytest.raises(GraphError):
            AtomRecord("C", formal_charge=-5)

    def test_negative_h_count_rejected(self):
        with pytest.raises(GraphError):
            AtomRecord("C", h_count=-1)

    def test_empty_atom_list_rejected(self):
        with pytest.raises(GraphError):
            MolGraph("g", "compound", [])

    def test_self_bond_rejected(self):
        with pytest.raises(GraphError):
            Bond(1, 1)

    def test_duplicate_bond_rejected(self):
        atoms = [AtomRecord("C"), AtomRecord("C")]
        with pytest.raises(GraphError):
            MolGraph("g", "compound", atoms, [Bond(0, 1), Bond(1, 0)])

    def test_dangling_bond_rejected(self):
        atoms = [AtomRecord("C"), AtomRecord("C")]
        with pytest.raises(DanglingBond):
            MolGraph("g", "compound", atoms, [Bond(0, 5)])

    def test_six_neighbor_star_rejected(self):
        atoms = [AtomRecord("C") for _ in range(7)]
        bonds = [Bond(0, i) for i in range(1, 7)]
        with pytest.raises(DegreeExceeded) as info:
            MolGraph("star", "compound", atoms, bonds)
        assert info.value.atom_index == 0
        assert info.value.degree == 6

    def test_bond_endpoints_normalized_ascending(self):
        g = MolGraph("g", "compound", [AtomRecord("C"), AtomRecord("O")], [Bond(1, 0)])
        assert (g.bonds[0].a, g.bonds[0].b) == (0, 1)


class TestAdjacency:
    def test_two_atoms_one_bond(self):
        g = MolGraph("g", "compound", [AtomRecord("C"), AtomRecord("O")], [Bond(0, 1)])
        assert adjacency(g) == [[1], [0]]

    def test_triangle(self):
        atoms = [AtomRecord("C") for _ in range(3)]
        g = MolGraph("g", "compound", atoms, [Bond(0, 1), Bond(1, 2), Bond(0, 2)])
        assert adjacency(g) == [[1, 2], [0, 2], [0, 1]]

    def test_neighbor_lists_sorted(self):
        rng = np.random.default_rng(3)
        for trial in range(25):
            g = random_graph(rng, int(rng.integers(2, 20)), graph_id=f"g{trial}")
            for nbrs in adjacency(g):
                assert nbrs == sorted(nbrs)
                assert len(nbrs) <= 5


class TestEncodeFeatures:
    def test_carbon_degree4_row(self):
        # central carbon with four single-bonded hydrogens
        atoms = [AtomRecord("C")] + [AtomRecord("H") for _ in range(4)]
        bonds = [Bond(0, i) for i in range(1, 5)]
        g = MolGraph("methane", "compound", atoms, bonds)
        rows = encode_features(g)
        carbon = rows[0]
        assert carbon[ELEMENT_INDEX["C"]] == 1.0
        assert carbon[11 + 4 - 1] == 1.0  # degree-4 slot
        assert carbon[16 + 0 + 2] == 1.0  # charge-0 slot
        assert carbon[21] == 0.0  # aromatic flag
        assert carbon.sum() == 3.0
        for row in rows[1:]:
            assert row[ELEMENT_INDEX["H"]] == 1.0
            assert row[11 + 1 - 1] == 1.0  # degree-1 slot

    def test_isolated_atom_degree_block_empty(self):
        rows = encode_features(single_atom("O"))
        assert rows.shape == (1, FEATURE_WIDTH)
        assert np.all(rows[0, 11:16] == 0.0)

    def test_charge_clipped_to_pm2(self):
        rows = encode_features(single_atom("N", formal_charge=4))
        assert rows[0, 16 + 2 + 2] == 1.0  # clipped to +2
        rows = encode_features(single_atom("N", formal_charge=-4))
        assert rows[0, 16 - 2 + 2] == 1.0  # clipped to -2

    def test_aromatic_flag_column(self):
        rows = encode_features(single_atom("C", aromatic=True))
        assert rows[0, 21] == 1.0

    def test_width_is_22_and_binary(self):
        rng = np.random.default_rng(11)
        for trial in range(50):
            g = random_graph(rng, int(rng.integers(1, 30)), graph_id=f"g{trial}")
            rows = encode_features(g)
            assert rows.shape == (g.n_atoms, 22)
            assert np.all((rows == 0.0) | (rows == 1.0))
            # one element slot + one charge slot always set; degree/aromatic optional
            assert np.all(rows.sum(axis=1) >= 2)
            assert np.all(rows.sum(axis=1) <= 5)

    def test_permutation_equivariance_exact(self):
        rng = np.random.default_rng(5)
        for trial in range(40):
            g = random_graph(rng, int(rng.integers(2, 25)), graph_id=f"g{trial}")
            perm = rng.permutation(g.n_atoms)
            permuted = permute_graph(g, perm)
            base = encode_features(g)
            relabeled = encode_features(permuted)
            assert np.array_equal(relabeled[perm], base)

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        g = random_graph(rng, 14)
        assert np.array_equal(encode_features(g), encode_features(g))
