import json

import numpy as np
import pytest

from molscreen import (
    DanglingBond,
    DegreeExceeded,
    KindMismatch,
    MalformedLine,
    ManifestError,
    MolScreenError,
    PairSample,
    UnresolvedId,
    load_manifest,
    parse_graph_jsonl,
    write_graphs_jsonl,
    write_manifest,
)
from molscreen.synthetic import random_graph


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n")


def test_parse_minimal_line(tmp_path):
    path = tmp_path / "graphs.jsonl"
    write_lines(
        path,
        ['{"id":"m1","kind":"compound","atoms":[{"el":"C"},{"el":"O"}],"bonds":[[0,1,"single"]]}'],
    )
    graphs = parse_graph_jsonl(path)
    assert len(graphs) == 1
    g = graphs[0]
    assert g.id == "m1"
    assert [a.element for a in g.atoms] == ["C", "O"]
    assert g.bonds[0].order == "single"
    # optional fields default to 0/false
    assert g.atoms[0].formal_charge == 0
    assert g.atoms[0].aromatic is False
    assert g.atoms[0].h_count == 0


def test_unknown_fields_ignored(tmp_path):
    path = tmp_path / "graphs.jsonl"
    write_lines(
        path,
        ['{"id":"m1","kind":"pocket","atoms":[{"el":"N","note":"x"}],"bonds":[],"extra":1}'],
    )
    assert parse_graph_jsonl(path)[0].kind == "pocket"


def test_dangling_bond_reported(tmp_path):
    path = tmp_path / "graphs.jsonl"
    write_lines(
        path,
        ['{"id":"m1","kind":"compound","atoms":[{"el":"C"},{"el":"O"}],"bonds":[[0,5,"single"]]}'],
    )
    with pytest.raises(DanglingBond) as info:
        parse_graph_jsonl(path)
    assert info.value.graph_id == "m1"


def test_degree_exceeded_reported(tmp_path):
    atoms = ",".join('{"el":"C"}' for _ in range(7))
    bonds = ",".join(f'[0,{i},"single"]' for i in range(1, 7))
    path = tmp_path / "graphs.jsonl"
    write_lines(path, ['{"id":"m1","kind":"compound","atoms":[%s],"bonds":[%s]}' % (atoms, bonds)])
    with pytest.raises(DegreeExceeded) as info:
        parse_graph_jsonl(path)
    assert info.value.graph_id == "m1"
    assert info.value.atom_index == 0


def test_malformed_line_number(tmp_path):
    path = tmp_path / "graphs.jsonl"
    write_lines(
        path,
        [
            '{"id":"ok","kind":"compound","atoms":[{"el":"C"}],"bonds":[]}',
            "{not json",
        ],
    )
    with pytest.raises(MalformedLine) as info:
        parse_graph_jsonl(path)
    assert info.value.line_no == 2


def test_roundtrip_identity(tmp_path):
    rng = np.random.default_rng(21)
    graphs = [
        random_graph(rng, int(rng.integers(1, 25)), kind=("compound", "pocket")[trial % 2],
                     graph_id=f"g{trial}")
        for trial in range(60)
    ]
    path = tmp_path / "roundtrip.jsonl"
    write_graphs_jsonl(graphs, path)
    parsed = parse_graph_jsonl(path)
    assert parsed == graphs
    # a second serialization is byte-identical
    path2 = tmp_path / "again.jsonl"
    write_graphs_jsonl(parsed, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_fuzzed_lines_never_crash(tmp_path):
    """Random mutations of a valid line must yield structured errors or valid graphs."""
    base = '{"id":"m1","kind":"compound","atoms":[{"el":"C"},{"el":"O"}],"bonds":[[0,1,"single"]]}'
    rng = np.random.default_rng(2024)
    path = tmp_path / "fuzz.jsonl"
    alphabet = list('{}[]",:01579ez')
    outcomes = {"ok": 0, "error": 0}
    for _ in range(2000):
        chars = list(base)
        for _ in range(int(rng.integers(1, 6))):
            pos = int(rng.integers(0, len(chars)))
            chars[pos] = alphabet[int(rng.integers(0, len(alphabet)))]
        path.write_text("".join(chars) + "\n")
        try:
            for g in parse_graph_jsonl(path):
                assert g.n_atoms >= 1
                assert all(len(g.neighbors(i)) <= 5 for i in range(g.n_atoms))
            outcomes["ok"] += 1
        except MolScreenError:
            outcomes["error"] += 1
    assert sum(outcomes.values()) == 2000
    assert outcomes["error"] > 0


class TestManifest:
    def build(self, tmp_path, positives, eval_pairs=None, n_compounds=2, n_pockets=1):
        rng = np.random.default_rng(7)
        compounds = [random_graph(rng, 6, "compound", f"c{i}") for i in range(n_compounds)]
        pockets = [random_graph(rng, 8, "pocket", f"p{i}") for i in range(n_pockets)]
        write_graphs_jsonl(compounds, tmp_path / "compounds.jsonl")
        write_graphs_jsonl(pockets, tmp_path / "pockets.jsonl")
        manifest = {
            "compounds": "compounds.jsonl",
            "pockets": "pockets.jsonl",
            "positives": positives,
        }
        if eval_pairs is not None:
            manifest["eval_pairs"] = eval_pairs
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest))
        return path

    def test_load_counts(self, tmp_path):
        path = self.build(tmp_path, [["c0", "p0"]])
        ds = load_manifest(path)
        assert (len(ds.compounds), len(ds.pockets), len(ds.positives)) == (2, 1, 1)
        assert ds.eval_pairs is None

    def test_unresolved_id(self, tmp_path):
        path = self.build(tmp_path, [["missing", "p0"]])
        with pytest.raises(UnresolvedId):
            load_manifest(path)

    def test_kind_mismatch(self, tmp_path):
        path = self.build(tmp_path, [["p0", "p0"]])
        with pytest.raises(KindMismatch):
            load_manifest(path)

    def test_duplicate_positive_rejected(self, tmp_path):
        path = self.build(tmp_path, [["c0", "p0"], ["c0", "p0"]])
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_eval_pairs_parsed(self, tmp_path):
        path = self.build(tmp_path, [["c0", "p0"]], eval_pairs=[["c1", "p0", 0]])
        ds = load_manifest(path)
        assert ds.eval_pairs == [PairSample("c1", "p0", 0)]

    def test_write_manifest_roundtrip(self, tmp_path):
        path = self.build(tmp_path, [["c0", "p0"]], eval_pairs=[["c1", "p0", 0]])
        ds = load_manifest(path)
        write_manifest(
            tmp_path / "manifest2.json",
            "compounds.jsonl",
            "pockets.jsonl",
            ds.positives,
            ds.eval_pairs,
        )
        again = load_manifest(tmp_path / "manifest2.json")
        assert again.positives == ds.positives
        assert again.eval_pairs == ds.eval_pairs
