"""Parsers and writers for graphs, compound libraries, and dataset manifests.

The canonical on-disk format is line-delimited JSON with one graph per line:

    {"id": str, "kind": "compound"|"pocket",
     "atoms": [{"el": str, "chg": int?, "arom": bool?, "h": int?}],
     "bonds": [[int, int, "single"|"double"|"triple"|"aromatic"]]}

Unknown fields are ignored and missing optionals default to 0/false, so the
format can be extended without breaking old readers. Compound libraries may
also be ingested from MDL SD files (V2000 connection tables only): element
symbols come from columns 32-34 of the atom block, ``M  CHG`` property lines
supersede the atom-block charge codes, bond code 4 maps to an aromatic bond
and marks both endpoint atoms aromatic, and 3D coordinates are discarded.
Implicit hydrogens are not synthesized; ``h_count`` stays 0 unless explicit
H atoms are present.

A dataset manifest is a JSON document

    {"compounds": path, "pockets": path,
     "positives": [[ligand_id, pocket_id], ...],
     "eval_pairs": [[ligand_id, pocket_id, 0|1], ...]?}

with graph paths resolved relative to the manifest's directory. Manifests
carry only positive pairs for training (negatives are sampled at training
time); ``eval_pairs`` may pin an explicit labeled test set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .errors import (
    DanglingBond,
    DegreeExceeded,
    GraphError,
    KindMismatch,
    MalformedCounts,
    MalformedLine,
    MalformedRecord,
    ManifestError,
    UnresolvedId,
    UnsupportedVersion,
)
from .graphs import GRAPH_KINDS, AtomRecord, Bond, MolGraph


@dataclass(frozen=True)
class PairSample:
    """One (ligand, pocket) record with a binary binding label."""

    ligand_id: str
    pocket_id: str
    label: int = 1

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


# ------------------------------------------------------------------ JSONL


def graph_to_dict(g: MolGraph) -> dict:
    return {
        "id": g.id,
        "kind": g.kind,
        "atoms": [
            {"el": a.element, "chg": a.formal_charge, "arom": a.aromatic, "h": a.h_count}
            for a in g.atoms
        ],
        "bonds": [[b.a, b.b, b.order] for b in g.bonds],
    }


def _graph_from_dict(obj: dict) -> MolGraph:
    if not isinstance(obj, dict):
        raise ValueError("graph object must be a JSON object")
    graph_id = obj.get("id")
    kind = obj.get("kind")
    if not isinstance(graph_id, str):
        raise ValueError("missing or non-string 'id'")
    if kind not in GRAPH_KINDS:
        raise ValueError(f"missing or unknown 'kind': {kind!r}")
    raw_atoms = obj.get("atoms")
    if not isinstance(raw_atoms, list):
        raise ValueError("missing 'atoms' list")
    atoms = []
    for entry in raw_atoms:
        if not isinstance(entry, dict) or not isinstance(entry.get("el"), str):
            raise ValueError(f"bad atom entry {entry!r}")
        chg = entry.get("chg", 0)
        arom = entry.get("arom", False)
        h = entry.get("h", 0)
        if not isinstance(chg, int) or isinstance(chg, bool):
            raise ValueError(f"bad charge {chg!r}")
        if not isinstance(arom, bool):
            raise ValueError(f"bad aromatic flag {arom!r}")
        if not isinstance(h, int) or isinstance(h, bool):
            raise ValueError(f"bad h count {h!r}")
        atoms.append(AtomRecord(entry["el"], chg, arom, h))
    bonds = []
    for entry in obj.get("bonds", []):
        if (
            not isinstance(entry, list)
            or len(entry) != 3
            or not isinstance(entry[0], int)
            or not isinstance(entry[1], int)
            or isinstance(entry[0], bool)
            or isinstance(entry[1], bool)
        ):
            raise ValueError(f"bad bond entry {entry!r}")
        bonds.append(Bond(entry[0], entry[1], entry[2]))
    return MolGraph(graph_id, kind, atoms, bonds)


def parse_graph_jsonl(path) -> list[MolGraph]:
    """Parse graphs from a JSONL file, aborting at the first offending line.

    Raises :class:`MalformedLine` for unreadable lines, and lets the graph
    construction errors (:class:`DanglingBond`, :class:`DegreeExceeded`)
    propagate with their graph id.
    """
    graphs = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(line_no, f"invalid JSON: {exc.msg}") from exc
            try:
                graphs.append(_graph_from_dict(obj))
            except (DanglingBond, DegreeExceeded):
                raise
            except (GraphError, ValueError) as exc:
                raise MalformedLine(line_no, str(exc)) from exc
    return graphs


def write_graphs_jsonl(graphs, path) -> None:
    """Write graphs one JSON object per line, in order."""
    with open(path, "w", encoding="utf-8") as handle:
        for g in graphs:
            handle.write(json.dumps(graph_to_dict(g), separators=(",", ":")))
            handle.write("\n")


# ------------------------------------------------------------------- SDF

_SDF_CHARGE_CODES = {0: 0, 1: 3, 2: 2, 3: 1, 4: 0, 5: -1, 6: -2, 7: -3}
_SDF_BOND_CODES = {1: "single", 2: "double", 3: "triple", 4: "aromatic"}


def _int_field(line: str, start: int, end: int, default: int | None = None) -> int:
    text = line[start:end].strip()
    if not text:
        if default is None:
            raise ValueError(f"empty integer field at columns {start + 1}-{end}")
        return default
    return int(text)


def _parse_sdf_record(lines: list[str], index: int) -> MolGraph:
    if len(lines) < 4:
        raise MalformedCounts(index, "record shorter than the 4 header lines")
    name = lines[0].strip()
    counts = lines[3]
    try:
        n_atoms = _int_field(counts, 0, 3)
        n_bonds = _int_field(counts, 3, 6)
    except ValueError as exc:
        raise MalformedCounts(index, f"unreadable counts line: {counts!r}") from exc
    if n_atoms < 0 or n_bonds < 0:
        raise MalformedCounts(index, f"negative counts in {counts!r}")
    version = counts[33:39].strip()
    if version != "V2000":
        raise UnsupportedVersion(index, f"connection table version {version or '?'!r}")
    if len(lines) < 4 + n_atoms + n_bonds:
        raise MalformedCounts(
            index, f"record has fewer lines than the declared {n_atoms} atoms "
            f"and {n_bonds} bonds"
        )

    elements: list[str] = []
    charges: list[int] = []
    for i in range(n_atoms):
        line = lines[4 + i]
        element = line[31:34].strip()
        if not element:
            raise MalformedRecord(index, f"atom {i + 1}: missing element symbol")
        elements.append(element)
        try:
            code = _int_field(line, 36, 39, default=0)
        except ValueError as exc:
            raise MalformedRecord(index, f"atom {i + 1}: bad charge code") from exc
        charges.append(_SDF_CHARGE_CODES.get(code, 0))

    bonds_raw: list[tuple[int, int, str]] = []
    aromatic = [False] * n_atoms
    for i in range(n_bonds):
        line = lines[4 + n_atoms + i]
        try:
            a = _int_field(line, 0, 3)
            b = _int_field(line, 3, 6)
            code = _int_field(line, 6, 9)
        except ValueError as exc:
            raise MalformedRecord(index, f"bond {i + 1}: unreadable fields") from exc
        order = _SDF_BOND_CODES.get(code)
        if order is None:
            raise MalformedRecord(index, f"bond {i + 1}: unsupported bond code {code}")
        if order == "aromatic":
            for end in (a - 1, b - 1):
                if 0 <= end < n_atoms:
                    aromatic[end] = True
        bonds_raw.append((a - 1, b - 1, order))

    # Property block: the first M CHG line supersedes every atom-block charge.
    saw_chg = False
    for line in lines[4 + n_atoms + n_bonds :]:
        if line.startswith("M  END"):
            break
        if not line.startswith("M  CHG"):
            continue
        if not saw_chg:
            charges = [0] * n_atoms
            saw_chg = True
        tokens = line.split()
        try:
            count = int(tokens[2])
            entries = [(int(tokens[3 + 2 * k]), int(tokens[4 + 2 * k])) for k in range(count)]
        except (IndexError, ValueError) as exc:
            raise MalformedRecord(index, f"unreadable M CHG line: {line!r}") from exc
        for atom_no, value in entries:
            if not (1 <= atom_no <= n_atoms):
                raise MalformedRecord(index, f"M CHG references atom {atom_no}")
            charges[atom_no - 1] = value

    atoms = [
        AtomRecord(elements[i], charges[i], aromatic[i], 0) for i in range(n_atoms)
    ]
    bonds = [Bond(a, b, order) for a, b, order in bonds_raw]
    graph_id = name if name else str(index)
    try:
        return MolGraph(graph_id, "compound", atoms, bonds)
    except (DanglingBond, DegreeExceeded):
        raise
    except GraphError as exc:
        raise MalformedRecord(index, str(exc)) from exc


def parse_sdf_v2000(path) -> list[MolGraph]:
    """Parse an MDL SD file (V2000 records only) into compound graphs.

    The record name line becomes the graph id (falling back to the record's
    ordinal index); errors carry the record index.
    """
    graphs = []
    record: list[str] = []
    index = 0
    with open(path, "r", encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n").rstrip("\r")
            if line.strip() == "$$$$":
                graphs.append(_parse_sdf_record(record, index))
                record = []
                index += 1
            else:
                record.append(line)
    if any(line.strip() for line in record):
        graphs.append(_parse_sdf_record(record, index))
    return graphs


# --------------------------------------------------------------- manifest


class ScreeningDataset:
    """Resolved manifest: graph tables plus positive and evaluation pairs."""

    def __init__(
        self,
        compounds: dict[str, MolGraph],
        pockets: dict[str, MolGraph],
        positives: list[PairSample],
        eval_pairs: list[PairSample] | None = None,
    ):
        self.compounds = compounds
        self.pockets = pockets
        self.positives = list(positives)
        self.eval_pairs = list(eval_pairs) if eval_pairs is not None else None
        self.compound_ids = list(compounds)
        self.pocket_ids = list(pockets)
        self._validate()

    def _validate(self):
        seen = set()
        for sample in self.positives:
            if sample.label != 1:
                raise ManifestError("positives must carry label 1")
            key = (sample.ligand_id, sample.pocket_id)
            if key in seen:
                raise ManifestError(f"duplicate positive pair {key!r}")
            seen.add(key)
            self._resolve(sample)
        for sample in self.eval_pairs or ():
            self._resolve(sample)

    def _resolve(self, sample: PairSample):
        ligand = self.compounds.get(sample.ligand_id)
        if ligand is None:
            if sample.ligand_id in self.pockets:
                raise KindMismatch(sample.ligand_id, "compound", "pocket")
            raise UnresolvedId(sample.ligand_id)
        pocket = self.pockets.get(sample.pocket_id)
        if pocket is None:
            if sample.pocket_id in self.compounds:
                raise KindMismatch(sample.pocket_id, "pocket", "compound")
            raise UnresolvedId(sample.pocket_id)

    def compound(self, graph_id: str) -> MolGraph:
        return self.compounds[graph_id]

    def pocket(self, graph_id: str) -> MolGraph:
        return self.pockets[graph_id]

    def pair_graphs(self, samples) -> list[tuple[MolGraph, MolGraph]]:
        return [(self.compounds[s.ligand_id], self.pockets[s.pocket_id]) for s in samples]

    def positive_pair_set(self) -> set[tuple[str, str]]:
        return {(s.ligand_id, s.pocket_id) for s in self.positives}

    def __repr__(self):
        n_eval = len(self.eval_pairs) if self.eval_pairs is not None else 0
        return (
            f"ScreeningDataset(compounds={len(self.compounds)}, "
            f"pockets={len(self.pockets)}, positives={len(self.positives)}, "
            f"eval_pairs={n_eval})"
        )


def _graph_table(graphs: list[MolGraph], kind: str, path) -> dict[str, MolGraph]:
    table: dict[str, MolGraph] = {}
    for g in graphs:
        if g.kind != kind:
            raise KindMismatch(g.id, kind, g.kind)
        if g.id in table:
            raise ManifestError(f"duplicate graph id {g.id!r} in {path}")
        table[g.id] = g
    return table


def load_manifest(path) -> ScreeningDataset:
    """Load a manifest and resolve every referenced graph id."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            manifest = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"invalid manifest JSON: {exc.msg}") from exc
    if not isinstance(manifest, dict):
        raise ManifestError("manifest must be a JSON object")
    for key in ("compounds", "pockets", "positives"):
        if key not in manifest:
            raise ManifestError(f"manifest is missing {key!r}")

    base = os.path.dirname(os.path.abspath(path))
    compounds_path = os.path.join(base, manifest["compounds"])
    pockets_path = os.path.join(base, manifest["pockets"])
    compounds = _graph_table(parse_graph_jsonl(compounds_path), "compound", compounds_path)
    pockets = _graph_table(parse_graph_jsonl(pockets_path), "pocket", pockets_path)

    positives = []
    for entry in manifest["positives"]:
        if not isinstance(entry, list) or len(entry) != 2:
            raise ManifestError(f"bad positive entry {entry!r}")
        positives.append(PairSample(str(entry[0]), str(entry[1]), 1))

    eval_pairs = None
    if manifest.get("eval_pairs") is not None:
        eval_pairs = []
        for entry in manifest["eval_pairs"]:
            if not isinstance(entry, list) or len(entry) != 3 or entry[2] not in (0, 1):
                raise ManifestError(f"bad eval_pairs entry {entry!r}")
            eval_pairs.append(PairSample(str(entry[0]), str(entry[1]), int(entry[2])))

    return ScreeningDataset(compounds, pockets, positives, eval_pairs)


def write_manifest(path, compounds_file: str, pockets_file: str, positives, eval_pairs=None):
    """Write a manifest JSON document; graph paths are kept as given."""
    doc = {
        "compounds": compounds_file,
        "pockets": pockets_file,
        "positives": [[s.ligand_id, s.pocket_id] for s in positives],
    }
    if eval_pairs is not None:
        doc["eval_pairs"] = [[s.ligand_id, s.pocket_id, s.label] for s in eval_pairs]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")
