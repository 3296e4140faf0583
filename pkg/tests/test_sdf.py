import os

import numpy as np
import pytest

from molscreen import (
    MalformedCounts,
    MolScreenError,
    SdfError,
    UnsupportedVersion,
    parse_sdf_v2000,
)


def test_golden_file(data_dir):
    graphs = parse_sdf_v2000(os.path.join(data_dir, "golden.sdf"))
    assert [g.id for g in graphs] == ["mol-a", "mol-chg", "mol-ring", "3"]

    minimal = graphs[0]
    assert [a.element for a in minimal.atoms] == ["C", "O"]
    assert len(minimal.bonds) == 1 and minimal.bonds[0].order == "single"
    assert all(a.h_count == 0 for a in minimal.atoms)

    # M CHG supersedes every atom-block charge code: N(+1)->-1, O(-1)->0
    charged = graphs[1]
    assert [a.formal_charge for a in charged.atoms] == [-1, 0, 0]
    assert charged.bonds[1].order == "double"

    ring = graphs[2]
    assert all(b.order == "aromatic" for b in ring.bonds)
    assert all(a.aromatic for a in ring.atoms)

    # unnamed record falls back to its ordinal index; Fe is outside the vocabulary
    assert graphs[3].atoms[0].element == "X"


def _record(counts_line, body=()):
    return "\n".join(["name", "  prog", "", counts_line, *body, "M  END", "$$$$"]) + "\n"


def test_v3000_rejected(tmp_path):
    path = tmp_path / "v3000.sdf"
    path.write_text(_record("  0  0  0  0  0  0  0  0  0  0999 V3000"))
    with pytest.raises(UnsupportedVersion) as info:
        parse_sdf_v2000(path)
    assert info.value.record_index == 0


def test_malformed_counts(tmp_path):
    path = tmp_path / "bad.sdf"
    path.write_text(_record("  x  1  0  0  0  0  0  0  0  0999 V2000"))
    with pytest.raises(MalformedCounts):
        parse_sdf_v2000(path)


def test_error_position_is_record_index(tmp_path):
    ok = _record(
        "  1  0  0  0  0  0  0  0  0  0999 V2000",
        ["    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0"],
    )
    bad = _record("garbage")
    path = tmp_path / "mixed.sdf"
    path.write_text(ok + bad)
    with pytest.raises(SdfError) as info:
        parse_sdf_v2000(path)
    assert info.value.record_index == 1


def test_truncated_record_rejected(tmp_path):
    path = tmp_path / "short.sdf"
    path.write_text(_record("  2  1  0  0  0  0  0  0  0  0999 V2000"))
    with pytest.raises(MalformedCounts):
        parse_sdf_v2000(path)


def test_fuzzed_records_never_crash(data_dir, tmp_path):
    """Byte-level mutations of the golden file: structured errors only."""
    base = open(os.path.join(data_dir, "golden.sdf"), "rb").read()
    rng = np.random.default_rng(77)
    path = tmp_path / "fuzz.sdf"
    errors = 0
    for _ in range(2000):
        data = bytearray(base)
        for _ in range(int(rng.integers(1, 8))):
            pos = int(rng.integers(0, len(data)))
            data[pos] = int(rng.integers(32, 127))
        path.write_bytes(bytes(data))
        try:
            for g in parse_sdf_v2000(path):
                assert g.n_atoms >= 1
                assert all(len(g.neighbors(i)) <= 5 for i in range(g.n_atoms))
        except MolScreenError:
            errors += 1
        except (UnicodeDecodeError, ValueError):
            # int() in fixed-width fields surfaces as MolScreenError; nothing
            # else should leak through
            raise
    assert errors > 0
