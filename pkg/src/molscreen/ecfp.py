"""Extended-connectivity fingerprints by iterated neighborhood hashing.

The algorithm is pinned for bit-exactness across runs and platforms:

1. Every atom gets an initial 64-bit identifier: FNV-1a over the byte
   serialization ``element code (u8), degree (u8), formal charge (i8),
   aromatic (u8), h_count (u8)``.
2. For each round ``r = 1..radius`` the identifier is rehashed together with
   the previous-round identifiers of all neighbors, each prefixed by its
   bond-order code and visited in ascending ``(bond code, identifier)``
   order, which makes the result independent of atom numbering.
3. The union of identifiers over all rounds is deduplicated and folded into
   a fixed-width vector at index ``identifier mod width`` (set a bit, or
   count distinct identifiers per bucket when ``counted``).

FNV-1a was chosen because it is fully specified by two constants and needs
no library support; folding is by modulo so the width need not be a power
of two.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import WidthMismatch
from .graphs import BOND_ORDER_CODE, ELEMENT_INDEX, MolGraph
from .validation import ensure_molgraphs

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

MAX_RADIUS = 8


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash with the standard offset basis and prime."""
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class EcfpConfig:
    """Hashed-fingerprint settings: neighborhood radius, folded width, counting."""

    radius: int = 2
    width: int = 4096
    counted: bool = False

    def __post_init__(self):
        if not (0 <= self.radius <= MAX_RADIUS):
            raise ValueError(f"radius {self.radius} outside [0, {MAX_RADIUS}]")
        if self.width < 2:
            raise ValueError(f"width {self.width} must be at least 2")


@dataclass(frozen=True)
class EcfpFingerprint:
    """A folded fingerprint vector together with the settings that made it."""

    values: np.ndarray
    config: EcfpConfig

    @property
    def width(self) -> int:
        return self.config.width


def _initial_identifiers(g: MolGraph) -> list[int]:
    ids = []
    for m, atom in enumerate(g.atoms):
        data = struct.pack(
            "<BBbBB",
            ELEMENT_INDEX[atom.element],
            g.degree(m),
            atom.formal_charge,
            int(atom.aromatic),
            min(atom.h_count, 255),
        )
        ids.append(fnv1a64(data))
    return ids


def ecfp_identifiers(g: MolGraph, radius: int) -> set[int]:
    """Distinct 64-bit substructure identifiers over rounds 0..radius."""
    ids = _initial_identifiers(g)
    seen = set(ids)
    for r in range(1, radius + 1):
        nxt = []
        for m in range(g.n_atoms):
            parts = [struct.pack("<BQ", r, ids[m])]
            nbrs = sorted(
                (BOND_ORDER_CODE[g.bond_order(m, i)], ids[i]) for i in g.neighbors(m)
            )
            for code, nid in nbrs:
                parts.append(struct.pack("<BQ", code, nid))
            nxt.append(fnv1a64(b"".join(parts)))
        ids = nxt
        seen.update(ids)
    return seen


def ecfp(g: MolGraph, config: EcfpConfig = EcfpConfig()) -> EcfpFingerprint:
    """Hashed fingerprint of one graph, folded to ``config.width`` entries."""
    identifiers = ecfp_identifiers(g, config.radius)
    if config.counted:
        values = np.zeros(config.width, dtype=np.uint32)
        for ident in sorted(identifiers):
            values[ident % config.width] += 1
    else:
        values = np.zeros(config.width, dtype=np.uint8)
        for ident in identifiers:
            values[ident % config.width] = 1
    return EcfpFingerprint(values, config)


def tanimoto(a: EcfpFingerprint, b: EcfpFingerprint) -> float:
    """Jaccard similarity of two bit fingerprints; 1.0 when both are empty."""
    if a.width != b.width:
        raise WidthMismatch(f"fingerprint widths differ: {a.width} vs {b.width}")
    if a.config.counted or b.config.counted:
        raise ValueError("tanimoto is defined for bit fingerprints, not counted ones")
    intersection = int(np.sum((a.values != 0) & (b.values != 0)))
    union = int(np.sum((a.values != 0) | (b.values != 0)))
    if union == 0:
        return 1.0
    return intersection / union


def fingerprint_hex(values: np.ndarray) -> str:
    """Hex encoding of a bit vector: bit ``i`` is the MSB-first bit ``i`` of
    the packed byte string, zero-padded to a whole byte."""
    packed = np.packbits(np.asarray(values, dtype=np.uint8), bitorder="big")
    return packed.tobytes().hex()


class EcfpFingerprinter(TransformerMixin, BaseEstimator):
    """Stateless transformer from molecular graphs to hashed fingerprints.

    Parameters
    ----------
    radius : int, default=2
        Number of neighborhood-hashing rounds.
    width : int, default=4096
        Folded vector length.
    counted : bool, default=False
        Count distinct identifiers per bucket instead of setting bits.
    """

    def __init__(self, radius: int = 2, width: int = 4096, counted: bool = False):
        self.radius = radius
        self.width = width
        self.counted = counted

    def _config(self) -> EcfpConfig:
        return EcfpConfig(radius=self.radius, width=self.width, counted=self.counted)

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X) -> np.ndarray:
        """Fingerprint matrix with one row per input graph."""
        graphs = ensure_molgraphs(X)
        config = self._config()
        dtype = np.uint32 if config.counted else np.uint8
        out = np.zeros((len(graphs), config.width), dtype=dtype)
        for i, g in enumerate(graphs):
            out[i] = ecfp(g, config).values
        return out
