"""Exception hierarchy shared across the toolkit.

Every error raised on a malformed input, a shape violation, or a numeric
failure derives from :class:`MolScreenError`, so callers (and the CLI) can
distinguish structured failures from genuine bugs.
"""


class MolScreenError(Exception):
    """Base class for all molscreen errors."""


# ---------------------------------------------------------------- graphs


class GraphError(MolScreenError, ValueError):
    """A molecular graph violates a construction invariant."""


class DegreeExceeded(GraphError):
    """An atom has more than the maximum number of neighbors."""

    def __init__(self, graph_id: str, atom_index: int, degree: int):
        self.graph_id = graph_id
        self.atom_index = atom_index
        self.degree = degree
        super().__init__(
            f"graph {graph_id!r}: atom {atom_index} has degree {degree} (max 5)"
        )


class DanglingBond(GraphError):
    """A bond references an atom index outside the atom list."""

    def __init__(self, graph_id: str, bond: tuple):
        self.graph_id = graph_id
        self.bond = bond
        super().__init__(f"graph {graph_id!r}: bond {bond} references a missing atom")


# ---------------------------------------------------------------- parsing


class ParseError(MolScreenError, ValueError):
    """A file could not be parsed into valid graphs or samples."""


class MalformedLine(ParseError):
    """A JSONL line is not a valid graph object."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class SdfError(ParseError):
    """An SDF record could not be parsed; positions are record indices."""

    def __init__(self, record_index: int, reason: str):
        self.record_index = record_index
        self.reason = reason
        super().__init__(f"record {record_index}: {reason}")


class UnsupportedVersion(SdfError):
    """The connection table is not V2000."""


class MalformedCounts(SdfError):
    """The counts line of a record is unreadable."""


class MalformedRecord(SdfError):
    """An atom, bond, or property line of a record is unreadable."""


class ManifestError(MolScreenError, ValueError):
    """A dataset manifest is inconsistent."""


class UnresolvedId(ManifestError):
    """A manifest entry references an id with no parsed graph."""

    def __init__(self, graph_id: str):
        self.graph_id = graph_id
        super().__init__(f"id {graph_id!r} does not resolve to any parsed graph")


class KindMismatch(ManifestError):
    """A manifest entry resolves to a graph of the wrong kind."""

    def __init__(self, graph_id: str, expected: str, actual: str):
        self.graph_id = graph_id
        self.expected = expected
        self.actual = actual
        super().__init__(f"id {graph_id!r} is a {actual}, expected a {expected}")


# ---------------------------------------------------------------- numerics


class ShapeMismatch(MolScreenError, ValueError):
    """Array shapes are inconsistent with the parameter layout."""


class TapeMismatch(MolScreenError, ValueError):
    """A backward pass received a tape that does not match its inputs."""


class WidthMismatch(MolScreenError, ValueError):
    """Two fingerprints have different widths."""


class EmptyBatch(MolScreenError, ValueError):
    """A loss was requested for an empty batch."""


class DegenerateLabels(MolScreenError, ValueError):
    """A ranking metric was requested for single-class labels."""

    def __init__(self, message: str, target_id: str | None = None):
        self.target_id = target_id
        super().__init__(message)


class ExhaustedNegativeSpace(MolScreenError, ValueError):
    """Every (ligand, pocket) pair is a known positive; nothing to sample."""


class NonFiniteLoss(MolScreenError, ArithmeticError):
    """Training produced a non-finite objective."""

    def __init__(self, step: int, value: float):
        self.step = step
        self.value = value
        super().__init__(f"non-finite loss {value!r} at optimization step {step}")


class SpecInfeasible(MolScreenError, ValueError):
    """A synthetic dataset specification cannot be satisfied."""
