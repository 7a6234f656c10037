"""Bacon-Shor lattice geometry.

Conventions used throughout the package:

* qubits sit at ``(row, col)`` with row 0 at the bottom and col 0 at the left;
* an ``XX`` check is the horizontal edge ``(r, c)-(r, c+1)``;
* a ``ZZ`` check is the vertical edge ``(r, c)-(r+1, c)``;
* box ``(br, bc)`` has corners ``(br, bc)`` .. ``(br+1, bc+1)``. Its gauge X
  operator is the product of the XX checks strictly above it in its column
  pair, its gauge Z operator the product of ZZ checks strictly to its right.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

XX = "XX"
ZZ = "ZZ"


@dataclass(frozen=True)
class Dims:
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 2 or self.cols < 2:
            raise ValueError(f"lattice must be at least 2x2, got {self.rows}x{self.cols}")

    @classmethod
    def square(cls, d: int) -> "Dims":
        return cls(d, d)

    @property
    def num_qubits(self) -> int:
        return self.rows * self.cols

    @property
    def box_rows(self) -> int:
        return self.rows - 1

    @property
    def box_cols(self) -> int:
        return self.cols - 1

    def qubit_index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def qubits(self) -> Iterator[tuple[int, int]]:
        for r in range(self.rows):
            for c in range(self.cols):
                yield (r, c)


class Check(NamedTuple):
    """A two-qubit check, identified by its kind and lower/left endpoint."""

    kind: str
    row: int
    col: int

    @property
    def qubits(self) -> tuple[tuple[int, int], tuple[int, int]]:
        if self.kind == XX:
            return (self.row, self.col), (self.row, self.col + 1)
        return (self.row, self.col), (self.row + 1, self.col)

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (0 if self.kind == XX else 1, self.row, self.col)

    def is_valid(self, dims: Dims) -> bool:
        if not (0 <= self.row < dims.rows and 0 <= self.col < dims.cols):
            return False
        if self.kind == XX:
            return self.col <= dims.cols - 2
        if self.kind == ZZ:
            return self.row <= dims.rows - 2
        return False

    def __str__(self) -> str:
        return f"{self.kind}({self.row},{self.col})"


class Box(NamedTuple):
    brow: int
    bcol: int

    @property
    def corners(self) -> tuple[tuple[int, int], ...]:
        r, c = self.brow, self.bcol
        return (r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)


def enumerate_checks(dims: Dims) -> list[Check]:
    """All checks in canonical order: XX row-major, then ZZ row-major."""
    out = [Check(XX, r, c) for r in range(dims.rows) for c in range(dims.cols - 1)]
    out += [Check(ZZ, r, c) for r in range(dims.rows - 1) for c in range(dims.cols)]
    return out


def gauge_support(box: Box, kind: str, dims: Dims) -> set[Check]:
    """Checks whose product is the gauge X (``kind="X"``) or Z operator of ``box``."""
    if not (0 <= box.brow < dims.box_rows and 0 <= box.bcol < dims.box_cols):
        raise ValueError(f"box {box} outside {dims}")
    if kind == "X":
        return {Check(XX, r, box.bcol) for r in range(box.brow + 1, dims.rows)}
    if kind == "Z":
        return {Check(ZZ, box.brow, c) for c in range(box.bcol + 1, dims.cols)}
    raise ValueError(f"kind must be 'X' or 'Z', got {kind!r}")


def column_stabilizer(bcol: int, dims: Dims) -> set[Check]:
    return {Check(XX, r, bcol) for r in range(dims.rows)}


def row_stabilizer(brow: int, dims: Dims) -> set[Check]:
    return {Check(ZZ, brow, c) for c in range(dims.cols)}


def code_parameters(dims: Dims) -> tuple[int, int, int, int]:
    """Return ``(n, s, g, k)``: qubits, stabilizer rank, gauge qubits, logical qubits."""
    n = dims.rows * dims.cols
    s = (dims.rows - 1) + (dims.cols - 1)
    g = (dims.rows - 1) * (dims.cols - 1)
    return n, s, g, n - g - s


def logical_supports(dims: Dims) -> tuple[set[tuple[int, int]], set[tuple[int, int]]]:
    """Supports of logical X (qubit column 0) and logical Z (qubit row 0)."""
    lx = {(r, 0) for r in range(dims.rows)}
    lz = {(0, c) for c in range(dims.cols)}
    return lx, lz


def anticommutes(a: Check, b: Check) -> bool:
    """Two checks anticommute iff they are of different kind and share one qubit."""
    if a.kind == b.kind:
        return False
    return len(set(a.qubits) & set(b.qubits)) % 2 == 1
