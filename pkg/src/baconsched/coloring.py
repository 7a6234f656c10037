"""The coloring game on the box grid.

A box painted Red has its gauge X operator fixed, Blue its gauge Z operator.
A Red box may grow into a vertical strip in the next coloring, a Blue box
into a horizontal strip; every other box keeps its color.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

RED = "R"
BLUE = "B"


@dataclass(frozen=True)
class Coloring:
    """Box colors, ``grid[br][bc]``, bottom box-row first."""

    grid: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.grid or not self.grid[0]:
            raise ValueError("empty coloring")
        width = len(self.grid[0])
        for row in self.grid:
            if len(row) != width:
                raise ValueError("ragged coloring grid")
            if set(row) - {RED, BLUE}:
                raise ValueError(f"coloring rows may only contain R/B, got {row!r}")

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "Coloring":
        return cls(tuple(rows))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.grid), len(self.grid[0])

    def __getitem__(self, idx: tuple[int, int]) -> str:
        br, bc = idx
        return self.grid[br][bc]

    def column(self, bc: int) -> str:
        return "".join(row[bc] for row in self.grid)

    def row(self, br: int) -> str:
        return self.grid[br]

    def __str__(self) -> str:
        return "\n".join(self.grid)


@dataclass(frozen=True)
class ColoringSequence:
    colorings: tuple[Coloring, ...]

    def __post_init__(self) -> None:
        if not self.colorings:
            raise ValueError("sequence must contain at least one coloring")
        shapes = {c.shape for c in self.colorings}
        if len(shapes) != 1:
            raise ValueError(f"colorings disagree on shape: {sorted(shapes)}")

    @property
    def period(self) -> int:
        return len(self.colorings)

    @property
    def shape(self) -> tuple[int, int]:
        return self.colorings[0].shape

    def __getitem__(self, i: int) -> Coloring:
        return self.colorings[i % self.period]

    def __len__(self) -> int:
        return self.period


@dataclass
class VerifyReport:
    valid_transitions: list[bool]
    columns_all_red: list[bool]
    rows_all_blue: list[bool]
    objective_b: list[bool]
    overall: bool = field(init=False)

    def __post_init__(self) -> None:
        self.overall = (
            all(self.valid_transitions)
            and all(self.columns_all_red)
            and all(self.rows_all_blue)
            and all(self.objective_b)
        )

    def __str__(self) -> str:
        def flags(xs: Sequence[bool]) -> str:
            return "".join("1" if x else "0" for x in xs)

        return "\n".join(
            [
                f"transitions: {flags(self.valid_transitions)}",
                f"objective_a columns: {flags(self.columns_all_red)}",
                f"objective_a rows: {flags(self.rows_all_blue)}",
                f"objective_b: {flags(self.objective_b)}",
                f"overall: {'PASS' if self.overall else 'FAIL'}",
            ]
        )


def runs(line: str, color: str) -> list[tuple[int, int]]:
    """Maximal runs ``[a, b]`` (inclusive) of ``color`` in ``line``."""
    out = []
    start = None
    for i, ch in enumerate(line):
        if ch == color and start is None:
            start = i
        elif ch != color and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(line) - 1))
    return out


def _line_strips(
    before: str, after: str, color: str, boundary_seed: bool = False
) -> list[tuple[int, int]] | None:
    """Strips turning ``before`` into ``after`` along one line.

    Each maximal run of ``color`` in ``after`` that contains a changed box is
    one strip spanning the whole run, so a run covering the full line
    measures every check on it. Returns None if such a run has no seed. With
    ``boundary_seed`` a run touching the far end of the line (top of a
    column, right of a row) is seeded by the boundary check, whose
    measurement alone fixes that box.
    """
    strips = []
    last = len(after) - 1
    for a, b in runs(after, color):
        if all(before[i] == color for i in range(a, b + 1)):
            continue
        if not any(before[i] == color for i in range(a, b + 1)):
            if not (boundary_seed and b == last):
                return None
        strips.append((a, b))
    return strips


def vertical_strips(
    c: Coloring, c2: Coloring, boundary_seeds: bool = False
) -> dict[int, list[tuple[int, int]]] | None:
    """Red strips per box-column, or None if the move is illegal."""
    out = {}
    for bc in range(c.shape[1]):
        s = _line_strips(c.column(bc), c2.column(bc), RED, boundary_seeds)
        if s is None:
            return None
        if s:
            out[bc] = s
    return out


def horizontal_strips(
    c: Coloring, c2: Coloring, boundary_seeds: bool = False
) -> dict[int, list[tuple[int, int]]] | None:
    """Blue strips per box-row, or None if the move is illegal."""
    out = {}
    for br in range(c.shape[0]):
        s = _line_strips(c.row(br), c2.row(br), BLUE, boundary_seeds)
        if s is None:
            return None
        if s:
            out[br] = s
    return out


def is_valid_transition(c: Coloring, c2: Coloring, boundary_seeds: bool = False) -> bool:
    """True iff ``c2`` follows ``c`` under the strip moves.

    A move is legal iff every maximal vertical Red run of ``c2`` that contains
    a box not Red in ``c`` also contains a box Red in ``c``, and likewise for
    horizontal Blue runs.
    """
    if c.shape != c2.shape:
        raise ValueError(f"shape mismatch: {c.shape} vs {c2.shape}")
    return (
        vertical_strips(c, c2, boundary_seeds) is not None
        and horizontal_strips(c, c2, boundary_seeds) is not None
    )


def verify_sequence(seq: ColoringSequence, boundary_seeds: bool = False) -> VerifyReport:
    nbr, nbc = seq.shape
    transitions = [
        is_valid_transition(seq[i], seq[i + 1], boundary_seeds) for i in range(seq.period)
    ]
    cols = [any(set(c.column(bc)) == {RED} for c in seq.colorings) for bc in range(nbc)]
    rows = [any(set(c.row(br)) == {BLUE} for c in seq.colorings) for br in range(nbr)]
    obj_b = [
        all(RED in c.column(bc) for bc in range(nbc)) and all(BLUE in c.row(br) for br in range(nbr))
        for c in seq.colorings
    ]
    return VerifyReport(transitions, cols, rows, obj_b)


_CANONICAL_5X5 = (
    ("RRBR", "RRBR", "RBRR", "RBRR"),
    ("BBBB", "RRBB", "BBRR", "BBBB"),
    ("RRRB", "RRRB", "BRRR", "BRRR"),
    ("RRBB", "BBBB", "BBBB", "BBRR"),
)


def canonical_sequence_5x5() -> ColoringSequence:
    """Period-4 solution on the 4x4 box grid of a 5x5 lattice."""
    return ColoringSequence(tuple(Coloring(rows) for rows in _CANONICAL_5X5))


def tile_sequence(seq: ColoringSequence, copies_v: int, copies_h: int) -> ColoringSequence:
    """Stack ``copies_v`` x ``copies_h`` copies of every coloring."""
    if copies_v < 1 or copies_h < 1:
        raise ValueError("tile counts must be positive")
    tiled = []
    for c in seq.colorings:
        rows = [row * copies_h for row in c.grid]
        tiled.append(Coloring(tuple(rows * copies_v)))
    return ColoringSequence(tuple(tiled))


class TruncationError(ValueError):
    pass


def truncate_sequence(
    seq: ColoringSequence, box_rows: int, box_cols: int, boundary_seeds: bool = False
) -> ColoringSequence:
    """Keep the bottom-left ``box_rows`` x ``box_cols`` corner of every coloring.

    Raises TruncationError if the result does not verify. Cutting a tiled
    5x5 solution at an odd number of boxes strands a strip without its seed;
    such sizes only verify with ``boundary_seeds=True``.
    """
    nbr, nbc = seq.shape
    if not (1 <= box_rows <= nbr and 1 <= box_cols <= nbc):
        raise ValueError(f"cannot truncate {nbr}x{nbc} boxes to {box_rows}x{box_cols}")
    out = ColoringSequence(
        tuple(Coloring(tuple(row[:box_cols] for row in c.grid[:box_rows])) for c in seq.colorings)
    )
    report = verify_sequence(out, boundary_seeds)
    if not report.overall:
        raise TruncationError(f"truncation to {box_rows}x{box_cols} boxes is not a solution:\n{report}")
    return out


def sequence_for_lattice(
    rows: int, cols: int | None = None, boundary_seeds: bool = False
) -> ColoringSequence:
    """Tile the 5x5 solution until it covers the lattice, then truncate."""
    cols = rows if cols is None else cols
    base = canonical_sequence_5x5()
    bh, bw = base.shape
    nv = -(-(rows - 1) // bh)
    nh = -(-(cols - 1) // bw)
    return truncate_sequence(tile_sequence(base, nv, nh), rows - 1, cols - 1, boundary_seeds)


# -- text format ---------------------------------------------------------


def format_sequence(seq: ColoringSequence) -> str:
    nbr, nbc = seq.shape
    blocks = ["\n".join(c.grid) for c in seq.colorings]
    return f"period {seq.period} boxrows {nbr} boxcols {nbc}\n" + "\n\n".join(blocks) + "\n"


def parse_sequence(text: str) -> ColoringSequence:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty coloring file")
    head = lines[0].split()
    if len(head) != 6 or head[0] != "period" or head[2] != "boxrows" or head[4] != "boxcols":
        raise ValueError(f"line 1: bad header {lines[0]!r}")
    period, nbr, nbc = int(head[1]), int(head[3]), int(head[5])
    body = [ln.strip() for ln in lines[1:]]
    blocks: list[list[str]] = []
    cur: list[str] = []
    for ln in body:
        if ln:
            cur.append(ln)
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    if len(blocks) != period:
        raise ValueError(f"expected {period} colorings, found {len(blocks)}")
    colorings = []
    for i, blk in enumerate(blocks):
        if len(blk) != nbr or any(len(r) != nbc for r in blk):
            raise ValueError(f"coloring {i}: expected {nbr} rows of {nbc} boxes")
        colorings.append(Coloring(tuple(blk)))
    return ColoringSequence(tuple(colorings))


def load_sequence(path: str | Path) -> ColoringSequence:
    return parse_sequence(Path(path).read_text())
