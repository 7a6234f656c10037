"""Compile coloring sequences into measurement schedules."""

from __future__ import annotations

from dataclasses import dataclass, field

from .coloring import (
    Coloring,
    ColoringSequence,
    horizontal_strips,
    sequence_for_lattice,
    verify_sequence,
    vertical_strips,
)
from .lattice import XX, ZZ, Check, Dims, enumerate_checks


@dataclass(frozen=True)
class Step:
    phase: int
    kind: str
    checks: tuple[Check, ...]

    def __post_init__(self) -> None:
        if not self.checks:
            raise ValueError(f"step at phase {self.phase} measures nothing")
        if any(ch.kind != self.kind for ch in self.checks):
            raise ValueError(f"step at phase {self.phase} mixes check kinds")


@dataclass(frozen=True)
class Schedule:
    """A periodic list of steps, optionally preceded by bootstrap steps.

    Absolute step ``t`` runs ``bootstrap[t]`` while ``t < len(bootstrap)`` and
    ``steps[(t - len(bootstrap)) % period]`` afterwards.
    """

    dims: Dims
    steps: tuple[Step, ...]
    bootstrap: tuple[Step, ...] = field(default=())

    @property
    def period(self) -> int:
        return len(self.steps)

    @property
    def kind_of_phase(self) -> dict[int, str]:
        return {s.phase: s.kind for s in self.steps}

    def step_at(self, t: int) -> Step:
        nb = len(self.bootstrap)
        if t < nb:
            return self.bootstrap[t]
        return self.steps[(t - nb) % self.period]

    def phase_at(self, t: int) -> int:
        nb = len(self.bootstrap)
        return -1 if t < nb else (t - nb) % self.period

    def with_bootstrap(self, *check_sets: list[Check]) -> "Schedule":
        boot = []
        for checks in check_sets:
            ordered = tuple(sorted(set(checks), key=lambda c: c.sort_key))
            boot.append(Step(-1, ordered[0].kind, ordered))
        return Schedule(self.dims, self.steps, tuple(boot))

    def checks_per_cycle(self) -> int:
        return sum(len(s.checks) for s in self.steps)


def _strip_checks(strips: dict[int, list[tuple[int, int]]], kind: str, length: int) -> set[Check]:
    """Checks for strips over box indices [a, b]; ``length`` is the number of
    qubits along the strip direction."""
    out = set()
    for line, spans in strips.items():
        for a, b in spans:
            positions = set(range(a + 1, b + 1))
            if a == 0:
                positions.add(0)
            if b == length - 2:
                positions.add(length - 1)
            for pos in positions:
                if kind == XX:
                    out.add(Check(XX, pos, line))
                else:
                    out.add(Check(ZZ, line, pos))
    return out


def transition_measurements(
    c: Coloring, c2: Coloring, dims: Dims, boundary_seeds: bool = False
) -> set[Check]:
    """Checks to measure so that the coloring ``c`` becomes ``c2``."""
    if c.shape != (dims.box_rows, dims.box_cols):
        raise ValueError(f"coloring shape {c.shape} does not match {dims}")
    vs = vertical_strips(c, c2, boundary_seeds)
    hs = horizontal_strips(c, c2, boundary_seeds)
    if vs is None or hs is None:
        raise ValueError("invalid transition")
    return _strip_checks(vs, XX, dims.rows) | _strip_checks(hs, ZZ, dims.cols)


def build_schedule(
    seq: ColoringSequence, dims: Dims | None = None, boundary_seeds: bool = False
) -> Schedule:
    """Step ``p`` measures the transition from coloring ``p`` to ``p + 1``."""
    if dims is None:
        dims = Dims(seq.shape[0] + 1, seq.shape[1] + 1)
    if seq.shape != (dims.box_rows, dims.box_cols):
        raise ValueError(f"sequence box grid {seq.shape} does not match {dims}")
    report = verify_sequence(seq, boundary_seeds)
    if not report.overall:
        raise ValueError(f"coloring sequence does not verify:\n{report}")
    steps = []
    for p in range(seq.period):
        checks = transition_measurements(seq[p], seq[p + 1], dims, boundary_seeds)
        kinds = {ch.kind for ch in checks}
        if len(kinds) != 1:
            raise ValueError(f"transition {p} -> {p + 1} needs kinds {sorted(kinds)}")
        ordered = tuple(sorted(checks, key=lambda ch: ch.sort_key))
        steps.append(Step(p, kinds.pop(), ordered))
    return Schedule(dims, tuple(steps))


def standard_schedule(dims: Dims) -> Schedule:
    """All XX checks, then all ZZ checks."""
    allc = enumerate_checks(dims)
    xx = tuple(c for c in allc if c.kind == XX)
    zz = tuple(c for c in allc if c.kind == ZZ)
    return Schedule(dims, (Step(0, XX, xx), Step(1, ZZ, zz)))


def modified_schedule(rows: int, cols: int | None = None, boundary_seeds: bool = False) -> Schedule:
    """Period-4 schedule for a lattice, from the tiled and truncated 5x5 solution."""
    cols = rows if cols is None else cols
    seq = sequence_for_lattice(rows, cols, boundary_seeds)
    return build_schedule(seq, Dims(rows, cols), boundary_seeds)


def format_schedule(schedule: Schedule) -> str:
    lines = []
    for s in schedule.bootstrap:
        lines.append(f"phase -1 {s.kind}: " + " ".join(f"({c.row},{c.col})" for c in s.checks))
    for s in schedule.steps:
        lines.append(f"phase {s.phase} {s.kind}: " + " ".join(f"({c.row},{c.col})" for c in s.checks))
    return "\n".join(lines) + "\n"
