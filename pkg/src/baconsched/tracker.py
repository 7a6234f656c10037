"""Dynamical detector extraction.

Every XX check lies in exactly one box-column and every ZZ check in exactly one
box-row, so X-type products are tracked per box-column ("X sector") and
Z-type products per box-row ("Z sector"). A sector holds a GF(2) basis of
check-products whose value is currently fixed, each paired with the set of
measurements ("history") that determined that value. Rowsets and histories are
int bitsets: bit ``r`` of an X-sector rowset is the XX check at qubit row
``r``; bit ``k`` of a history is measurement record ``k``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .lattice import XX, ZZ, Check, Dims
from .schedule import Schedule

FINAL = -1


@dataclass(frozen=True)
class MeasurementRef:
    """Measurement record entry: a check at a step, or a final single-qubit readout."""

    time: int
    check: Check | None = None
    qubit: tuple[int, int] | None = None

    @property
    def qubits(self) -> tuple[tuple[int, int], ...]:
        if self.check is not None:
            return self.check.qubits
        return (self.qubit,)

    @property
    def is_final(self) -> bool:
        return self.time == FINAL


@dataclass(frozen=True)
class Detector:
    refs: tuple[int, ...]
    basis: str  # "X" or "Z": the Pauli type of the measured operators

    def measurements(self, record: list[MeasurementRef]) -> list[MeasurementRef]:
        return [record[k] for k in self.refs]

    def weight(self, record: list[MeasurementRef]) -> int:
        return sum(len(record[k].qubits) for k in self.refs)

    def support(self, record: list[MeasurementRef]) -> set[tuple[int, int]]:
        out: set[tuple[int, int]] = set()
        for k in self.refs:
            out.update(record[k].qubits)
        return out

    def steps(self, record: list[MeasurementRef]) -> set[int]:
        return {record[k].time for k in self.refs}


def _bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


class Sector:
    """Reduced-echelon GF(2) basis of fixed check-products with histories."""

    __slots__ = ("pivots",)

    def __init__(self) -> None:
        self.pivots: dict[int, tuple[int, int]] = {}  # pivot bit -> (vec, hist)

    def reduce(self, vec: int) -> tuple[int, int, list[int]]:
        hist = 0
        used = []
        for p, (v, h) in self.pivots.items():
            if (vec >> p) & 1:
                vec ^= v
                hist ^= h
                used.append(p)
        return vec, hist, used

    def insert(self, vec: int, hist: int) -> None:
        vec, h, _ = self.reduce(vec)
        if not vec:
            return
        hist ^= h
        p = (vec & -vec).bit_length() - 1
        for q, (v, hq) in list(self.pivots.items()):
            if (v >> p) & 1:
                self.pivots[q] = (v ^ vec, hq ^ hist)
        self.pivots[p] = (vec, hist)

    def kill(self, functional) -> None:
        """Restrict to the kernel of ``functional`` (a vec -> 0/1 map)."""
        bad = [(v, h) for v, h in self.pivots.values() if functional(v)]
        if not bad:
            return
        keep = [(v, h) for v, h in self.pivots.values() if not functional(v)]
        v0, h0 = bad[0]
        keep += [(v ^ v0, h ^ h0) for v, h in bad[1:]]
        self.pivots = {}
        for v, h in keep:
            self.insert(v, h)

    def learn(self, bit: int, rec: int) -> int | None:
        """Record a measurement of the singleton ``bit``; return the detector
        history if the value was already fixed."""
        single = 1 << bit
        rest, hist, used = self.reduce(single)
        if rest:
            self.insert(single, 1 << rec)
            return None
        # swap one vector of the representation for the fresh singleton
        drop = bit if bit in used else used[0]
        del self.pivots[drop]
        kept = list(self.pivots.values())
        self.pivots = {}
        for v, h in kept:
            self.insert(v, h)
        self.insert(single, 1 << rec)
        return hist ^ (1 << rec)

    def items(self) -> list[tuple[int, int]]:
        return [self.pivots[p] for p in sorted(self.pivots)]


@dataclass
class TrackerResult:
    dims: Dims
    record: list[MeasurementRef]
    detectors: list[Detector]
    step_offsets: list[int]  # record index of the first measurement of each step
    states: list[tuple] = field(default_factory=list)

    def detector_steps(self, det: Detector) -> set[int]:
        return det.steps(self.record)

    def weight(self, det: Detector) -> int:
        return det.weight(self.record)

    def support(self, det: Detector) -> set[tuple[int, int]]:
        return det.support(self.record)

    def format(self) -> str:
        lines = []
        for i, det in enumerate(self.detectors):
            parts = []
            for k in det.refs:
                ref = self.record[k]
                if ref.check is not None:
                    parts.append(f"({ref.time}, {ref.check.kind}, {ref.check.row}, {ref.check.col})")
                else:
                    parts.append(f"(F, Q, {ref.qubit[0]}, {ref.qubit[1]})")
            lines.append(f"D {i}: " + " ".join(parts) + f" | weight={self.weight(det)}")
        return "\n".join(lines) + ("\n" if lines else "")


def _snapshot(xs: list[Sector], zs: list[Sector], record: list[MeasurementRef], now: int) -> tuple:
    """Sector state with histories expressed relative to step ``now``."""

    def rel(hist: int) -> tuple:
        return tuple(sorted((record[k].time - now, record[k].check) for k in _bits(hist)))

    return (
        tuple(tuple((v, rel(h)) for v, h in s.items()) for s in xs),
        tuple(tuple((v, rel(h)) for v, h in s.items()) for s in zs),
    )


def run_tracker(
    schedule: Schedule,
    num_steps: int,
    init_basis: str = "X",
    with_final_readout: bool = False,
    keep_states: bool = False,
) -> TrackerResult:
    """Execute ``num_steps`` steps from a product-state initialization and
    return every detector closed along the way."""
    if init_basis not in ("X", "Z"):
        raise ValueError(f"init_basis must be 'X' or 'Z', got {init_basis!r}")
    dims = schedule.dims
    xs = [Sector() for _ in range(dims.box_cols)]
    zs = [Sector() for _ in range(dims.box_rows)]
    init = xs if init_basis == "X" else zs
    length = dims.rows if init_basis == "X" else dims.cols
    for s in init:
        for b in range(length):
            s.insert(1 << b, 0)

    record: list[MeasurementRef] = []
    detectors: list[Detector] = []
    offsets: list[int] = []
    states: list[tuple] = []

    for t in range(num_steps):
        step = schedule.step_at(t)
        offsets.append(len(record))
        # kill opposite-sector vectors that anticommute with a measured check
        for ch in step.checks:
            if ch.kind == ZZ:
                r, c = ch.row, ch.col
                f = lambda v, r=r: ((v >> r) ^ (v >> (r + 1))) & 1
                for bc in (c - 1, c):
                    if 0 <= bc < dims.box_cols:
                        xs[bc].kill(f)
            else:
                r, c = ch.row, ch.col
                f = lambda v, c=c: ((v >> c) ^ (v >> (c + 1))) & 1
                for br in (r - 1, r):
                    if 0 <= br < dims.box_rows:
                        zs[br].kill(f)
        for ch in step.checks:
            rec = len(record)
            record.append(MeasurementRef(t, check=ch))
            if ch.kind == XX:
                hist = xs[ch.col].learn(ch.row, rec)
                basis = "X"
            else:
                hist = zs[ch.row].learn(ch.col, rec)
                basis = "Z"
            if hist is not None:
                detectors.append(Detector(tuple(_bits(hist)), basis))
        if keep_states:
            states.append(_snapshot(xs, zs, record, t))

    if with_final_readout:
        base = len(record)
        for r, c in dims.qubits():
            record.append(MeasurementRef(FINAL, qubit=(r, c)))
        if init_basis == "X":
            for bc, s in enumerate(xs):
                for v, h in s.items():
                    q = 0
                    for r in _bits(v):
                        q ^= 1 << (base + dims.qubit_index(r, bc))
                        q ^= 1 << (base + dims.qubit_index(r, bc + 1))
                    detectors.append(Detector(tuple(_bits(h ^ q)), "X"))
        else:
            for br, s in enumerate(zs):
                for v, h in s.items():
                    q = 0
                    for c in _bits(v):
                        q ^= 1 << (base + dims.qubit_index(br, c))
                        q ^= 1 << (base + dims.qubit_index(br + 1, c))
                    detectors.append(Detector(tuple(_bits(h ^ q)), "Z"))

    return TrackerResult(dims, record, detectors, offsets, states)


def pauli_cancels(det: Detector, record: list[MeasurementRef]) -> bool:
    """True iff the product of the detector's measured Paulis is the identity."""
    parity: Counter = Counter()
    for k in det.refs:
        for q in record[k].qubits:
            parity[q] ^= 1
    return not any(parity.values())


@dataclass
class CensusReport:
    count: int
    max_weight: int
    histogram: dict[int, int]
    covered: int
    num_qubits: int
    participating: int
    check_instances: int

    @property
    def participation(self) -> float:
        return self.participating / self.check_instances if self.check_instances else 1.0

    def __str__(self) -> str:
        hist = " ".join(f"{w}:{n}" for w, n in sorted(self.histogram.items()))
        return (
            f"detectors={self.count} max_weight={self.max_weight} "
            f"coverage={self.covered}/{self.num_qubits} "
            f"participation={100 * self.participation:.0f}% "
            f"({self.participating}/{self.check_instances})\nweights {hist}"
        )


def detector_census(schedule: Schedule, cycles: int = 4, bases: tuple[str, ...] = ("X", "Z")) -> CensusReport:
    """Census of steady-state detectors over ``cycles`` periods.

    Steady-state detectors are those whose earliest measurement lies at or
    after step ``R`` (one full period after the start). Participation is
    assessed for check instances in steps ``[R, (cycles - 1) R)``, leaving the
    last cycle to close detectors that start near the end of the window; a
    detector reaching back before step ``R`` still counts for participation.
    """
    if cycles < 3:
        raise ValueError("census needs at least 3 cycles")
    period = schedule.period
    start = len(schedule.bootstrap) + period
    stop = len(schedule.bootstrap) + (cycles - 1) * period
    n_steps = len(schedule.bootstrap) + cycles * period
    weights: Counter = Counter()
    covered: set = set()
    count = 0
    participating = 0
    instances = 0
    for basis in bases:
        res = run_tracker(schedule, n_steps, basis)
        used: set[int] = set()
        for det in res.detectors:
            if len(bases) > 1 and det.basis != basis:
                continue
            # a steady-state check may close a detector that opened earlier
            used.update(det.refs)
            if min(res.detector_steps(det)) < start:
                continue
            count += 1
            weights[res.weight(det)] += 1
            covered |= res.support(det)
        # with both bases, each run contributes its own sector type only
        for k, ref in enumerate(res.record):
            if start <= ref.time < stop:
                kind_basis = "X" if ref.check.kind == XX else "Z"
                if kind_basis == basis or len(bases) == 1:
                    instances += 1
                    participating += k in used
    return CensusReport(
        count=count,
        max_weight=max(weights) if weights else 0,
        histogram=dict(weights),
        covered=len(covered),
        num_qubits=schedule.dims.num_qubits,
        participating=participating,
        check_instances=instances,
    )
