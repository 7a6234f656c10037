"""Noisy memory circuits and their text format.

A circuit is a flat list of instructions over lattice qubits addressed by
``(row, col)``. Measurements append to a record; ``DETECTOR`` and
``OBSERVABLE`` annotations refer back into the record with negative offsets,
as in ``rec[-1]`` for the latest measurement.

Noise follows a uniform circuit-level model driven by one probability ``p``:

* resets: ``RESET_X`` is followed by ``ZERR(p)``, ``RESET_Z`` by ``XERR(p)``;
* check measurements flip their outcome with probability ``p`` (a rider on
  the measurement instruction) and are followed by ``DEP2(p)`` on the pair;
* qubits untouched by a step receive ``DEP1(p)``;
* the terminal single-qubit readout flips with probability ``p`` and is
  followed by ``DEP1(p)``, which is inert but kept for fidelity to the model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lattice import XX, Dims
from .schedule import Schedule
from .tracker import TrackerResult, run_tracker

RESET_X = "RESET_X"
RESET_Z = "RESET_Z"
MEAS_X = "MEAS_X"
MEAS_Z = "MEAS_Z"
MEAS_XX = "MEAS_XX"
MEAS_ZZ = "MEAS_ZZ"
DEP1 = "DEP1"
DEP2 = "DEP2"
XERR = "XERR"
ZERR = "ZERR"
TICK = "TICK"
DETECTOR = "DETECTOR"
OBSERVABLE = "OBSERVABLE"

RESETS = (RESET_X, RESET_Z)
MEASUREMENTS = (MEAS_X, MEAS_Z, MEAS_XX, MEAS_ZZ)
CHANNELS = (DEP1, DEP2, XERR, ZERR)
PAIRED = (MEAS_XX, MEAS_ZZ, DEP2)
OPCODES = RESETS + MEASUREMENTS + CHANNELS + (TICK, DETECTOR, OBSERVABLE)

Qubit = tuple[int, int]


@dataclass(frozen=True)
class Instruction:
    """One circuit line.

    ``targets`` holds qubits for gate-like opcodes and negative record
    offsets for ``DETECTOR``/``OBSERVABLE``. ``p`` is the channel probability
    or, for measurements, the outcome-flip probability. ``index`` is the
    observable index.
    """

    op: str
    targets: tuple = ()
    p: float = 0.0
    index: int = 0

    def __post_init__(self) -> None:
        if self.op not in OPCODES:
            raise ValueError(f"unknown opcode {self.op!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"{self.op}: probability {self.p} outside [0, 1]")
        if self.op in PAIRED and len(self.targets) != 2:
            raise ValueError(f"{self.op} takes exactly 2 targets, got {len(self.targets)}")
        if self.op in PAIRED and self.targets[0] == self.targets[1]:
            raise ValueError(f"{self.op} targets must be distinct")

    @property
    def num_measurements(self) -> int:
        if self.op in (MEAS_XX, MEAS_ZZ):
            return 1
        if self.op in (MEAS_X, MEAS_Z):
            return len(self.targets)
        return 0


@dataclass(frozen=True)
class NoiseModel:
    p: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"noise strength {self.p} outside [0, 1]")


@dataclass(frozen=True)
class Circuit:
    dims: Dims
    instructions: tuple[Instruction, ...]
    num_measurements: int = field(init=False)
    detectors: tuple[tuple[int, ...], ...] = field(init=False)
    observables: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self) -> None:
        count = 0
        dets = []
        obs: dict[int, tuple[int, ...]] = {}
        for k, ins in enumerate(self.instructions):
            for q in ins.targets if ins.op not in (DETECTOR, OBSERVABLE) else ():
                if not (0 <= q[0] < self.dims.rows and 0 <= q[1] < self.dims.cols):
                    raise ValueError(f"instruction {k}: qubit {q} outside {self.dims}")
            if ins.op in (DETECTOR, OBSERVABLE):
                refs = []
                for off in ins.targets:
                    if not -count <= off < 0:
                        raise ValueError(
                            f"instruction {k}: rec[{off}] dangles ({count} measurements so far)"
                        )
                    refs.append(count + off)
                refs = tuple(sorted(refs))
                if ins.op == DETECTOR:
                    dets.append(refs)
                else:
                    if ins.index in obs:
                        raise ValueError(f"instruction {k}: observable {ins.index} defined twice")
                    obs[ins.index] = refs
            count += ins.num_measurements
        object.__setattr__(self, "num_measurements", count)
        object.__setattr__(self, "detectors", tuple(dets))
        n_obs = max(obs) + 1 if obs else 0
        object.__setattr__(self, "observables", tuple(obs.get(i, ()) for i in range(n_obs)))

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    @property
    def num_ticks(self) -> int:
        return sum(ins.op == TICK for ins in self.instructions)

    def without_noise(self) -> "Circuit":
        stripped = []
        for ins in self.instructions:
            if ins.op in CHANNELS:
                continue
            if ins.op in MEASUREMENTS:
                ins = Instruction(ins.op, ins.targets, 0.0)
            stripped.append(ins)
        return Circuit(self.dims, tuple(stripped))


def build_memory_circuit(
    schedule: Schedule,
    detectors: TrackerResult | None = None,
    rounds: int = 1,
    basis: str = "X",
    noise: NoiseModel | float = 0.0,
) -> Circuit:
    """Memory experiment: initialize, run ``2 * rounds`` schedule steps, read out.

    ``detectors`` must come from ``run_tracker`` over the same number of steps
    with the terminal readout; it is computed here when omitted.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    if basis not in ("X", "Z"):
        raise ValueError(f"basis must be 'X' or 'Z', got {basis!r}")
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel(float(noise))
    p = noise.p
    dims = schedule.dims
    steps = 2 * rounds
    if detectors is None:
        detectors = run_tracker(schedule, steps, basis, with_final_readout=True)
    expected = sum(len(schedule.step_at(t).checks) for t in range(steps)) + dims.num_qubits
    if len(detectors.step_offsets) != steps or len(detectors.record) != expected:
        raise ValueError("tracker result does not cover the circuit window")

    # detectors are annotated right after the measurement that closes them
    closing: dict[int, list[tuple[int, ...]]] = {}
    for det in detectors.detectors:
        closing.setdefault(max(det.refs), []).append(det.refs)

    qubits = list(dims.qubits())
    out: list[Instruction] = []
    count = 0

    def annotate(upto: int) -> None:
        for k in range(count, upto):
            for refs in closing.get(k, ()):
                out.append(Instruction(DETECTOR, tuple(r - upto for r in refs)))

    if basis == "X":
        out.append(Instruction(RESET_X, tuple(qubits)))
        out.append(Instruction(ZERR, tuple(qubits), p))
    else:
        out.append(Instruction(RESET_Z, tuple(qubits)))
        out.append(Instruction(XERR, tuple(qubits), p))
    out.append(Instruction(TICK))

    for t in range(steps):
        step = schedule.step_at(t)
        op = MEAS_XX if step.kind == XX else MEAS_ZZ
        touched = set()
        for ch in step.checks:
            out.append(Instruction(op, ch.qubits, p))
            touched.update(ch.qubits)
        annotate(count + len(step.checks))
        count += len(step.checks)
        for ch in step.checks:
            out.append(Instruction(DEP2, ch.qubits, p))
        idle = tuple(q for q in qubits if q not in touched)
        if idle:
            out.append(Instruction(DEP1, idle, p))
        out.append(Instruction(TICK))

    out.append(Instruction(MEAS_X if basis == "X" else MEAS_Z, tuple(qubits), p))
    annotate(count + len(qubits))
    count += len(qubits)
    out.append(Instruction(DEP1, tuple(qubits), p))

    if basis == "X":
        support = [(r, 0) for r in range(dims.rows)]
    else:
        support = [(0, c) for c in range(dims.cols)]
    base = count - len(qubits)
    refs = sorted(base + dims.qubit_index(r, c) for r, c in support)
    out.append(Instruction(OBSERVABLE, tuple(r - count for r in refs), index=0))
    return Circuit(dims, tuple(out))


# -- text format ---------------------------------------------------------


def _fmt_p(p: float) -> str:
    return format(p, ".17g")


def serialize(circuit: Circuit) -> str:
    lines = [f"CIRCUIT v1 rows={circuit.dims.rows} cols={circuit.dims.cols}"]
    for ins in circuit.instructions:
        if ins.op == TICK:
            lines.append(TICK)
        elif ins.op == DETECTOR:
            lines.append(DETECTOR + "".join(f" rec[{o}]" for o in ins.targets))
        elif ins.op == OBSERVABLE:
            lines.append(f"{OBSERVABLE} {ins.index}" + "".join(f" rec[{o}]" for o in ins.targets))
        else:
            head = ins.op if ins.op in RESETS else f"{ins.op}({_fmt_p(ins.p)})"
            lines.append(head + "".join(f" {r},{c}" for r, c in ins.targets))
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^CIRCUIT v1 rows=(\d+) cols=(\d+)$")
_HEAD = re.compile(r"^([A-Z_0-9]+)(?:\(([^)]*)\))?$")
_QUBIT = re.compile(r"^(\d+),(\d+)$")
_REC = re.compile(r"^rec\[(-\d+)\]$")


class CircuitParseError(ValueError):
    def __init__(self, lineno: int, msg: str) -> None:
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse(text: str) -> Circuit:
    """Parse the text format. Errors carry the offending line number."""
    lines = text.splitlines()
    header_seen = None
    instructions: list[Instruction] = []
    count = 0
    dims = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dims is None:
            m = _HEADER.match(line)
            if not m:
                raise CircuitParseError(lineno, f"expected 'CIRCUIT v1 rows=R cols=C', got {line!r}")
            try:
                dims = Dims(int(m.group(1)), int(m.group(2)))
            except ValueError as exc:
                raise CircuitParseError(lineno, str(exc)) from None
            header_seen = lineno
            continue
        words = line.split()
        m = _HEAD.match(words[0])
        if not m or m.group(1) not in OPCODES:
            raise CircuitParseError(lineno, f"unknown instruction {words[0]!r}")
        op, arg = m.group(1), m.group(2)
        args = words[1:]
        p = 0.0
        if arg is not None:
            if op not in MEASUREMENTS + CHANNELS:
                raise CircuitParseError(lineno, f"{op} takes no parameter")
            try:
                p = float(arg)
            except ValueError:
                raise CircuitParseError(lineno, f"bad probability {arg!r}") from None
            if not 0.0 <= p <= 1.0:
                raise CircuitParseError(lineno, f"probability {arg} outside [0, 1]")
        elif op in CHANNELS:
            raise CircuitParseError(lineno, f"{op} needs a probability")
        try:
            if op == TICK:
                if args:
                    raise CircuitParseError(lineno, "TICK takes no targets")
                ins = Instruction(TICK)
            elif op in (DETECTOR, OBSERVABLE):
                index = 0
                if op == OBSERVABLE:
                    if not args or not args[0].isdigit():
                        raise CircuitParseError(lineno, "OBSERVABLE needs an index")
                    index = int(args[0])
                    args = args[1:]
                offs = []
                for a in args:
                    rm = _REC.match(a)
                    if not rm:
                        raise CircuitParseError(lineno, f"bad record reference {a!r}")
                    off = int(rm.group(1))
                    if not -count <= off < 0:
                        raise CircuitParseError(
                            lineno, f"rec[{off}] dangles ({count} measurements so far)"
                        )
                    offs.append(off)
                ins = Instruction(op, tuple(offs), index=index)
            else:
                qs = []
                for a in args:
                    qm = _QUBIT.match(a)
                    if not qm:
                        raise CircuitParseError(lineno, f"bad qubit target {a!r}")
                    q = (int(qm.group(1)), int(qm.group(2)))
                    if not (q[0] < dims.rows and q[1] < dims.cols):
                        raise CircuitParseError(lineno, f"qubit {q} outside {dims.rows}x{dims.cols}")
                    qs.append(q)
                if not qs:
                    raise CircuitParseError(lineno, f"{op} needs targets")
                ins = Instruction(op, tuple(qs), p)
        except CircuitParseError:
            raise
        except ValueError as exc:
            raise CircuitParseError(lineno, str(exc)) from None
        count += ins.num_measurements
        instructions.append(ins)
    if header_seen is None:
        raise CircuitParseError(1, "missing CIRCUIT header")
    try:
        return Circuit(dims, tuple(instructions))
    except ValueError as exc:
        raise CircuitParseError(len(lines), str(exc)) from None
