"""Stabilizer simulation and detector error models.

All three engines here read the same lowered program (``lower``): a list of
reset, measurement and noise blocks over integer qubit indices, with every
noise location enumerated as a *site*. Each site has a fixed list of
*components* (the Pauli it applies, or an outcome flip):

* ``DEP1``: X, Y, Z, each with probability ``p/3``;
* ``DEP2``: the 15 non-identity two-qubit Paulis, each with ``p/15``;
* ``XERR`` / ``ZERR``: one component with probability ``p``;
* ``MERR``: the outcome flip riding on a measurement, probability ``p``.

``tableau_run`` is the exact reference simulator. Outcome signs are kept as
affine GF(2) forms over the random measurement outcomes, so it reports
exactly whether every detector is deterministic. ``FrameSampler`` is the
Monte-Carlo engine: Pauli frames bit-packed over shots, sparse noise
injection. ``build_dem`` sweeps the program backwards once, tracking for each
qubit which detectors an X or Z error at the current point would flip.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import BinaryIO, Iterable

import numpy as np

from .circuit import (
    DEP1,
    DEP2,
    MEAS_X,
    MEAS_XX,
    MEAS_Z,
    MEAS_ZZ,
    MEASUREMENTS,
    RESET_X,
    RESETS,
    TICK,
    XERR,
    ZERR,
    CHANNELS,
    Circuit,
)

MERR = "MERR"

# Pauli encoding 0=I 1=X 2=Y 3=Z as (x, z) bits
_PAULI_XZ = ((0, 0), (1, 0), (1, 1), (0, 1))


def _components(kind: str) -> list[tuple[tuple[int, int], ...]]:
    """Per-target (x, z) bits for each component of a channel kind."""
    if kind == DEP1:
        return [(_PAULI_XZ[a],) for a in (1, 2, 3)]
    if kind == DEP2:
        return [(_PAULI_XZ[k >> 2], _PAULI_XZ[k & 3]) for k in range(1, 16)]
    if kind == XERR:
        return [((1, 0),)]
    if kind == ZERR:
        return [((0, 1),)]
    raise ValueError(kind)


_NUM_COMPONENTS = {DEP1: 3, DEP2: 15, XERR: 1, ZERR: 1, MERR: 1}


@dataclass(frozen=True)
class Site:
    kind: str
    target: tuple[int, ...]  # qubit indices, or (measurement index,) for MERR
    p: float

    @property
    def num_components(self) -> int:
        return _NUM_COMPONENTS[self.kind]

    @property
    def component_p(self) -> float:
        return self.p / self.num_components


@dataclass(frozen=True)
class Program:
    """Lowered circuit shared by the tableau, frame and DEM engines.

    ``ops`` entries are ``("R", basis, qubits)``, ``("M", start, stop)`` over
    measurement indices, or ``("N", start, stop)`` over site indices.
    """

    num_qubits: int
    ops: tuple
    meas_basis: tuple[str, ...]  # "X" or "Z" per measurement
    meas_qubits: tuple[tuple[int, ...], ...]
    meas_tick: tuple[int, ...]
    meas_site: tuple[int, ...]  # MERR site index of each measurement
    sites: tuple[Site, ...]
    detectors: tuple[tuple[int, ...], ...]
    observables: tuple[tuple[int, ...], ...]
    qubit_coords: tuple[tuple[int, int], ...]

    @property
    def num_measurements(self) -> int:
        return len(self.meas_basis)

    def detector_coords(self) -> list[tuple[float, float, int]]:
        out = []
        for refs in self.detectors:
            qs = [self.qubit_coords[q] for m in refs for q in self.meas_qubits[m]]
            r = sum(q[0] for q in qs) / len(qs)
            c = sum(q[1] for q in qs) / len(qs)
            out.append((r, c, max(self.meas_tick[m] for m in refs)))
        return out


def lower(circuit: Circuit) -> Program:
    dims = circuit.dims
    qindex = dims.qubit_index
    ops: list = []
    basis: list[str] = []
    mqubits: list[tuple[int, ...]] = []
    ticks: list[int] = []
    msite: list[int] = []
    sites: list[Site] = []
    tick = 0
    for ins in circuit.instructions:
        if ins.op == TICK:
            tick += 1
        elif ins.op in RESETS:
            ops.append(("R", "X" if ins.op == RESET_X else "Z", tuple(qindex(*q) for q in ins.targets)))
        elif ins.op in MEASUREMENTS:
            b = "X" if ins.op in (MEAS_X, MEAS_XX) else "Z"
            groups = [ins.targets] if ins.op in (MEAS_XX, MEAS_ZZ) else [(q,) for q in ins.targets]
            start = len(basis)
            for g in groups:
                msite.append(len(sites))
                sites.append(Site(MERR, (len(basis),), ins.p))
                basis.append(b)
                mqubits.append(tuple(qindex(*q) for q in g))
                ticks.append(tick)
            if ops and ops[-1][0] == "M":
                ops[-1] = ("M", ops[-1][1], len(basis))
            else:
                ops.append(("M", start, len(basis)))
        elif ins.op in CHANNELS:
            start = len(sites)
            if ins.op == DEP2:
                sites.append(Site(DEP2, tuple(qindex(*q) for q in ins.targets), ins.p))
            else:
                for q in ins.targets:
                    sites.append(Site(ins.op, (qindex(*q),), ins.p))
            if ops and ops[-1][0] == "N":
                ops[-1] = ("N", ops[-1][1], len(sites))
            else:
                ops.append(("N", start, len(sites)))
    return Program(
        num_qubits=dims.num_qubits,
        ops=tuple(ops),
        meas_basis=tuple(basis),
        meas_qubits=tuple(mqubits),
        meas_tick=tuple(ticks),
        meas_site=tuple(msite),
        sites=tuple(sites),
        detectors=circuit.detectors,
        observables=circuit.observables,
        qubit_coords=tuple(dims.qubits()),
    )


# -- tableau ---------------------------------------------------------------


def _g_sum(x1, z1, x2, z2) -> np.ndarray:
    """Sum over qubits of the phase exponent for multiplying Paulis 1 and 2.

    Broadcasts over leading axes; returns the sum mod 4.
    """
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    g = np.where(
        (x1 == 1) & (z1 == 1),
        z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )
    return g.sum(axis=-1) % 4


class Tableau:
    """Stabilizer tableau with destabilizers and affine symbolic signs.

    Stabilizer signs are Python ints read as GF(2) affine forms: bit 0 is
    the constant, bit ``k`` for ``k >= 1`` is the ``k``-th random outcome.
    """

    def __init__(self, n: int) -> None:
        self.n = n
        # rows 0..n-1 destabilizers (Z_i), rows n..2n-1 stabilizers (X_i): |+>^n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.z[np.arange(n), np.arange(n)] = True
        self.x[n + np.arange(n), np.arange(n)] = True
        self.sign = [0] * n
        self.num_vars = 0

    def _anti(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        return ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2 == 1

    def measure(self, px: np.ndarray, pz: np.ndarray) -> int:
        """Measure the Hermitian Pauli with bits ``px, pz`` (sign +1);
        return the outcome bit as an affine form."""
        n = self.n
        anti = self._anti(px, pz)
        stab = np.flatnonzero(anti[n:])
        if stab.size:
            p = n + stab[0]
            others = np.flatnonzero(anti)
            others = others[others != p]
            stab_rows = others[others >= n]
            if stab_rows.size:
                g = _g_sum(self.x[p], self.z[p], self.x[stab_rows], self.z[stab_rows])
                sp = self.sign[p - n]
                for row, gv in zip(stab_rows, g):
                    self.sign[row - n] ^= sp ^ (1 if gv == 2 else 0)
            self.x[others] ^= self.x[p]
            self.z[others] ^= self.z[p]
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.x[p] = px
            self.z[p] = pz
            self.num_vars += 1
            self.sign[p - n] = 1 << self.num_vars
            return self.sign[p - n]
        # deterministic: multiply the stabilizers paired with anticommuting destabilizers
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        s = 0
        for i in np.flatnonzero(anti[:n]):
            row = n + i
            gv = int(_g_sum(self.x[row], self.z[row], sx, sz))
            s ^= self.sign[i] ^ (1 if gv == 2 else 0)
            sx ^= self.x[row]
            sz ^= self.z[row]
        return s

    def apply_pauli(self, px: np.ndarray, pz: np.ndarray, cond: int = 1) -> None:
        """Apply a Pauli; ``cond`` (an affine form) makes it conditional."""
        anti = self._anti(px, pz)[self.n :]
        for i in np.flatnonzero(anti):
            self.sign[i] ^= cond

    def reset(self, q: int, basis: str) -> None:
        px = np.zeros(self.n, dtype=bool)
        pz = np.zeros(self.n, dtype=bool)
        (px if basis == "X" else pz)[q] = True
        out = self.measure(px, pz)
        # flip back to +1 with the opposite-type Pauli, conditioned on the outcome
        cx = np.zeros(self.n, dtype=bool)
        cz = np.zeros(self.n, dtype=bool)
        (cz if basis == "X" else cx)[q] = True
        self.apply_pauli(cx, cz, out)


@dataclass
class TableauResult:
    record: np.ndarray  # concrete outcome bits per measurement
    detectors: np.ndarray  # concrete detector parities (1 = flipped)
    observables: np.ndarray
    detector_forms: list[int]  # affine forms; deterministic iff form in (0, 1)
    observable_forms: list[int]
    measurement_forms: list[int]  # bit 0 constant, bit k+1 random outcome k

    @property
    def deterministic(self) -> np.ndarray:
        return np.array([f >> 1 == 0 for f in self.detector_forms], dtype=bool)

    @property
    def observables_deterministic(self) -> np.ndarray:
        return np.array([f >> 1 == 0 for f in self.observable_forms], dtype=bool)


def _pauli_vectors(n: int, targets: tuple[int, ...], comp: tuple[tuple[int, int], ...]):
    px = np.zeros(n, dtype=bool)
    pz = np.zeros(n, dtype=bool)
    for q, (xb, zb) in zip(targets, comp):
        px[q] ^= bool(xb)
        pz[q] ^= bool(zb)
    return px, pz


def tableau_run(
    circuit: Circuit | Program,
    seed: int | None = 0,
    faults: dict[int, int] | None = None,
) -> TableauResult:
    """Exact simulation.

    With ``faults=None`` every noise site fires according to its
    probability. Otherwise noise is off and exactly the given faults are
    injected, as ``{site index: component index}``.
    """
    prog = circuit if isinstance(circuit, Program) else lower(circuit)
    rng = np.random.default_rng(seed)
    n = prog.num_qubits
    tab = Tableau(n)
    forms: list[int] = [0] * prog.num_measurements

    def fired(s: int) -> int | None:
        site = prog.sites[s]
        if faults is not None:
            return faults.get(s)
        if site.p > 0 and rng.random() < site.p:
            return int(rng.integers(site.num_components))
        return None

    for op in prog.ops:
        if op[0] == "R":
            for q in op[2]:
                tab.reset(q, op[1])
        elif op[0] == "M":
            for m in range(op[1], op[2]):
                v = np.zeros(n, dtype=bool)
                v[list(prog.meas_qubits[m])] = True
                zero = np.zeros(n, dtype=bool)
                out = tab.measure(v, zero) if prog.meas_basis[m] == "X" else tab.measure(zero, v)
                if fired(prog.meas_site[m]) is not None:
                    out ^= 1
                forms[m] = out
        else:
            for s in range(op[1], op[2]):
                comp = fired(s)
                if comp is None:
                    continue
                site = prog.sites[s]
                px, pz = _pauli_vectors(n, site.target, _components(site.kind)[comp])
                tab.apply_pauli(px, pz)

    assignment = 1 | sum(int(b) << (k + 1) for k, b in enumerate(rng.integers(0, 2, tab.num_vars)))

    def value(form: int) -> int:
        return bin(form & assignment).count("1") & 1

    def combine(refs: Iterable[int]) -> int:
        f = 0
        for m in refs:
            f ^= forms[m]
        return f

    record = np.array([value(f) for f in forms], dtype=np.uint8)
    det_forms = [combine(refs) for refs in prog.detectors]
    obs_forms = [combine(refs) for refs in prog.observables]
    return TableauResult(
        record=record,
        detectors=np.array([value(f) for f in det_forms], dtype=np.uint8),
        observables=np.array([value(f) for f in obs_forms], dtype=np.uint8),
        detector_forms=det_forms,
        observable_forms=obs_forms,
        measurement_forms=forms,
    )


# -- Pauli frame sampling --------------------------------------------------


def _bernoulli_positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Indices in ``range(n)`` of independent Bernoulli(p) successes."""
    if p <= 0 or n == 0:
        return np.zeros(0, dtype=np.int64)
    if p >= 0.05:
        return np.flatnonzero(rng.random(n) < p)
    mean = n * p
    chunk = int(mean + 6 * math.sqrt(mean) + 16)
    out = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=chunk)
        steps = pos + np.cumsum(gaps)
        out.append(steps)
        pos = int(steps[-1])
        if pos >= n:
            break
    allpos = np.concatenate(out)
    return allpos[allpos < n]


def _xor_bits(arr: np.ndarray, rows: np.ndarray, shots: np.ndarray) -> None:
    if rows.size:
        np.bitwise_xor.at(arr, (rows, shots >> 6), np.left_shift(np.uint64(1), (shots & 63).astype(np.uint64)))


class FrameSampler:
    """Monte-Carlo sampler of detector and observable flips.

    Randomness for batch ``b`` comes from ``SeedSequence([seed, b])``, so a
    run is fixed by the seed and batch size regardless of how batches are
    spread over workers.
    """

    def __init__(self, circuit: Circuit | Program) -> None:
        prog = circuit if isinstance(circuit, Program) else lower(circuit)
        self.program = prog
        self.num_detectors = len(prog.detectors)
        self.num_observables = len(prog.observables)
        # measurement blocks: per basis, first/second qubit (second -1 if single)
        self._mblocks = []
        for op in prog.ops:
            if op[0] != "M":
                continue
            groups = {}
            for m in range(op[1], op[2]):
                qs = prog.meas_qubits[m]
                key = (prog.meas_basis[m], len(qs))
                groups.setdefault(key, ([], [], []))
                g = groups[key]
                g[0].append(m)
                g[1].append(qs[0])
                g[2].append(qs[-1])
            riders: dict[float, list[int]] = {}
            for m in range(op[1], op[2]):
                p = prog.sites[prog.meas_site[m]].p
                if p > 0:
                    riders.setdefault(p, []).append(m)
            self._mblocks.append(
                (
                    {k: tuple(np.array(a, dtype=np.int64) for a in v) for k, v in groups.items()},
                    {p: np.array(ms, dtype=np.int64) for p, ms in sorted(riders.items())},
                )
            )
        # noise blocks grouped by (kind, p)
        self._nblocks = []
        for op in prog.ops:
            if op[0] != "N":
                continue
            groups: dict[tuple[str, float], list[tuple[int, ...]]] = {}
            for s in range(op[1], op[2]):
                site = prog.sites[s]
                if site.p > 0:
                    groups.setdefault((site.kind, site.p), []).append(site.target)
            block = []
            for (kind, p), targets in sorted(groups.items()):
                arr = np.array(targets, dtype=np.int64)
                comps = np.array(_components(kind), dtype=np.uint8)  # (ncomp, arity, 2)
                block.append((p, arr, comps))
            self._nblocks.append(block)
        # detector/observable reduction layout
        self._det_flat, self._det_starts = self._layout(prog.detectors)
        self._obs_flat, self._obs_starts = self._layout(prog.observables)

    @staticmethod
    def _layout(groups: tuple[tuple[int, ...], ...]):
        flat = np.array([m for g in groups for m in g], dtype=np.int64)
        starts = np.cumsum([0] + [len(g) for g in groups])[:-1].astype(np.int64)
        return flat, starts

    def _reduce(self, rec: np.ndarray, flat: np.ndarray, starts: np.ndarray, count: int, words: int):
        out = np.zeros((count, words), dtype=np.uint64)
        if count == 0 or flat.size == 0:
            return out
        nonempty = np.diff(np.append(starts, flat.size)) > 0
        red = np.bitwise_xor.reduceat(rec[flat], starts[nonempty], axis=0)
        out[nonempty] = red
        return out

    def sample_packed(self, shots: int, seed: int, batch: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """One batch. Returns detector and observable flips as uint64 words,
        shape ``(count, ceil(shots / 64))``; bit ``s`` is shot ``s``."""
        prog = self.program
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, batch])))
        words = (shots + 63) // 64
        n = prog.num_qubits
        fx = np.zeros((n, words), dtype=np.uint64)
        fz = np.zeros((n, words), dtype=np.uint64)
        rec = np.zeros((prog.num_measurements, words), dtype=np.uint64)
        mi = ni = 0
        for op in prog.ops:
            if op[0] == "R":
                idx = np.array(op[2], dtype=np.int64)
                fx[idx] = 0
                fz[idx] = 0
            elif op[0] == "M":
                groups, riders = self._mblocks[mi]
                mi += 1
                for (b, arity), (ms, qa, qb) in groups.items():
                    frame = fz if b == "X" else fx
                    rec[ms] = frame[qa] if arity == 1 else frame[qa] ^ frame[qb]
                for p, ms in riders.items():
                    pos = _bernoulli_positions(rng, ms.size * shots, p)
                    _xor_bits(rec, ms[pos // shots], pos % shots)
            else:
                for p, targets, comps in self._nblocks[ni]:
                    pos = _bernoulli_positions(rng, targets.shape[0] * shots, p)
                    if not pos.size:
                        continue
                    site = pos // shots
                    shot = pos % shots
                    which = rng.integers(comps.shape[0], size=pos.size)
                    for j in range(comps.shape[1]):
                        q = targets[site, j]
                        xb = comps[which, j, 0].astype(bool)
                        zb = comps[which, j, 1].astype(bool)
                        _xor_bits(fx, q[xb], shot[xb])
                        _xor_bits(fz, q[zb], shot[zb])
                ni += 1
        if shots % 64:
            mask = np.uint64((1 << (shots % 64)) - 1)
            rec[:, -1] &= mask
        dets = self._reduce(rec, self._det_flat, self._det_starts, self.num_detectors, words)
        obs = self._reduce(rec, self._obs_flat, self._obs_starts, self.num_observables, words)
        return dets, obs

    def sample(self, shots: int, seed: int, batch: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """One batch as boolean matrices of shape ``(shots, count)``."""
        dets, obs = self.sample_packed(shots, seed, batch)
        return unpack_words(dets, shots), unpack_words(obs, shots)


def unpack_words(words: np.ndarray, shots: int) -> np.ndarray:
    """``(count, W)`` uint64 words to a ``(shots, count)`` bool matrix."""
    as_bytes = np.ascontiguousarray(words).astype("<u8").view(np.uint8)
    bits = np.unpackbits(as_bytes.reshape(words.shape[0], -1), axis=1, bitorder="little")
    return bits[:, :shots].T.astype(bool)


def frame_sample(
    circuit: Circuit, shots: int, seed: int = 0, batch_size: int = 4096
) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``shots`` shots in fixed-size batches; returns bool matrices."""
    if shots < 1:
        raise ValueError("shots must be positive")
    sampler = FrameSampler(circuit)
    dets, obs = [], []
    for b, start in enumerate(range(0, shots, batch_size)):
        d, o = sampler.sample(min(batch_size, shots - start), seed, b)
        dets.append(d)
        obs.append(o)
    return np.concatenate(dets), np.concatenate(obs)


# -- bit-matrix files -------------------------------------------------------


def write_bits(stream: BinaryIO, matrix: np.ndarray, label: str = "detectors") -> None:
    """Header line ``shots=N <label>=D`` then each shot's bits, little-endian packed."""
    matrix = np.asarray(matrix, dtype=bool)
    shots, count = matrix.shape
    stream.write(f"shots={shots} {label}={count}\n".encode())
    stream.write(np.packbits(matrix, axis=1, bitorder="little").tobytes())


def read_bits(stream: BinaryIO) -> tuple[np.ndarray, str]:
    header = stream.readline().decode().strip()
    m = re.fullmatch(r"shots=(\d+) (\w+)=(\d+)", header)
    if not m:
        raise ValueError(f"bad bit-matrix header {header!r}")
    shots, label, count = int(m.group(1)), m.group(2), int(m.group(3))
    width = (count + 7) // 8
    raw = stream.read()
    if len(raw) != shots * width:
        raise ValueError(f"expected {shots * width} payload bytes, found {len(raw)}")
    packed = np.frombuffer(raw, dtype=np.uint8).reshape(shots, width)
    return np.unpackbits(packed, axis=1, bitorder="little")[:, :count].astype(bool), label


# -- detector error models ---------------------------------------------------


@dataclass(frozen=True)
class Mechanism:
    p: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...] = ()


@dataclass(frozen=True)
class DetectorErrorModel:
    mechanisms: tuple[Mechanism, ...]
    num_detectors: int
    num_observables: int
    coords: tuple[tuple[float, float, int], ...] | None = None

    def __len__(self) -> int:
        return len(self.mechanisms)


def _combine(a: float, b: float) -> float:
    return a * (1 - b) + b * (1 - a)


def merge_mechanisms(items: Iterable[tuple[float, Iterable[int], Iterable[int]]]) -> dict:
    """Merge independent mechanisms with equal symptoms; drops empty symptoms."""
    table: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    for p, dets, obs in items:
        key = (tuple(sorted(dets)), tuple(sorted(obs)))
        if p <= 0 or key == ((), ()):
            continue
        table[key] = _combine(table[key], p) if key in table else p
    return table


def _split_mask(mask: int, num_detectors: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    dets, obs = [], []
    while mask:
        low = mask & -mask
        k = low.bit_length() - 1
        (dets.append(k) if k < num_detectors else obs.append(k - num_detectors))
        mask ^= low
    return tuple(dets), tuple(obs)


def fault_symptoms(circuit: Circuit | Program) -> dict[tuple[int, int], tuple[tuple[int, ...], tuple[int, ...]]]:
    """Detectors and observables flipped by each single fault ``(site, component)``."""
    prog = circuit if isinstance(circuit, Program) else lower(circuit)
    nd = len(prog.detectors)
    member = [0] * prog.num_measurements
    for j, refs in enumerate(prog.detectors):
        for m in refs:
            member[m] ^= 1 << j
    for k, refs in enumerate(prog.observables):
        for m in refs:
            member[m] ^= 1 << (nd + k)
    sx = [0] * prog.num_qubits
    sz = [0] * prog.num_qubits
    out: dict = {}
    for op in reversed(prog.ops):
        if op[0] == "R":
            for q in op[2]:
                sx[q] = sz[q] = 0
        elif op[0] == "M":
            for m in range(op[2] - 1, op[1] - 1, -1):
                out[(prog.meas_site[m], 0)] = _split_mask(member[m], nd)
                sens = sz if prog.meas_basis[m] == "X" else sx
                for q in prog.meas_qubits[m]:
                    sens[q] ^= member[m]
        else:
            for s in range(op[1], op[2]):
                site = prog.sites[s]
                for c, comp in enumerate(_components(site.kind)):
                    mask = 0
                    for q, (xb, zb) in zip(site.target, comp):
                        if xb:
                            mask ^= sx[q]
                        if zb:
                            mask ^= sz[q]
                    out[(s, c)] = _split_mask(mask, nd)
    return out


def build_dem(circuit: Circuit | Program, with_coords: bool = True) -> DetectorErrorModel:
    prog = circuit if isinstance(circuit, Program) else lower(circuit)
    symptoms = fault_symptoms(prog)
    table = merge_mechanisms(
        (prog.sites[s].component_p, dets, obs) for (s, _), (dets, obs) in symptoms.items()
    )
    mechs = tuple(Mechanism(p, d, o) for (d, o), p in sorted(table.items()))
    coords = tuple(prog.detector_coords()) if with_coords else None
    return DetectorErrorModel(mechs, len(prog.detectors), len(prog.observables), coords)


def format_dem(dem: DetectorErrorModel) -> str:
    lines = []
    for m in dem.mechanisms:
        targets = [f"D{d}" for d in m.detectors] + [f"L{o}" for o in m.observables]
        lines.append(f"error({format(m.p, '.17g')}) " + " ".join(targets))
    if dem.coords is not None:
        for k, (r, c, t) in enumerate(dem.coords):
            lines.append(f"detector({format(r, '.17g')},{format(c, '.17g')},{t}) D{k}")
    elif dem.num_detectors:
        lines.append(f"detector D{dem.num_detectors - 1}")
    for k in range(dem.num_observables):
        lines.append(f"logical_observable L{k}")
    return "\n".join(lines) + "\n"


_ERROR = re.compile(r"^error\(([^)]*)\)((?:\s+[DL]\d+)*)$")
_DETECTOR = re.compile(r"^detector(?:\(([^)]*)\))?\s+D(\d+)$")
_OBS = re.compile(r"^logical_observable\s+L(\d+)$")


def parse_dem(text: str) -> DetectorErrorModel:
    mechs = []
    coords: dict[int, tuple[float, float, int]] = {}
    max_d = -1
    max_o = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _ERROR.match(line):
            try:
                p = float(m.group(1))
            except ValueError:
                raise ValueError(f"line {lineno}: bad probability {m.group(1)!r}") from None
            if not 0 < p < 1:
                raise ValueError(f"line {lineno}: probability {p} outside (0, 1)")
            dets = tuple(int(t[1:]) for t in m.group(2).split() if t[0] == "D")
            obs = tuple(int(t[1:]) for t in m.group(2).split() if t[0] == "L")
            max_d = max([max_d, *dets])
            max_o = max([max_o, *obs])
            mechs.append((p, dets, obs))
        elif m := _DETECTOR.match(line):
            k = int(m.group(2))
            max_d = max(max_d, k)
            if m.group(1) is not None:
                parts = m.group(1).split(",")
                if len(parts) != 3:
                    raise ValueError(f"line {lineno}: detector coordinates need 3 values")
                coords[k] = (float(parts[0]), float(parts[1]), int(parts[2]))
        elif m := _OBS.match(line):
            max_o = max(max_o, int(m.group(1)))
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    table = merge_mechanisms(mechs)
    nd = max_d + 1
    coord_t = tuple(coords[k] for k in range(nd)) if coords and len(coords) == nd else None
    return DetectorErrorModel(
        tuple(Mechanism(p, d, o) for (d, o), p in sorted(table.items())), nd, max_o + 1, coord_t
    )
