"""Matching decoders over detector error models.

Mechanisms flipping more than two detectors are first rewritten as products
of graphlike pieces (``decompose_hyperedges``). The resulting graph is then
decoded either natively (shortest paths plus exact blossom matching through
networkx) or with PyMatching for production-scale sampling. A brute-force
maximum-likelihood decoder serves as the reference on small models.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import networkx as nx
import numpy as np
import pymatching
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .stabsim import DetectorErrorModel, Mechanism, merge_mechanisms

log = logging.getLogger(__name__)

EPS = 1e-9


# -- hyperedge decomposition ------------------------------------------------


class IrreducibleMechanismError(ValueError):
    def __init__(self, mechanisms: list[Mechanism]) -> None:
        shown = ", ".join(str(m.detectors) for m in mechanisms[:5])
        super().__init__(f"{len(mechanisms)} irreducible mechanism(s), e.g. {shown}")
        self.mechanisms = mechanisms


@dataclass
class DecompositionReport:
    peeled: int = 0  # hyperedges factored into existing graphlike mechanisms
    paired: int = 0  # hyperedges that needed proximity pairing
    irreducible: list[Mechanism] = field(default_factory=list)


def _obs_mask(obs: Sequence[int]) -> int:
    m = 0
    for o in obs:
        m ^= 1 << o
    return m


def _mask_obs(mask: int) -> tuple[int, ...]:
    return tuple(k for k in range(mask.bit_length()) if mask >> k & 1)


def _peel(
    symptom: tuple[int, ...], target: int, known: dict[tuple[int, ...], list[int]], budget: int = 4000
) -> list[tuple[tuple[int, ...], int]] | None:
    """Split ``symptom`` into known graphlike pieces whose observable masks
    XOR to ``target``. Pieces pairing the lowest remaining detector are tried
    first, then its singleton."""
    calls = 0

    def rec(rest: tuple[int, ...], acc: int):
        nonlocal calls
        calls += 1
        if calls > budget:
            return None
        if not rest:
            return [] if acc == target else None
        a = rest[0]
        options = [((a, b), i) for i, b in enumerate(rest) if i > 0 and (a, b) in known]
        if (a,) in known:
            options.append(((a,), None))
        for piece, i in options:
            nxt = rest[1:] if i is None else rest[1:i] + rest[i + 1 :]
            for mask in known[piece]:
                tail = rec(nxt, acc ^ mask)
                if tail is not None:
                    return [(piece, mask)] + tail
        return None

    return rec(tuple(sorted(symptom)), 0)


def _pair_by_proximity(
    symptom: tuple[int, ...], coords: Sequence[tuple[float, float, int]] | None
) -> list[tuple[int, ...]]:
    """Pair detectors greedily: earliest first, partner nearest in time, then
    in lattice distance. An odd one out becomes a boundary piece."""

    def key(d: int):
        return (coords[d][2], coords[d][0], coords[d][1], d) if coords else (d,)

    rest = sorted(symptom, key=key)
    pieces = []
    while len(rest) > 1:
        a = rest.pop(0)
        if coords:
            ta, ra, ca = coords[a][2], coords[a][0], coords[a][1]
            j = min(
                range(len(rest)),
                key=lambda k: (
                    abs(coords[rest[k]][2] - ta),
                    abs(coords[rest[k]][0] - ra) + abs(coords[rest[k]][1] - ca),
                    rest[k],
                ),
            )
        else:
            j = 0
        b = rest.pop(j)
        pieces.append(tuple(sorted((a, b))))
    if rest:
        pieces.append((rest[0],))
    return pieces


def decompose_hyperedges(
    dem: DetectorErrorModel,
    fallback: bool = True,
    allow_irreducible: bool = False,
    report: DecompositionReport | None = None,
) -> DetectorErrorModel:
    """Rewrite every mechanism with more than two detectors as graphlike
    pieces with the same detector and observable XOR. Pieces inherit the
    parent probability and merge with existing mechanisms.

    Without ``fallback`` only exact factoring against existing graphlike
    mechanisms is tried; failures are irreducible and raise unless
    ``allow_irreducible`` (then they are dropped and listed in ``report``).
    """
    report = report if report is not None else DecompositionReport()
    known: dict[tuple[int, ...], list[int]] = {}
    # most probable observable mask first for each graphlike symptom
    for m in sorted(dem.mechanisms, key=lambda m: -m.p):
        if 1 <= len(m.detectors) <= 2:
            known.setdefault(m.detectors, []).append(_obs_mask(m.observables))
    items: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = []
    for m in dem.mechanisms:
        if len(m.detectors) <= 2:
            items.append((m.p, m.detectors, m.observables))
            continue
        target = _obs_mask(m.observables)
        pieces = _peel(m.detectors, target, known)
        if pieces is not None:
            report.peeled += 1
        elif fallback:
            report.paired += 1
            pieces = []
            acc = 0
            for piece in _pair_by_proximity(m.detectors, dem.coords):
                mask = known[piece][0] if piece in known else 0
                pieces.append((piece, mask))
                acc ^= mask
            if acc != target:
                # put the observable residue on a piece not seen before, else the last one
                fresh = [i for i, (pc, _) in enumerate(pieces) if pc not in known]
                i = fresh[0] if fresh else len(pieces) - 1
                pieces[i] = (pieces[i][0], pieces[i][1] ^ acc ^ target)
        else:
            report.irreducible.append(m)
            continue
        for piece, mask in pieces:
            items.append((m.p, piece, _mask_obs(mask)))
    if report.irreducible and not allow_irreducible:
        raise IrreducibleMechanismError(report.irreducible)
    table = merge_mechanisms(items)
    mechs = tuple(Mechanism(p, d, o) for (d, o), p in sorted(table.items()))
    return DetectorErrorModel(mechs, dem.num_detectors, dem.num_observables, dem.coords)


# -- decoding graph -----------------------------------------------------------


def edge_weight(q: float) -> float:
    return math.log((1 - q) / q)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int  # == graph.boundary for boundary edges
    q: float
    obs: int  # observable bitmask
    mechanisms: tuple[int, ...]

    @property
    def weight(self) -> float:
        return edge_weight(self.q)


@dataclass(frozen=True)
class DecodingGraph:
    num_detectors: int
    num_observables: int
    edges: tuple[Edge, ...]

    @property
    def boundary(self) -> int:
        return self.num_detectors

    @classmethod
    def from_dem(cls, dem: DetectorErrorModel) -> "DecodingGraph":
        """Graph over a graphlike model; parallel mechanisms are merged, the
        observable mask following the most probable one."""
        nd = dem.num_detectors
        groups: dict[tuple[int, int], list[int]] = {}
        for i, m in enumerate(dem.mechanisms):
            if len(m.detectors) > 2:
                raise ValueError(f"mechanism {i} flips {len(m.detectors)} detectors; decompose first")
            if not m.detectors:
                continue
            u = m.detectors[0]
            v = m.detectors[1] if len(m.detectors) == 2 else nd
            groups.setdefault((u, v), []).append(i)
        edges = []
        clamped = 0
        for (u, v), ids in sorted(groups.items()):
            q = 0.0
            for i in ids:
                p = dem.mechanisms[i].p
                q = q * (1 - p) + p * (1 - q)
            best = max(ids, key=lambda i: (dem.mechanisms[i].p, -i))
            if q >= 0.5 - EPS:
                q = 0.5 - EPS
                clamped += 1
            edges.append(Edge(u, v, q, _obs_mask(dem.mechanisms[best].observables), tuple(ids)))
        if clamped:
            log.warning("%d edge probabilities clamped below 1/2", clamped)
        return cls(nd, dem.num_observables, tuple(edges))

    def _csr(self) -> tuple[csr_matrix, dict[tuple[int, int], Edge]]:
        n = self.num_detectors + 1
        lookup = {}
        rows, cols, vals = [], [], []
        for e in self.edges:
            lookup[(e.u, e.v)] = lookup[(e.v, e.u)] = e
            w = max(e.weight, 1e-12)  # csgraph drops explicit zeros
            rows += [e.u, e.v]
            cols += [e.v, e.u]
            vals += [w, w]
        return csr_matrix((vals, (rows, cols)), shape=(n, n)), lookup


# -- native exact matching -----------------------------------------------------


class NoBoundaryPathError(ValueError):
    pass


class MWPMDecoder:
    """Exact minimum-weight perfect matching on the detector graph.

    Flagged detectors and one boundary copy per flagged detector form a
    complete graph whose weights are shortest-path distances; boundary copies
    are joined to each other at zero cost. Ties resolve toward the lowest
    node index because nodes are inserted in index order.
    """

    def __init__(self, graph: DecodingGraph) -> None:
        self.graph = graph
        self._mat, self._lookup = graph._csr()

    def _paths(self, sources: list[int]):
        dist, pred = dijkstra(self._mat, directed=False, indices=sources, return_predecessors=True)
        return dist, pred

    def _path_obs(self, pred_row: np.ndarray, src: int, dst: int) -> int:
        obs = 0
        node = dst
        while node != src:
            prev = int(pred_row[node])
            obs ^= self._lookup[(prev, node)].obs
            node = prev
        return obs

    def match(self, syndrome: Sequence[int] | np.ndarray) -> tuple[int, float]:
        """Return ``(observable mask, total matching weight)``."""
        flagged = [int(i) for i in np.flatnonzero(np.asarray(syndrome, dtype=bool))]
        if not flagged:
            return 0, 0.0
        b = self.graph.boundary
        dist, pred = self._paths(flagged)
        k = len(flagged)
        g = nx.Graph()
        g.add_nodes_from(range(2 * k))
        big = 0.0
        pairs = []
        for i in range(k):
            for j in range(i + 1, k):
                d = dist[i, flagged[j]]
                if np.isfinite(d):
                    pairs.append((i, j, d))
            d = dist[i, b]
            if np.isfinite(d):
                pairs.append((i, k + i, d))
        for i in range(k):
            for j in range(i + 1, k):
                pairs.append((k + i, k + j, 0.0))
        big = 1.0 + sum(w for _, _, w in pairs)
        for i, j, w in pairs:
            g.add_edge(i, j, weight=big - w)
        mate = nx.max_weight_matching(g, maxcardinality=True)
        if len(mate) != k:
            raise NoBoundaryPathError("syndrome cannot be matched: some detector cannot reach the boundary")
        obs = 0
        total = 0.0
        for i, j in mate:
            i, j = min(i, j), max(i, j)
            if i >= k:
                continue
            if j >= k:
                total += dist[i, b]
                obs ^= self._path_obs(pred[i], flagged[i], b)
            else:
                total += dist[i, flagged[j]]
                obs ^= self._path_obs(pred[i], flagged[i], flagged[j])
        return obs, total

    def decode(self, syndrome) -> np.ndarray:
        obs, _ = self.match(syndrome)
        return np.array([obs >> k & 1 for k in range(self.graph.num_observables)], dtype=bool)

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        out = np.zeros((syndromes.shape[0], self.graph.num_observables), dtype=bool)
        for s, row in enumerate(syndromes):
            if row.any():
                out[s] = self.decode(row)
        return out


def mwpm_decode(graph: DecodingGraph, syndrome) -> np.ndarray:
    """Predicted observable flips for one syndrome."""
    return MWPMDecoder(graph).decode(syndrome)


# -- PyMatching production path ---------------------------------------------------


class PyMatchingDecoder:
    def __init__(self, graph: DecodingGraph) -> None:
        self.graph = graph
        m = pymatching.Matching()
        touched = set()
        for e in graph.edges:
            ids = set(_mask_obs(e.obs))
            if e.v == graph.boundary:
                m.add_boundary_edge(e.u, fault_ids=ids, weight=e.weight, error_probability=e.q)
            else:
                m.add_edge(e.u, e.v, fault_ids=ids, weight=e.weight, error_probability=e.q)
            touched.update((e.u, e.v))
        for d in range(graph.num_detectors):
            if d not in touched:
                # never flipped by any mechanism; keeps the node count right
                m.add_boundary_edge(d, weight=1e6, error_probability=1e-300)
        if graph.num_observables:
            m.ensure_num_fault_ids(graph.num_observables)
        self._m = m

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        pred = self._m.decode_batch(np.asarray(syndromes, dtype=np.uint8))
        return np.asarray(pred, dtype=bool).reshape(syndromes.shape[0], -1)[:, : self.graph.num_observables]

    def decode(self, syndrome) -> np.ndarray:
        return self.decode_batch(np.asarray(syndrome, dtype=np.uint8)[None, :])[0]


def build_decoder(dem: DetectorErrorModel, kind: str = "pymatching", fallback: bool = True):
    """Decompose hyperedges, build the graph and return a decoder object."""
    graphlike = decompose_hyperedges(dem, fallback=fallback)
    graph = DecodingGraph.from_dem(graphlike)
    if kind == "pymatching":
        return PyMatchingDecoder(graph)
    if kind == "mwpm":
        return MWPMDecoder(graph)
    raise ValueError(f"unknown decoder kind {kind!r}")


# -- brute-force maximum likelihood -------------------------------------------------


MAX_BRUTE_FORCE = 20


@dataclass(frozen=True)
class BruteForceResult:
    subset: tuple[int, ...]
    observables: int
    weight: float
    unique: bool  # no other consistent subset reaches the minimum weight


def _subset_tables(dem: DetectorErrorModel):
    k = len(dem.mechanisms)
    if k > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force limited to {MAX_BRUTE_FORCE} mechanisms, got {k}")
    if dem.num_detectors > 63:
        raise ValueError("brute force limited to 63 detectors")
    synd = np.zeros(1, dtype=np.uint64)
    obs = np.zeros(1, dtype=np.uint64)
    weight = np.zeros(1, dtype=np.float64)
    for m in dem.mechanisms:
        dm = np.uint64(sum(1 << d for d in m.detectors))
        om = np.uint64(_obs_mask(m.observables))
        synd = np.concatenate([synd, synd ^ dm])
        obs = np.concatenate([obs, obs ^ om])
        weight = np.concatenate([weight, weight + edge_weight(min(m.p, 0.5 - EPS))])
    return synd, obs, weight


def brute_force_decode(dem: DetectorErrorModel, syndrome) -> BruteForceResult:
    """Most likely mechanism subset consistent with the syndrome.

    Ties break toward the lexicographically smallest sorted index tuple.
    """
    synd, obs, weight = _cached_tables(dem)
    target = np.uint64(sum(1 << int(d) for d in np.flatnonzero(np.asarray(syndrome, dtype=bool))))
    hits = np.flatnonzero(synd == target)
    if hits.size == 0:
        raise ValueError("syndrome is not produced by any mechanism subset")
    w = weight[hits]
    best = w.min()
    ties = hits[w <= best + 1e-9]
    subsets = [tuple(i for i in range(len(dem.mechanisms)) if s >> i & 1) for s in ties.tolist()]
    pick = min(range(len(subsets)), key=lambda i: subsets[i])
    unique = ties.size == 1
    return BruteForceResult(subsets[pick], int(obs[ties[pick]]), float(best), unique)


@lru_cache(maxsize=8)
def _cached_tables(dem: DetectorErrorModel):
    return _subset_tables(dem)
