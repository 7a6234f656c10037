"""Memory experiments and threshold scans."""

from __future__ import annotations

import dataclasses
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from .circuit import NoiseModel, build_memory_circuit
from .decoder import build_decoder
from .lattice import Dims
from .schedule import Schedule, modified_schedule, standard_schedule
from .stabsim import FrameSampler, build_dem

WORKERS_ENV = "BACONSCHED_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    basis: str = "X"
    p: float = 0.001
    rounds: int | None = None  # reporting rounds of two steps; None means 4d
    max_shots: int = 10**6
    max_errors: int = 1000
    seed: int = 0
    schedule: str = "modified"  # or "standard"
    decoder: str = "pymatching"  # or "mwpm"
    batch_size: int = 8192

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"d must be at least 2, got {self.d}")
        if self.basis not in ("X", "Z"):
            raise ValueError(f"basis must be 'X' or 'Z', got {self.basis!r}")
        if not 0 <= self.p < 1:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be positive")
        if self.max_shots < 1 or self.max_errors < 1 or self.batch_size < 1:
            raise ValueError("shot, error and batch limits must be positive")
        if self.schedule not in ("modified", "standard"):
            raise ValueError(f"unknown schedule {self.schedule!r}")
        if self.decoder not in ("pymatching", "mwpm"):
            raise ValueError(f"unknown decoder {self.decoder!r}")

    @property
    def num_rounds(self) -> int:
        return 4 * self.d if self.rounds is None else self.rounds


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    shots: int
    logical_errors: int
    p_shot: float
    p_round: float
    ci_lo: float  # Wilson 95% interval, converted to per-round
    ci_hi: float
    wall_time: float = 0.0

    def row(self) -> dict:
        return {
            "d": self.config.d,
            "p": self.config.p,
            "shots": self.shots,
            "errors": self.logical_errors,
            "p_shot": self.p_shot,
            "p_round": self.p_round,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
        }


def per_round_rate(p_shot: float, rounds: int) -> float:
    """Per-round flip probability whose ``rounds``-fold XOR composition gives ``p_shot``."""
    if rounds < 1:
        raise ValueError("rounds must be positive")
    if p_shot < 0:
        raise ValueError("p_shot must be non-negative")
    p_shot = min(p_shot, 0.5)
    return 0.5 * (1 - (1 - 2 * p_shot) ** (1 / rounds))


def wilson_interval(errors: int, shots: int, confidence: float = 0.95) -> tuple[float, float]:
    if shots == 0:
        return 0.0, 1.0
    ci = binomtest(errors, shots).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def make_schedule(kind: str, d: int) -> Schedule:
    return modified_schedule(d) if kind == "modified" else standard_schedule(Dims(d, d))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    return max(1, int(raw)) if raw.strip() else 1


# per-process cache so worker processes build each pipeline once
_PIPELINES: dict = {}


def _pipeline(cfg: ExperimentConfig):
    key = (cfg.d, cfg.basis, cfg.p, cfg.num_rounds, cfg.schedule, cfg.decoder)
    if key not in _PIPELINES:
        circuit = build_memory_circuit(
            make_schedule(cfg.schedule, cfg.d), rounds=cfg.num_rounds, basis=cfg.basis, noise=NoiseModel(cfg.p)
        )
        _PIPELINES.clear()
        _PIPELINES[key] = (FrameSampler(circuit), build_decoder(build_dem(circuit), cfg.decoder))
    return _PIPELINES[key]


def _run_batch(cfg: ExperimentConfig, batch: int, shots: int) -> int:
    sampler, decoder = _pipeline(cfg)
    dets, obs = sampler.sample(shots, cfg.seed, batch)
    if cfg.p == 0:
        return int(obs.any(axis=1).sum())
    pred = decoder.decode_batch(dets)
    return int((pred != obs).any(axis=1).sum())


def run_memory_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Sample fixed-size batches until ``max_shots`` or ``max_errors``.

    Batch ``b`` always uses the same random stream, and the stopping rule
    is applied in batch order, so the result does not depend on ``workers``.
    """
    workers = default_workers() if workers is None else workers
    start = time.perf_counter()
    sizes = []
    left = cfg.max_shots
    while left > 0:
        sizes.append(min(cfg.batch_size, left))
        left -= sizes[-1]
    shots = errors = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        b = 0
        while b < len(sizes) and errors < cfg.max_errors:
            wave = range(b, min(b + max(workers, 1), len(sizes)))
            if pool is None:
                counts = [_run_batch(cfg, i, sizes[i]) for i in wave]
            else:
                counts = list(pool.map(_run_batch, [cfg] * len(wave), wave, [sizes[i] for i in wave]))
            for i, c in zip(wave, counts):
                if errors >= cfg.max_errors:
                    break
                shots += sizes[i]
                errors += c
                b = i + 1
    finally:
        if pool is not None:
            pool.shutdown()
    p_shot = errors / shots
    lo, hi = wilson_interval(errors, shots)
    rounds = cfg.num_rounds
    return ExperimentResult(
        config=cfg,
        shots=shots,
        logical_errors=errors,
        p_shot=p_shot,
        p_round=per_round_rate(p_shot, rounds),
        ci_lo=per_round_rate(lo, rounds),
        ci_hi=per_round_rate(hi, rounds),
        wall_time=time.perf_counter() - start,
    )


# -- threshold scans -------------------------------------------------------------


@dataclass
class ScanResult:
    base: ExperimentConfig
    results: list[ExperimentResult]
    crossings: list[tuple[int, int, float | None]]

    @property
    def crossing_estimate(self) -> float | None:
        found = [p for _, _, p in self.crossings if p is not None]
        return float(np.median(found)) if found else None


def find_crossing(ps: list[float], small: list[float], large: list[float]) -> float | None:
    """First ``p`` where the larger-distance curve stops beating the smaller one.

    Curves are interpolated linearly in log-log coordinates; points with a
    zero rate on either curve are skipped.
    """
    pts = [
        (math.log(p), math.log(b) - math.log(a))
        for p, a, b in zip(ps, small, large)
        if a > 0 and b > 0
    ]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y0 < 0 <= y1:
            return math.exp(x0 + (x1 - x0) * (-y0) / (y1 - y0))
    return None


def threshold_scan(
    d_list: list[int],
    p_list: list[float],
    base: ExperimentConfig | None = None,
    workers: int | None = None,
) -> ScanResult:
    if not d_list or not p_list:
        raise ValueError("threshold scan needs non-empty d and p lists")
    base = base or ExperimentConfig(d=d_list[0])
    results = []
    for d in d_list:
        for p in p_list:
            cfg = dataclasses.replace(base, d=d, p=p)
            results.append(run_memory_experiment(cfg, workers))
    ps = sorted(p_list)
    rate = {(r.config.d, r.config.p): r.p_round for r in results}
    crossings = []
    ds = sorted(d_list)
    for a, b in zip(ds, ds[1:]):
        crossings.append((a, b, find_crossing(ps, [rate[a, p] for p in ps], [rate[b, p] for p in ps])))
    return ScanResult(base, results, crossings)


CSV_FIELDS = ("d", "p", "shots", "errors", "p_shot", "p_round", "ci_lo", "ci_hi")


def _config_header(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out.pop("d")
    out.pop("p")
    return out


def _fmt(v) -> str:
    return format(v, ".10g") if isinstance(v, float) else str(v)


def results_csv(results: list[ExperimentResult], crossings=None, base: ExperimentConfig | None = None) -> str:
    """CSV with the config and seed in a leading comment; crossings trail as comments."""
    base = base or results[0].config
    buf = io.StringIO()
    buf.write("# config " + json.dumps(_config_header(base), sort_keys=True) + "\n")
    buf.write(",".join(CSV_FIELDS) + "\n")
    for r in results:
        row = r.row()
        buf.write(",".join(_fmt(row[k]) for k in CSV_FIELDS) + "\n")
    if crossings is not None:
        found = []
        for a, b, p in crossings:
            buf.write(f"# crossing d={a},{b} p={'none' if p is None else _fmt(p)}\n")
            if p is not None:
                found.append(p)
        est = _fmt(float(np.median(found))) if found else "none"
        buf.write(f"# crossing_estimate p={est}\n")
    return buf.getvalue()


def results_json(results: list[ExperimentResult], crossings=None, base: ExperimentConfig | None = None) -> str:
    base = base or results[0].config
    doc = {"config": _config_header(base), "rows": [r.row() for r in results]}
    if crossings is not None:
        doc["crossings"] = [{"d_small": a, "d_large": b, "p": p} for a, b, p in crossings]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
