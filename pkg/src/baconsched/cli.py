"""Command-line entry point: ``baconsched <subcommand> ...``.

Exit status is 0 on success, 1 when a verification fails and 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .circuit import NoiseModel, build_memory_circuit, parse, serialize
from .coloring import canonical_sequence_5x5, format_sequence, load_sequence, verify_sequence
from .decoder import build_decoder
from .experiment import (
    ExperimentConfig,
    results_csv,
    results_json,
    run_memory_experiment,
    threshold_scan,
)
from .lattice import Dims
from .schedule import format_schedule, modified_schedule, standard_schedule
from .stabsim import build_dem, format_dem, frame_sample, parse_dem, read_bits, write_bits
from .tracker import detector_census, run_tracker


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _write(out: str | None, data: str | bytes) -> None:
    if out is None or out == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    Path(out).write_bytes(data if isinstance(data, bytes) else data.encode())


def _schedule(args):
    if args.schedule == "standard":
        return standard_schedule(Dims(args.d, args.d))
    return modified_schedule(args.d, boundary_seeds=getattr(args, "boundary_seeds", False))


def cmd_game_verify(args) -> int:
    if args.canonical:
        seq = canonical_sequence_5x5()
    elif args.file:
        seq = load_sequence(args.file)
    else:
        raise UsageError("game-verify needs a sequence file or --canonical")
    report = verify_sequence(seq, args.boundary_seeds)
    if args.show:
        print(format_sequence(seq), end="")
    print(report)
    return 0 if report.overall else 1


def cmd_schedule(args) -> int:
    _write(args.out, format_schedule(_schedule(args)))
    return 0


def cmd_detectors(args) -> int:
    sched = _schedule(args)
    steps = args.steps if args.steps is not None else 4 * sched.period
    res = run_tracker(sched, steps, args.basis, with_final_readout=args.final)
    _write(args.out, res.format())
    return 0


def cmd_census(args) -> int:
    bases = ("X", "Z") if args.basis == "both" else (args.basis,)
    print(detector_census(_schedule(args), args.cycles, bases))
    return 0


def cmd_circuit(args) -> int:
    circuit = build_memory_circuit(
        _schedule(args), rounds=args.rounds, basis=args.basis, noise=NoiseModel(args.p)
    )
    _write(args.out, serialize(circuit))
    return 0


def cmd_dem(args) -> int:
    circuit = parse(_read_text(args.circuit))
    _write(args.out, format_dem(build_dem(circuit)))
    return 0


def cmd_sample(args) -> int:
    circuit = parse(_read_text(args.circuit))
    dets, obs = frame_sample(circuit, args.shots, args.seed)
    with open(args.dets, "wb") as fh:
        write_bits(fh, dets, "detectors")
    if args.obs:
        with open(args.obs, "wb") as fh:
            write_bits(fh, obs, "observables")
    return 0


def cmd_decode(args) -> int:
    dem = parse_dem(_read_text(args.dem))
    with open(args.dets, "rb") as fh:
        dets, _ = read_bits(fh)
    if dets.shape[1] != dem.num_detectors:
        raise UsageError(f"syndrome width {dets.shape[1]} does not match {dem.num_detectors} detectors")
    pred = build_decoder(dem, args.decoder).decode_batch(dets)
    if args.out:
        with open(args.out, "wb") as fh:
            write_bits(fh, pred, "observables")
    if args.obs:
        with open(args.obs, "rb") as fh:
            obs, _ = read_bits(fh)
        errors = int((pred != obs).any(axis=1).sum())
        print(f"shots={len(pred)} logical_errors={errors}")
    return 0


def _config(args, d: int, p: float) -> ExperimentConfig:
    return ExperimentConfig(
        d=d,
        basis=args.basis,
        p=p,
        rounds=args.rounds,
        max_shots=args.max_shots,
        max_errors=args.max_errors,
        seed=args.seed,
        schedule=args.schedule,
        decoder=args.decoder,
        batch_size=args.batch_size,
    )


def cmd_memory(args) -> int:
    result = run_memory_experiment(_config(args, args.d, args.p), args.workers)
    text = results_json([result]) if args.format == "json" else results_csv([result])
    _write(args.out, text)
    if args.out not in (None, "-"):
        print(f"shots={result.shots} logical_errors={result.logical_errors} p_round={result.p_round:.4g}")
    return 0


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def cmd_threshold(args) -> int:
    base = _config(args, args.d_list[0], args.p_list[0])
    scan = threshold_scan(args.d_list, args.p_list, base, args.workers)
    if args.format == "json":
        text = results_json(scan.results, scan.crossings, base)
    else:
        text = results_csv(scan.results, scan.crossings, base)
    _write(args.out, text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="baconsched", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, lattice=True):
        p.add_argument("--seed", type=int, default=0)
        if lattice:
            p.add_argument("--d", type=int, default=5, help="lattice size d (d x d qubits)")
            p.add_argument("--schedule", choices=("modified", "standard"), default="modified")
            p.add_argument("--boundary-seeds", action="store_true", help="let boundary checks seed strips")

    p = sub.add_parser("game-verify", help="verify a coloring sequence")
    p.add_argument("file", nargs="?")
    p.add_argument("--canonical", action="store_true", help="verify the built-in 5x5 solution")
    p.add_argument("--boundary-seeds", action="store_true")
    p.add_argument("--show", action="store_true", help="print the sequence first")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_game_verify)

    p = sub.add_parser("schedule", help="print the measurement schedule")
    common(p)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("detectors", help="list detectors found by the tracker")
    common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--basis", choices=("X", "Z"), default="X")
    p.add_argument("--final", action="store_true", help="close detectors with a terminal readout")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_detectors)

    p = sub.add_parser("census", help="steady-state detector census")
    common(p)
    p.add_argument("--cycles", type=int, default=4)
    p.add_argument("--basis", choices=("X", "Z", "both"), default="both")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("circuit", help="emit a noisy memory circuit")
    common(p)
    p.add_argument("--p", type=float, default=0.001)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--basis", choices=("X", "Z"), default="X")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("dem", help="detector error model of a circuit file")
    common(p, lattice=False)
    p.add_argument("circuit", help="circuit file, or - for stdin")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_dem)

    p = sub.add_parser("sample", help="sample detector and observable flips")
    common(p, lattice=False)
    p.add_argument("circuit")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--dets", required=True, help="output detector bit file")
    p.add_argument("--obs", help="output observable bit file")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("decode", help="decode sampled syndromes with a DEM")
    common(p, lattice=False)
    p.add_argument("dem")
    p.add_argument("--dets", required=True)
    p.add_argument("--obs", help="actual observable flips; prints the logical error count")
    p.add_argument("--decoder", choices=("pymatching", "mwpm"), default="pymatching")
    p.add_argument("-o", "--out", help="output prediction bit file")
    p.set_defaults(func=cmd_decode)

    def experiment(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--schedule", choices=("modified", "standard"), default="modified")
        p.add_argument("--basis", choices=("X", "Z"), default="X")
        p.add_argument("--rounds", type=int, help="reporting rounds (default 4d)")
        p.add_argument("--max-shots", type=int, default=10**6)
        p.add_argument("--max-errors", type=int, default=1000)
        p.add_argument("--batch-size", type=int, default=8192)
        p.add_argument("--decoder", choices=("pymatching", "mwpm"), default="pymatching")
        p.add_argument("--workers", type=int, help="worker processes (default from BACONSCHED_WORKERS)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("-o", "--out")

    p = sub.add_parser("memory", help="run one memory experiment")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--p", type=float, default=0.001)
    experiment(p)
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("threshold", help="scan d and p")
    p.add_argument("--d-list", type=_ints, default=[5, 7, 9, 11])
    p.add_argument("--p-list", type=_floats, default=[0.001, 0.002, 0.003, 0.004, 0.005])
    experiment(p)
    p.set_defaults(func=cmd_threshold)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad usage
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"baconsched {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
