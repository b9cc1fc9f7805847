"""Command-line entry point.

Subcommands: optimize, simulate, deff, scan, export-wcnf, zne. Every run
writes a manifest recording the command, configuration, input hashes and
output paths; with --workers 1 and a fixed --seed, reruns are
bit-reproducible. Exit codes: 2 bad arguments, 3 invalid input, 4
internal failure.

Set PROPHUNT_LOG to DEBUG/INFO/WARNING to control logging.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import memory_circuit, write_stim
from .codes import CssCode, resolve_code
from .dem import NoiseModel, build_dem, write_dem
from .minweight import effective_distance, encode_wcnf, export_wcnf, min_weight_logical
from .mutate import rebuild_dem
from .optimizer import OptimizerConfig, default_target_distance, optimize
from .scheduling import (
    SmSchedule,
    coloration_schedule,
    load_schedule,
    nz_schedule,
    save_schedule,
    validate_schedule,
)

log = logging.getLogger("prophunt")


def _setup_logging() -> None:
    level = os.environ.get("PROPHUNT_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, command: str, args: argparse.Namespace):
        self.data = {
            "command": command,
            "config": {
                k: v for k, v in sorted(vars(args).items()) if k != "func"
            },
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "inputs": {},
            "outputs": [],
            "wall_seconds": None,
        }
        self._start = time.monotonic()

    def add_input(self, path: str | Path | None) -> None:
        if path and Path(path).is_file():
            self.data["inputs"][str(path)] = _sha256(Path(path))

    def add_output(self, path: str | Path) -> None:
        self.data["outputs"].append(str(path))

    def write(self, path: str | Path) -> None:
        self.data["wall_seconds"] = round(time.monotonic() - self._start, 3)
        Path(path).write_text(json.dumps(self.data, sort_keys=True, indent=1))


def _resolve_start(args, code: CssCode) -> SmSchedule:
    if args.start == "nz":
        if not code.name.startswith("surface:"):
            raise ValueError("the nz start schedule exists only for surface codes")
        return nz_schedule(int(code.name.split(":")[1]))
    if args.start == "coloration":
        return coloration_schedule(code, args.seed)
    if args.start == "file":
        if not args.schedule:
            raise ValueError("--start file requires --schedule")
        return load_schedule(args.schedule)
    raise ValueError(f"unknown start {args.start!r}")


def _load_schedule_arg(args) -> SmSchedule:
    if not args.schedule:
        raise ValueError("--schedule is required")
    return load_schedule(args.schedule)


def _noise(args) -> NoiseModel:
    idle = getattr(args, "idle_strength", 0.0) or 0.0
    return NoiseModel(p=args.p, include_idle=idle > 0, idle_strength=idle)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_optimize(args) -> int:
    manifest = Manifest("optimize", args)
    code = resolve_code(args.code)
    if args.code.endswith(".json"):
        manifest.add_input(args.code)
    start = _resolve_start(args, code)
    manifest.add_input(args.schedule)
    cfg = OptimizerConfig(
        iterations=args.iters,
        samples_per_iteration=args.samples,
        workers=args.workers,
        solver_timeout=args.timeout_s,
        seed=args.seed,
        rounds=args.rounds,
        noise=_noise(args),
    )
    reports = optimize(code, start, cfg)
    out = _out_dir(args)
    for r in reports:
        path = out / f"iteration_{r.iteration:03d}.json"
        path.write_text(json.dumps(r.to_dict(), sort_keys=True, indent=1))
        manifest.add_output(path)
    final = out / "final_schedule.json"
    save_schedule(reports[-1].schedule, final)
    manifest.add_output(final)
    manifest.write(out / "manifest.json")
    log.info("optimize finished after %d iterations", len(reports))
    print(f"iterations: {len(reports)}; final depth {reports[-1].depth}")
    return 0


def cmd_simulate(args) -> int:
    from .sim import logical_error_rate

    manifest = Manifest("simulate", args)
    schedule = _load_schedule_arg(args)
    manifest.add_input(args.schedule)
    rounds = args.rounds or default_target_distance(schedule.code)
    bases = ["x", "z"] if args.basis == "both" else [args.basis]
    dems = {
        b: build_dem(memory_circuit(schedule, rounds, b), _noise(args))
        for b in bases
    }
    est = logical_error_rate(dems, args.shots, args.seed)
    out = Path(args.out or "simulate.csv")
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["schedule", "basis", "p", "shots", "failures", "rate", "ci_low", "ci_high"]
        )
        for basis, sub in sorted(est.per_basis.items()):
            writer.writerow(
                [
                    Path(args.schedule).name,
                    basis,
                    args.p,
                    sub.shots,
                    sub.failures,
                    f"{sub.rate:.8g}",
                    f"{sub.ci_low:.8g}",
                    f"{sub.ci_high:.8g}",
                ]
            )
        writer.writerow(
            [
                Path(args.schedule).name,
                "combined",
                args.p,
                est.shots,
                est.failures,
                f"{est.rate:.8g}",
                f"{est.ci_low:.8g}",
                f"{est.ci_high:.8g}",
            ]
        )
    manifest.add_output(out)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"combined LER {est.rate:.3e}")
    return 0


def cmd_deff(args) -> int:
    manifest = Manifest("deff", args)
    code = resolve_code(args.code) if args.code else None
    if args.schedule:
        schedule = load_schedule(args.schedule)
        manifest.add_input(args.schedule)
        if code is not None and schedule.code.n != code.n:
            raise ValueError(
                f"schedule code (n={schedule.code.n}) does not match --code (n={code.n})"
            )
    else:
        if code is None:
            raise ValueError("either --code or --schedule is required")
        schedule = _resolve_start(args, code)
    rounds = args.rounds or default_target_distance(schedule.code)
    bases = ["x", "z"] if args.basis == "both" else [args.basis]
    per_basis = {}
    for b in bases:
        dem = build_dem(memory_circuit(schedule, rounds, b), _noise(args))
        r = effective_distance(dem, timeout=args.timeout_s, seed=args.seed)
        per_basis[b] = {"value": r.value, "exact": r.exact}
    overall = min(v["value"] for v in per_basis.values())
    exact = all(v["exact"] for v in per_basis.values())
    result = {"per_basis": per_basis, "value": overall, "exact": exact}
    if args.out:
        Path(args.out).write_text(json.dumps(result, sort_keys=True, indent=1))
        manifest.add_output(args.out)
        manifest.write(Path(args.out).with_suffix(".manifest.json"))
    print(overall)
    return 0


def cmd_scan(args) -> int:
    from .ambiguity import sample_subgraph

    manifest = Manifest("scan", args)
    schedule = _load_schedule_arg(args)
    manifest.add_input(args.schedule)
    rounds = args.rounds or default_target_distance(schedule.code)
    bases = ["x", "z"] if args.basis == "both" else [args.basis]
    out = Path(args.out or "scan.csv")
    rng = np.random.default_rng(np.random.SeedSequence((0x5CA, args.seed)))
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["basis", "sample", "ambiguous", "errors", "syndromes", "min_weight"])
        for b in bases:
            dem = build_dem(memory_circuit(schedule, rounds, b), _noise(args))
            for i in range(args.samples):
                sub = sample_subgraph(dem, int(rng.integers(2**32)))
                if sub is None:
                    writer.writerow([b, i, 0, "", "", ""])
                else:
                    res = min_weight_logical(sub, args.timeout_s)
                    writer.writerow(
                        [b, i, 1, sub.num_errors, sub.num_syndromes, res.weight]
                    )
    manifest.add_output(out)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(f"scan written to {out}")
    return 0


def cmd_export_wcnf(args) -> int:
    from .ambiguity import sample_subgraph

    manifest = Manifest("export-wcnf", args)
    schedule = _load_schedule_arg(args)
    manifest.add_input(args.schedule)
    rounds = args.rounds or default_target_distance(schedule.code)
    basis = "z" if args.basis == "both" else args.basis
    dem = build_dem(memory_circuit(schedule, rounds, basis), _noise(args))
    rng = np.random.default_rng(np.random.SeedSequence((0xECF, args.seed)))
    sub = None
    for _ in range(args.samples):
        sub = sample_subgraph(dem, int(rng.integers(2**32)))
        if sub is not None:
            break
    if sub is None:
        raise ValueError("no ambiguous subgraph found within the sample budget")
    model = encode_wcnf(sub)
    out = Path(args.out or "subgraph.wcnf")
    export_wcnf(model, out)
    manifest.add_output(out)
    res = min_weight_logical(sub, args.timeout_s)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    print(
        f"wcnf: {model.num_vars} vars {model.num_clauses} clauses; "
        f"internal optimum {res.weight}"
    )
    return 0


def cmd_zne(args) -> int:
    from .zne import compare

    manifest = Manifest("zne", args)
    ranges = [
        [float(d) for d in chunk.split(",")] for chunk in args.ranges.split(";")
    ]
    report = compare(ranges, args.lam, args.budget, args.seeds)
    out = Path(args.out or "zne.csv")
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in report.to_csv_rows():
            writer.writerow(row)
        writer.writerow([])
        writer.writerow(["range", "ds_mean_bias", "hook_mean_bias", "improvement"])
        for ri in range(len(ranges)):
            writer.writerow(
                [
                    ri,
                    f"{report.mean_bias[(ri, 'ds')]:.8g}",
                    f"{report.mean_bias[(ri, 'hook')]:.8g}",
                    f"{report.improvement[ri]:.8g}",
                ]
            )
    manifest.add_output(out)
    manifest.write(out.with_suffix(out.suffix + ".manifest.json"))
    for ri in range(len(ranges)):
        print(
            f"range {ri}: ds {report.mean_bias[(ri, 'ds')]:.4f} "
            f"hook {report.mean_bias[(ri, 'hook')]:.4f} "
            f"improvement {report.improvement[ri]:.2f}"
        )
    return 0


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    opts = {
        "code": lambda: p.add_argument("--code", help="surface:<d> or a code-spec JSON file"),
        "schedule": lambda: p.add_argument("--schedule", help="schedule JSON file"),
        "start": lambda: p.add_argument(
            "--start", choices=["coloration", "nz", "file"], default="coloration"
        ),
        "iters": lambda: p.add_argument("--iters", type=int, default=25),
        "samples": lambda: p.add_argument("--samples", type=int, default=500),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "workers": lambda: p.add_argument("--workers", type=int, default=os.cpu_count() or 1),
        "timeout-s": lambda: p.add_argument("--timeout-s", dest="timeout_s", type=float, default=360.0),
        "p": lambda: p.add_argument("--p", type=float, default=1e-3),
        "shots": lambda: p.add_argument("--shots", type=int, default=1_000_000),
        "rounds": lambda: p.add_argument("--rounds", type=int, default=None),
        "basis": lambda: p.add_argument("--basis", choices=["x", "z", "both"], default="both"),
        "idle-strength": lambda: p.add_argument(
            "--idle-strength", dest="idle_strength", type=float, default=0.0
        ),
        "out": lambda: p.add_argument("--out", help="output file or directory"),
    }
    for name in names:
        opts[name]()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prophunt",
        description="Syndrome-measurement circuit optimization for CSS codes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("optimize", help="run the ambiguity-removal loop")
    _add_common(
        p, "code", "schedule", "start", "iters", "samples", "seed", "workers",
        "timeout-s", "p", "rounds", "idle-strength", "out",
    )
    p.set_defaults(func=cmd_optimize)

    p = subs.add_parser("simulate", help="Monte Carlo logical error rate")
    _add_common(p, "schedule", "seed", "p", "shots", "rounds", "basis", "idle-strength", "out")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("deff", help="effective distance of a schedule")
    _add_common(
        p, "code", "schedule", "start", "seed", "timeout-s", "p", "rounds", "basis", "out"
    )
    p.set_defaults(func=cmd_deff)

    p = subs.add_parser("scan", help="ambiguous-subgraph scan")
    _add_common(
        p, "schedule", "samples", "seed", "timeout-s", "p", "rounds", "basis", "out"
    )
    p.set_defaults(func=cmd_scan)

    p = subs.add_parser("export-wcnf", help="export a MaxSAT model for one subgraph")
    _add_common(p, "schedule", "samples", "seed", "timeout-s", "p", "rounds", "basis", "out")
    p.set_defaults(func=cmd_export_wcnf)

    p = subs.add_parser("zne", help="hook vs distance-scaling extrapolation study")
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument(
        "--ranges",
        default="13,11,9,7;11,9,7,5;9,7,5,3",
        help="semicolon-separated distance lists",
    )
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p, "out")
    p.set_defaults(func=cmd_zne)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # internal failure
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
