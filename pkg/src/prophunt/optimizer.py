"""The iterative ambiguity-removal loop.

Each iteration rebuilds the X- and Z-memory error models for the current
schedule, samples subgraphs in parallel (alternating basis by sample
parity), solves every ambiguous one for its minimum-weight logical error,
and turns solutions below the target distance into verified circuit edits
which are applied conflict-aware. Sampling seeds derive from (run seed,
iteration, sample index), so trajectories are reproducible and independent
of the worker count.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .ambiguity import sample_subgraph
from .circuits import memory_circuit
from .codes import CssCode
from .dem import DetectorErrorModel, NoiseModel, build_dem
from .minweight import effective_distance, min_weight_logical
from .mutate import CandidateChange, apply_changes, enumerate_changes, prune_changes
from .scheduling import SmSchedule, extract_layers, validate_schedule


@dataclass(frozen=True)
class OptimizerConfig:
    iterations: int = 25
    samples_per_iteration: int = 500
    workers: int = 1
    max_steps: int = 500
    solver_timeout: float = 360.0
    seed: int = 0
    rounds: int | None = None  # default: target_distance rounds per basis
    target_distance: int | None = None  # default: lightest logical row
    noise: NoiseModel = NoiseModel(1e-3)
    early_stop: bool = True

    def __post_init__(self):
        for name in ("iterations", "samples_per_iteration", "max_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SubgraphOutcome:
    sample_index: int
    basis: str
    num_errors: int
    num_syndromes: int
    weight: int | None
    status: str
    solve_seconds: float
    verified: list[CandidateChange] = field(default_factory=list)


@dataclass
class IterationReport:
    iteration: int
    schedule: SmSchedule
    depth: int
    ambiguous_found: int
    sub_distance_found: int
    min_weight: int | None
    candidates: int
    verified: int
    applied: list[CandidateChange]
    skipped: list[CandidateChange]
    solve_seconds: list[float]
    outcomes: list[SubgraphOutcome]

    def to_dict(self) -> dict:
        from .scheduling import schedule_to_dict

        return {
            "iteration": self.iteration,
            "depth": self.depth,
            "ambiguous_found": self.ambiguous_found,
            "sub_distance_found": self.sub_distance_found,
            "min_weight": self.min_weight,
            "candidates": self.candidates,
            "verified": self.verified,
            "applied": [c.describe() for c in self.applied],
            "skipped": [c.describe() for c in self.skipped],
            "solve_seconds": self.solve_seconds,
            "subgraphs": [
                {
                    "sample": o.sample_index,
                    "basis": o.basis,
                    "errors": o.num_errors,
                    "syndromes": o.num_syndromes,
                    "weight": o.weight,
                    "status": o.status,
                    "solve_seconds": o.solve_seconds,
                    "verified": len(o.verified),
                }
                for o in self.outcomes
            ],
            "schedule": schedule_to_dict(self.schedule),
        }


def default_target_distance(code: CssCode) -> int:
    """Upper bound on the code distance: the lightest stored logical row."""
    weights = [code.lx.row_weight(i) for i in range(code.lx.rows)]
    weights += [code.lz.row_weight(i) for i in range(code.lz.rows)]
    if not weights:
        raise ValueError("code has no logical operators to protect")
    return min(weights)


def sample_seed(run_seed: int, iteration: int, index: int) -> int:
    """Stable per-sample seed, independent of worker assignment."""
    return int(
        np.random.SeedSequence((run_seed, iteration, index)).generate_state(1)[0]
    )


# worker-side state for process pools, set once per worker by _init_worker
_WORKER_STATE: dict = {}


def _init_worker(dems, schedule, target, cfg_tuple):
    _WORKER_STATE["dems"] = dems
    _WORKER_STATE["schedule"] = schedule
    _WORKER_STATE["target"] = target
    _WORKER_STATE["cfg"] = cfg_tuple


def _run_sample(args) -> SubgraphOutcome | None:
    iteration, index = args
    dems = _WORKER_STATE["dems"]
    schedule = _WORKER_STATE["schedule"]
    target = _WORKER_STATE["target"]
    run_seed, max_steps, solver_timeout = _WORKER_STATE["cfg"]
    basis = "z" if index % 2 == 0 else "x"
    dem = dems[basis]
    sub = sample_subgraph(dem, sample_seed(run_seed, iteration, index), max_steps)
    if sub is None:
        return None
    return _solve_and_mutate(
        dem, schedule, sub, target, solver_timeout, index, basis
    )


def _solve_and_mutate(
    dem: DetectorErrorModel,
    schedule: SmSchedule,
    sub,
    target: int,
    solver_timeout: float,
    index: int,
    basis: str,
) -> SubgraphOutcome:
    res = min_weight_logical(sub, solver_timeout)
    outcome = SubgraphOutcome(
        sample_index=index,
        basis=basis,
        num_errors=sub.num_errors,
        num_syndromes=sub.num_syndromes,
        weight=res.weight,
        status=res.status,
        solve_seconds=res.solve_seconds,
    )
    if res.found and res.weight is not None and res.weight < target:
        cands = enumerate_changes(dem, schedule, res.error_set)
        cands = [replace(c, origin=(index, c.origin[1])) for c in cands]
        outcome.verified = prune_changes(schedule, dem, sub, cands)
    return outcome


def optimize(
    code: CssCode, start: SmSchedule, cfg: OptimizerConfig
) -> list[IterationReport]:
    """Run the optimization loop; one report per executed iteration.

    Only solutions lighter than the target distance drive edits (heavier
    ambiguity is intrinsic to the code). With early_stop the loop ends on
    the first iteration that finds no sub-distance ambiguity.
    """
    if not validate_schedule(start).ok:
        raise ValueError("starting schedule fails validation")
    target = cfg.target_distance or default_target_distance(code)
    rounds = cfg.rounds or target

    reports: list[IterationReport] = []
    current = start
    for iteration in range(1, cfg.iterations + 1):
        dems = {
            b: build_dem(memory_circuit(current, rounds, b), cfg.noise)
            for b in ("z", "x")
        }
        outcomes = _run_iteration(dems, current, target, cfg, iteration)

        # one schedule change per distinct subgraph: drop duplicates of the
        # same syndrome set and duplicate edits found by different samples
        seen_synd: set = set()
        seen_edits: set = set()
        verified: list[CandidateChange] = []
        for o in outcomes:
            if o.verified:
                sig = (o.basis, o.verified[0].solution)
                if sig in seen_synd:
                    continue
                seen_synd.add(sig)
            for cand in o.verified:
                edit_key = (
                    cand.kind,
                    cand.stab,
                    cand.moved_qubit,
                    cand.before_qubit,
                    cand.flips,
                )
                if edit_key in seen_edits:
                    continue
                seen_edits.add(edit_key)
                verified.append(cand)

        new_schedule, applied, skipped = apply_changes(current, verified)
        weights = [o.weight for o in outcomes if o.weight is not None]
        sub_distance = sum(
            1 for o in outcomes if o.weight is not None and o.weight < target
        )
        reports.append(
            IterationReport(
                iteration=iteration,
                schedule=new_schedule,
                depth=extract_layers(new_schedule).depth,
                ambiguous_found=len(outcomes),
                sub_distance_found=sub_distance,
                min_weight=min(weights) if weights else None,
                candidates=sum(len(o.verified) for o in outcomes),
                verified=len(verified),
                applied=applied,
                skipped=skipped,
                solve_seconds=[o.solve_seconds for o in outcomes],
                outcomes=outcomes,
            )
        )
        current = new_schedule
        if cfg.early_stop and sub_distance == 0:
            break
    return reports


def _run_iteration(dems, schedule, target, cfg, iteration) -> list[SubgraphOutcome]:
    tasks = [(iteration, i) for i in range(cfg.samples_per_iteration)]
    if cfg.workers == 1:
        _init_worker(
            dems, schedule, target, (cfg.seed, cfg.max_steps, cfg.solver_timeout)
        )
        raw = [_run_sample(t) for t in tasks]
    else:
        with ProcessPoolExecutor(
            max_workers=cfg.workers,
            initializer=_init_worker,
            initargs=(
                dems,
                schedule,
                target,
                (cfg.seed, cfg.max_steps, cfg.solver_timeout),
            ),
        ) as pool:
            chunk = max(1, len(tasks) // (cfg.workers * 4))
            raw = list(pool.map(_run_sample, tasks, chunksize=chunk))
    return [o for o in raw if o is not None]


@dataclass(frozen=True)
class TrajectoryEntry:
    schedule: SmSchedule
    d_eff: int
    exact: bool
    decreased: bool  # flagged, never asserted: improvement is not guaranteed


def trajectory_circuits(
    reports: list[IterationReport],
    start: SmSchedule | None = None,
    rounds: int | None = None,
    noise: NoiseModel = NoiseModel(1e-3),
) -> list[TrajectoryEntry]:
    """Deduplicated schedule snapshots with effective-distance estimates."""
    if not reports:
        raise ValueError("no iteration reports")
    code = reports[0].schedule.code
    target = default_target_distance(code)
    rounds = rounds or target
    snapshots: list[SmSchedule] = []
    for sched in ([start] if start is not None else []) + [
        r.schedule for r in reports
    ]:
        if not snapshots or snapshots[-1].canonical() != sched.canonical():
            snapshots.append(sched)
    entries: list[TrajectoryEntry] = []
    prev = None
    for sched in snapshots:
        vals = []
        exact = True
        for basis in ("z", "x"):
            dem = build_dem(memory_circuit(sched, rounds, basis), noise)
            r = effective_distance(dem, distance_cap=target + 1)
            vals.append(r.value)
            exact = exact and r.exact
        val = min(vals)
        entries.append(
            TrajectoryEntry(
                schedule=sched,
                d_eff=val,
                exact=exact,
                decreased=prev is not None and val < prev,
            )
        )
        prev = val
    return entries
