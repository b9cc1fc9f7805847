"""Candidate circuit edits derived from minimum-weight logical errors.

Two edit kinds exist. A reorder moves one data qubit of a stabilizer's
CNOT order immediately before another, changing which qubits a hook error
spreads to. A reschedule flips propagation-graph edges, changing the round
in which a neighboring check detects an error; flipping an X/Z pair on one
shared qubit requires a paired flip on a second shared qubit to preserve
the even-crossing rule.

Pruning keeps a candidate only if the edited schedule is valid, the
original subgraph's detector set is no longer ambiguous under the edited
circuit, and the re-propagated original error set is no longer an
undetected logical error on those detectors.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .ambiguity import Subgraph, is_ambiguous
from .circuits import memory_circuit
from .dem import DetectorErrorModel, FaultMechanism, build_dem, is_hook, propagate_fault
from .scheduling import SmSchedule, extract_layers, validate_schedule

Flip = tuple[int, int, int]


@dataclass(frozen=True)
class CandidateChange:
    kind: str  # 'reorder' | 'reschedule'
    stab: int = -1
    moved_qubit: int = -1
    before_qubit: int = -1
    flips: tuple[Flip, ...] = ()
    alternates: tuple[Flip, ...] = ()  # fallback paired flips, seeded order
    origin: tuple[int, int] = (-1, -1)  # (subgraph id, mechanism id)
    solution: tuple[int, ...] = ()  # the full min-weight error set
    status: str = "candidate"  # 'candidate' | 'invalid' | 'verified'

    def describe(self) -> str:
        if self.kind == "reorder":
            return (
                f"reorder stab {self.stab}: move {self.moved_qubit} "
                f"before {self.before_qubit}"
            )
        return "reschedule flips " + ", ".join(
            f"({a},{b},q{q})" for a, b, q in self.flips
        )

    def apply_to(self, schedule: SmSchedule) -> SmSchedule:
        if self.kind == "reorder":
            order = list(schedule.orders[self.stab])
            order.remove(self.moved_qubit)
            order.insert(order.index(self.before_qubit), self.moved_qubit)
            return schedule.with_order(self.stab, order)
        return schedule.with_flips(self.flips)


def _stabs_on_qubit(code, q: int) -> list[int]:
    return [s for s in range(code.num_checks) if q in code.check_support(s)]


def _detecting_checks(code, q: int, x_part: bool, z_part: bool) -> list[int]:
    """Checks containing q that detect the given error components on it."""
    out = []
    for s in _stabs_on_qubit(code, q):
        if code.is_x_check(s):
            if z_part:
                out.append(s)
        elif x_part:
            out.append(s)
    return out


def enumerate_changes(
    dem: DetectorErrorModel, schedule: SmSchedule, err: tuple[int, ...]
) -> list[CandidateChange]:
    """Candidate edits for every concrete fault behind a solution's columns.

    Hook faults yield w-1 reorders of the hosting stabilizer (each other
    support qubit moved immediately before the hook's data qubit). CNOT
    faults with a data-qubit component yield one reschedule per neighboring
    check that detects that component, with the paired flip resolved
    deterministically when exactly two qubits are shared and in seeded
    order otherwise.
    """
    code = schedule.code
    n = code.n
    out: list[CandidateChange] = []
    seen: set = set()

    def emit(cand: CandidateChange):
        key = (cand.kind, cand.stab, cand.moved_qubit, cand.before_qubit, cand.flips)
        if key not in seen:
            seen.add(key)
            out.append(cand)

    for mech_id in err:
        mech = dem.mechanisms[mech_id]
        for source in mech.sources:
            _, _, identity = source.location
            if identity[0] != "CX":
                continue
            qubits = identity[1]
            data_q = next((q for q in qubits if q < n), None)
            anc = next((q for q in qubits if q >= n), None)
            if data_q is None or anc is None:
                continue
            s_j = anc - n
            if is_hook(source, dem):
                for q_other in code.check_support(s_j):
                    if q_other == data_q:
                        continue
                    emit(
                        CandidateChange(
                            "reorder",
                            stab=s_j,
                            moved_qubit=q_other,
                            before_qubit=data_q,
                            origin=(-1, mech_id),
                            solution=tuple(err),
                        )
                    )
            comp = next((ch for q, ch in source.pauli if q == data_q), None)
            if comp is None:
                continue
            x_part = comp in ("X", "Y")
            z_part = comp in ("Z", "Y")
            for s_i in _detecting_checks(code, data_q, x_part, z_part):
                if s_i == s_j:
                    continue
                flips = [(s_i, s_j, data_q)]
                alternates: tuple[Flip, ...] = ()
                if code.is_x_check(s_i) != code.is_x_check(s_j):
                    shared = sorted(
                        set(code.check_support(s_i)) & set(code.check_support(s_j))
                    )
                    others = [q for q in shared if q != data_q]
                    if not others:
                        continue  # commutation cannot be preserved
                    if len(others) > 1:
                        rng = np.random.default_rng(
                            np.random.SeedSequence((0x9C, mech_id, s_i, s_j))
                        )
                        others = [others[i] for i in rng.permutation(len(others))]
                    flips.append((s_i, s_j, others[0]))
                    alternates = tuple((s_i, s_j, q) for q in others[1:])
                emit(
                    CandidateChange(
                        "reschedule",
                        flips=tuple(flips),
                        alternates=alternates,
                        origin=(-1, mech_id),
                        solution=tuple(err),
                    )
                )
    return out


def rebuild_dem(dem: DetectorErrorModel, schedule: SmSchedule) -> DetectorErrorModel:
    """The same memory experiment and noise, under an edited schedule."""
    circ = memory_circuit(schedule, dem.circuit.rounds, dem.circuit.basis)
    return build_dem(circ, dem.noise)


def _repropagate(
    new_dem: DetectorErrorModel, solution_sources: list[FaultMechanism]
) -> tuple[set[int], set[int]]:
    """Detector/observable parity of the original faults in the new circuit."""
    circuit = new_dem.circuit
    index_of = {g.identity: i for i, g in enumerate(circuit.gates)}
    dets: set[int] = set()
    obs: set[int] = set()
    for f in solution_sources:
        identity = f.location[2]
        gi = index_of.get(identity)
        if gi is None:
            raise KeyError(f"gate {identity} absent from edited circuit")
        moved = FaultMechanism(f.pauli, f.location, f.probability, gi)
        d, o = propagate_fault(circuit, moved)
        dets.symmetric_difference_update(d)
        obs.symmetric_difference_update(o)
    return dets, obs


def prune_changes(
    schedule: SmSchedule,
    dem: DetectorErrorModel,
    sub: Subgraph,
    cands: list[CandidateChange],
) -> list[CandidateChange]:
    """Keep candidates that are valid, kill the ambiguity, and revive no logical.

    Reschedules whose paired flip fails validation retry their seeded
    alternates once each before being dropped.
    """
    verified: list[CandidateChange] = []
    syndromes = set(sub.syndrome_nodes)
    for cand in cands:
        variants = [cand]
        if cand.kind == "reschedule" and cand.alternates:
            variants += [
                replace(cand, flips=(cand.flips[0], alt), alternates=())
                for alt in cand.alternates
            ]
        accepted = None
        for variant in variants:
            edited = variant.apply_to(schedule)
            if not validate_schedule(edited).ok:
                continue
            new_dem = rebuild_dem(dem, edited)
            if is_ambiguous(new_dem, syndromes):
                continue
            sources = [
                dem.mechanisms[mid].sources[0] for mid in variant.solution
            ]
            try:
                new_dets, new_obs = _repropagate(new_dem, sources)
            except KeyError:
                continue
            if not (new_dets & syndromes) and new_obs:
                continue  # still an undetected logical on these detectors
            accepted = replace(variant, alternates=(), status="verified")
            break
        if accepted is not None:
            verified.append(accepted)
    return verified


def apply_changes(
    schedule: SmSchedule, verified: list[CandidateChange]
) -> tuple[SmSchedule, list[CandidateChange], list[CandidateChange]]:
    """Apply at most one change per origin subgraph, shortest depth first.

    Within each origin group only the candidate whose edited schedule has
    the minimum CNOT depth survives (ties keep enumeration order). Groups
    apply sequentially with re-validation; anything that no longer yields
    a valid schedule is skipped.
    """
    groups: dict[int, list[CandidateChange]] = {}
    for cand in verified:
        groups.setdefault(cand.origin[0], []).append(cand)

    applied: list[CandidateChange] = []
    skipped: list[CandidateChange] = []
    current = schedule
    for gid in sorted(groups):
        group = groups[gid]
        ranked = []
        for cand in group:
            edited = cand.apply_to(schedule)
            ranked.append((extract_layers(edited).depth, cand))
        ranked.sort(key=lambda t: t[0])
        best = ranked[0][1]
        skipped.extend(c for _, c in ranked[1:])
        try:
            edited = best.apply_to(current)
        except (ValueError, KeyError):
            skipped.append(best)
            continue
        if validate_schedule(edited).ok:
            current = edited
            applied.append(best)
        else:
            skipped.append(best)
    return current, applied, skipped
