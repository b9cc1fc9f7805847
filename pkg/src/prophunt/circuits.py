"""Concrete memory-experiment circuits built from a schedule.

A memory circuit prepares all data qubits in the chosen basis, repeats the
layered extraction round (ancilla resets, CNOT layers, ancilla
measurements), and ends with a transversal data measurement. Detector and
observable definitions are attached as measurement-index sets.

Detector identity is (stabilizer id, round index) with the final
reconstructed-parity detectors at round index ``rounds``; this naming is
independent of the CNOT schedule, so detectors line up across schedule
edits of the same code.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .codes import CssCode
from .scheduling import SmSchedule, extract_layers

PREP_ROUND = -1


@dataclass(frozen=True)
class Gate:
    """One circuit operation; two-qubit gates are always CX (control, target)."""

    name: str  # 'R' | 'RX' | 'M' | 'MX' | 'CX'
    qubits: tuple[int, ...]
    round: int  # -1 for initial prep, `rounds` for the final data layer
    layer: int  # CNOT layer within the round; bookends use -1 / depth

    @property
    def identity(self) -> tuple:
        """Schedule-independent name for matching gates across circuit edits."""
        return (self.name, self.qubits, self.round)


@dataclass(frozen=True)
class MemoryCircuit:
    code: CssCode
    schedule: SmSchedule
    basis: str
    rounds: int
    depth: int  # CNOT layers per round
    gates: tuple[Gate, ...]
    num_qubits: int
    num_meas: int
    detectors: tuple[tuple[int, ...], ...]
    detector_meta: tuple[tuple[int, int], ...]  # (stabilizer id, round)
    observables: tuple[tuple[int, ...], ...]

    def ancilla(self, stab: int) -> int:
        return self.code.n + stab

    def detector_index(self) -> dict[tuple[int, int], int]:
        return {meta: i for i, meta in enumerate(self.detector_meta)}


def memory_circuit(schedule: SmSchedule, rounds: int, basis: str) -> MemoryCircuit:
    """Build the basis-X or basis-Z memory experiment for a schedule.

    Same-basis checks get a detector every round (round 0 compares against
    the deterministic preparation) plus a final reconstructed-parity
    detector from the transversal data measurement; opposite-basis checks
    compare consecutive rounds only.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    basis = basis.lower()
    if basis not in ("x", "z"):
        raise ValueError(f"basis must be 'x' or 'z', got {basis!r}")
    code = schedule.code
    layered = extract_layers(schedule)
    depth = layered.depth
    n = code.n

    gates: list[Gate] = []
    meas_counter = 0
    anc_meas: dict[tuple[int, int], int] = {}
    data_meas: dict[int, int] = {}

    prep = "R" if basis == "z" else "RX"
    for q in range(n):
        gates.append(Gate(prep, (q,), PREP_ROUND, 0))

    for r in range(rounds):
        for s in range(code.num_checks):
            gates.append(Gate("RX" if code.is_x_check(s) else "R", (n + s,), r, -1))
        for l, layer in enumerate(layered.layers):
            for stab, q in layer:
                anc = n + stab
                pair = (anc, q) if code.is_x_check(stab) else (q, anc)
                gates.append(Gate("CX", pair, r, l))
        for s in range(code.num_checks):
            gates.append(Gate("MX" if code.is_x_check(s) else "M", (n + s,), r, depth))
            anc_meas[(s, r)] = meas_counter
            meas_counter += 1

    final = "M" if basis == "z" else "MX"
    for q in range(n):
        gates.append(Gate(final, (q,), rounds, 0))
        data_meas[q] = meas_counter
        meas_counter += 1

    same_type = code.is_x_check if basis == "x" else (lambda s: not code.is_x_check(s))
    detectors: list[tuple[int, ...]] = []
    meta: list[tuple[int, int]] = []
    for r in range(rounds):
        for s in range(code.num_checks):
            if r == 0:
                if not same_type(s):
                    continue
                detectors.append((anc_meas[(s, 0)],))
            else:
                detectors.append((anc_meas[(s, r - 1)], anc_meas[(s, r)]))
            meta.append((s, r))
    for s in range(code.num_checks):
        if same_type(s):
            support = code.check_support(s)
            detectors.append(
                (anc_meas[(s, rounds - 1)],) + tuple(data_meas[q] for q in support)
            )
            meta.append((s, rounds))

    logicals = code.lz if basis == "z" else code.lx
    observables = tuple(
        tuple(data_meas[q] for q in logicals.row_support(i))
        for i in range(logicals.rows)
    )

    return MemoryCircuit(
        code=code,
        schedule=schedule,
        basis=basis,
        rounds=rounds,
        depth=depth,
        gates=tuple(gates),
        num_qubits=n + code.num_checks,
        num_meas=meas_counter,
        detectors=tuple(detectors),
        detector_meta=tuple(meta),
        observables=observables,
    )


def to_stim_text(circuit: MemoryCircuit) -> str:
    """Render as a stim-format text circuit for third-party cross-checks."""
    lines: list[str] = []
    meas_order: list[int] = []
    prev_key: tuple[int, int] | None = None
    for g in circuit.gates:
        key = (g.round, g.layer)
        if prev_key is not None and key != prev_key:
            lines.append("TICK")
        prev_key = key
        if g.name == "CX":
            lines.append(f"CX {g.qubits[0]} {g.qubits[1]}")
        elif g.name == "R":
            lines.append(f"R {g.qubits[0]}")
        elif g.name == "RX":
            lines.append(f"RX {g.qubits[0]}")
        elif g.name == "M":
            lines.append(f"M {g.qubits[0]}")
            meas_order.append(g.qubits[0])
        elif g.name == "MX":
            lines.append(f"MX {g.qubits[0]}")
            meas_order.append(g.qubits[0])
    total = len(meas_order)
    for det_idx, meas in enumerate(circuit.detectors):
        s, r = circuit.detector_meta[det_idx]
        recs = " ".join(f"rec[{m - total}]" for m in meas)
        lines.append(f"DETECTOR({s}, {r}) {recs}")
    for obs_idx, meas in enumerate(circuit.observables):
        recs = " ".join(f"rec[{m - total}]" for m in meas)
        lines.append(f"OBSERVABLE_INCLUDE({obs_idx}) {recs}")
    return "\n".join(lines) + "\n"


def write_stim(circuit: MemoryCircuit, path: str | Path) -> None:
    Path(path).write_text(to_stim_text(circuit))
