"""Circuit-level detector error models.

Every noise location of a memory circuit (two-qubit Paulis after CNOTs,
single-qubit Paulis after resets / before measurements, optional idle
channels per CNOT layer) is statically propagated to the detectors and
observables it flips. Faults with identical signatures merge into one
mechanism whose probability composes as independent parities; provenance
keeps every contributing fault so circuit edits can be traced back to
concrete gates.

Propagation is done in one reverse sweep that accumulates, per qubit and
circuit position, the detector/observable effect of an X or Z appearing
there; a fault signature is then an XOR of at most four of these vectors.
A direct forward walker (:func:`propagate_fault`) provides the same answer
one fault at a time and serves as the independent oracle in tests.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuits import Gate, MemoryCircuit
from .gf2 import BitMatrix

_W = 64

_TWO_QUBIT_PAULIS = [
    (p1, p2)
    for p1 in ("I", "X", "Y", "Z")
    for p2 in ("I", "X", "Y", "Z")
    if (p1, p2) != ("I", "I")
]
_ONE_QUBIT_PAULIS = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    """Uniform circuit-level Pauli noise.

    Two-qubit gates draw each of the 15 nontrivial Pauli pairs with
    probability p/15; single-qubit operations (reset, measurement) draw
    X/Y/Z with probability p/3 each, controllable via ``include_spam``.
    Idle noise adds a depolarizing channel of total strength
    (3/4)(1 - exp(-idle_strength)) on untouched qubits after every CNOT
    layer.
    """

    p: float
    include_idle: bool = False
    idle_strength: float = 0.0
    include_spam: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.idle_strength < 0:
            raise ValueError("idle_strength must be >= 0")

    @property
    def idle_pauli_prob(self) -> float:
        return (1.0 - math.exp(-self.idle_strength)) / 4.0


@dataclass(frozen=True)
class FaultMechanism:
    """A single concrete fault: which Paulis land where, and when."""

    pauli: tuple[tuple[int, str], ...]  # ((qubit, 'X'|'Y'|'Z'), ...)
    location: tuple[int, int, tuple]  # (round, layer, gate identity)
    probability: float
    gate_index: int  # fault sits immediately after circuit.gates[gate_index]


@dataclass(frozen=True)
class Mechanism:
    """A merged DEM column: signature, prior, and contributing faults."""

    index: int
    dets: tuple[int, ...]
    obs: tuple[int, ...]
    p: float
    sources: tuple[FaultMechanism, ...]


@dataclass(frozen=True)
class DetectorErrorModel:
    circuit: MemoryCircuit
    noise: NoiseModel
    mechanisms: tuple[Mechanism, ...]
    num_detectors: int
    num_observables: int
    det_to_mechs: tuple[tuple[int, ...], ...]
    h: BitMatrix = field(compare=False)  # detectors x mechanisms
    l: BitMatrix = field(compare=False)  # observables x mechanisms

    @property
    def basis(self) -> str:
        return self.circuit.basis

    @property
    def num_mechanisms(self) -> int:
        return len(self.mechanisms)

    @property
    def priors(self) -> np.ndarray:
        return np.array([m.p for m in self.mechanisms])

    @property
    def detector_meta(self) -> tuple[tuple[int, int], ...]:
        return self.circuit.detector_meta

    def signature_words(self) -> np.ndarray:
        """Packed (mechanisms x words) detector signatures."""
        return self.h.transpose().words


def _combine_parity(p: float, q: float) -> float:
    return p + q - 2.0 * p * q


# ---------------------------------------------------------------------------
# reverse transfer sweep


class _EffectTables:
    """Per-fault-position detector/observable effect vectors.

    ``after[i]`` maps qubit -> (x_effect, z_effect) packed vectors for a
    Pauli appearing immediately after gate i; measurement gates instead
    store the position immediately before the measurement, which is where
    their noise acts.
    """

    def __init__(self, circuit: MemoryCircuit):
        self.circuit = circuit
        d = len(circuit.detectors)
        o = len(circuit.observables)
        self.width = d + o
        self.nwords = max(1, (self.width + _W - 1) // _W)
        meas_effect = np.zeros((circuit.num_meas, self.nwords), dtype=np.uint64)
        for det_idx, meas in enumerate(circuit.detectors):
            for m in meas:
                meas_effect[m, det_idx // _W] ^= np.uint64(1) << np.uint64(det_idx % _W)
        for obs_idx, meas in enumerate(circuit.observables):
            b = d + obs_idx
            for m in meas:
                meas_effect[m, b // _W] ^= np.uint64(1) << np.uint64(b % _W)
        self.meas_effect = meas_effect

        nq = circuit.num_qubits
        mx = np.zeros((nq, self.nwords), dtype=np.uint64)
        mz = np.zeros((nq, self.nwords), dtype=np.uint64)
        self.snapshots: dict[int, dict[int, tuple[np.ndarray, np.ndarray]]] = {}
        self.idle_snapshots: dict[tuple[int, int], dict[int, tuple]] = {}

        meas_idx = circuit.num_meas
        gates = circuit.gates
        seg_end = len(gates)
        i = len(gates) - 1
        while i >= 0:
            seg_key = (gates[i].round, gates[i].layer)
            seg_start = i
            while seg_start >= 0 and (
                gates[seg_start].round,
                gates[seg_start].layer,
            ) == seg_key:
                seg_start -= 1
            seg_start += 1
            if gates[seg_start].name == "CX":
                # state right now = position after this CNOT layer: record
                # it for the idle qubits of the layer
                touched = set()
                for g in gates[seg_start:seg_end]:
                    touched.update(g.qubits)
                self.idle_snapshots[seg_key] = {
                    q: (mx[q].copy(), mz[q].copy())
                    for q in range(nq)
                    if q not in touched
                }
            for j in range(seg_end - 1, seg_start - 1, -1):
                g = gates[j]
                if g.name == "CX":
                    c, t = g.qubits
                    self.snapshots[j] = {
                        c: (mx[c].copy(), mz[c].copy()),
                        t: (mx[t].copy(), mz[t].copy()),
                    }
                    mx[c] ^= mx[t]
                    mz[t] ^= mz[c]
                elif g.name in ("R", "RX"):
                    q = g.qubits[0]
                    self.snapshots[j] = {q: (mx[q].copy(), mz[q].copy())}
                    mx[q] = 0
                    mz[q] = 0
                elif g.name in ("M", "MX"):
                    q = g.qubits[0]
                    meas_idx -= 1
                    if g.name == "M":
                        mx[q] = mx[q] ^ self.meas_effect[meas_idx]
                    else:
                        mz[q] = mz[q] ^ self.meas_effect[meas_idx]
                    self.snapshots[j] = {q: (mx[q].copy(), mz[q].copy())}
                else:
                    raise ValueError(f"unknown gate {g.name}")
            seg_end = seg_start
            i = seg_start - 1
        assert meas_idx == 0

    def fault_signature(self, gate_index: int, pauli, idle_key=None) -> np.ndarray:
        table = (
            self.idle_snapshots[idle_key] if idle_key is not None else self.snapshots[gate_index]
        )
        sig = np.zeros(self.nwords, dtype=np.uint64)
        for q, pchar in pauli:
            ex, ez = table[q]
            if pchar in ("X", "Y"):
                sig ^= ex
            if pchar in ("Z", "Y"):
                sig ^= ez
        return sig


def _enumerate_faults(circuit: MemoryCircuit, noise: NoiseModel):
    """All concrete faults of the noise model, in gate order."""
    p2 = noise.p / 15.0
    p1 = noise.p / 3.0
    faults: list[tuple[FaultMechanism, tuple | None]] = []
    layer_last_gate: dict[tuple[int, int], int] = {}
    for i, g in enumerate(circuit.gates):
        if g.name == "CX":
            layer_last_gate[(g.round, g.layer)] = i
            c, t = g.qubits
            for pc, pt in _TWO_QUBIT_PAULIS:
                pauli = tuple(
                    (q, ch) for q, ch in ((c, pc), (t, pt)) if ch != "I"
                )
                faults.append(
                    (
                        FaultMechanism(pauli, (g.round, g.layer, g.identity), p2, i),
                        None,
                    )
                )
        elif noise.include_spam:
            q = g.qubits[0]
            for ch in _ONE_QUBIT_PAULIS:
                faults.append(
                    (
                        FaultMechanism(((q, ch),), (g.round, g.layer, g.identity), p1, i),
                        None,
                    )
                )
    if noise.include_idle and noise.idle_pauli_prob > 0:
        pi = noise.idle_pauli_prob
        for key in sorted(layer_last_gate):
            r, l = key
            gi = layer_last_gate[key]
            touched = {
                q
                for g in circuit.gates
                if (g.round, g.layer) == key
                for q in g.qubits
            }
            for q in range(circuit.num_qubits):
                if q in touched:
                    continue
                for ch in _ONE_QUBIT_PAULIS:
                    faults.append(
                        (
                            FaultMechanism(((q, ch),), (r, l, ("IDLE", (q,))), pi, gi),
                            key,
                        )
                    )
    return faults


def build_dem(circuit: MemoryCircuit, noise: NoiseModel) -> DetectorErrorModel:
    """Enumerate, propagate and merge all fault mechanisms of a circuit.

    Mechanisms with identical detector+observable signatures merge, with
    probabilities composed as independent parities; faults with empty
    signatures are dropped. Column order follows first appearance in gate
    order, so the model is bit-identical for identical inputs.
    """
    tables = _EffectTables(circuit)
    d = len(circuit.detectors)

    by_signature: dict[bytes, int] = {}
    mech_sig: list[np.ndarray] = []
    mech_p: list[float] = []
    mech_sources: list[list[FaultMechanism]] = []

    for fault, idle_key in _enumerate_faults(circuit, noise):
        sig = tables.fault_signature(fault.gate_index, fault.pauli, idle_key)
        if not sig.any():
            continue
        key = sig.tobytes()
        idx = by_signature.get(key)
        if idx is None:
            by_signature[key] = len(mech_sig)
            mech_sig.append(sig)
            mech_p.append(fault.probability)
            mech_sources.append([fault])
        else:
            mech_p[idx] = _combine_parity(mech_p[idx], fault.probability)
            mech_sources[idx].append(fault)

    mechanisms = []
    det_to_mechs: list[list[int]] = [[] for _ in range(d)]
    h_rows_support: list[list[int]] = [[] for _ in range(d)]
    l_rows_support: list[list[int]] = [[] for _ in range(len(circuit.observables))]
    for idx, sig in enumerate(mech_sig):
        bits = np.unpackbits(sig.view(np.uint8), bitorder="little")[: tables.width]
        on = np.nonzero(bits)[0]
        dets = tuple(int(b) for b in on if b < d)
        obs = tuple(int(b) - d for b in on if b >= d)
        mechanisms.append(
            Mechanism(idx, dets, obs, mech_p[idx], tuple(mech_sources[idx]))
        )
        for b in dets:
            det_to_mechs[b].append(idx)
            h_rows_support[b].append(idx)
        for b in obs:
            l_rows_support[b].append(idx)

    n_mech = len(mechanisms)
    h = BitMatrix.from_rows(h_rows_support, n_mech)
    l = BitMatrix.from_rows(l_rows_support, n_mech)
    return DetectorErrorModel(
        circuit=circuit,
        noise=noise,
        mechanisms=tuple(mechanisms),
        num_detectors=d,
        num_observables=len(circuit.observables),
        det_to_mechs=tuple(tuple(ms) for ms in det_to_mechs),
        h=h,
        l=l,
    )


# ---------------------------------------------------------------------------
# forward walker (per-fault; the independent propagation path)


def propagate_fault(
    circuit: MemoryCircuit, fault: FaultMechanism
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Forward-propagate one fault; returns (detector bits, observable bits).

    Walks every gate after the fault position applying the CNOT
    propagation rules, flipping measurements whose basis anticommutes with
    the accumulated component and clearing components at resets.
    """
    xs: set[int] = set()
    zs: set[int] = set()
    for q, ch in fault.pauli:
        if ch in ("X", "Y"):
            xs.symmetric_difference_update({q})
        if ch in ("Z", "Y"):
            zs.symmetric_difference_update({q})
    # measurement noise sits before its own gate, so that gate still fires
    own_meas = circuit.gates[fault.gate_index].name in ("M", "MX")
    flipped: set[int] = set()
    meas_idx = 0
    for i, g in enumerate(circuit.gates):
        if g.name in ("M", "MX"):
            if i > fault.gate_index or (own_meas and i == fault.gate_index):
                q = g.qubits[0]
                if (g.name == "M" and q in xs) or (g.name == "MX" and q in zs):
                    flipped.symmetric_difference_update({meas_idx})
            meas_idx += 1
            continue
        if i <= fault.gate_index:
            continue
        if g.name == "CX":
            c, t = g.qubits
            if c in xs:
                xs.symmetric_difference_update({t})
            if t in zs:
                zs.symmetric_difference_update({c})
        elif g.name in ("R", "RX"):
            xs.discard(g.qubits[0])
            zs.discard(g.qubits[0])
    dets = []
    obs = []
    for det_idx, meas in enumerate(circuit.detectors):
        if len(flipped.intersection(meas)) % 2:
            dets.append(det_idx)
    for obs_idx, meas in enumerate(circuit.observables):
        if len(flipped.intersection(meas)) % 2:
            obs.append(obs_idx)
    return tuple(dets), tuple(obs)


def data_footprint_at_round_end(
    circuit: MemoryCircuit, fault: FaultMechanism
) -> set[int]:
    """Data qubits carrying any error component when the fault's round ends."""
    xs: set[int] = set()
    zs: set[int] = set()
    for q, ch in fault.pauli:
        if ch in ("X", "Y"):
            xs.add(q)
        if ch in ("Z", "Y"):
            zs.add(q)
    fault_round = fault.location[0]
    for i, g in enumerate(circuit.gates):
        if i <= fault.gate_index:
            continue
        if g.round > fault_round:
            break
        if g.name == "CX":
            c, t = g.qubits
            if c in xs:
                xs.symmetric_difference_update({t})
            if t in zs:
                zs.symmetric_difference_update({c})
        elif g.name in ("R", "RX"):
            xs.discard(g.qubits[0])
            zs.discard(g.qubits[0])
    n = circuit.code.n
    return {q for q in xs | zs if q < n}


def is_hook(mech: FaultMechanism, dem: DetectorErrorModel) -> bool:
    """True for CNOT faults touching the ancilla that spread to >= 2 data qubits."""
    round_, layer_, identity = mech.location
    if identity[0] != "CX":
        return False
    n = dem.circuit.code.n
    if not any(q >= n for q, _ in mech.pauli):
        return False
    return len(data_footprint_at_round_end(dem.circuit, mech)) >= 2


# ---------------------------------------------------------------------------
# text dump


def write_dem(dem: DetectorErrorModel, path: str | Path) -> None:
    """One `error(p) D.. L..` line per mechanism, plus a provenance sidecar."""
    lines = []
    sidecar = []
    for m in dem.mechanisms:
        parts = [f"error({m.p:.12g})"]
        parts += [f"D{b}" for b in m.dets]
        parts += [f"L{b}" for b in m.obs]
        lines.append(" ".join(parts))
        sidecar.append(
            {
                "index": m.index,
                "sources": [
                    {
                        "pauli": [[q, ch] for q, ch in f.pauli],
                        "round": f.location[0],
                        "layer": f.location[1],
                        "gate": [f.location[2][0], list(f.location[2][1])],
                        "probability": f.probability,
                    }
                    for f in m.sources
                ],
            }
        )
    p = Path(path)
    p.write_text("\n".join(lines) + "\n")
    p.with_suffix(p.suffix + ".provenance.json").write_text(
        json.dumps(sidecar, sort_keys=True)
    )
