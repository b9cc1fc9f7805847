import numpy as np
import pytest

from prophunt.circuits import memory_circuit
from prophunt.codes import CssCode
from prophunt.dem import (
    FaultMechanism,
    NoiseModel,
    build_dem,
    data_footprint_at_round_end,
    is_hook,
    propagate_fault,
    write_dem,
)
from prophunt.gf2 import BitMatrix
from prophunt.scheduling import nz_schedule, schedule_from_times


@pytest.fixture(scope="module")
def nz3_dem():
    circ = memory_circuit(nz_schedule(3), 3, "z")
    return build_dem(circ, NoiseModel(1e-3))


def single_z_check(rounds=2):
    code = CssCode(
        "w4", 4, 0,
        BitMatrix.zeros(0, 4), BitMatrix.from_dense([[1, 1, 1, 1]]),
        BitMatrix.zeros(0, 4), BitMatrix.zeros(0, 4),
    )
    sched = schedule_from_times(code, {(0, q): q for q in range(4)})
    return memory_circuit(sched, rounds, "z")


def test_sweep_matches_forward_walker(nz3_dem):
    circ = nz3_dem.circuit
    for m in nz3_dem.mechanisms:
        for f in m.sources:
            assert propagate_fault(circ, f) == (m.dets, m.obs)


def test_data_x_between_rounds_flips_one_detector():
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(1e-3))
    hits = [
        f
        for m in dem.mechanisms
        for f in m.sources
        if f.pauli == ((0, "X"),) and f.location[0] == 0 and f.location[2][0] == "CX"
    ]
    # pure X on data qubit 0 after its (only) round-0 CNOT
    dets, obs = propagate_fault(circ, hits[-1])
    assert [circ.detector_meta[i] for i in dets] == [(0, 1)]


def test_xx_cnot_fault_two_syndromes_same_round(nz3_dem):
    # an X on both ends of an early CNOT of a Z check spreads to the data
    # qubit and the ancilla: the ancilla X flips this round's measurement,
    # the data X flips a neighboring check, both in round 0
    circ = nz3_dem.circuit
    found = False
    for m in nz3_dem.mechanisms:
        for f in m.sources:
            _, _, identity = f.location
            if identity[0] != "CX" or f.location[0] != 0:
                continue
            if len(f.pauli) == 2 and all(ch == "X" for _, ch in f.pauli):
                rounds = {circ.detector_meta[d][1] for d in m.dets}
                if len(m.dets) >= 2 and rounds == {0}:
                    found = True
    assert found


def _fault_at(circ, identity, pauli, p=1e-3 / 15):
    gate_index = next(i for i, g in enumerate(circ.gates) if g.identity == identity)
    g = circ.gates[gate_index]
    return FaultMechanism(pauli, (g.round, g.layer, identity), p, gate_index)


def test_hook_z_after_second_cnot():
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(1e-3))
    anc = 4
    # Z on the ancilla target after the second of four CNOTs propagates
    # back onto the two remaining control data qubits
    f = _fault_at(circ, ("CX", (1, anc), 0), ((anc, "Z"),))
    assert data_footprint_at_round_end(circ, f) == {2, 3}
    assert is_hook(f, dem)


def test_after_last_cnot_not_hook():
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(1e-3))
    f = _fault_at(circ, ("CX", (3, 4), 0), ((4, "Z"),))
    assert len(data_footprint_at_round_end(circ, f)) == 0
    assert not is_hook(f, dem)


def test_data_fault_never_hook(nz3_dem):
    for m in nz3_dem.mechanisms:
        for f in m.sources:
            if all(q < 9 for q, _ in f.pauli):
                assert not is_hook(f, nz3_dem)


def test_worst_case_hook_reduced_weight():
    # pure ancilla hooks on a weight-4 check: the spread, reduced by the
    # check's own stabilizer, never exceeds floor(w/2) = 2 and reaches it
    circ = single_z_check(2)
    w = 4
    worst = 0
    for layer, q in enumerate(range(4)):
        f = _fault_at(circ, ("CX", (q, 4), 0), ((4, "Z"),))
        spread = len(data_footprint_at_round_end(circ, f))
        assert spread == w - 1 - layer
        worst = max(worst, min(spread, w - spread))
    assert worst == w // 2


def test_y_equals_x_xor_z(nz3_dem):
    sig = nz3_dem.h.transpose().to_dense()
    obs = nz3_dem.l.transpose().to_dense()
    full = np.concatenate([sig, obs], axis=1)
    by_loc = {}
    for m in nz3_dem.mechanisms:
        for f in m.sources:
            if len(f.pauli) == 1:
                key = (f.gate_index, f.pauli[0][0])
                by_loc.setdefault(key, {})[f.pauli[0][1]] = m.index
    checked = 0
    for entry in by_loc.values():
        if set(entry) == {"X", "Y", "Z"}:
            assert np.array_equal(
                full[entry["Y"]], full[entry["X"]] ^ full[entry["Z"]]
            )
            checked += 1
    assert checked > 0


def test_linearity_of_signatures(nz3_dem):
    rng = np.random.default_rng(2)
    circ = nz3_dem.circuit
    sources = [f for m in nz3_dem.mechanisms for f in m.sources]
    for _ in range(30):
        f1, f2 = rng.choice(len(sources), 2, replace=False)
        d1, o1 = propagate_fault(circ, sources[f1])
        d2, o2 = propagate_fault(circ, sources[f2])
        # simultaneous faults: signature is the XOR of the individuals,
        # checked through the merged columns
        joint_d = set(d1) ^ set(d2)
        m1 = next(m for m in nz3_dem.mechanisms if sources[f1] in m.sources)
        m2 = next(m for m in nz3_dem.mechanisms if sources[f2] in m.sources)
        e = np.zeros(nz3_dem.num_mechanisms, dtype=np.uint8)
        e[m1.index] ^= 1
        e[m2.index] ^= 1
        hd = set(np.nonzero(nz3_dem.h.matvec(e))[0])
        if m1.index != m2.index:
            assert hd == joint_d


def test_d7_column_scale():
    circ = memory_circuit(nz_schedule(7), 7, "z")
    dem = build_dem(circ, NoiseModel(1e-3))
    pre_merge = sum(len(m.sources) for m in dem.mechanisms)
    assert pre_merge > 15_000
    assert dem.num_mechanisms < pre_merge


def test_merging_probability_composition():
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(1e-3))
    for m in dem.mechanisms:
        if len(m.sources) > 1:
            p = 0.0
            for f in m.sources:
                p = p + f.probability - 2 * p * f.probability
            assert m.p == pytest.approx(p)
            return
    pytest.fail("no merged mechanism found")


def test_determinism_bit_identical():
    circ = memory_circuit(nz_schedule(3), 2, "z")
    a = build_dem(circ, NoiseModel(1e-3))
    b = build_dem(circ, NoiseModel(1e-3))
    assert [(m.dets, m.obs, m.p) for m in a.mechanisms] == [
        (m.dets, m.obs, m.p) for m in b.mechanisms
    ]


def test_zero_noise_probabilities():
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(0.0))
    assert dem.num_mechanisms > 0
    assert all(m.p == 0.0 for m in dem.mechanisms)


def test_spam_flag_reduces_mechanisms():
    circ = single_z_check(2)
    with_spam = build_dem(circ, NoiseModel(1e-3, include_spam=True))
    without = build_dem(circ, NoiseModel(1e-3, include_spam=False))
    assert sum(len(m.sources) for m in without.mechanisms) < sum(
        len(m.sources) for m in with_spam.mechanisms
    )


def test_idle_noise_mechanisms():
    circ = single_z_check(2)
    base = build_dem(circ, NoiseModel(1e-3))
    idle = build_dem(circ, NoiseModel(1e-3, include_idle=True, idle_strength=0.1))
    idle_sources = [
        f
        for m in idle.mechanisms
        for f in m.sources
        if f.location[2][0] == "IDLE"
    ]
    assert idle_sources
    assert sum(len(m.sources) for m in idle.mechanisms) > sum(
        len(m.sources) for m in base.mechanisms
    )
    # the knob is monotone: stronger idling, higher per-fault probability
    stronger = NoiseModel(1e-3, include_idle=True, idle_strength=0.3)
    assert stronger.idle_pauli_prob > NoiseModel(
        1e-3, include_idle=True, idle_strength=0.1
    ).idle_pauli_prob


def test_dem_dump(tmp_path):
    circ = single_z_check(2)
    dem = build_dem(circ, NoiseModel(1e-3))
    path = tmp_path / "model.dem"
    write_dem(dem, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == dem.num_mechanisms
    assert lines[0].startswith("error(")
    sidecar = path.with_suffix(".dem.provenance.json")
    assert sidecar.exists()
