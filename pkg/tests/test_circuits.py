import pytest

from prophunt.circuits import memory_circuit, to_stim_text
from prophunt.scheduling import nz_schedule


def test_measurement_counts_one_round():
    circ = memory_circuit(nz_schedule(3), 1, "z")
    # 8 ancilla measurements + 9 data measurements
    assert circ.num_meas == 8 + 9
    n_m = sum(1 for g in circ.gates if g.name in ("M", "MX"))
    assert n_m == circ.num_meas


def test_measurement_counts_d_rounds():
    circ = memory_circuit(nz_schedule(3), 3, "z")
    assert circ.num_meas == 24 + 9


def test_detector_count_and_meta():
    rounds = 3
    circ = memory_circuit(nz_schedule(3), rounds, "z")
    # same-type checks: rounds + final; opposite: rounds - 1, four each
    assert len(circ.detectors) == 4 * (rounds + 1) + 4 * (rounds - 1)
    assert len(set(circ.detector_meta)) == len(circ.detector_meta)
    metas = set(circ.detector_meta)
    for s in range(4, 8):  # Z checks in a Z-basis run
        assert (s, 0) in metas and (s, rounds) in metas
    for s in range(0, 4):  # X checks
        assert (s, 0) not in metas and (s, rounds) not in metas


def test_detector_indices_schedule_independent():
    a = memory_circuit(nz_schedule(3), 3, "z")
    b = memory_circuit(nz_schedule(3, transposed=True), 3, "z")
    assert a.detector_meta == b.detector_meta


def test_observables_cover_logicals():
    circ = memory_circuit(nz_schedule(3), 2, "z")
    assert len(circ.observables) == 1
    assert len(circ.observables[0]) == 3  # weight-3 logical Z


def test_basis_x_mirror():
    circ = memory_circuit(nz_schedule(3), 2, "x")
    metas = set(circ.detector_meta)
    for s in range(0, 4):  # X checks now same-type
        assert (s, 0) in metas
    assert circ.gates[0].name == "RX"


def test_bad_arguments():
    with pytest.raises(ValueError):
        memory_circuit(nz_schedule(3), 0, "z")
    with pytest.raises(ValueError):
        memory_circuit(nz_schedule(3), 1, "y")


def test_stim_export_structure():
    circ = memory_circuit(nz_schedule(3), 2, "z")
    text = to_stim_text(circ)
    lines = text.strip().splitlines()
    assert sum(1 for l in lines if l.startswith("DETECTOR")) == len(circ.detectors)
    assert sum(1 for l in lines if l.startswith("OBSERVABLE_INCLUDE")) == 1
    assert sum(1 for l in lines if l.startswith("CX")) == 2 * 24
    assert "TICK" in text
