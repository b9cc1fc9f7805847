"""Stabilizer tableau simulation with symbolic measurement outcomes.

The tableau follows the standard destabilizer/stabilizer layout. Phase
bits are tracked as affine GF(2) forms over the random measurement
outcomes encountered so far: the X/Z part of the tableau evolves
identically on every random branch, so each phase is (constant XOR a
subset of outcome symbols), stored as a packed bit mask.

This makes noiseless determinism checks exact: a detector is
deterministically zero iff the XOR of its outcome forms is the zero form.
No sampling is involved.
"""
from __future__ import annotations

import numpy as np

from .circuits import MemoryCircuit

_W = 64


class SymbolicTableau:
    """Aaronson-Gottesman tableau; phases are affine forms over fresh symbols.

    Symbol 0 is the constant term; each random measurement allocates the
    next symbol. Only H, CX, reset and Z-measurement are needed here.
    """

    def __init__(self, n: int, max_symbols: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True  # destabilizers X_i
        self.z[np.arange(n, 2 * n), np.arange(n)] = True  # stabilizers Z_i
        self.nwords = (max_symbols + 1 + _W - 1) // _W
        self.r = np.zeros((2 * n, self.nwords), dtype=np.uint64)
        self.next_symbol = 1

    # -- forms ----------------------------------------------------------

    def _fresh_symbol(self) -> np.ndarray:
        form = np.zeros(self.nwords, dtype=np.uint64)
        k = self.next_symbol
        self.next_symbol += 1
        if k >= self.nwords * _W:
            raise RuntimeError("symbol budget exhausted")
        form[k // _W] = np.uint64(1) << np.uint64(k % _W)
        return form

    @staticmethod
    def form_is_zero(form: np.ndarray) -> bool:
        return not form.any()

    @staticmethod
    def form_is_random(form: np.ndarray) -> bool:
        f = form.copy()
        f[0] &= ~np.uint64(1)
        return bool(f.any())

    # -- gates ------------------------------------------------------------

    def h(self, q: int) -> None:
        toggle = self.x[:, q] & self.z[:, q]
        self.r[toggle, 0] ^= np.uint64(1)
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cx(self, c: int, t: int) -> None:
        toggle = self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.r[toggle, 0] ^= np.uint64(1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def _x_gate(self, q: int) -> None:
        self.r[self.z[:, q], 0] ^= np.uint64(1)

    def _x_gate_conditional(self, q: int, form: np.ndarray) -> None:
        # flip phases by `form` wherever the generator has Z on q
        self.r[self.z[:, q]] ^= form

    def _g_sum(self, h: int, i: int) -> int:
        """Phase exponent sum of the g-function over all qubits (mod 4)."""
        x1, z1 = self.x[i], self.z[i]
        x2, z2 = self.x[h], self.z[h]
        g = np.zeros(self.n, dtype=np.int64)
        m = x1 & z1
        g[m] = z2[m].astype(np.int64) - x2[m].astype(np.int64)
        m = x1 & ~z1
        g[m] = z2[m].astype(np.int64) * (2 * x2[m].astype(np.int64) - 1)
        m = ~x1 & z1
        g[m] = x2[m].astype(np.int64) * (1 - 2 * z2[m].astype(np.int64))
        return int(g.sum()) % 4

    def _rowsum(self, h: int, i: int) -> None:
        g = self._g_sum(h, i)
        # total phase 2*rh + 2*ri + g must be 0 or 2 mod 4 for all symbol
        # assignments, so g is even; the /2 residue toggles the constant
        assert g % 2 == 0
        self.r[h] ^= self.r[i]
        if (g // 2) % 2:
            self.r[h, 0] ^= np.uint64(1)
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def measure_z(self, q: int) -> np.ndarray:
        """Measure Z on qubit q; returns the outcome as an affine form."""
        n = self.n
        stab_hits = np.nonzero(self.x[n:, q])[0]
        if stab_hits.size:
            p = n + int(stab_hits[0])
            for i in np.nonzero(self.x[:, q])[0]:
                if i != p:
                    self._rowsum(int(i), p)
            self.x[p - n] = self.x[p]
            self.z[p - n] = self.z[p]
            self.r[p - n] = self.r[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            outcome = self._fresh_symbol()
            self.r[p] = outcome
            return outcome.copy()
        # deterministic: accumulate into a scratch row
        self.x = np.vstack([self.x, np.zeros((1, n), dtype=bool)])
        self.z = np.vstack([self.z, np.zeros((1, n), dtype=bool)])
        self.r = np.vstack([self.r, np.zeros((1, self.nwords), dtype=np.uint64)])
        try:
            for i in np.nonzero(self.x[:n, q])[0]:
                self._rowsum(2 * n, n + int(i))
            return self.r[2 * n].copy()
        finally:
            self.x = self.x[: 2 * n]
            self.z = self.z[: 2 * n]
            self.r = self.r[: 2 * n]

    def reset_z(self, q: int) -> None:
        outcome = self.measure_z(q)
        if outcome.any():
            self._x_gate_conditional(q, outcome)


def simulate_outcome_forms(circuit: MemoryCircuit) -> np.ndarray:
    """Run the circuit noiselessly; outcome form per measurement.

    Returns an array of shape (num_meas, words); row i is the affine form
    of measurement i over the random-outcome symbols.
    """
    sim = SymbolicTableau(circuit.num_qubits, max_symbols=circuit.num_meas + 1)
    forms = np.zeros((circuit.num_meas, sim.nwords), dtype=np.uint64)
    idx = 0
    for g in circuit.gates:
        if g.name == "CX":
            sim.cx(g.qubits[0], g.qubits[1])
        elif g.name == "R":
            sim.reset_z(g.qubits[0])
        elif g.name == "RX":
            sim.reset_z(g.qubits[0])
            sim.h(g.qubits[0])
        elif g.name == "M":
            forms[idx] = sim.measure_z(g.qubits[0])
            idx += 1
        elif g.name == "MX":
            sim.h(g.qubits[0])
            forms[idx] = sim.measure_z(g.qubits[0])
            idx += 1
        else:
            raise ValueError(f"unknown gate {g.name}")
    assert idx == circuit.num_meas
    return forms


def check_noiseless_determinism(circuit: MemoryCircuit):
    """Exact oracle: every detector must be deterministically zero.

    Returns (ok, failures) where failures lists (stab, round, kind) with
    kind 'random' for symbol-dependent detectors and 'flipped' for
    deterministic-but-one detectors.
    """
    forms = simulate_outcome_forms(circuit)
    failures = []
    for det, (s, r) in zip(circuit.detectors, circuit.detector_meta):
        acc = np.zeros(forms.shape[1], dtype=np.uint64)
        for m in det:
            acc ^= forms[m]
        if SymbolicTableau.form_is_random(acc):
            failures.append((s, r, "random"))
        elif not SymbolicTableau.form_is_zero(acc):
            failures.append((s, r, "flipped"))
    return (not failures), failures
