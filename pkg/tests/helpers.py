"""Shared fixtures: reference matrices and toy LDPC-style codes.

The toy codes are hypergraph products of small classical codes. They stand
in for externally-constructed lifted-product / Tanner codes in tests that
only need CSS codes with the right shape (mixed stabilizer weights up to
6, multiple logical qubits).
"""
from __future__ import annotations

import numpy as np

from prophunt.codes import CssCode, compute_logicals
from prophunt.gf2 import BitMatrix

# distance-3 rotated surface code reference matrices (row-major grid indexing)
HX_D3 = [
    [1, 1, 0, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 1, 0, 1, 1],
    [0, 0, 0, 1, 0, 0, 1, 0, 0],
    [0, 0, 1, 0, 0, 1, 0, 0, 0],
]
HZ_D3 = [
    [0, 1, 1, 0, 1, 1, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 1, 1, 0],
    [1, 1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 1, 1],
]
LX_D3 = [0, 0, 0, 1, 1, 1, 0, 0, 0]
LZ_D3 = [0, 1, 0, 0, 1, 0, 0, 1, 0]


def hypergraph_product(h1: np.ndarray, h2: np.ndarray, name: str) -> CssCode:
    """CSS hypergraph product of two classical parity-check matrices."""
    h1 = np.asarray(h1, dtype=np.uint8) & 1
    h2 = np.asarray(h2, dtype=np.uint8) & 1
    m1, n1 = h1.shape
    m2, n2 = h2.shape
    i_n1, i_n2 = np.eye(n1, dtype=np.uint8), np.eye(n2, dtype=np.uint8)
    i_m1, i_m2 = np.eye(m1, dtype=np.uint8), np.eye(m2, dtype=np.uint8)
    hx = np.concatenate([np.kron(h1, i_n2), np.kron(i_m1, h2.T)], axis=1)
    hz = np.concatenate([np.kron(i_n1, h2), np.kron(h1.T, i_m2)], axis=1)
    hx_m = BitMatrix.from_dense(hx)
    hz_m = BitMatrix.from_dense(hz)
    lx, lz = compute_logicals(hx_m, hz_m)
    code = CssCode(
        name=name,
        n=n1 * n2 + m1 * m2,
        k=lx.rows,
        hx=hx_m,
        hz=hz_m,
        lx=lx,
        lz=lz,
    )
    code.validate()
    return code


def repetition_check(n: int) -> np.ndarray:
    h = np.zeros((n - 1, n), dtype=np.uint8)
    for i in range(n - 1):
        h[i, i] = h[i, i + 1] = 1
    return h


def toy_ldpc_code() -> CssCode:
    """[[24,3]] toy with mixed weight-4/5/6 stabilizers (k = 3).

    Product of the 3-bit repetition code with a full-rank [6,3] classical
    code whose parity checks have weight 4.
    """
    h2 = np.array(
        [
            [1, 1, 1, 1, 0, 0],
            [0, 1, 1, 0, 1, 1],
            [1, 0, 1, 1, 1, 0],
        ],
        dtype=np.uint8,
    )
    return hypergraph_product(repetition_check(3), h2, "toy-24-3")


def toy_surface_13() -> CssCode:
    """[[13,1,3]] hypergraph-product surface code (all weights <= 4)."""
    return hypergraph_product(repetition_check(3), repetition_check(3), "toy-13-1")


def random_css_pair(rng: np.random.Generator, n: int, mx: int, mz: int):
    """Random CSS check pair: Hz rows drawn from ker(Hx)."""
    from prophunt import gf2

    while True:
        hx = rng.integers(0, 2, (mx, n)).astype(np.uint8)
        hx_m = BitMatrix.from_dense(hx)
        kernel = gf2.kernel_basis(hx_m)
        if len(kernel) < mz:
            continue
        coeffs = rng.integers(0, 2, (mz, len(kernel))).astype(np.uint8)
        hz = (coeffs @ np.array(kernel)) % 2
        if not hz.any(axis=1).all():
            continue
        return hx_m, BitMatrix.from_dense(hz)
