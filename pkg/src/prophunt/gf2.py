"""Dense bit-packed linear algebra over GF(2).

Rows are packed into 64-bit words so row operations (the inner loop of
rank / rowspace / kernel computations) are word-parallel numpy XORs.
Pivots are always chosen left-to-right, ties broken by lowest row index,
so every routine is deterministic.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

_WORD = 64


def _nwords(cols: int) -> int:
    return max(1, (cols + _WORD - 1) // _WORD)


class BitMatrix:
    """Immutable dense GF(2) matrix with rows packed into uint64 words.

    Row and column indices are stable identifiers for callers; bits outside
    ``cols`` are always zero.
    """

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray):
        if words.shape != (rows, _nwords(cols)):
            raise ValueError(
                f"word array shape {words.shape} does not match {rows}x{cols}"
            )
        self.rows = rows
        self.cols = cols
        self.words = words
        self.words.flags.writeable = False

    # -- constructors ---------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _nwords(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        w = np.zeros((n, _nwords(n)), dtype=np.uint64)
        for i in range(n):
            w[i, i // _WORD] = np.uint64(1) << np.uint64(i % _WORD)
        return cls(n, n, w)

    @classmethod
    def from_dense(cls, arr) -> "BitMatrix":
        a = np.atleast_2d(np.asarray(arr, dtype=np.uint8) & 1)
        rows, cols = a.shape
        if cols == 0:
            return cls.zeros(rows, 0)
        pad = (-cols) % _WORD
        if pad:
            a = np.concatenate([a, np.zeros((rows, pad), dtype=np.uint8)], axis=1)
        packed = np.packbits(a, axis=1, bitorder="little")
        words = packed.reshape(rows, -1).copy().view(np.uint64).reshape(rows, -1)
        return cls(rows, cols, words)

    @classmethod
    def from_rows(cls, supports: Sequence[Iterable[int]], cols: int) -> "BitMatrix":
        """Build from per-row column-index lists (sparse input form)."""
        w = np.zeros((len(supports), _nwords(cols)), dtype=np.uint64)
        for i, sup in enumerate(supports):
            for c in sup:
                if not 0 <= c < cols:
                    raise ValueError(f"column index {c} out of range [0, {cols})")
                w[i, c // _WORD] ^= np.uint64(1) << np.uint64(c % _WORD)
        return cls(len(supports), cols, w)

    # -- views ------------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        if self.cols == 0:
            return np.zeros((self.rows, 0), dtype=np.uint8)
        bits = np.unpackbits(
            self.words.view(np.uint8), axis=1, bitorder="little"
        )
        return bits[:, : self.cols].astype(np.uint8)

    def get(self, r: int, c: int) -> int:
        return int((self.words[r, c // _WORD] >> np.uint64(c % _WORD)) & np.uint64(1))

    def row_support(self, r: int) -> list[int]:
        return [c for c in range(self.cols) if self.get(r, c)]

    def row_weight(self, r: int) -> int:
        return int(np.sum(np.bitwise_count(self.words[r])))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.words, other.words)
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols})"

    # -- algebra ----------------------------------------------------------

    def stack(self, other: "BitMatrix") -> "BitMatrix":
        if other.cols != self.cols:
            raise ValueError("column count mismatch in stack")
        return BitMatrix(
            self.rows + other.rows, self.cols, np.vstack([self.words, other.words])
        )

    def select_columns(self, cols: Sequence[int]) -> "BitMatrix":
        dense = self.to_dense()
        return BitMatrix.from_dense(dense[:, list(cols)])

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Return m @ v mod 2 for a dense 0/1 vector of length cols."""
        v = np.asarray(v, dtype=np.uint8) & 1
        if v.shape != (self.cols,):
            raise ValueError(f"vector length {v.shape} != cols {self.cols}")
        vm = pack_vector(v, self.cols)
        acc = np.bitwise_and(self.words, vm)
        return (np.bitwise_count(acc).sum(axis=1) & 1).astype(np.uint8)

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch in matmul")
        a = self.to_dense().astype(np.int64)
        b = other.to_dense().astype(np.int64)
        return BitMatrix.from_dense((a @ b) & 1)


def pack_vector(v: np.ndarray, cols: int) -> np.ndarray:
    """Pack a 0/1 vector into uint64 words (little-endian bit order)."""
    v = np.asarray(v, dtype=np.uint8) & 1
    pad = (-cols) % _WORD
    if cols == 0:
        return np.zeros(1, dtype=np.uint64)
    if pad:
        v = np.concatenate([v, np.zeros(pad, dtype=np.uint8)])
    return np.packbits(v, bitorder="little").copy().view(np.uint64)


def unpack_vector(words: np.ndarray, cols: int) -> np.ndarray:
    if cols == 0:
        return np.zeros(0, dtype=np.uint8)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return bits[:cols].astype(np.uint8)


class RowEliminator:
    """Incremental GF(2) row-echelon state over a growing column set.

    Rows are added one at a time and reduced against the current basis;
    pivot columns are chosen left-to-right. Supports membership queries
    (is a vector in the span of added rows) without recomputation, which
    is the hot path of rowspace checks.
    """

    def __init__(self, nwords: int):
        self.nwords = nwords
        self.basis: list[np.ndarray] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.basis)

    def grow_words(self, nwords: int) -> None:
        if nwords <= self.nwords:
            return
        pad = nwords - self.nwords
        self.basis = [
            np.concatenate([b, np.zeros(pad, dtype=np.uint64)]) for b in self.basis
        ]
        self.nwords = nwords

    def _reduce(self, row: np.ndarray) -> np.ndarray:
        row = row.copy()
        for b, p in zip(self.basis, self.pivots):
            if (row[p // _WORD] >> np.uint64(p % _WORD)) & np.uint64(1):
                row ^= b
        return row

    @staticmethod
    def _lowest_bit(row: np.ndarray) -> int:
        for w in range(row.shape[0]):
            word = int(row[w])
            if word:
                return w * _WORD + (word & -word).bit_length() - 1
        return -1

    def add_row(self, row: np.ndarray) -> bool:
        """Reduce and insert a packed row. Returns True if rank grew."""
        red = self._reduce(row)
        p = self._lowest_bit(red)
        if p < 0:
            return False
        # keep basis sorted by pivot and fully reduced above the pivot
        for i, b in enumerate(self.basis):
            if (b[p // _WORD] >> np.uint64(p % _WORD)) & np.uint64(1):
                self.basis[i] = b ^ red
        idx = int(np.searchsorted(np.array(self.pivots), p))
        self.basis.insert(idx, red)
        self.pivots.insert(idx, p)
        return True

    def contains(self, row: np.ndarray) -> bool:
        return self._lowest_bit(self._reduce(row)) < 0


def _eliminate(m: BitMatrix) -> tuple[np.ndarray, list[int]]:
    """Row-reduce a copy of m; returns (reduced words, pivot columns)."""
    w = m.words.copy()
    pivots: list[int] = []
    r = 0
    for c in range(m.cols):
        wi, bit = c // _WORD, np.uint64(1) << np.uint64(c % _WORD)
        col = (w[r:, wi] & bit) != 0
        hits = np.nonzero(col)[0]
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            w[[r, p]] = w[[p, r]]
        other = np.nonzero((w[:, wi] & bit) != 0)[0]
        other = other[other != r]
        if other.size:
            w[other] ^= w[r]
        pivots.append(c)
        r += 1
        if r == m.rows:
            break
    return w, pivots


def rank(m: BitMatrix) -> int:
    """GF(2) rank; the input is not modified."""
    return len(_eliminate(m)[1])


def in_rowspace(m: BitMatrix, v: np.ndarray) -> bool:
    """True iff v is a GF(2) linear combination of the rows of m."""
    v = np.asarray(v, dtype=np.uint8) & 1
    if v.shape != (m.cols,):
        raise ValueError(f"vector length {v.shape[0]} != matrix cols {m.cols}")
    elim = RowEliminator(_nwords(m.cols))
    for i in range(m.rows):
        elim.add_row(m.words[i])
    return elim.contains(pack_vector(v, m.cols))


def solve(m: BitMatrix, target: np.ndarray) -> np.ndarray | None:
    """One solution x of m @ x = target mod 2, or None if inconsistent.

    Free variables are set to zero; pivoting is deterministic.
    """
    target = np.asarray(target, dtype=np.uint8) & 1
    if target.shape != (m.rows,):
        raise ValueError("target length mismatch")
    aug = BitMatrix.from_dense(
        np.concatenate([m.to_dense(), target[:, None]], axis=1)
    )
    w, pivots = _eliminate(aug)
    if m.cols in pivots:
        return None
    x = np.zeros(m.cols, dtype=np.uint8)
    lastw, lastbit = m.cols // _WORD, np.uint64(1) << np.uint64(m.cols % _WORD)
    for i, p in enumerate(pivots):
        if (w[i, lastw] & lastbit) != 0:
            x[p] = 1
    return x


def kernel_basis(m: BitMatrix) -> list[np.ndarray]:
    """Basis of {x : m @ x = 0 mod 2}, one dense 0/1 vector per element.

    Size is cols - rank(m); basis vectors use the standard free-column
    construction so results are deterministic.
    """
    w, pivots = _eliminate(m)
    pivot_set = set(pivots)
    dense = BitMatrix(m.rows, m.cols, w).to_dense() if m.cols else None
    basis = []
    for free in range(m.cols):
        if free in pivot_set:
            continue
        x = np.zeros(m.cols, dtype=np.uint8)
        x[free] = 1
        for i, p in enumerate(pivots):
            if dense[i, free]:
                x[p] = 1
        basis.append(x)
    return basis


def invert(m: BitMatrix) -> BitMatrix:
    """Inverse of a square invertible GF(2) matrix."""
    if m.rows != m.cols:
        raise ValueError("matrix not square")
    n = m.rows
    aug = BitMatrix.from_dense(
        np.concatenate([m.to_dense(), BitMatrix.identity(n).to_dense()], axis=1)
    )
    w, pivots = _eliminate(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return BitMatrix.from_dense(BitMatrix(n, 2 * n, w).to_dense()[:, n:])
