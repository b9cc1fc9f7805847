"""Ambiguous-subgraph finding on the bipartite decoding graph.

A subgraph is closed: it contains exactly the error mechanisms whose full
detector support lies inside its syndrome set. It is ambiguous when some
observable row, restricted to its error columns, falls outside the
rowspace of the restricted check matrix; equivalently, the subgraph
contains two error sets with equal syndromes but different logical effect.

Sampling seeds at a random error node and grows one frontier error node at
a time (plus closure), testing ambiguity after every step and halting at
the first ambiguous subgraph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dem import DetectorErrorModel
from .gf2 import BitMatrix

_W = 64


@dataclass(frozen=True)
class Subgraph:
    """A closed, connected piece of the decoding graph with its submatrices."""

    error_nodes: tuple[int, ...]  # mechanism ids, sorted
    syndrome_nodes: tuple[int, ...]  # detector ids, sorted
    h_sub: BitMatrix  # |syndromes| x |errors|
    l_sub: BitMatrix  # observables x |errors|
    ambiguous: bool
    seed_error: int

    @property
    def num_errors(self) -> int:
        return len(self.error_nodes)

    @property
    def num_syndromes(self) -> int:
        return len(self.syndrome_nodes)


class _GrowingEliminator:
    """Row echelon over a column set that grows during expansion.

    Basis rows remember which original detector rows were combined into
    them (a bitmask over local row ids); when a new error column arrives,
    its coordinate in each basis row is a parity over that mask, so no
    re-elimination is needed. Rows that reduce to zero are kept latent:
    a later column can separate them from the span again, at which point
    they re-enter the basis with that column as pivot.
    """

    def __init__(self):
        self.ncols = 0
        self.nwords = 1
        self.basis: list[np.ndarray] = []  # packed coords over columns
        self.masks: list[int] = []  # original-row membership
        self.pivots: list[int] = []
        self.latent: list[int] = []  # masks of currently-dependent rows
        self.nrows = 0

    def add_column(self, row_bits: int) -> None:
        col = self.ncols
        self.ncols += 1
        if col // _W >= self.nwords:
            self.nwords += 1
            self.basis = [np.append(b, np.uint64(0)) for b in self.basis]
        bit = np.uint64(1) << np.uint64(col % _W)
        for i, mask in enumerate(self.masks):
            if (mask & row_bits).bit_count() % 2:
                self.basis[i][col // _W] ^= bit
        if self.latent:
            woken = [m for m in self.latent if (m & row_bits).bit_count() % 2]
            if woken:
                self.latent = [
                    m for m in self.latent if not (m & row_bits).bit_count() % 2
                ]
                for mask in woken:
                    coords = np.zeros(self.nwords, dtype=np.uint64)
                    coords[col // _W] = bit
                    self._insert(coords, mask)

    def add_row(self, coords: np.ndarray, mask: int) -> None:
        self.nrows += 1
        self._insert(coords.copy(), mask)

    def _insert(self, red: np.ndarray, mask: int) -> None:
        for i, p in enumerate(self.pivots):
            if (red[p // _W] >> np.uint64(p % _W)) & np.uint64(1):
                red ^= self.basis[i]
                mask ^= self.masks[i]
        p = self._lowest_bit(red)
        if p < 0:
            self.latent.append(mask)
            return
        idx = int(np.searchsorted(np.array(self.pivots), p)) if self.pivots else 0
        self.basis.insert(idx, red)
        self.masks.insert(idx, mask)
        self.pivots.insert(idx, p)

    @staticmethod
    def _lowest_bit(row: np.ndarray) -> int:
        for w in range(row.shape[0]):
            word = int(row[w])
            if word:
                return w * _W + (word & -word).bit_length() - 1
        return -1

    def outside_span(self, coords: np.ndarray) -> bool:
        red = coords.copy()
        for i, p in enumerate(self.pivots):
            if (red[p // _W] >> np.uint64(p % _W)) & np.uint64(1):
                red ^= self.basis[i]
        return self._lowest_bit(red) >= 0


class _Expansion:
    """Incremental closure + ambiguity state during subgraph growth."""

    def __init__(self, dem: DetectorErrorModel):
        self.dem = dem
        self.errors: list[int] = []
        self.col_of: dict[int, int] = {}
        self.det_local: dict[int, int] = {}
        self.det_order: list[int] = []
        self.frontier: set[int] = set()
        self.remaining = {m.index: len(m.dets) for m in dem.mechanisms}
        self.elim = _GrowingEliminator()
        self.obs_coords = [
            np.zeros(1, dtype=np.uint64) for _ in range(dem.num_observables)
        ]
        # mechanisms with empty detector support belong to every closure
        for m in dem.mechanisms:
            if not m.dets:
                self._include_error(m.index)

    def _grow_obs(self):
        need = self.elim.nwords
        for i, v in enumerate(self.obs_coords):
            if v.shape[0] < need:
                self.obs_coords[i] = np.append(
                    v, np.zeros(need - v.shape[0], dtype=np.uint64)
                )

    def _include_error(self, mech_id: int) -> None:
        m = self.dem.mechanisms[mech_id]
        col = len(self.errors)
        self.errors.append(mech_id)
        self.col_of[mech_id] = col
        self.frontier.discard(mech_id)
        row_bits = 0
        for d in m.dets:
            row_bits |= 1 << self.det_local[d]
        self.elim.add_column(row_bits)
        self._grow_obs()
        for o in m.obs:
            self.obs_coords[o][col // _W] ^= np.uint64(1) << np.uint64(col % _W)

    def _include_detector(self, det: int) -> None:
        self.det_local[det] = len(self.det_order)
        self.det_order.append(det)
        for mech_id in self.dem.det_to_mechs[det]:
            self.remaining[mech_id] -= 1
            if mech_id not in self.col_of:
                self.frontier.add(mech_id)

    def add_error_with_closure(self, mech_id: int) -> None:
        """Add one error node, its detectors, then every closure member."""
        for d in self.dem.mechanisms[mech_id].dets:
            if d not in self.det_local:
                self._include_detector(d)
        self._include_error(mech_id)
        # adding errors never changes detector membership, so one pass finds
        # every newly-confined frontier node
        for mid in sorted(self.frontier):
            if self.remaining[mid] == 0:
                self._include_error(mid)
        self._flush_rows()

    def _flush_rows(self):
        while self.elim.nrows < len(self.det_order):
            local = self.elim.nrows
            det = self.det_order[local]
            coords = np.zeros(self.elim.nwords, dtype=np.uint64)
            for mech_id in self.dem.det_to_mechs[det]:
                col = self.col_of.get(mech_id)
                if col is not None:
                    coords[col // _W] ^= np.uint64(1) << np.uint64(col % _W)
            self.elim.add_row(coords, 1 << local)

    def is_ambiguous(self) -> bool:
        self._grow_obs()
        return any(
            v.any() and self.elim.outside_span(v) for v in self.obs_coords
        )

    def frontier_sorted(self) -> list[int]:
        return sorted(self.frontier)


def subgraph_from_syndromes(
    dem: DetectorErrorModel, syndromes: Iterable[int], seed_error: int = -1
) -> Subgraph:
    """The closed subgraph on a syndrome set: all errors confined to it."""
    s_sorted = tuple(sorted(set(syndromes)))
    s_set = set(s_sorted)
    errors = tuple(
        m.index for m in dem.mechanisms if set(m.dets) <= s_set
    )
    local_col = {e: i for i, e in enumerate(errors)}
    h_rows = [
        [local_col[m] for m in dem.det_to_mechs[d] if m in local_col]
        for d in s_sorted
    ]
    l_rows: list[list[int]] = [[] for _ in range(dem.num_observables)]
    for e in errors:
        for o in dem.mechanisms[e].obs:
            l_rows[o].append(local_col[e])
    h_sub = BitMatrix.from_rows(h_rows, len(errors))
    l_sub = BitMatrix.from_rows(l_rows, len(errors))
    ambiguous = _submatrices_ambiguous(h_sub, l_sub)
    return Subgraph(errors, s_sorted, h_sub, l_sub, ambiguous, seed_error)


def build_subgraph(
    dem: DetectorErrorModel, error_nodes: Iterable[int], seed_error: int = -1
) -> Subgraph:
    """Closure-complete the detector span of the given errors."""
    dets: set[int] = set()
    for e in error_nodes:
        dets.update(dem.mechanisms[e].dets)
    return subgraph_from_syndromes(dem, dets, seed_error)


def _submatrices_ambiguous(h_sub: BitMatrix, l_sub: BitMatrix) -> bool:
    from . import gf2

    elim = gf2.RowEliminator(h_sub.words.shape[1])
    for i in range(h_sub.rows):
        elim.add_row(h_sub.words[i])
    return any(
        l_sub.words[i].any() and not elim.contains(l_sub.words[i])
        for i in range(l_sub.rows)
    )


def is_ambiguous(dem: DetectorErrorModel, syndromes: Iterable[int]) -> bool:
    """Rowspace test on the closed subgraph of a syndrome set."""
    return subgraph_from_syndromes(dem, syndromes).ambiguous


def sample_subgraph(
    dem: DetectorErrorModel, seed: int, max_steps: int = 500
) -> Subgraph | None:
    """Seed, expand and test until ambiguity appears or the cap is hit.

    Expansion adds one uniformly random frontier error node (adjacent to an
    in-subgraph detector) plus its detectors, then closes; expansion halts
    at the first ambiguous subgraph. Returns None if the frontier empties
    or max_steps expansions pass without finding ambiguity.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if dem.num_mechanisms == 0:
        return None
    rng = np.random.default_rng(np.random.SeedSequence((0x5AB, seed)))
    state = _Expansion(dem)
    seed_error = int(rng.integers(dem.num_mechanisms))
    state.add_error_with_closure(seed_error)
    if state.is_ambiguous():
        return _finalize(dem, state, seed_error)
    for _ in range(max_steps):
        frontier = state.frontier_sorted()
        if not frontier:
            return None
        pick = frontier[int(rng.integers(len(frontier)))]
        state.add_error_with_closure(pick)
        if state.is_ambiguous():
            return _finalize(dem, state, seed_error)
    return None


def _finalize(dem: DetectorErrorModel, state: _Expansion, seed_error: int) -> Subgraph:
    sub = subgraph_from_syndromes(dem, state.det_local, seed_error)
    assert sub.ambiguous
    return sub
