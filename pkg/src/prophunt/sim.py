"""Monte Carlo logical-error-rate estimation.

Shots are drawn directly from the detector error model: each mechanism
fires independently with its prior and the detector/observable rows are
XORs of the fired columns (propagation is linear). Decoding uses a
defect-matching decoder on the graphlike decomposition of the model:
flipped detectors pair up (or terminate on the boundary) along shortest
paths, exactly below thirteen defects and greedily beyond.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dem import DetectorErrorModel

_W = 64


@dataclass(frozen=True)
class ShotBatch:
    detectors: np.ndarray  # (shots, num_detectors) uint8
    observables: np.ndarray  # (shots, num_observables) uint8
    seed: int


@dataclass(frozen=True)
class LerEstimate:
    failures: int
    shots: int
    rate: float
    ci_low: float
    ci_high: float
    per_basis: dict

    @staticmethod
    def from_counts(failures: int, shots: int, per_basis: dict | None = None):
        rate = failures / shots if shots else 0.0
        lo, hi = wilson_interval(failures, shots)
        return LerEstimate(failures, shots, rate, lo, hi, per_basis or {})


def wilson_interval(failures: int, shots: int, z: float = 1.96) -> tuple[float, float]:
    if shots == 0:
        return (0.0, 1.0)
    p = failures / shots
    denom = 1 + z * z / shots
    center = (p + z * z / (2 * shots)) / denom
    half = z * math.sqrt(p * (1 - p) / shots + z * z / (4 * shots * shots)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def sample_shots(
    dem: DetectorErrorModel, shots: int, seed: int, batch: int = 1 << 14
) -> ShotBatch:
    """Independent mechanism firing, XOR-accumulated per shot."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((0x5807, seed)))
    priors = dem.priors
    det = np.zeros((shots, dem.num_detectors), dtype=np.uint8)
    obs = np.zeros((shots, dem.num_observables), dtype=np.uint8)
    det_cols = [np.array(m.dets, dtype=np.int64) for m in dem.mechanisms]
    obs_cols = [np.array(m.obs, dtype=np.int64) for m in dem.mechanisms]
    for start in range(0, shots, batch):
        stop = min(shots, start + batch)
        size = stop - start
        for j, p in enumerate(priors):
            if p <= 0.0:
                continue
            fired = np.nonzero(rng.random(size) < p)[0] + start
            if fired.size == 0:
                continue
            if det_cols[j].size:
                det[np.ix_(fired, det_cols[j])] ^= 1
            if obs_cols[j].size:
                obs[np.ix_(fired, obs_cols[j])] ^= 1
    return ShotBatch(det, obs, seed)


# ---------------------------------------------------------------------------
# graphlike decomposition and matching


BOUNDARY = -1


@dataclass
class MatchingGraph:
    num_detectors: int
    # adjacency: node -> list of (neighbor or BOUNDARY, weight, obs_mask)
    adj: list[list[tuple[int, float, int]]]
    dist: np.ndarray  # (n+1, n+1) float, last row/col = boundary
    path_obs: np.ndarray  # (n+1, n+1) int64 observable mask along shortest path
    # correlated mechanisms (>2 detectors) kept as explicit moves for the
    # exact decoder: splitting them across two edges underestimates their
    # probability enough to lose weight races against wrong-label pairings
    hyper: list[tuple[frozenset[int], float, int]] = None


def _decompose(dem: DetectorErrorModel) -> list[tuple[tuple[int, ...], int, float]]:
    """Split mechanisms into 1-2 detector parts, merged by (endpoints, label).

    Parallel edges with different observable labels are kept distinct
    (shortest-path search then simply prefers the likelier one). Columns
    touching more than two detectors must decompose into a disjoint XOR of
    two existing graphlike columns; failure raises, marking the model as
    non-matchable.
    """
    if dem.num_observables > 62:
        raise ValueError("too many observables for mask decomposition")
    edges: dict[tuple[tuple[int, ...], int], float] = {}
    big: list = []

    def fold(key, p):
        prev = edges.get(key, 0.0)
        edges[key] = prev + p - 2 * prev * p

    for m in dem.mechanisms:
        mask = 0
        for o in m.obs:
            mask |= 1 << o
        if len(m.dets) <= 2:
            fold((m.dets, mask), m.p)
        else:
            big.append((m, mask))
    for m, mask in big:
        parts = _split_column(set(m.dets), mask, edges)
        if parts is None:
            raise ValueError(
                f"mechanism {m.index} with detectors {m.dets} is not graphlike"
            )
        for key in parts:
            fold(key, m.p)
    return [(dets, omask, p) for (dets, omask), p in sorted(edges.items())]


def _split_column(dets: set[int], mask: int, edges: dict):
    """Write dets as a disjoint union of two existing edges, if possible."""
    for d1, o1 in edges:
        part = set(d1)
        if part and part <= dets:
            rest = tuple(sorted(dets - part))
            if (rest, o1 ^ mask) in edges:
                return [(d1, o1), (rest, o1 ^ mask)]
    return None


def build_matching_graph(dem: DetectorErrorModel) -> MatchingGraph:
    n = dem.num_detectors
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(n)]
    for key, omask, p in _decompose(dem):
        if not key or p <= 0.0:
            continue
        p = min(p, 0.5 - 1e-12)
        w = -math.log(p / (1 - p))
        if len(key) == 1:
            adj[key[0]].append((BOUNDARY, w, omask))
        else:
            a, b = key
            adj[a].append((b, w, omask))
            adj[b].append((a, w, omask))
    hyper = []
    for m in dem.mechanisms:
        if len(m.dets) > 2 and m.p > 0.0:
            p = min(m.p, 0.5 - 1e-12)
            omask = 0
            for o in m.obs:
                omask |= 1 << o
            hyper.append(
                (frozenset(m.dets), -math.log(p / (1 - p)), omask)
            )

    # all-pairs shortest paths (plus boundary) with observable labels
    size = n + 1
    dist = np.full((size, size), np.inf)
    path_obs = np.zeros((size, size), dtype=np.int64)
    for src in range(n):
        d = np.full(size, np.inf)
        lab = np.zeros(size, dtype=np.int64)
        d[src] = 0.0
        heap = [(0.0, src)]
        done = np.zeros(size, dtype=bool)
        while heap:
            du, u = heapq.heappop(heap)
            if u == n or done[u]:
                continue
            done[u] = True
            for v, w, omask in adj[u]:
                t = n if v == BOUNDARY else v
                nd = du + w
                if nd < d[t] - 1e-15:
                    d[t] = nd
                    lab[t] = lab[u] ^ omask
                    heapq.heappush(heap, (nd, t))
        dist[src] = d
        path_obs[src] = lab
    dist[n] = dist[:, n]
    path_obs[n] = path_obs[:, n]
    dist[n, n] = 0.0
    path_obs[n, n] = 0
    return MatchingGraph(n, adj, dist, path_obs, hyper)


def _match_defects(graph: MatchingGraph, defects: list[int]) -> tuple[int, float]:
    """Minimum-weight explanation of a defect set; exact below 13 defects.

    The exact regime minimizes over pairings (boundary allowed) extended
    with whole correlated-mechanism moves covering three or more defects
    at once; beyond that, greedy nearest-pair matching.
    """
    n = graph.num_detectors
    k = len(defects)
    if k == 0:
        return 0, 0.0
    if k <= 12:
        d = graph.dist
        obs_of = graph.path_obs
        defect_set = set(defects)
        pos = {det: i for i, det in enumerate(defects)}
        hyper_moves = []
        for dets, w, omask in graph.hyper:
            if dets <= defect_set:
                move = 0
                for det in dets:
                    move |= 1 << pos[det]
                hyper_moves.append((move, w, omask))

        @lru_cache(maxsize=None)
        def best(mask: int) -> tuple[float, int]:
            if mask == 0:
                return 0.0, 0
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            di = defects[i]
            # boundary
            w, o = best(rest)
            res = (w + d[di, n], o ^ int(obs_of[di, n]))
            mm = rest
            while mm:
                j = (mm & -mm).bit_length() - 1
                mm &= mm - 1
                w2, o2 = best(rest & ~(1 << j))
                cand = (w2 + d[di, defects[j]], o2 ^ int(obs_of[di, defects[j]]))
                if cand[0] < res[0]:
                    res = cand
            for move, hw, homask in hyper_moves:
                if move & mask == move and move >> i & 1:
                    w3, o3 = best(mask & ~move)
                    cand = (w3 + hw, o3 ^ homask)
                    if cand[0] < res[0]:
                        res = cand
            return res

        weight, omask = best((1 << k) - 1)
        best.cache_clear()
        return omask, weight
    # greedy nearest-pair beyond the exact regime
    remaining = list(defects)
    omask = 0
    total = 0.0
    d = graph.dist
    while remaining:
        bi = bj = None
        bw = math.inf
        for ii in range(len(remaining)):
            di = remaining[ii]
            if d[di, n] < bw:
                bw, bi, bj = d[di, n], ii, None
            for jj in range(ii + 1, len(remaining)):
                dj = remaining[jj]
                if d[di, dj] < bw:
                    bw, bi, bj = d[di, dj], ii, jj
        di = remaining[bi]
        if bj is None:
            omask ^= int(graph.path_obs[di, n])
            remaining.pop(bi)
        else:
            dj = remaining[bj]
            omask ^= int(graph.path_obs[di, dj])
            remaining.pop(bj)
            remaining.pop(bi)
        total += bw
    return omask, total


def decode_shot(dem: DetectorErrorModel, detectors: np.ndarray) -> np.ndarray:
    """Predict observable flips for one detector row."""
    graph = _graph_for(dem)
    defects = [int(i) for i in np.nonzero(detectors)[0]]
    omask, _ = _match_defects(graph, defects)
    out = np.zeros(dem.num_observables, dtype=np.uint8)
    for o in range(dem.num_observables):
        if omask >> o & 1:
            out[o] = 1
    return out


# graphs are expensive enough to reuse; the dem is kept referenced so its
# id stays valid for the cache's lifetime
_GRAPH_CACHE: dict[int, tuple[DetectorErrorModel, MatchingGraph]] = {}


def _graph_for(dem: DetectorErrorModel) -> MatchingGraph:
    key = id(dem)
    if key not in _GRAPH_CACHE:
        if len(_GRAPH_CACHE) > 8:
            _GRAPH_CACHE.clear()
        _GRAPH_CACHE[key] = (dem, build_matching_graph(dem))
    return _GRAPH_CACHE[key][1]


def decode_batch(dem: DetectorErrorModel, batch: ShotBatch) -> int:
    """Number of shots whose predicted observables differ from the truth."""
    graph = _graph_for(dem)
    truth_mask = np.zeros(batch.observables.shape[0], dtype=np.int64)
    for o in range(dem.num_observables):
        truth_mask |= batch.observables[:, o].astype(np.int64) << o
    # empty syndromes predict no flip; everything else decodes, with a
    # cache keyed on the (highly repetitive) syndrome pattern
    any_defect = batch.detectors.any(axis=1)
    failures = int(np.sum(truth_mask[~any_defect] != 0))
    cache: dict[bytes, int] = {}
    for idx in np.nonzero(any_defect)[0]:
        row = batch.detectors[idx]
        key = row.tobytes()
        pred = cache.get(key)
        if pred is None:
            defects = [int(i) for i in np.nonzero(row)[0]]
            pred, _ = _match_defects(graph, defects)
            cache[key] = pred
        if pred != truth_mask[idx]:
            failures += 1
    return failures


def logical_error_rate_single(
    dem: DetectorErrorModel, shots: int, seed: int, batch: int = 1 << 16
) -> LerEstimate:
    """Failure rate of one memory experiment (one basis).

    Shots split into fixed-size batches with per-batch derived seeds, so
    estimates merge associatively and are independent of scheduling.
    """
    failures = 0
    done = 0
    part = 0
    while done < shots:
        size = min(batch, shots - done)
        shot_batch = sample_shots(dem, size, seed + 7919 * part)
        failures += decode_batch(dem, shot_batch)
        done += size
        part += 1
    return LerEstimate.from_counts(failures, shots)


def logical_error_rate(
    dems: dict[str, DetectorErrorModel], shots: int, seed: int
) -> LerEstimate:
    """Combined X- and Z-memory failure rate.

    Per-basis rates are estimated independently; the combined figure
    assumes independent failure modes: 1 - (1-rx)(1-rz).
    """
    per_basis: dict[str, LerEstimate] = {}
    for basis in sorted(dems):
        per_basis[basis] = logical_error_rate_single(dems[basis], shots, seed)
    combined = 1.0
    for est in per_basis.values():
        combined *= 1.0 - est.rate
    rate = 1.0 - combined
    total_fail = sum(e.failures for e in per_basis.values())
    total_shots = sum(e.shots for e in per_basis.values())
    lo, hi = wilson_interval(total_fail, total_shots)
    return LerEstimate(
        failures=total_fail,
        shots=total_shots,
        rate=rate,
        ci_low=lo,
        ci_high=hi,
        per_basis=per_basis,
    )
