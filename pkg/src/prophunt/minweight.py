"""Minimum-weight logical errors: exact search, WCNF encoding, distance.

``min_weight_logical`` finds the smallest nonzero error set e of a
subgraph with H'e = 0 and L'e != 0, by iterative deepening over the
weight with covering-style branch and bound on the algebraic system: an
unsatisfied parity row must be covered by one of its free columns, columns
are tried highest-degree first with inclusion/exclusion, and a
popcount/degree bound prunes hopeless branches. Every returned solution is
certified against the submatrices before it leaves the module.

The MaxSAT encoding (XOR trees with Tseitin auxiliaries, unit soft
clauses) exists for DIMACS WCNF export and external cross-checks; a small
independent DPLL solver over the exported clauses double-checks optima.

``effective_distance`` works on the full model: it certifies the absence
of logical errors below a weight by meet-in-the-middle collision search
over half-weight signature tables, and pairs that with an explicit
logical-operator witness for the upper bound.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .ambiguity import Subgraph
from .dem import DetectorErrorModel
from .gf2 import BitMatrix


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class MinWeightResult:
    status: str  # 'found' | 'none' | 'timeout'
    error_set: tuple[int, ...] = ()  # mechanism ids
    weight: int | None = None
    solve_seconds: float = 0.0

    @property
    def found(self) -> bool:
        return self.status == "found"


@dataclass(frozen=True)
class EffectiveDistance:
    value: int
    exact: bool
    witness: tuple[int, ...] = ()  # mechanism ids achieving `value`
    certified_below: int = 0  # no logical error with weight <= this


# ---------------------------------------------------------------------------
# exact subgraph solver


def _certify(sub: Subgraph, cols: tuple[int, ...]) -> None:
    e = np.zeros(sub.num_errors, dtype=np.uint8)
    e[list(cols)] = 1
    if sub.h_sub.matvec(e).any():
        raise AssertionError("solution violates H'e = 0")
    if not sub.l_sub.matvec(e).any():
        raise AssertionError("solution violates L'e != 0")


class _SolverTimeout(Exception):
    pass


class _CoverSearch:
    """Depth-limited search for e with A e = t, |e| <= budget."""

    def __init__(self, col_masks: list[int], row_cols: list[list[int]], deadline: float):
        self.col_masks = col_masks
        self.row_cols = row_cols
        self.deadline = deadline
        self.free = bytearray([1] * len(col_masks))
        self.max_degree = max((m.bit_count() for m in col_masks), default=1)
        self.nodes = 0

    def run(self, target: int, budget: int) -> list[int] | None:
        return self._search(target, budget, [])

    def _search(self, target: int, budget: int, picked: list[int]) -> list[int] | None:
        if target == 0:
            return list(picked)
        self.nodes += 1
        if self.nodes % 4096 == 0 and time.monotonic() > self.deadline:
            raise _SolverTimeout
        if budget == 0:
            return None
        need = target.bit_count()
        if budget * self.max_degree < need:
            return None
        # most constrained unsatisfied row
        best_row, best_cols = None, None
        t = target
        while t:
            row = (t & -t).bit_length() - 1
            t &= t - 1
            cols = [c for c in self.row_cols[row] if self.free[c]]
            if best_cols is None or len(cols) < len(best_cols):
                best_row, best_cols = row, cols
                if len(cols) <= 1:
                    break
        if not best_cols:
            return None
        # highest-degree column first; inclusion/exclusion keeps the
        # search exhaustive without revisiting subsets
        best_cols.sort(key=lambda c: (-self.col_masks[c].bit_count(), c))
        excluded = []
        result = None
        for c in best_cols:
            picked.append(c)
            self.free[c] = 0
            result = self._search(target ^ self.col_masks[c], budget - 1, picked)
            picked.pop()
            excluded.append(c)
            if result is not None:
                break
        for c in excluded:
            self.free[c] = 1
        return result


def min_weight_logical(sub: Subgraph, timeout: float = 360.0) -> MinWeightResult:
    """Exact minimum-weight logical error of a subgraph.

    Returns 'none' when no observable row leaves the rowspace (the
    subgraph is unambiguous); 'timeout' carries the best upper bound found
    so far. Deterministic for fixed input.
    """
    start = time.monotonic()
    deadline = start + timeout
    n = sub.num_errors
    nrows = sub.num_syndromes

    h_dense = sub.h_sub.to_dense()
    l_dense = sub.l_sub.to_dense()

    # feasibility and initial upper bounds from particular solutions of
    # [H'; l] e = [0; 1], one per observable row
    best: tuple[int, tuple[int, ...]] | None = None
    feasible_rows: list[int] = []
    for o in range(sub.l_sub.rows):
        stacked = BitMatrix.from_dense(np.vstack([h_dense, l_dense[o : o + 1]]))
        target = np.zeros(nrows + 1, dtype=np.uint8)
        target[nrows] = 1
        x = gf2.solve(stacked, target)
        if x is None:
            continue
        feasible_rows.append(o)
        cols = tuple(int(c) for c in np.nonzero(x)[0])
        if best is None or len(cols) < best[0]:
            best = (len(cols), cols)
    if not feasible_rows:
        return MinWeightResult("none", solve_seconds=time.monotonic() - start)
    assert best is not None

    col_masks = [0] * n
    for r in range(nrows):
        for c in np.nonzero(h_dense[r])[0]:
            col_masks[int(c)] |= 1 << r
    searches = []
    for o in feasible_rows:
        masks = list(col_masks)
        for c in np.nonzero(l_dense[o])[0]:
            masks[int(c)] |= 1 << nrows
        row_cols = [[] for _ in range(nrows + 1)]
        for c, m in enumerate(masks):
            mm = m
            while mm:
                row_cols[(mm & -mm).bit_length() - 1].append(c)
                mm &= mm - 1
        searches.append(_CoverSearch(masks, row_cols, deadline))

    target0 = 1 << nrows
    try:
        for w in range(1, best[0]):
            for search in searches:
                sol = search.run(target0, w)
                if sol is not None:
                    cols = tuple(sorted(sol))
                    _certify(sub, cols)
                    ids = tuple(sub.error_nodes[c] for c in cols)
                    return MinWeightResult(
                        "found", ids, w, time.monotonic() - start
                    )
    except _SolverTimeout:
        cols = best[1]
        _certify(sub, cols)
        ids = tuple(sub.error_nodes[c] for c in cols)
        return MinWeightResult("timeout", ids, best[0], time.monotonic() - start)
    cols = best[1]
    _certify(sub, cols)
    ids = tuple(sub.error_nodes[c] for c in cols)
    return MinWeightResult("found", ids, best[0], time.monotonic() - start)


# ---------------------------------------------------------------------------
# MaxSAT encoding


@dataclass
class WcnfModel:
    num_vars: int
    hard: list[tuple[int, ...]]
    soft: list[tuple[int, tuple[int, ...]]]  # (weight, clause)
    top: int
    varmap: dict = field(default_factory=dict)

    @property
    def num_clauses(self) -> int:
        return len(self.hard) + len(self.soft)


def _xor_tree(terms: list[int], out_var: int, alloc, clauses: list) -> None:
    """Hard clauses asserting out_var = XOR(terms), via a balanced tree."""
    if not terms:
        clauses.append((-out_var,))
        return
    work = list(terms)
    while len(work) > 2:
        nxt = []
        for i in range(0, len(work) - 1, 2):
            a = alloc()
            _xor_def(a, work[i], work[i + 1], clauses)
            nxt.append(a)
        if len(work) % 2:
            nxt.append(work[-1])
        work = nxt
    if len(work) == 1:
        clauses.append((out_var, -work[0]))
        clauses.append((-out_var, work[0]))
    else:
        _xor_def(out_var, work[0], work[1], clauses)


def _xor_def(x: int, y: int, z: int, clauses: list) -> None:
    clauses.append((-x, y, z))
    clauses.append((-x, -y, -z))
    clauses.append((x, -y, z))
    clauses.append((x, y, -z))


def encode_wcnf(sub: Subgraph) -> WcnfModel:
    """The parity MaxSAT model of a subgraph.

    Hard constraints force every syndrome variable false and at least one
    observable variable true, with multi-way XORs Tseitin-expanded through
    balanced auxiliary trees; soft unit clauses (weight 1) prefer each
    error variable false, so the optimum counts the fewest errors.
    """
    if sub.num_errors == 0:
        raise ValueError("subgraph has no error nodes")
    varmap: dict = {}
    counter = itertools.count(1)
    for i in range(sub.num_errors):
        varmap[("e", sub.error_nodes[i])] = next(counter)
    for d in sub.syndrome_nodes:
        varmap[("s", d)] = next(counter)
    for o in range(sub.l_sub.rows):
        varmap[("l", o)] = next(counter)

    naux = itertools.count(0)
    hard: list[tuple[int, ...]] = []

    def alloc() -> int:
        v = next(counter)
        varmap[("a", next(naux))] = v
        return v

    h_dense = sub.h_sub.to_dense()
    l_dense = sub.l_sub.to_dense()
    evars = [varmap[("e", e)] for e in sub.error_nodes]
    for r, d in enumerate(sub.syndrome_nodes):
        terms = [evars[int(c)] for c in np.nonzero(h_dense[r])[0]]
        _xor_tree(terms, varmap[("s", d)], alloc, hard)
        hard.append((-varmap[("s", d)],))
    for o in range(sub.l_sub.rows):
        terms = [evars[int(c)] for c in np.nonzero(l_dense[o])[0]]
        _xor_tree(terms, varmap[("l", o)], alloc, hard)
    hard.append(tuple(varmap[("l", o)] for o in range(sub.l_sub.rows)))

    soft = [(1, (-v,)) for v in evars]
    top = len(soft) + 1
    return WcnfModel(
        num_vars=next(counter) - 1, hard=hard, soft=soft, top=top, varmap=varmap
    )


def export_wcnf(model: WcnfModel, path: str | Path) -> None:
    """Classic DIMACS WCNF: `p wcnf nvars nclauses top`, hard at top weight."""
    lines = [f"p wcnf {model.num_vars} {model.num_clauses} {model.top}"]
    for clause in model.hard:
        lines.append(" ".join([str(model.top), *map(str, clause), "0"]))
    for w, clause in model.soft:
        lines.append(" ".join([str(w), *map(str, clause), "0"]))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_wcnf(path: str | Path) -> WcnfModel:
    num_vars = top = 0
    hard: list[tuple[int, ...]] = []
    soft: list[tuple[int, tuple[int, ...]]] = []
    seen_header = False
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            _, fmt, nv, _, t = line.split()
            if fmt != "wcnf":
                raise ValueError(f"not a wcnf file: {path}")
            num_vars, top = int(nv), int(t)
            seen_header = True
            continue
        if not seen_header:
            raise ValueError("clause before header")
        parts = [int(x) for x in line.split()]
        if parts[-1] != 0:
            raise ValueError("clause not zero-terminated")
        w, clause = parts[0], tuple(parts[1:-1])
        if w >= top:
            hard.append(clause)
        else:
            soft.append((w, clause))
    return WcnfModel(num_vars=num_vars, hard=hard, soft=soft, top=top)


def solve_wcnf(model: WcnfModel, node_cap: int = 2_000_000) -> int | None:
    """Optimum soft-violation count by DPLL over the clauses themselves.

    Independent of the algebraic solver: it sees only CNF. Soft clauses are
    unit negatives, so branching happens on those variables with iterative
    deepening on the violation budget. Returns None if unsatisfiable.
    """
    nv = model.num_vars
    soft_vars = [abs(c[0]) for _, c in model.soft]
    watch: list[list[int]] = [[] for _ in range(2 * nv + 2)]
    clauses = [tuple(c) for c in model.hard]

    def lit_index(lit: int) -> int:
        return 2 * abs(lit) + (1 if lit < 0 else 0)

    for ci, clause in enumerate(clauses):
        for lit in clause:
            watch[lit_index(lit)].append(ci)

    assign = [0] * (nv + 1)  # 0 unknown, 1 true, -1 false
    nodes = 0

    def propagate(trail: list[int]) -> bool:
        # plain scan propagation; instances are small
        changed = True
        while changed:
            changed = False
            for clause in clauses:
                unassigned = None
                satisfied = False
                count = 0
                for lit in clause:
                    v = assign[abs(lit)]
                    if v == 0:
                        unassigned = lit
                        count += 1
                    elif (v > 0) == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if count == 0:
                    return False
                if count == 1:
                    assign[abs(unassigned)] = 1 if unassigned > 0 else -1
                    trail.append(abs(unassigned))
                    changed = True
        return True

    def undo(trail: list[int], mark: int) -> None:
        while len(trail) > mark:
            assign[trail.pop()] = 0

    def dfs(budget: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise _SolverTimeout
        trail: list[int] = []
        if not propagate(trail):
            undo(trail, 0)
            return False
        cost = sum(1 for v in soft_vars if assign[v] > 0)
        if cost > budget:
            undo(trail, 0)
            return False
        branch = next((v for v in soft_vars if assign[v] == 0), None)
        if branch is None:
            undo(trail, 0)
            return True
        for value in (-1, 1):
            mark = len(trail)
            assign[branch] = value
            trail.append(branch)
            if dfs(budget):
                undo(trail, 0)
                return True
            undo(trail, mark)
        undo(trail, 0)
        return False

    for budget in range(len(soft_vars) + 1):
        assign = [0] * (nv + 1)
        if dfs(budget):
            return budget
    return None


def solve_wcnf_file(path: str | Path) -> int | None:
    return solve_wcnf(parse_wcnf(path))


# ---------------------------------------------------------------------------
# effective distance on the full model


def _signature_table(dem: DetectorErrorModel):
    sigs = dem.h.transpose().words  # mechanisms x words
    obs_dense = dem.l.transpose().to_dense()
    if dem.num_observables > 62:
        raise ValueError("observable mask exceeds 62 bits")
    obs_mask = np.zeros(dem.num_mechanisms, dtype=np.int64)
    for o in range(dem.num_observables):
        obs_mask |= obs_dense[:, o].astype(np.int64) << o
    return sigs, obs_mask


def _pairs_sorted(sigs: np.ndarray, obs: np.ndarray, idx_i, idx_j):
    combo = sigs[idx_i] ^ sigs[idx_j]
    ob = obs[idx_i] ^ obs[idx_j]
    order = np.lexsort(tuple(combo[:, w] for w in range(combo.shape[1] - 1, -1, -1)))
    return combo[order], ob[order], idx_i[order], idx_j[order]


def _scan_runs(sorted_sigs: np.ndarray):
    """Start indices of equal-signature runs in a lex-sorted array."""
    if sorted_sigs.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    diff = np.any(sorted_sigs[1:] != sorted_sigs[:-1], axis=1)
    starts = np.concatenate([[0], np.nonzero(diff)[0] + 1, [sorted_sigs.shape[0]]])
    return starts


def _witness_from_logicals(dem: DetectorErrorModel) -> tuple[int, ...] | None:
    """Mechanism set applying one logical operator at the preparation cut."""
    circuit = dem.circuit
    code = circuit.code
    logicals = code.lx if circuit.basis == "z" else code.lz
    pchar = "X" if circuit.basis == "z" else "Z"
    by_source: dict[tuple[int, tuple], int] = {}
    for m in dem.mechanisms:
        for f in m.sources:
            by_source[(f.gate_index, f.pauli)] = m.index
    prep_gate_of: dict[int, int] = {}
    for gi, g in enumerate(circuit.gates):
        if g.round == -1 and g.name in ("R", "RX"):
            prep_gate_of[g.qubits[0]] = gi
    best: tuple[int, tuple[int, ...]] | None = None
    for i in range(logicals.rows):
        ids: list[int] = []
        ok = True
        for q in logicals.row_support(i):
            gi = prep_gate_of.get(q)
            mid = by_source.get((gi, ((q, pchar),))) if gi is not None else None
            if mid is None:
                ok = False
                break
            ids.append(mid)
        if not ok or len(set(ids)) != len(ids):
            continue
        # certify against the full model
        e = np.zeros(dem.num_mechanisms, dtype=np.uint8)
        e[ids] = 1
        if dem.h.matvec(e).any() or not dem.l.matvec(e).any():
            continue
        if best is None or len(ids) < best[0]:
            best = (len(ids), tuple(sorted(ids)))
    return best[1] if best else None


def search_min_weight_upto(
    dem: DetectorErrorModel, max_weight: int, pair_cap: int = 30_000_000
) -> tuple[int, tuple[int, ...]] | None:
    """Exhaustive search for the lightest logical error of weight <= max_weight.

    Meet-in-the-middle over half-weight signature tables: any weight-W
    logical splits into two disjoint halves of sizes ceil(W/2), floor(W/2)
    with equal detector signatures and different observable effects. Levels
    are scanned in ascending W, so the first hit is the true minimum.
    Raises if a required table would exceed pair_cap entries.
    """
    n = dem.num_mechanisms
    if n == 0:
        return None
    sigs, obs = _signature_table(dem)
    idx = np.arange(n, dtype=np.int64)

    def check_cap(half: int):
        size = math.comb(n, half)
        if size > pair_cap:
            raise ValueError(
                f"half-weight {half} table needs {size} entries (> cap {pair_cap})"
            )

    tables: dict[int, tuple] = {}

    def table(half: int):
        if half in tables:
            return tables[half]
        check_cap(half)
        if half == 1:
            order = np.lexsort(tuple(sigs[:, w] for w in range(sigs.shape[1] - 1, -1, -1)))
            tables[1] = (sigs[order], obs[order], idx[order].reshape(-1, 1))
        elif half == 2:
            ii, jj = np.triu_indices(n, k=1)
            combo, ob, oi, oj = _pairs_sorted(sigs, obs, idx[ii], idx[jj])
            tables[2] = (combo, ob, np.stack([oi, oj], axis=1))
        else:
            raise ValueError("half weights above 2 are not supported")
        return tables[half]

    def emit(members_a, members_b, ob_a, ob_b):
        if ob_a == ob_b:
            return None
        e = set(map(int, members_a)).symmetric_difference(map(int, members_b))
        if not e:
            return None
        ids = tuple(sorted(e))
        vec = np.zeros(n, dtype=np.uint8)
        vec[list(ids)] = 1
        if dem.h.matvec(vec).any() or not dem.l.matvec(vec).any():
            return None
        return (len(ids), ids)

    for w in range(1, max_weight + 1):
        if w == 1:
            hits = np.nonzero(
                ~sigs.any(axis=1) & (obs != 0)
            )[0]
            if hits.size:
                return (1, (int(hits[0]),))
            continue
        h1, h2 = (w + 1) // 2, w // 2
        if h1 == h2:
            combo, ob, members = table(h1)
            starts = _scan_runs(combo)
            for s, e_ in zip(starts[:-1], starts[1:]):
                if e_ - s < 2:
                    continue
                group_obs = ob[s:e_]
                if group_obs.min() == group_obs.max():
                    continue
                a = s + int(np.argmin(group_obs))
                b = s + int(np.argmax(group_obs))
                found = emit(members[a], members[b], ob[a], ob[b])
                if found:
                    return found
        else:
            big_combo, big_ob, big_members = table(h1)
            small_combo, small_ob, small_members = table(h2)
            # probe each small entry into the sorted big table
            lo = _searchsorted_rows(big_combo, small_combo, side="left")
            hi = _searchsorted_rows(big_combo, small_combo, side="right")
            for k in np.nonzero(hi > lo)[0]:
                for j in range(int(lo[k]), int(hi[k])):
                    found = emit(
                        big_members[j], small_members[k], big_ob[j], small_ob[k]
                    )
                    if found:
                        return found
    return None


def _searchsorted_rows(sorted_rows: np.ndarray, queries: np.ndarray, side: str):
    """Row-wise searchsorted via void views of contiguous big-endian rows."""
    def keyed(a: np.ndarray) -> np.ndarray:
        swapped = a.byteswap()  # big-endian byte order makes bytes lexicographic
        return np.ascontiguousarray(swapped).view(
            np.dtype((np.void, a.shape[1] * a.dtype.itemsize))
        ).ravel()

    return np.searchsorted(keyed(sorted_rows), keyed(queries), side=side)


def effective_distance(
    dem: DetectorErrorModel,
    timeout: float = 7200.0,
    distance_cap: int | None = None,
    samples: int = 200,
    seed: int = 0,
) -> EffectiveDistance:
    """Minimum circuit faults causing an undetected logical error.

    Exhaustively certifies weights up to 4 (meet-in-the-middle); an
    explicit logical-operator witness bounds the result from above, with
    early exit once the two meet. When the true minimum lies beyond the
    certified range, seeded subgraph sampling tightens the upper bound and
    the result is flagged inexact.
    """
    from .ambiguity import sample_subgraph

    start = time.monotonic()
    witness = _witness_from_logicals(dem)
    ub = (len(witness), witness) if witness else None

    pair_cap = 30_000_000
    h_max = 2 if math.comb(max(dem.num_mechanisms, 2), 2) <= pair_cap else 1
    cap = 2 * h_max
    if ub:
        cap = min(cap, ub[0] - 1)
    if distance_cap is not None:
        cap = min(cap, distance_cap - 1)
    found = search_min_weight_upto(dem, cap, pair_cap) if cap >= 1 else None
    if found:
        return EffectiveDistance(found[0], True, found[1], found[0] - 1)
    if ub and ub[0] == cap + 1:
        return EffectiveDistance(ub[0], True, ub[1], cap)

    # certified absence below cap+1 but the witness is further out: tighten
    # the bound by sampled subgraph solving
    best_ub = ub
    rng = np.random.default_rng(np.random.SeedSequence((0xDEFF, seed)))
    for i in range(samples):
        if time.monotonic() - start > timeout:
            break
        sub = sample_subgraph(dem, int(rng.integers(2**32)))
        if sub is None:
            continue
        res = min_weight_logical(sub, timeout=30.0)
        if res.found and (best_ub is None or res.weight < best_ub[0]):
            best_ub = (res.weight, res.error_set)
            if res.weight == cap + 1:
                return EffectiveDistance(res.weight, True, res.error_set, cap)
    if best_ub is None:
        # no witness and nothing sampled: report the certification bound only
        return EffectiveDistance(cap + 1, False, (), cap)
    exact = best_ub[0] == cap + 1
    return EffectiveDistance(best_ub[0], exact, best_ub[1], cap)
