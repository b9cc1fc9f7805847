"""Syndrome-measurement circuit schedules.

A schedule is (a) a CNOT order per stabilizer and (b) a multi-edge directed
propagation graph over stabilizers: one edge per (stabilizer pair, shared
data qubit), pointing from the stabilizer that touches the qubit earlier in
the round. Together these define a partial order on the round's CNOTs; a
layered circuit is any topological realization of it.

Validity has two parts: the CNOT partial order must be acyclic, and every
overlapping X/Z check pair must cross an even number of times (the number
of shared qubits where the X-check CNOT comes first). The even-crossing
rule is the fast criterion; noiseless stabilizer simulation of the full
memory circuit is the authoritative oracle it is tested against.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codes import CssCode, code_from_dict, code_to_dict, surface_plaquettes

EdgeKey = tuple[int, int, int]  # (stab_a, stab_b, shared qubit) with a < b


@dataclass(frozen=True)
class PropagationGraph:
    """Directed multi-edges between stabilizers sharing data qubits.

    ``edges[(a, b, q)]`` is +1 when a touches q before b in the round and
    -1 otherwise; keys always have a < b.
    """

    num_stabs: int
    edges: dict[EdgeKey, int] = field(compare=False)

    def __post_init__(self):
        for (a, b, q), d in self.edges.items():
            if not a < b:
                raise ValueError(f"edge key ({a},{b},{q}) must have a < b")
            if d not in (1, -1):
                raise ValueError(f"edge direction must be +-1, got {d}")

    def first(self, a: int, b: int, q: int) -> int:
        """Which of stabilizers a, b touches shared qubit q first."""
        key = (a, b, q) if a < b else (b, a, q)
        d = self.edges[key]
        lo, hi = key[0], key[1]
        return lo if d == 1 else hi

    def flipped(self, flips: Iterable[tuple[int, int, int]]) -> "PropagationGraph":
        edges = dict(self.edges)
        for a, b, q in flips:
            key = (a, b, q) if a < b else (b, a, q)
            if key not in edges:
                raise KeyError(f"no propagation edge {key}")
            edges[key] = -edges[key]
        return PropagationGraph(self.num_stabs, edges)

    def canonical(self) -> tuple:
        return tuple(sorted((k, v) for k, v in self.edges.items()))


@dataclass(frozen=True)
class SmSchedule:
    """Per-stabilizer CNOT orders plus the propagation graph."""

    code: CssCode
    orders: tuple[tuple[int, ...], ...]
    prop: PropagationGraph

    def __post_init__(self):
        if len(self.orders) != self.code.num_checks:
            raise ValueError("one order per stabilizer required")
        for s, order in enumerate(self.orders):
            if sorted(order) != self.code.check_support(s):
                raise ValueError(
                    f"order for stabilizer {s} is not a permutation of its support"
                )

    def canonical(self) -> tuple:
        return (self.orders, self.prop.canonical())

    def with_order(self, stab: int, new_order: Sequence[int]) -> "SmSchedule":
        orders = list(self.orders)
        orders[stab] = tuple(new_order)
        return SmSchedule(self.code, tuple(orders), self.prop)

    def with_flips(self, flips: Iterable[tuple[int, int, int]]) -> "SmSchedule":
        return SmSchedule(self.code, self.orders, self.prop.flipped(flips))


@dataclass(frozen=True)
class LayeredCircuit:
    """One round's CNOT layers; each layer is qubit-disjoint.

    Entries are (stabilizer, data qubit) pairs; ancilla resets and
    measurements bookend the layers when a full round is emitted. ``depth``
    counts CNOT layers only.
    """

    layers: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def depth(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: str | None = None
    detail: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


# ---------------------------------------------------------------------------
# constructors


def _shared_qubit_stabs(code: CssCode) -> dict[int, list[int]]:
    """For each data qubit, the stabilizers whose support contains it."""
    by_qubit: dict[int, list[int]] = {q: [] for q in range(code.n)}
    for s in range(code.num_checks):
        for q in code.check_support(s):
            by_qubit[q].append(s)
    return by_qubit


def schedule_from_times(code: CssCode, times: dict[tuple[int, int], float]) -> SmSchedule:
    """Build a schedule from an injective per-(stabilizer, qubit) time map.

    Orders sort each support by time; edge directions compare times on the
    shared qubit. Times must be distinct per qubit.
    """
    orders = []
    for s in range(code.num_checks):
        sup = code.check_support(s)
        orders.append(tuple(sorted(sup, key=lambda q: times[(s, q)])))
    edges: dict[EdgeKey, int] = {}
    for q, stabs in _shared_qubit_stabs(code).items():
        for i, a in enumerate(stabs):
            for b in stabs[i + 1 :]:
                ta, tb = times[(a, q)], times[(b, q)]
                if ta == tb:
                    raise ValueError(f"stabilizers {a},{b} touch qubit {q} simultaneously")
                edges[(a, b, q)] = 1 if ta < tb else -1
    return SmSchedule(code, tuple(orders), PropagationGraph(code.num_checks, edges))


def _color_bipartite(
    edges: list[tuple[int, int]], rng: np.random.Generator
) -> dict[tuple[int, int], int]:
    """Proper edge coloring of a bipartite (check, qubit) graph.

    Uses the alternating-path argument behind Konig's theorem, so exactly
    max-degree colors are used. Edge insertion order is shuffled by the rng
    for variety; the path flipping keeps the coloring proper throughout.
    """
    deg: dict[tuple[str, int], int] = {}
    for c, q in edges:
        deg[("c", c)] = deg.get(("c", c), 0) + 1
        deg[("q", q)] = deg.get(("q", q), 0) + 1
    ncolors = max(deg.values(), default=0)
    # color -> partner for each vertex
    at: dict[tuple[str, int], dict[int, int]] = {v: {} for v in deg}
    coloring: dict[tuple[int, int], int] = {}

    order = list(edges)
    rng.shuffle(order)
    for c, q in order:
        u, v = ("c", c), ("q", q)
        free_u = next(k for k in range(ncolors) if k not in at[u])
        free_v = next(k for k in range(ncolors) if k not in at[v])
        if free_u != free_v:
            # flip the free_u/free_v alternating path starting at v; every
            # check-side vertex on it is entered via a free_u edge, and u
            # has none, so the path never reaches u and free_u opens at v
            path = []
            side, node, col = "q", q, free_u
            while col in at[(side, node)]:
                partner = at[(side, node)][col]
                path.append((side, node, partner, col))
                side = "c" if side == "q" else "q"
                node = partner
                col = free_v if col == free_u else free_u
            for side, node, partner, col in path:
                pside = "c" if side == "q" else "q"
                del at[(side, node)][col]
                del at[(pside, partner)][col]
            for side, node, partner, col in path:
                other = free_v if col == free_u else free_u
                pside = "c" if side == "q" else "q"
                key = (node, partner) if side == "c" else (partner, node)
                coloring[key] = other
                at[(side, node)][other] = partner
                at[(pside, partner)][other] = node
        coloring[(c, q)] = free_u
        at[u][free_u] = q
        at[v][free_u] = c
    return coloring


def coloration_schedule(code: CssCode, seed: int) -> SmSchedule:
    """Baseline schedule from Tanner-graph edge colorings.

    Z extraction layers run first, X layers after, so every X/Z pair
    trivially satisfies the crossing rule for any coloring. Color-to-layer
    assignment and edge order are randomized by the seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0xC0105, seed)))
    times: dict[tuple[int, int], float] = {}
    offset = 0
    for is_x in (False, True):  # Z phase first
        stabs = [
            s for s in range(code.num_checks) if code.is_x_check(s) == is_x
        ]
        edges = [(s, q) for s in stabs for q in code.check_support(s)]
        if not edges:
            continue
        coloring = _color_bipartite(edges, rng)
        ncolors = max(coloring.values()) + 1
        layer_of_color = rng.permutation(ncolors)
        for (s, q), col in coloring.items():
            times[(s, q)] = offset + int(layer_of_color[col])
        offset += ncolors
    return schedule_from_times(code, times)


_X_ROLE_TIME = {"nw": 0, "sw": 1, "ne": 2, "se": 3}  # N-shaped traversal
_Z_ROLE_TIME = {"nw": 0, "ne": 1, "sw": 2, "se": 3}  # Z-shaped traversal


def nz_schedule(d: int, transposed: bool = False) -> SmSchedule:
    """Hand-designed reference schedule for the rotated surface code.

    X checks traverse their plaquette in an N-shaped order and Z checks in
    a Z-shaped order, interleaved in four CNOT layers; worst-case hook
    errors then land perpendicular to the matching logical operator. With
    ``transposed=True`` the two traversals are swapped, producing the
    classic distance-reducing counterexample schedule.
    """
    from .codes import make_rotated_surface

    code = make_rotated_surface(d)
    times: dict[tuple[int, int], float] = {}
    for stab, (is_x, corners) in enumerate(surface_plaquettes(d)):
        use_x_pattern = is_x != transposed
        role_time = _X_ROLE_TIME if use_x_pattern else _Z_ROLE_TIME
        for role, q in corners.items():
            times[(stab, q)] = role_time[role]
    return schedule_from_times(code, times)


def random_schedule(code: CssCode, seed: int) -> SmSchedule:
    """Random interleaved schedule; always schedulable, validity by luck.

    Each stabilizer gets a random CNOT order; cross-stabilizer timing uses
    the order index plus sub-unit jitter, so per-stabilizer monotonicity is
    preserved while shared-qubit directions vary freely.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0x5EED, seed)))
    times: dict[tuple[int, int], float] = {}
    for s in range(code.num_checks):
        sup = list(code.check_support(s))
        rng.shuffle(sup)
        for i, q in enumerate(sup):
            times[(s, q)] = i + float(rng.random())
    return schedule_from_times(code, times)


def random_valid_schedule(code: CssCode, seed: int, n_edits: int = 30) -> SmSchedule:
    """Random schedule that provably passes validation.

    Starts from a seeded coloration schedule and applies random reorders
    plus crossing-parity-preserving edge flips (single flips for same-type
    pairs, paired flips for X/Z pairs), rejecting any edit that creates a
    CNOT ordering cycle.
    """
    rng = np.random.default_rng(np.random.SeedSequence((0xA11D, seed)))
    sched = coloration_schedule(code, seed)
    edge_keys = sorted(sched.prop.edges)
    shared: dict[tuple[int, int], list[int]] = {}
    for a, b, q in edge_keys:
        shared.setdefault((a, b), []).append(q)
    for _ in range(n_edits):
        if rng.random() < 0.5:
            s = int(rng.integers(code.num_checks))
            order = list(sched.orders[s])
            if len(order) < 2:
                continue
            i, j = rng.choice(len(order), size=2, replace=False)
            moved = order.pop(int(i))
            order.insert(int(j if j < i else j - 1), moved)
            cand = sched.with_order(s, order)
        else:
            a, b, q = edge_keys[int(rng.integers(len(edge_keys)))]
            flips = [(a, b, q)]
            if code.is_x_check(a) != code.is_x_check(b):
                others = [p for p in shared[(a, b)] if p != q]
                flips.append((a, b, others[int(rng.integers(len(others)))]))
            cand = sched.with_flips(flips)
        if _toposort_layers(cand) is not None:
            sched = cand
    return sched


# ---------------------------------------------------------------------------
# validation and layering


def _cnot_constraints(s: SmSchedule):
    """CNOT nodes and directed constraint pairs (earlier -> later)."""
    nodes = [(stab, q) for stab, order in enumerate(s.orders) for q in order]
    constraints = []
    for stab, order in enumerate(s.orders):
        for i in range(len(order) - 1):
            constraints.append(((stab, order[i]), (stab, order[i + 1])))
    for (a, b, q), d in s.prop.edges.items():
        lo, hi = ((a, q), (b, q)) if d == 1 else ((b, q), (a, q))
        constraints.append((lo, hi))
    return nodes, constraints


def _toposort_layers(s: SmSchedule) -> list[list[tuple[int, int]]] | None:
    """Longest-path (ASAP) layering of the CNOT partial order, or None on a cycle."""
    nodes, constraints = _cnot_constraints(s)
    succ: dict[tuple[int, int], list[tuple[int, int]]] = {n: [] for n in nodes}
    indeg = {n: 0 for n in nodes}
    for lo, hi in constraints:
        succ[lo].append(hi)
        indeg[hi] += 1
    layer = {n: 0 for n in nodes}
    queue = sorted(n for n in nodes if indeg[n] == 0)
    done = 0
    while queue:
        nxt: list[tuple[int, int]] = []
        for n in queue:
            done += 1
            for m in succ[n]:
                layer[m] = max(layer[m], layer[n] + 1)
                indeg[m] -= 1
                if indeg[m] == 0:
                    nxt.append(m)
        queue = sorted(nxt)
    if done != len(nodes):
        return None
    depth = max(layer.values(), default=-1) + 1
    layers: list[list[tuple[int, int]]] = [[] for _ in range(depth)]
    for n in nodes:
        layers[layer[n]].append(n)
    return [sorted(l) for l in layers]


def _find_cycle(s: SmSchedule) -> list[tuple[int, int]]:
    nodes, constraints = _cnot_constraints(s)
    succ: dict[tuple[int, int], list[tuple[int, int]]] = {n: [] for n in nodes}
    for lo, hi in constraints:
        succ[lo].append(hi)
    color = {n: 0 for n in nodes}
    stack: list[tuple[int, int]] = []

    def dfs(n) -> list | None:
        color[n] = 1
        stack.append(n)
        for m in succ[n]:
            if color[m] == 1:
                return stack[stack.index(m) :]
            if color[m] == 0:
                found = dfs(m)
                if found:
                    return found
        color[n] = 2
        stack.pop()
        return None

    for n in nodes:
        if color[n] == 0:
            found = dfs(n)
            if found:
                return found
    return []


def validate_schedule(s: SmSchedule) -> ValidationResult:
    """Check CNOT schedulability and stabilizer commutation.

    Invalidity is a return value: ``reason`` is "cycle" with the offending
    CNOT cycle, or "commutation" with the odd-crossing X/Z pair.
    """
    if _toposort_layers(s) is None:
        return ValidationResult(False, "cycle", tuple(_find_cycle(s)))
    code = s.code
    shared: dict[tuple[int, int], list[int]] = {}
    for a, b, q in s.prop.edges:
        shared.setdefault((a, b), []).append(q)
    for (a, b), qubits in sorted(shared.items()):
        if code.is_x_check(a) == code.is_x_check(b):
            continue
        x_stab = a if code.is_x_check(a) else b
        x_first = sum(1 for q in qubits if s.prop.first(a, b, q) == x_stab)
        if x_first % 2:
            return ValidationResult(False, "commutation", (a, b, tuple(sorted(qubits))))
    return ValidationResult(True)


def extract_layers(s: SmSchedule) -> LayeredCircuit:
    """Deterministic ASAP layering of a valid schedule.

    Each CNOT lands in the earliest layer allowed by the ordering
    constraints; qubit exclusivity then holds automatically because any two
    CNOTs sharing a qubit are directly ordered.
    """
    layers = _toposort_layers(s)
    if layers is None:
        raise ValueError("schedule has a CNOT ordering cycle; validate first")
    for layer in layers:
        used: set[int] = set()
        for stab, q in layer:
            anc = s.code.n + stab
            if q in used or anc in used:
                raise AssertionError("qubit reused within a layer")
            used.update((q, anc))
    return LayeredCircuit(tuple(tuple(l) for l in layers))


# ---------------------------------------------------------------------------
# schedule files


def schedule_to_dict(s: SmSchedule) -> dict:
    return {
        "code": code_to_dict(s.code),
        "orders": {str(stab): list(order) for stab, order in enumerate(s.orders)},
        "edges": [[a, b, q, d] for (a, b, q), d in sorted(s.prop.edges.items())],
    }


def schedule_from_dict(data: dict) -> SmSchedule:
    try:
        code = code_from_dict(data["code"])
        orders = tuple(
            tuple(data["orders"][str(s)]) for s in range(code.num_checks)
        )
        edges = {(a, b, q): d for a, b, q, d in data["edges"]}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed schedule file: {exc}") from exc
    return SmSchedule(code, orders, PropagationGraph(code.num_checks, edges))


def load_schedule(path: str | Path) -> SmSchedule:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse schedule {path}: {exc}") from exc
    return schedule_from_dict(data)


def save_schedule(s: SmSchedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(s), sort_keys=True, indent=1))
