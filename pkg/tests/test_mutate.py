import numpy as np
import pytest

from prophunt.ambiguity import is_ambiguous, sample_subgraph
from prophunt.circuits import memory_circuit
from prophunt.dem import NoiseModel, build_dem, is_hook
from prophunt.minweight import min_weight_logical
from prophunt.mutate import (
    CandidateChange,
    apply_changes,
    enumerate_changes,
    prune_changes,
    rebuild_dem,
)
from prophunt.scheduling import extract_layers, nz_schedule, validate_schedule


@pytest.fixture(scope="module")
def bad_setup():
    sched = nz_schedule(3, transposed=True)
    dem = build_dem(memory_circuit(sched, 3, "z"), NoiseModel(1e-3))
    return sched, dem


def solved_subgraph(dem, start_seed=0):
    for seed in range(start_seed, start_seed + 50):
        sub = sample_subgraph(dem, seed, max_steps=200)
        if sub is None:
            continue
        res = min_weight_logical(sub)
        if res.found and res.weight == 2:
            return sub, res
    raise RuntimeError("no weight-2 subgraph found")


def test_hook_reorder_count(bad_setup):
    sched, dem = bad_setup
    # every hook on a weight-4 check must yield exactly w-1 = 3 reorders
    for m in dem.mechanisms:
        for f in m.sources:
            if is_hook(f, dem):
                cands = enumerate_changes(dem, sched, (m.index,))
                reorders = [
                    c
                    for c in cands
                    if c.kind == "reorder" and c.origin[1] == m.index
                ]
                stabs = {c.stab for c in reorders}
                for s in stabs:
                    per_stab = [c for c in reorders if c.stab == s]
                    w = len(sched.code.check_support(s))
                    anchors = {c.before_qubit for c in per_stab}
                    for anchor in anchors:
                        count = sum(
                            1 for c in per_stab if c.before_qubit == anchor
                        )
                        assert count == w - 1
                return
    pytest.fail("no hook found")


def test_weight6_check_five_reorders():
    from helpers import toy_ldpc_code
    from prophunt.scheduling import coloration_schedule

    code = toy_ldpc_code()
    sched = coloration_schedule(code, seed=0)
    dem = build_dem(memory_circuit(sched, 2, "z"), NoiseModel(1e-3))
    for m in dem.mechanisms:
        for f in m.sources:
            if is_hook(f, dem):
                _, _, identity = f.location
                anc = next(q for q in identity[1] if q >= code.n)
                s = anc - code.n
                if len(code.check_support(s)) != 6:
                    continue
                cands = enumerate_changes(dem, sched, (m.index,))
                data_q = next(q for q in identity[1] if q < code.n)
                reorders = [
                    c
                    for c in cands
                    if c.kind == "reorder" and c.stab == s and c.before_qubit == data_q
                ]
                assert len(reorders) == 5
                return
    pytest.skip("no weight-6 hook in this model")


def test_reschedule_flip_counts(bad_setup):
    sched, dem = bad_setup
    code = sched.code
    seen_single = seen_double = False
    for m in dem.mechanisms:
        cands = enumerate_changes(dem, sched, (m.index,))
        for c in cands:
            if c.kind != "reschedule":
                continue
            (s_i, s_j, q), *rest = c.flips
            if code.is_x_check(s_i) != code.is_x_check(s_j):
                assert len(c.flips) == 2
                # paired flip shares the same stabilizer pair, other qubit
                assert rest[0][0] == s_i and rest[0][1] == s_j and rest[0][2] != q
                seen_double = True
            else:
                assert len(c.flips) == 1
                seen_single = True
        if seen_single and seen_double:
            break
    assert seen_double


def test_undetected_mechanism_no_reschedules(bad_setup):
    sched, dem = bad_setup
    # a mechanism flipping zero syndromes cannot exist in the merged model
    # (zero-signature columns are dropped); emulate via an ancilla-only
    # fault whose data component is absent: it yields no reschedules
    for m in dem.mechanisms:
        sources = [f for f in m.sources if all(q >= 9 for q, _ in f.pauli)]
        if sources and not any(is_hook(f, dem) for f in m.sources):
            cands = enumerate_changes(dem, sched, (m.index,))
            data_comp = [
                f
                for f in m.sources
                if any(q < 9 for q, _ in f.pauli) and f.location[2][0] == "CX"
            ]
            if not data_comp:
                assert all(c.kind != "reschedule" for c in cands)
                return
    pytest.skip("every mechanism carries a data component")


def test_prune_drops_cycle_makers(bad_setup):
    sched, dem = bad_setup
    sub, res = solved_subgraph(dem)
    cands = enumerate_changes(dem, sched, res.error_set)
    verified = prune_changes(sched, dem, sub, cands)
    for cand in verified:
        edited = cand.apply_to(sched)
        assert validate_schedule(edited).ok


def test_prune_removes_ambiguity(bad_setup):
    sched, dem = bad_setup
    sub, res = solved_subgraph(dem)
    cands = enumerate_changes(dem, sched, res.error_set)
    verified = prune_changes(sched, dem, sub, cands)
    assert verified, "expected at least one verified change for the bad schedule"
    for cand in verified[:3]:
        new_dem = rebuild_dem(dem, cand.apply_to(sched))
        assert not is_ambiguous(new_dem, sub.syndrome_nodes)


def test_identity_like_reorder_dropped(bad_setup):
    sched, dem = bad_setup
    sub, res = solved_subgraph(dem)
    cands = enumerate_changes(dem, sched, res.error_set)
    identity_like = [
        c
        for c in cands
        if c.kind == "reorder"
        and _is_identity_reorder(sched, c)
    ]
    verified = prune_changes(sched, dem, sub, identity_like)
    assert verified == []


def _is_identity_reorder(sched, cand) -> bool:
    return cand.apply_to(sched).orders == sched.orders


def test_apply_changes_empty():
    sched = nz_schedule(3)
    out, applied, skipped = apply_changes(sched, [])
    assert out.canonical() == sched.canonical()
    assert applied == [] and skipped == []


def test_apply_depth_tiebreak(bad_setup):
    sched, dem = bad_setup
    sub, res = solved_subgraph(dem)
    cands = enumerate_changes(dem, sched, res.error_set)
    verified = prune_changes(sched, dem, sub, cands)
    if len(verified) < 2:
        pytest.skip("needs two verified changes in one subgraph")
    out, applied, skipped = apply_changes(sched, verified)
    assert len(applied) == 1
    assert len(skipped) == len(verified) - 1
    best_depth = extract_layers(applied[0].apply_to(sched)).depth
    for cand in skipped:
        assert extract_layers(cand.apply_to(sched)).depth >= best_depth
    assert validate_schedule(out).ok


def test_apply_conflicting_groups(bad_setup):
    sched, dem = bad_setup
    # two identical reschedules attributed to different subgraphs: the
    # second application would undo the first and must be skipped or kept
    # consistent; here we craft a direct conflict via opposite flips
    from dataclasses import replace

    sub, res = solved_subgraph(dem)
    cands = enumerate_changes(dem, sched, res.error_set)
    verified = prune_changes(sched, dem, sub, cands)
    resched = [c for c in verified if c.kind == "reschedule"]
    if not resched:
        pytest.skip("no verified reschedule")
    a = replace(resched[0], origin=(0, resched[0].origin[1]))
    edited_once = a.apply_to(sched)
    # a second candidate flipping one of the same edges, validated against
    # the base schedule but conflicting after application
    b = replace(a, flips=(a.flips[0],), origin=(1, a.origin[1]))
    out, applied, skipped = apply_changes(sched, [a, b])
    assert validate_schedule(out).ok
    assert len(applied) + len(skipped) == 2


def test_reorder_keeps_prop_graph(bad_setup):
    sched, dem = bad_setup
    cand = CandidateChange(
        "reorder", stab=0, moved_qubit=sched.orders[0][2], before_qubit=sched.orders[0][0]
    )
    edited = cand.apply_to(sched)
    assert edited.prop.canonical() == sched.prop.canonical()
    assert sorted(edited.orders[0]) == sorted(sched.orders[0])


def test_reschedule_keeps_orders(bad_setup):
    sched, dem = bad_setup
    key = sorted(sched.prop.edges)[0]
    cand = CandidateChange("reschedule", flips=(key,))
    edited = cand.apply_to(sched)
    assert edited.orders == sched.orders
    assert edited.prop.edges[key] == -sched.prop.edges[key]


def test_enumeration_deterministic(bad_setup):
    sched, dem = bad_setup
    sub, res = solved_subgraph(dem)
    a = enumerate_changes(dem, sched, res.error_set)
    b = enumerate_changes(dem, sched, res.error_set)
    assert a == b
