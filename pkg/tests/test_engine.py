import random

import pytest

from netfloc import (ASSIGN_RADIUS_FACTOR, DirtyHeap, Engine, NodeAnnotation,
                     OpenFacilityRegistry, OracleView, radius,
                     random_instance, random_trace)


def node_id(engine, j, r):
    return engine.hierarchy.node_of[(j, r)]


def ann(engine, j, r):
    return engine.annotations[node_id(engine, j, r)]


def test_first_insert_opens_middle_level(line5):
    eng = Engine(line5)
    eng.insert_client("c1", 3)
    assert ann(eng, 0, 1).is_open is False and ann(eng, 0, 1).is_enabled is False
    assert ann(eng, 0, 2).is_open is True
    assert ann(eng, 0, 3).is_open is False and ann(eng, 0, 3).is_enabled is True
    assert ann(eng, 0, 3).open_below == 1
    assert eng.cost_query() == 25.0
    assert eng.solution_query() == [0]


def test_update_status_reports_enabled_flips(line5):
    eng = Engine(line5)
    chain = tuple(eng.hierarchy.area_chain(3))
    affected = eng.find_affected_triplets(chain)
    assert sorted(affected) == sorted(eng.hierarchy.node_of.values())
    flipped = eng.update_status(affected, +1)
    assert dict(flipped) == {node_id(eng, 0, 2): True, node_id(eng, 0, 3): True}
    eng.update_cost(chain, flipped, +1)
    # costs counted in bottom-scale units: 25 real = 5 * 5**rho_min
    assert [ann(eng, 0, r).cost for r in (1, 2, 3)] == [0, 5, 5]


def test_no_status_flips_gives_empty_set(line5):
    eng = Engine(line5)
    for cid, p in (("a", 3), ("b", 4), ("c", 3)):
        eng.insert_client(cid, p)
    chain = tuple(eng.hierarchy.area_chain(3))
    flipped = eng.update_status(eng.find_affected_triplets(chain), +1)
    assert flipped == []
    eng.update_cost(chain, flipped, +1)
    assert eng.cost_query() == 20.0  # four clients paying 5 each


def test_three_clients_move_opening_down(line5):
    eng = Engine(line5)
    for cid, p in (("a", 3), ("b", 4), ("c", 3)):
        eng.insert_client(cid, p)
    assert ann(eng, 0, 1).is_open is True
    assert ann(eng, 0, 2).is_open is False and ann(eng, 0, 2).is_enabled is True
    assert eng.cost_query() == 15.0
    assert [ann(eng, 0, r).cost for r in (1, 2, 3)] == [3, 3, 3]


def test_insert_into_empty_instance_opens_something(line5):
    eng = Engine(line5)
    eng.insert_client("only", 1)
    assert eng.open_nodes and eng.solution_query()


def test_duplicate_insert_rejected_state_unchanged(line5):
    eng = Engine(line5)
    eng.insert_client("c1", 3)
    before = eng.state_hash()
    with pytest.raises(ValueError, match="already live"):
        eng.insert_client("c1", 2)
    assert eng.state_hash() == before


def test_delete_unknown_rejected_state_unchanged(line5):
    eng = Engine(line5)
    eng.insert_client("c1", 3)
    before = eng.state_hash()
    with pytest.raises(ValueError, match="unknown client"):
        eng.delete_client("nope")
    assert eng.state_hash() == before


def test_insert_then_delete_restores_empty_state(line5):
    eng = Engine(line5)
    empty = eng.state_hash()
    eng.insert_client("c1", 3)
    eng.delete_client("c1")
    assert eng.state_hash() == empty
    assert eng.cost_query() == 0.0 and not eng.open_nodes


def test_delete_matches_fresh_build(line5):
    eng = Engine(line5)
    for cid, p in (("c1", 3), ("c2", 4), ("c3", 3)):
        eng.insert_client(cid, p)
    eng.delete_client("c3")
    fresh = Engine.from_clients(line5, {"c1": 3, "c2": 4})
    assert eng.state_hash() == fresh.state_hash()


def test_check_status_branch_table(line5):
    eng = Engine(line5)
    idx = node_id(eng, 0, 2)
    a = eng.annotations[idx]

    a.is_open, a.is_abundant, a.open_below = False, True, 0
    assert eng.check_status(idx) == (True, True)

    a.is_open, a.is_abundant, a.open_below = True, True, 2
    assert eng.check_status(idx) == (False, True)

    a.is_open, a.is_abundant, a.open_below = False, False, 0
    assert eng.check_status(idx) == (False, False)

    a.is_open, a.is_abundant, a.open_below = True, True, 0
    assert eng.check_status(idx) == (True, False)


def test_find_affected_equals_membership_scan():
    rng = random.Random(59)
    for _ in range(4):
        inst = random_instance(rng, n_facilities=rng.randint(2, 20),
                               n_pool_points=15)
        eng = Engine(inst)
        view = OracleView(inst, eng.hierarchy)
        for _ in range(6):
            p = rng.randrange(inst.n_points)
            chain = tuple(eng.hierarchy.area_chain(p))
            affected = set(eng.find_affected_triplets(chain))
            expected = {idx for idx in range(len(eng.hierarchy.nodes))
                        if view.point_in_x(p, idx)}
            assert affected == expected


def test_cost_query_examples(line5):
    eng = Engine(line5)
    assert eng.cost_query() == 0.0
    eng.insert_client("c1", 3)
    assert eng.cost_query() == 25.0
    eng.insert_client("c2", 4)
    eng.insert_client("c3", 3)
    assert eng.cost_query() == 15.0


def test_solution_query_examples(line5, line5_cheap_f1):
    assert Engine(line5).solution_query() == []
    eng = Engine(line5)
    eng.insert_client("c1", 3)
    assert eng.solution_query() == [0]
    cheap = Engine(line5_cheap_f1)
    cheap.insert_client("c1", 3)
    assert cheap.solution_query() == [1]


def test_assign_client_line5(line5):
    eng = Engine(line5)
    eng.insert_client("c1", 3)
    a = eng.assign_client("c1")
    assert a.r_area == 2
    assert eng.hierarchy.nodes[a.aux_triplet].r == 2
    assert a.open_facility == 0
    eng.insert_client("c2", 4)
    eng.insert_client("c3", 3)
    for cid in ("c1", "c2", "c3"):
        a = eng.assign_client(cid)
        assert a.r_area == 1 and a.open_facility == 0


def test_assign_errors(line5):
    eng = Engine(line5)
    with pytest.raises(ValueError, match="unknown client"):
        eng.assign_client("ghost")


def test_assignment_radius_and_open_area_properties():
    # A client covered by an open triplet's near neighborhood is assigned at
    # exactly that scale, and always lands within the stated radius.
    rng = random.Random(61)
    inst = random_instance(rng, n_facilities=10, n_pool_points=30)
    eng = Engine(inst)
    view = OracleView(inst, eng.hierarchy)
    live = {}
    for ev in random_trace(rng, inst, 80):
        if ev.kind == "insert":
            eng.insert_client(ev.cid, ev.point)
            live[ev.cid] = ev.point
        else:
            eng.delete_client(ev.cid)
            live.pop(ev.cid)
        if view.hierarchy is not eng.hierarchy:
            view = OracleView(inst, eng.hierarchy)
        for cid, p in live.items():
            a = eng.assign_client(cid)
            fac_point = inst.facility_point(a.open_facility)
            assert inst.distance(p, fac_point) <= radius(
                ASSIGN_RADIUS_FACTOR, a.r_area)
            for oidx in eng.open_nodes:
                if view.point_in_x(p, oidx):
                    assert a.r_area == eng.hierarchy.nodes[oidx].r


def test_level_shift_line5_push_and_pop(line5):
    eng = Engine(line5)
    for i in range(24):
        eng.insert_client(f"c{i}", i % 5)
    assert eng.params.rho_min == 1
    h_before = eng.hierarchy
    eng.insert_client("c24", 4)
    assert eng.params.rho_min == 0 and eng.params.delta == 4
    assert eng.hierarchy is not h_before
    assert [eng.hierarchy.nodes[i].facility
            for i in eng.hierarchy.by_level[0]] == [0, 1]
    fresh = Engine.from_clients(line5, dict(eng.registry.items()))
    assert eng.state_hash() == fresh.state_hash()
    eng.delete_client("c24")
    assert eng.params.rho_min == 1
    assert eng.state_hash() == Engine.from_clients(
        line5, dict(eng.registry.items())).state_hash()


def test_n_change_without_scale_shift_keeps_structure(line5):
    eng = Engine(line5)
    for i in range(4):
        eng.insert_client(f"c{i}", i % 5)
    h = eng.hierarchy
    eng.insert_client("c4", 4)   # n: 1 -> 5, divisor still |J|-dominated
    assert eng.n == 5
    assert eng.hierarchy is h


def test_realized_cost(line5):
    eng = Engine(line5)
    assert eng.realized_cost() == 0.0
    eng.insert_client("c1", 3)
    assert eng.realized_cost() == 110.0  # open F0 at 10 plus distance 100


def test_dirty_heap_guards():
    heap = DirtyHeap()
    heap.push((1, 0, 0), 7)
    heap.push((1, 0, 0), 7)          # deduplicated
    assert heap.pop() == 7 and not heap
    with pytest.raises(RuntimeError, match="cleaned twice"):
        heap.push((1, 0, 0), 7)


def test_open_facility_registry_refcounts():
    reg = OpenFacilityRegistry()
    reg.incref(3)
    reg.incref(3)
    reg.incref(5)
    assert sorted(reg.facilities()) == [3, 5]
    reg.decref(3)
    assert 3 in reg and len(reg) == 2
    reg.decref(3)
    assert 3 not in reg and reg.facilities() == [5]


def test_annotation_clone_is_detached():
    a = NodeAnnotation(n_area=3, cost=7)
    b = a.clone()
    b.n_area = 9
    assert a.n_area == 3 and a == NodeAnnotation(n_area=3, cost=7)
