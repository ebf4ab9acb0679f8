import numpy as np
import pytest
from hypothesis import given, settings

from conftest import permutation_lists
from elusive.constructions import a5_on_15, build_a5_mixed, build_sl2_quotient, m11_on_12
from elusive.perm import CapExceeded, PermGroup, Permutation
from elusive.polycirculant import (
    WitnessNotFound,
    audit_witness,
    check_stabilizer_conditions,
    closure_violation,
    dissection_witness,
    orbitals,
    suborbit_count,
    verify_in_closure,
)


@pytest.fixture(scope="module")
def sl2():
    return build_sl2_quotient(7, 2)


@pytest.fixture(scope="module")
def a5y():
    return build_a5_mixed("Y")


def naive_orbitals(gens, n):
    ids = -np.ones((n, n), dtype=int)
    count = 0
    for a in range(n):
        for b in range(n):
            if ids[a, b] >= 0:
                continue
            stack = [(a, b)]
            ids[a, b] = count
            while stack:
                x, y = stack.pop()
                for g in gens:
                    for u, v in ((g(x), g(y)), ((~g)(x), (~g)(y))):
                        if ids[u, v] < 0:
                            ids[u, v] = count
                            stack.append((u, v))
            count += 1
    return ids, count


@given(permutation_lists(count=2, max_degree=8))
@settings(max_examples=40, deadline=None)
def test_orbitals_match_naive(gens):
    n = gens[0].degree
    part = orbitals(gens, n)
    ids, count = naive_orbitals(gens, n)
    assert part.rank == count
    assert (part.ids == ids).all()


@given(permutation_lists(count=2, max_degree=8))
@settings(max_examples=40, deadline=None)
def test_group_elements_lie_in_closure(gens):
    n = gens[0].degree
    part = orbitals(gens, n)
    for g in list(PermGroup(gens, n).elements())[:20]:
        assert verify_in_closure(g, part)


def test_rank_equals_suborbit_count():
    g = a5_on_15()
    assert orbitals(g.action_generators, 15).rank == suborbit_count(g.group) == 6
    m = m11_on_12()
    assert orbitals(m.action_generators, 12).rank == suborbit_count(m.group) == 2


def test_closure_violation_finds_pair():
    g = a5_on_15()
    part = orbitals(g.action_generators, 15)
    t = Permutation.parse("(1,2)", 15)
    a, b = closure_violation(t, part)
    assert part.id_of(t(a), t(b)) != part.id_of(a, b)
    assert not verify_in_closure(t, part)
    assert closure_violation(g.action_generators[0], part) is None


def test_orbital_cap():
    with pytest.raises(CapExceeded):
        orbitals([Permutation.identity(100)], 100, cap=1000)


def test_conditions_sl2(sl2):
    rep = check_stabilizer_conditions(sl2.E_gens, 196)
    assert rep.ok
    assert rep.group_order == 343
    assert rep.stabilizer_orders == [49]
    assert rep.orbit_sizes == [7]
    assert rep.classes == 28


def test_conditions_fail_when_stabilizers_differ():
    # <(1,2)> x <(3,4)> on 5 points: point 5 has stabilizer E, others do not
    e = [Permutation.parse("(1,2)", 5), Permutation.parse("(3,4)", 5)]
    rep = check_stabilizer_conditions(e, 5)
    assert not rep.ok and not rep.equal_orders
    with pytest.raises(WitnessNotFound):
        dissection_witness(e, 5)


@pytest.mark.parametrize("which,prime", [("sl2", 7), ("U", 3), ("V", 5)])
def test_witnesses(which, prime, sl2, a5y):
    g = sl2 if which == "sl2" else a5y
    gens = g.E_gens if which == "sl2" else g.E_choices[which]
    w = dissection_witness(gens, g.degree)
    assert w.prime == prime
    assert not w.sigma.images.tolist() == list(range(g.degree))
    audit = audit_witness(w, g.action_generators, g.degree, g.group)
    assert audit == {"order": prime, "fixed_points": 0, "preserves_X_orbitals": True,
                     "in_X": False, "X_rank": audit["X_rank"], "ok": True}
    assert w.to_json()["sigma"] == w.sigma.to_json()


def test_ranks(sl2, a5y):
    assert orbitals(sl2.action_generators, 196).rank == 10
    assert orbitals(a5y.action_generators, 225).rank == 13


def test_witness_budget_exhausted(sl2):
    with pytest.raises(WitnessNotFound):
        dissection_witness(sl2.E_gens, 196, budget=0)
