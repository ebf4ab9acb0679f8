import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import permutation_lists, permutations
from elusive.perm import (
    CapExceeded,
    PermGroup,
    Permutation,
    batch_orders,
    coset_action,
    cycle_lengths,
    element_order,
    fixed_points,
    is_derangement,
    orbits,
)


def naive_closure(gens):
    n = gens[0].degree
    seen = {Permutation.identity(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def test_right_action_composition():
    p = Permutation.parse("(1,2)", 3)
    q = Permutation.parse("(2,3)", 3)
    # apply p first, then q: 1 -> 2 -> 3
    assert (p * q)(0) == 2
    assert (q * p)(0) == 1


def test_cycle_round_trip():
    p = Permutation.parse("(1,5,3)(2,4)", 6)
    assert p.to_cycles() == "(1,5,3)(2,4)"
    assert Permutation.parse(p.to_cycles(), 6) == p
    assert Permutation.identity(4).to_cycles() == "()"


def test_invalid_images_rejected():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])
    with pytest.raises(ValueError):
        Permutation.parse("(1,7)", 5)


def test_order_and_fixed_points():
    p = Permutation.parse("(1,2,3)(4,5)", 7)
    assert element_order(p) == 6
    assert sorted(cycle_lengths(p)) == [1, 1, 2, 3]
    assert fixed_points(p) == {5, 6}
    assert not is_derangement(p)
    assert is_derangement(Permutation.parse("(1,2)(3,4,5)", 5))


@given(permutation_lists(count=3))
def test_associativity(ps):
    a, b, c = ps
    assert (a * b) * c == a * (b * c)


@given(permutations())
def test_inverse(p):
    e = Permutation.identity(p.degree)
    assert p * ~p == e
    assert ~p * p == e
    assert p ** -1 == ~p


@given(permutation_lists(count=2))
def test_conjugation_preserves_order_and_cycle_type(ps):
    x, s = ps
    y = x ** s
    assert y == ~s * x * s
    assert element_order(y) == element_order(x)
    assert sorted(cycle_lengths(y)) == sorted(cycle_lengths(x))


@given(permutations(), st.integers(-20, 20))
def test_power_matches_repeated_product(p, e):
    acc = Permutation.identity(p.degree)
    step = p if e >= 0 else ~p
    for _ in range(abs(e)):
        acc = acc * step
    assert p ** e == acc


@given(permutation_lists(count=2, max_degree=7))
@settings(max_examples=60, deadline=None)
def test_bsgs_order_matches_enumeration(gens):
    g = PermGroup(gens)
    elements = naive_closure(gens)
    assert g.order() == len(elements)
    listed = {p for p in g.elements()}
    assert listed == elements
    for x in list(elements)[:10]:
        assert x in g


@given(permutation_lists(count=2, max_degree=8))
@settings(max_examples=40, deadline=None)
def test_batch_orders_match_element_order(gens):
    g = PermGroup(gens)
    for block in g.element_blocks():
        got = batch_orders(block, g.base)
        want = [element_order(Permutation(row)) for row in block]
        assert got.tolist() == want


@given(permutation_lists(count=2, max_degree=9))
def test_orbits_partition_domain(gens):
    n = gens[0].degree
    orbs = orbits(gens, n)
    assert sorted(itertools.chain.from_iterable(orbs)) == list(range(n))
    for o in orbs:
        s = set(o)
        assert all(int(g(x)) in s for g in gens for x in o)


@pytest.mark.parametrize("gens,n,order", [
    (["(1,2,3,4,5)", "(1,2)"], 5, 120),
    (["(1,2,3)", "(3,4,5)"], 5, 60),
    (["(1,2,3,4,5,6,7,8)", "(1,8)(2,7)(3,6)(4,5)"], 8, 16),
    (["(2,3,4,6,9,12,5,7,11,8,10)", "(1,2)(3,5,8,4)(6,10)(7,9,11,12)"], 12, 7920),
])
def test_known_group_orders(gens, n, order):
    g = PermGroup([Permutation.parse(s, n) for s in gens], n)
    assert g.order() == order
    assert g.is_transitive()


def test_order_hint_and_membership():
    gens = [Permutation.parse("(1,2,3,4,5,6)", 6), Permutation.parse("(1,2)", 6)]
    g = PermGroup(gens, 6, order_hint=720)
    assert g.order() == 720
    a6 = PermGroup([Permutation.parse("(1,2,3)", 6), Permutation.parse("(2,3,4,5,6)", 6)], 6)
    assert a6.order() == 360
    assert Permutation.parse("(1,2)", 6) not in a6


def test_element_blocks_parts_cover_group():
    g = PermGroup([Permutation.parse("(1,2,3,4,5)", 5), Permutation.parse("(1,2)", 5)], 5)
    whole = {r.tobytes() for b in g.element_blocks() for r in b}
    parts = [{r.tobytes() for b in g.element_blocks(part=(i, 3)) for r in b} for i in range(3)]
    assert set().union(*parts) == whole
    assert sum(len(p) for p in parts) == 120


def test_enumeration_cap():
    g = PermGroup([Permutation.parse("(1,2,3,4,5,6,7)", 7), Permutation.parse("(1,2)", 7)], 7)
    with pytest.raises(CapExceeded):
        list(g.elements(cap=100))


def test_coset_action_of_a5_on_pairs():
    a5 = PermGroup([Permutation.parse("(1,2)(3,4)", 5), Permutation.parse("(1,3,5)", 5)], 5)
    perms, degree = coset_action(a5, [Permutation.parse("(1,2)(3,4)", 5),
                                      Permutation.parse("(1,3)(2,4)", 5)])
    assert degree == 15
    image = PermGroup(perms, degree)
    assert image.order() == 60 and image.is_transitive()


def test_json_round_trip():
    p = Permutation.parse("(1,3)(2,5,4)", 6)
    assert Permutation.from_json(p.to_json()) == p
    assert p.to_json() == [2, 4, 0, 1, 3, 5]
    assert isinstance(np.asarray(p.images), np.ndarray)
