import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elusive.residue import (
    MatrixCosetAction,
    RMatrix,
    ResidueGroupStructure,
    ResidueRingContext,
    conjugator_into_yhat,
    decode,
    encode,
    filtration_level,
    is_mersenne_prime,
    is_prime,
    level_coordinates,
    level_generators,
    mat_mul,
    order_p_elements,
    psl2_dihedral_action,
    scan_order_p_elements,
    sl2_order,
    sl2_order_bruteforce,
    structural_order_p_elements,
    yhat_coset_action,
)
from elusive.perm import PermGroup


def test_primes():
    assert [n for n in range(40) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    assert [n for n in range(200) if is_mersenne_prime(n)] == [3, 7, 31, 127]


def test_context_validation():
    with pytest.raises(ValueError):
        ResidueRingContext(4, 2)
    with pytest.raises(ValueError):
        ResidueRingContext(2, 2)
    with pytest.raises(ValueError):
        ResidueRingContext(7, 0)


@pytest.mark.parametrize("p,k", [(3, 1), (3, 2), (5, 1), (5, 2), (7, 1)])
def test_sl2_order_formula(p, k):
    ctx = ResidueRingContext(p, k)
    assert sl2_order(ctx) == sl2_order_bruteforce(ctx)


def test_unit_of_order_p_minus_1():
    for p, k in [(5, 2), (7, 2), (7, 3), (31, 2)]:
        ctx = ResidueRingContext(p, k)
        w = ctx.w
        orders = [e for e in range(1, p) if pow(w, e, ctx.modulus) == 1]
        assert orders[0] == p - 1


def sl2_matrices(m):
    """Products U^i L^j U^k L^l of the elementary matrices; these generate SL_2(Z/m)."""
    U, L = RMatrix(1, 1, 0, 1, m), RMatrix(1, 0, 1, 1, m)
    exps = st.tuples(*[st.integers(0, m - 1)] * 4)
    return exps.map(lambda e: U ** e[0] * L ** e[1] * U ** e[2] * L ** e[3])


@given(sl2_matrices(49), sl2_matrices(49), sl2_matrices(49))
def test_matrix_group_laws(x, y, z):
    one = RMatrix.identity(49)
    assert (x * y) * z == x * (y * z)
    assert x * x.inverse() == one
    assert (x * y).det() == 1
    assert x.conj(y) == y.inverse() * x * y


@given(sl2_matrices(343), st.integers(-30, 30))
def test_matrix_power(x, e):
    acc = RMatrix.identity(343)
    step = x if e >= 0 else x.inverse()
    for _ in range(abs(e)):
        acc = acc * step
    assert x ** e == acc


@given(st.lists(sl2_matrices(25), min_size=1, max_size=10), st.lists(sl2_matrices(25), min_size=1, max_size=10))
def test_array_helpers_agree_with_rmatrix(xs, ys):
    n = min(len(xs), len(ys))
    X = np.array([x.entries() for x in xs[:n]])
    Y = np.array([y.entries() for y in ys[:n]])
    prod = mat_mul(X, Y, 25)
    assert [tuple(r) for r in prod.tolist()] == [(x * y).entries() for x, y in zip(xs, ys)]
    assert (decode(encode(X, 25), 25) == X).all()


def test_level_generators_and_coordinates():
    ctx = ResidueRingContext(7, 3)
    for ell in (1, 2):
        A, B, C = level_generators(ctx, ell)
        for g in (A, B, C):
            assert g.det() == 1
            assert filtration_level(g, ctx) == ell
        for x, y, z in [(1, 0, 0), (2, 3, 4), (6, 6, 6)]:
            M = A ** x * B ** y * C ** z
            assert level_coordinates(M, ctx, ell) == (x, y, z)
    with pytest.raises(ValueError):
        level_generators(ctx, 3)


@pytest.mark.parametrize("p,k", [(3, 2), (5, 2), (7, 2), (7, 3)])
def test_yhat_order(p, k):
    s = ResidueGroupStructure(ResidueRingContext(p, k))
    assert len(s.yhat) == s.yhat_order_expected == 2 * p * p * (p - 1)
    assert all(s.in_yhat(g) for g in s.yhat_generators)


def test_order_p_elements_p3_is_larger_than_level_subgroup():
    ctx = ResidueRingContext(3, 2)
    found = order_p_elements(ctx)
    assert len(found) == 98
    assert len(structural_order_p_elements(ctx)) == 26
    assert all((x ** 3).is_identity() for x in found)
    off_level = [x for x in found if (x.a % 3, x.b % 3, x.c % 3, x.d % 3) != (1, 0, 0, 1)]
    assert len(off_level) == 72
    assert len(order_p_elements(ResidueRingContext(3, 3))) == 674


@pytest.mark.parametrize("p,k,count", [(5, 2, 124), (7, 2, 342), (5, 3, 124)])
def test_order_p_elements_cross_validated(p, k, count):
    ctx = ResidueRingContext(p, k)
    found = order_p_elements(ctx, cross_validate=True)
    assert len(found) == count
    assert len(scan_order_p_elements(ctx)) == count


@pytest.mark.parametrize("p,k", [(5, 2), (7, 2), (7, 3), (3, 2)])
def test_conjugator_lands_in_p(p, k):
    ctx = ResidueRingContext(p, k)
    s = ResidueGroupStructure(ctx)
    for A in structural_order_p_elements(ctx):
        D = conjugator_into_yhat(A, ctx)
        assert D.det() == 1
        image = A.conj(D)
        assert s.in_P(image) and s.in_yhat(image)


def test_conjugator_rejects_bad_input():
    ctx = ResidueRingContext(7, 2)
    with pytest.raises(ValueError):
        conjugator_into_yhat(RMatrix.identity(49), ctx)
    with pytest.raises(ValueError):
        conjugator_into_yhat(RMatrix(1, 1, 0, 1, 49), ctx)


@pytest.mark.parametrize("p,k,degree", [(5, 2, 75), (7, 2, 196), (3, 2, 18)])
def test_yhat_coset_degree(p, k, degree):
    ctx = ResidueRingContext(p, k)
    action = yhat_coset_action(ctx)
    assert isinstance(action, MatrixCosetAction)
    assert action.degree == degree == p ** (3 * k - 4) * (p + 1) // 2
    g = PermGroup(action.generator_images, degree)
    assert g.order() == sl2_order(ctx) // 2
    assert g.is_transitive()


def test_coset_action_is_a_homomorphism():
    ctx = ResidueRingContext(7, 2)
    action = yhat_coset_action(ctx)
    x, y = RMatrix(3, 5, 1, 2, 49), RMatrix(2, 1, 1, 1, 49)
    assert x.det() == 1 and y.det() == 1
    assert action.image(x * y) == action.image(x) * action.image(y)
    assert action.image(RMatrix(-1, 0, 0, -1, 49)).is_identity()


@pytest.mark.parametrize("p,degree", [(7, 28), (31, 496)])
def test_psl2_dihedral_action(p, degree):
    action = psl2_dihedral_action(p)
    assert action.degree == degree
    assert PermGroup(action.generator_images, degree).order() == p * (p * p - 1) // 2
