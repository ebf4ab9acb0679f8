import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elusive.modules import (
    A5_X,
    A5_Y,
    M_CAP_U,
    M_CAP_V,
    NINE_TRIPLES,
    U_X,
    U_Y,
    V_X,
    V_Y,
    Subspace,
    VectorSpaceAction,
    a5_group,
    a5_u_coverage,
    a5_word,
    a5_word_to_perm,
    all_vectors,
    dihedral_generators,
    encode_vectors,
    form_values_on_subspace,
    is_invariant,
    is_irreducible,
    mat_inverse_mod,
    mat_order,
    matrix_group_elements,
    omega3_action,
    orbit_coverage_check,
    permutation_module_matrix,
    plus_type_invariant_plane,
    rank_mod,
    subspace_type,
    two_subspaces,
    u_module,
    v_module,
)
from elusive.perm import PermGroup


def test_vector_encoding_is_base_p_most_significant_first():
    vecs = all_vectors(3, 2)
    assert vecs.tolist()[:4] == [[0, 0], [0, 1], [0, 2], [1, 0]]
    assert encode_vectors(vecs, 3).tolist() == list(range(9))


@given(st.lists(st.lists(st.integers(0, 6), min_size=3, max_size=3), min_size=3, max_size=3))
def test_inverse_mod(rows):
    g = np.array(rows)
    if rank_mod(g, 7) < 3:
        with pytest.raises(ValueError):
            mat_inverse_mod(g, 7)
    else:
        assert (g @ mat_inverse_mod(g, 7) % 7 == np.eye(3, dtype=int)).all()


def test_a5_matrices_are_permutation_modules():
    assert (permutation_module_matrix(A5_X, 3, 4) == np.array(U_X) % 3).all()
    assert (permutation_module_matrix(A5_Y, 3, 4) == np.array(U_Y) % 3).all()
    assert (permutation_module_matrix(A5_X, 5, 3) == np.array(V_X) % 5).all()
    assert (permutation_module_matrix(A5_Y, 5, 3) == np.array(V_Y) % 5).all()


@pytest.mark.parametrize("module,size", [(u_module, 60), (v_module, 60)])
def test_modules_are_faithful_irreducible_a5(module, size):
    mod = module()
    assert len(matrix_group_elements(mod.generators, mod.p)) == size
    assert is_irreducible(mod)


def test_reducible_detected():
    # the full permutation module of A_5 fixes the all-ones vector
    mats = [np.eye(5, dtype=int)[g.images] for g in (A5_X, A5_Y)]
    mod = VectorSpaceAction(3, 5, mats)
    assert not is_irreducible(mod)


def test_a5_words():
    for g in a5_group().elements():
        assert a5_word_to_perm(a5_word(g)) == g
    assert PermGroup([A5_X, A5_Y]).order() == 60


def test_u_coverage_numbers():
    rep = a5_u_coverage()
    assert rep.ok, rep.failures
    assert rep.sizes == [27] * 6
    assert len(rep.pairs) == 15 and set(rep.pairs.values()) == {9}
    nine = sorted(c for c, n in rep.triples.items() if n == 9)
    assert nine == sorted(NINE_TRIPLES)
    assert sum(1 for n in rep.triples.values() if n == 3) == 16
    assert set(rep.quadruples.values()) == {3}
    assert rep.union_size == 81 == rep.inclusion_exclusion


def test_v_coverage():
    rep = orbit_coverage_check(v_module(), Subspace(5, M_CAP_V, 3))
    assert rep.ok
    assert sum(o.size for o in rep.orbits) == 124
    for o in rep.orbits:
        assert Subspace(5, M_CAP_V, 3).contains(o.image)


def test_u_orbit_coverage_agrees():
    assert orbit_coverage_check(u_module(), Subspace(3, M_CAP_U, 4)).ok


def test_coverage_failure_reported():
    # a line cannot meet every orbit of the irreducible V-module
    rep = orbit_coverage_check(v_module(), Subspace(5, [(1, 1, 0)], 3))
    assert not rep.ok
    assert any(o.element is None for o in rep.orbits)


def test_subspace_basics():
    s = Subspace(7, [(1, 0, 1), (0, 1, 4)], 3)
    assert s.dimension == 2
    assert len(s.vectors()) == 49
    assert s.contains((1, 1, 5))
    assert not s.contains((0, 0, 1))
    assert len(two_subspaces(7)) == 57


@pytest.mark.parametrize("p", [5, 7, 11])
def test_omega3_preserves_form(p):
    act = omega3_action(p)
    assert act.form_preserved()
    assert len(matrix_group_elements(act.generators, p)) == p * (p * p - 1) // 2


def test_omega3_plane_type_counts():
    act = omega3_action(7)
    kinds = [subspace_type(act, s) for s in two_subspaces(7)]
    # non-degenerate conic: q+1 tangent lines, q(q+1)/2 secant, q(q-1)/2 exterior
    assert kinds.count("degenerate") == 8
    assert kinds.count("plus") == 28
    assert kinds.count("minus") == 21


def test_dihedral_plane_p7():
    act = omega3_action(7)
    h, t = dihedral_generators(act)
    assert mat_order(h, 7) == 3 and mat_order(t, 7) == 2
    assert len(matrix_group_elements([h, t], 7)) == 6
    M = plus_type_invariant_plane(act, [h, t])
    assert [tuple(b) for b in M.basis] == [(0, 1, 4), (1, 0, 1)]
    assert is_invariant(M, [h, t], 7)
    assert form_values_on_subspace(act, M) == set(range(7))
    assert orbit_coverage_check(act, M).ok


def test_p5_has_several_plus_planes():
    act = omega3_action(5)
    gens = dihedral_generators(act)
    with pytest.raises(AssertionError):
        plus_type_invariant_plane(act, gens)
    assert plus_type_invariant_plane(act, gens, unique=False).dimension == 2


def test_word_matrix_matches_product():
    mod = u_module()
    x, y = mod.generators
    w = (1, 2, -1, 2, 2)
    want = x @ y % 3 @ mat_inverse_mod(x, 3) % 3 @ y % 3 @ y % 3
    assert (mod.word_matrix(w) == want).all()


def test_as_permutations_is_an_action():
    mod = v_module()
    px, py = mod.as_permutations()
    g = PermGroup([px, py], 125)
    assert g.order() == 60
    assert px(0) == 0 and py(0) == 0
