import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elusive import fp
from elusive.perm import PermGroup, Permutation


def test_parse_basic_words():
    names = ["a", "b"]
    assert fp.parse_word("a^3", names) == (1, 1, 1)
    assert fp.parse_word("a^-1b", names) == (-1, 2)
    assert fp.parse_word("[a,b]", names) == (-1, -2, 1, 2)
    assert fp.parse_word("a^b", names) == (-2, 1, 2)
    assert fp.parse_word("1", names) == ()


def test_parameter_exponents():
    names = ["s", "t"]
    assert fp.parse_word("s^{(p+1)/2}", names, {"p": 7}) == (1, 1, 1, 1)
    assert fp.parse_word("s^{p*(p-1)/2}", names, {"p": 3}) == (1,) * 3
    with pytest.raises(ValueError):
        fp.parse_word("s^{q}", names, {"p": 7})
    with pytest.raises(ValueError):
        fp.parse_word("s^{p/2}", names, {"p": 7})


def test_equalities_become_relators():
    rels = fp.parse_relations("a^2=b^3=1", ["a", "b"])
    assert rels == [(1, 1), (2, 2, 2)]
    rels = fp.parse_relations("a^b=a", ["a", "b"])
    assert fp.free_reduce(rels[0]) == (-2, 1, 2, -1)


def test_malformed_text_raises():
    with pytest.raises(ValueError):
        fp.parse_word("a^", ["a"])
    with pytest.raises(ValueError):
        fp.parse_word("c", ["a", "b"])
    with pytest.raises(ValueError):
        fp.parse_word("[a,b", ["a", "b"])


def test_format_round_trip():
    names = ["x", "y"]
    w = (1, 1, -2, 1)
    assert fp.parse_word(fp.format_word(w, names), names) == w


@pytest.mark.parametrize("name,params,subgroup,count", [
    ("a5", {}, [], 60),
    ("psl2-quotient", {"p": 7}, [], 168),
    ("psl2-quotient", {"p": 5}, [], 60),
    ("sylow-abcs", {"p": 3}, [], 81),
    ("sylow-xyz", {"p": 3}, [], 81),
    ("sylow-abcs", {"p": 5}, [], 625),
    ("cp3-psl2", {"p": 7}, ["a", "b", "c"], 168),
])
def test_catalog_enumeration_counts(name, params, subgroup, count):
    pres = fp.catalog_presentation(name, **params)
    words = [pres.word(w, params) for w in subgroup]
    table = fp.coset_enumerate(pres, words)
    assert table.count == count


def test_cp3_psl2_full_order():
    pres = fp.catalog_presentation("cp3-psl2", p=7)
    table = fp.coset_enumerate(pres, [pres.word("s")])
    assert table.count == 57624 // 49
    perms = fp.action_from_table(table)
    assert fp.verify_map_satisfies(pres, perms)
    assert PermGroup(perms, table.count).order() == 57624


def test_action_from_table_satisfies_relators():
    pres = fp.catalog_presentation("a5")
    table = fp.coset_enumerate(pres, [pres.word("x")])
    perms = fp.action_from_table(table)
    assert table.count == 30
    assert fp.verify_map_satisfies(pres, perms)
    assert PermGroup(perms, 30).order() == 60


def test_map_check_reports_failing_relator():
    pres = fp.catalog_presentation("a5")
    bad = [Permutation.parse("(1,2)", 5), Permutation.parse("(1,2,3,4,5)", 5)]
    check = fp.verify_map_satisfies(pres, bad)
    assert not check
    assert check.failing_relator is not None


def test_coset_limit_raises():
    pres = fp.catalog_presentation("psl2-quotient", p=7)
    with pytest.raises(fp.CosetLimitExceeded) as err:
        fp.coset_enumerate(pres, [], max_cosets=50)
    assert err.value.limit == 50


def test_missing_parameter_and_unknown_name():
    with pytest.raises(ValueError):
        fp.catalog_presentation("sylow-abcs")
    with pytest.raises(KeyError):
        fp.catalog_presentation("nonexistent")


def test_table_is_deterministic():
    pres = fp.catalog_presentation("a5-mixed")
    words = fp.catalog_subgroup("a5-mixed-Y", pres)
    t1 = fp.coset_enumerate(pres, words)
    t2 = fp.coset_enumerate(pres, words)
    assert t1.rows == t2.rows
    assert t1.count == 225


def _rotate(w, k):
    k %= max(len(w), 1)
    return tuple(w[k:]) + tuple(w[:k])


REORDER_CASES = [
    ("a5", {}, [], 60),
    ("psl2-quotient", {"p": 7}, [], 168),
    ("sylow-xyz", {"p": 3}, [], 81),
    ("sylow-abcs", {"p": 3}, [], 81),
    ("cp3-psl2", {"p": 7}, ["a", "b", "c"], 168),
    ("a5-mixed", {}, "a5-mixed-W", 450),
]


@pytest.mark.parametrize("name,params,subgroup,count", REORDER_CASES)
@given(data=st.data())
@settings(max_examples=5, deadline=None)
def test_count_invariant_under_relator_reordering(name, params, subgroup, count, data):
    pres = fp.catalog_presentation(name, **params)
    if isinstance(subgroup, str):
        words = fp.catalog_subgroup(subgroup, pres)
    else:
        words = [pres.word(w, params) for w in subgroup]
    order = data.draw(st.permutations(range(len(pres.relators))))
    shifts = data.draw(st.lists(st.integers(0, 50), min_size=len(order), max_size=len(order)))
    flips = data.draw(st.lists(st.booleans(), min_size=len(order), max_size=len(order)))
    relators = []
    for i, k, f in zip(order, shifts, flips):
        r = _rotate(pres.relators[i], k)
        relators.append(fp.word_inverse(r) if f else r)
    shuffled = fp.Presentation(list(pres.generator_names), relators)
    assert fp.coset_enumerate(shuffled, words).count == count


@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=20))
def test_free_reduce_and_inverse(w):
    r = fp.free_reduce(w)
    assert all(r[i] != -r[i + 1] for i in range(len(r) - 1))
    assert fp.free_reduce(list(w) + list(fp.word_inverse(w))) == ()
