import json

import numpy as np
import pytest

from elusive import fp
from elusive.constructions import (
    a5_on_15,
    build_a5_mixed,
    build_mersenne_fp,
    build_sl2_quotient,
    build_split_control,
    m11_on_12,
    psl2_dihedral_group,
)
from elusive.perm import CapExceeded, Permutation
from elusive.verify import (
    ElusivenessCertificate,
    PrimeVerdict,
    certify,
    certify_mersenne_fp,
    expectation_diff,
    quotient_transfer,
    regular_multiply,
    regular_power,
    replay_witness,
    run_scan,
    scan_bruteforce,
    sylow_outside_check,
    _tree_paths,
)


def verdicts(cert):
    return {r: v.elusive for r, v in cert.per_prime.items()}


def test_a5_on_15():
    cert = scan_bruteforce(a5_on_15())
    assert verdicts(cert) == {2: True, 3: False, 5: False}
    assert cert.elusive is False
    for r in (3, 5):
        assert replay_witness(a5_on_15(), cert.per_prime[r])


def test_m11_on_12():
    cert = scan_bruteforce(m11_on_12())
    assert cert.elusive is True
    assert set(cert.derangement_orders) <= {4, 8}
    assert cert.stages[0].detail["elements"] == 7920


def test_psl2_dihedral_28():
    cert = scan_bruteforce(psl2_dihedral_group(7))
    assert verdicts(cert) == {2: True, 3: True, 7: False}
    assert replay_witness(psl2_dihedral_group(7), cert.per_prime[7])


def test_sl2_72_structured_and_brute_force_agree():
    g = build_sl2_quotient(7, 2)
    cert = certify(g)
    assert cert.elusive is True
    assert all(v.method == "structured" for v in cert.per_prime.values())
    names = [s.name for s in cert.stages]
    assert "brute-force cross-check" in names
    brute = scan_bruteforce(g)
    assert brute.elusive is True
    assert brute.stages[0].detail["elements"] == 57624


def test_sl2_52_not_3_elusive():
    g = build_sl2_quotient(5, 2)
    cert = certify(g)
    assert cert.elusive_for(3) is False
    assert replay_witness(g, cert.per_prime[3])
    assert expectation_diff(cert, g.metadata["expected"]) == []


def test_split_control_not_p_elusive():
    g = build_split_control(7)
    cert = certify(g)
    assert cert.elusive_for(7) is False
    w = Permutation(cert.per_prime[7].witness)
    assert replay_witness(g, cert.per_prime[7])
    assert w in g.group


def test_replay_rejects_bad_witness():
    g = build_split_control(7)
    assert not replay_witness(g, PrimeVerdict(7, False, "witness", "", list(range(196))))
    assert not replay_witness(g, PrimeVerdict(7, False, "witness", "", None))


def test_a5_mixed_elusive():
    for stab in ("Y", "W"):
        g = build_a5_mixed(stab)
        cert = certify(g)
        assert cert.elusive is True, cert.to_json()
        assert cert.group_order == 607500


def test_mersenne_fp_p7():
    cert = certify_mersenne_fp(build_mersenne_fp(7))
    assert cert.elusive is True
    assert cert.stage("non-split").ok
    sylow = cert.stage("sylow outside N").detail
    assert sylow["order_p_inside"] == 342 and sylow["order_p_outside"] == 0


def test_mersenne_fp_p5_fails_at_quotient_stage():
    cert = certify_mersenne_fp(build_mersenne_fp(5))
    assert cert.failed_stage == "quotient p'-elusive"
    assert cert.elusive is None


def test_sylow_p3_has_order_3_elements_outside():
    pres = fp.catalog_presentation("sylow-abcs", p=3)
    for realization in ("coset", "matrix"):
        rep = sylow_outside_check(pres, ["a", "b", "c"], 3, realization=realization)
        assert not rep.ok
        assert rep.group_order == 81
        assert (rep.order_p_inside, rep.order_p_outside) == (26, 18)


@pytest.mark.parametrize("p", [7, 11])
def test_sylow_realizations_agree(p):
    pres = fp.catalog_presentation("sylow-abcs", p=p)
    a = sylow_outside_check(pres, ["a", "b", "c"], p, realization="coset")
    b = sylow_outside_check(pres, ["a", "b", "c"], p, realization="matrix")
    assert a.ok and b.ok
    assert a.order_p_inside == b.order_p_inside == p ** 3 - 1


def test_regular_representation_arithmetic():
    pres = fp.catalog_presentation("a5")
    table = fp.coset_enumerate(pres, [])
    cols, paths = _tree_paths(table)
    perms = fp.action_from_table(table)
    # element i is the word along the tree path from coset 0 to coset i
    elems = {}
    for i in range(60):
        word = [c // 2 + 1 if c % 2 == 0 else -(c // 2 + 1) for c in paths[i] if c >= 0]
        elems[i] = fp.perm_word(word, perms)
    assert all(elems[i](0) == i for i in range(60))
    left = np.arange(60)
    for j in (5, 17, 42):
        prod = regular_multiply(cols, paths, left, np.full(60, j))
        for i in range(60):
            assert prod[i] == (elems[i] * elems[j])(0)
    squares = regular_power(cols, paths, 2)
    assert all(squares[i] == (elems[i] ** 2)(0) for i in range(60))


def test_quotient_transfer_rules():
    q = ElusivenessCertificate("q", 28, 168)
    q.add(PrimeVerdict(2, True, "brute-force"))
    q.add(PrimeVerdict(3, True, "brute-force"))
    q.add(PrimeVerdict(7, False, "witness"))
    granted = quotient_transfer(q, 343, True)
    assert [v.prime for v in granted] == [2, 3]
    assert [v.prime for v in quotient_transfer(q, {2: 1}, True)] == [3]
    with pytest.raises(ValueError):
        quotient_transfer(q, 343, False)


def test_scan_is_independent_of_worker_count():
    g = psl2_dihedral_group(7)
    one = run_scan(g.group, workers=1)
    two = run_scan(g.group, workers=2)
    assert one.checked == two.checked == 168
    assert one.derangement_orders == two.derangement_orders
    assert {r: w[0] for r, w in one.witnesses.items()} == {r: w[0] for r, w in two.witnesses.items()}


def test_scan_cap():
    with pytest.raises(CapExceeded):
        scan_bruteforce(m11_on_12(), cap=1000)


def test_certificate_json_is_deterministic():
    a = certify(build_sl2_quotient(5, 2)).dumps()
    b = certify(build_sl2_quotient(5, 2)).dumps()
    assert a == b
    data = json.loads(a)
    assert data["overall"] == "NOT elusive"


def test_expectation_diff_reports_mismatch():
    cert = scan_bruteforce(a5_on_15())
    assert expectation_diff(cert, {"elusive": True})
    assert expectation_diff(cert, {"elusive_primes": [3]})
    assert expectation_diff(cert, a5_on_15().metadata["expected"]) == []


def test_mersenne_fp_p31_uses_matrix_realization():
    cert = certify_mersenne_fp(build_mersenne_fp(31))
    assert cert.elusive is True
    sylow = cert.stage("sylow outside N").detail
    assert sylow["realization"] == "matrix"
    assert (sylow["order_p_inside"], sylow["order_p_outside"]) == (31 ** 3 - 1, 0)
