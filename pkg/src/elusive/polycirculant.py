"""Orbitals, the stabilizer conditions on an elementary abelian subgroup E,
and prime-order derangements in the 2-closure built class by class."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .perm import (
    CapExceeded,
    PermGroup,
    Permutation,
    element_order,
    fixed_points,
    orbits,
)

DEFAULT_PAIR_CAP = 10**8
DEFAULT_E_CAP = 10**5
DEFAULT_WITNESS_BUDGET = 10**4


@dataclass
class OrbitalPartition:
    degree: int
    ids: np.ndarray  # ids[a, b] is the orbital of the pair (a, b)
    rank: int

    def id_of(self, a: int, b: int) -> int:
        return int(self.ids[a, b])

    def diagonal_ids(self) -> set[int]:
        return set(np.diag(self.ids).tolist())


def orbitals(generators: Sequence[Permutation], degree: int,
             cap: int = DEFAULT_PAIR_CAP) -> OrbitalPartition:
    """Orbits of the group on ordered pairs; ids are numbered by least pair."""
    n = degree
    if n * n > cap:
        raise CapExceeded("ordered pairs for orbitals", cap, n * n)
    pairs = np.arange(n * n, dtype=np.int64)
    a, b = pairs // n, pairs % n
    src, dst = [pairs], [pairs]
    for g in generators:
        img = g.images.astype(np.int64)
        src.append(pairs)
        dst.append(img[a] * n + img[b])
    src, dst = np.concatenate(src), np.concatenate(dst)
    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(n * n, n * n))
    count, labels = connected_components(graph, directed=True, connection="weak")
    # relabel so that ids increase with the least pair of each orbital
    first = np.full(count, n * n, dtype=np.int64)
    np.minimum.at(first, labels, pairs)
    order = np.argsort(first)
    relabel = np.empty(count, dtype=np.int64)
    relabel[order] = np.arange(count)
    return OrbitalPartition(n, relabel[labels].reshape(n, n), count)


def closure_violation(sigma: Permutation, partition: OrbitalPartition) -> tuple[int, int] | None:
    """The least pair whose orbital moves under sigma, or None."""
    if sigma.degree != partition.degree:
        raise ValueError("degree mismatch")
    s = sigma.images
    moved = partition.ids[np.ix_(s, s)] != partition.ids
    if not moved.any():
        return None
    a, b = np.argwhere(moved)[0]
    return int(a), int(b)


def verify_in_closure(sigma: Permutation, partition: OrbitalPartition) -> bool:
    """True iff sigma maps every orbital to itself, i.e. lies in the 2-closure."""
    return closure_violation(sigma, partition) is None


def point_stabilizer_generators(group: PermGroup, point: int = 0) -> list[Permutation]:
    """Schreier generators of the stabilizer of ``point``."""
    n = group.degree
    gens = [g.images for g in group.generators]
    trans = {point: np.arange(n, dtype=np.int32)}
    queue = [point]
    for beta in queue:
        for s in gens:
            gamma = int(s[beta])
            if gamma not in trans:
                trans[gamma] = s[trans[beta]]
                queue.append(gamma)
    out = {}
    for beta in queue:
        u = trans[beta]
        for s in gens:
            us = s[u]
            v = trans[int(s[beta])]
            inv = np.empty_like(v)
            inv[v] = np.arange(n, dtype=v.dtype)
            h = inv[us]
            if not np.array_equal(h, np.arange(n)):
                out.setdefault(h.tobytes(), h)
    return [Permutation(h) for h in out.values()]


def suborbit_count(group: PermGroup) -> int:
    """Number of orbits of the stabilizer of point 0 (the rank when transitive)."""
    stab = point_stabilizer_generators(group, 0)
    return len(orbits(stab, group.degree))


# -- conditions on E ---------------------------------------------------------

@dataclass
class StabilizerData:
    elements: np.ndarray           # |E| x degree
    fix: np.ndarray                # |E| x degree, True where element fixes point
    point_class: np.ndarray        # class index per point (equal stabilizers)
    class_masks: np.ndarray        # classes x |E|


def _stabilizer_data(E_gens: Sequence[Permutation], degree: int, cap: int) -> StabilizerData:
    group = PermGroup(E_gens, degree)
    if group.order() > cap:
        raise CapExceeded("order of E", cap, group.order())
    elems = group.tail_elements(0)
    fix = elems == np.arange(degree)
    masks, point_class = np.unique(fix.T, axis=0, return_inverse=True)
    # number classes by least point
    firsts = np.array([np.flatnonzero(point_class == c)[0] for c in range(masks.shape[0])])
    order = np.argsort(firsts)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    return StabilizerData(elems, fix, relabel[point_class.ravel()], masks[order])


@dataclass
class ConditionReport:
    ok: bool
    group_order: int
    stabilizer_orders: list[int]
    orbit_sizes: list[int]
    classes: int
    normal: bool
    equal_orders: bool
    pairwise: bool
    failures: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return dict(self.__dict__)


def check_stabilizer_conditions(E_gens: Sequence[Permutation], degree: int,
                                cap: int = DEFAULT_E_CAP) -> ConditionReport:
    """(a) each point stabilizer E_v is normal in E; (b) all E_v have the same
    order and any two are equal or their product is E."""
    data = _stabilizer_data(E_gens, degree, cap)
    elems, masks = data.elements, data.class_masks
    order = elems.shape[0]
    index = {row.tobytes(): i for i, row in enumerate(elems)}
    failures = []

    normal = True
    for mask in masks:
        members = elems[mask]
        for g in E_gens:
            gi = np.empty_like(g.images)
            gi[g.images] = np.arange(degree, dtype=gi.dtype)
            conj = g.images[members[:, gi]]
            if not all(mask[index[row.tobytes()]] for row in conj):
                normal = False
                failures.append("a point stabilizer is not normal")
                break
        if not normal:
            break

    sizes = masks.sum(axis=1)
    equal_orders = bool((sizes == sizes[0]).all())
    if not equal_orders:
        failures.append(f"stabilizer orders differ: {sorted(set(sizes.tolist()))}")
    pairwise = True
    for i, j in itertools.combinations(range(masks.shape[0]), 2):
        inter = int((masks[i] & masks[j]).sum())
        if int(sizes[i]) * int(sizes[j]) // inter != order:
            pairwise = False
            failures.append(f"stabilizer classes {i} and {j}: product is not E")
            break
    orbit_sizes = sorted({len(o) for o in orbits(E_gens, degree)})
    return ConditionReport(not failures, order, sorted(set(sizes.tolist())), orbit_sizes,
                           masks.shape[0], normal, equal_orders, pairwise, failures)


# -- the witness -------------------------------------------------------------

@dataclass
class DissectionWitness:
    sigma: Permutation
    prime: int
    classes: list[tuple[int, np.ndarray]]   # (least point of the class, element of E)
    checks: dict

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "sigma": self.sigma.to_json(),
            "classes": [{"representative": rep, "element": [int(x) for x in e]}
                        for rep, e in self.classes],
            "checks": self.checks,
        }


class WitnessNotFound(RuntimeError):
    pass


def dissection_witness(E_gens: Sequence[Permutation], degree: int, *,
                       budget: int = DEFAULT_WITNESS_BUDGET,
                       cap: int = DEFAULT_E_CAP) -> DissectionWitness:
    """A fixed-point-free permutation of prime order preserving every E-orbital.

    Points are grouped by equal stabilizers.  On each class sigma acts as an
    element of E outside the common stabilizer; choices are tried in
    lexicographic order of element indices until the orbital check passes.
    """
    report = check_stabilizer_conditions(E_gens, degree, cap)
    if not report:
        raise WitnessNotFound(f"stabilizer conditions fail: {report.failures}")
    data = _stabilizer_data(E_gens, degree, cap)
    elems = data.elements
    orders = {element_order(Permutation(row)) for row in elems[1:]}
    if len(orders) != 1:
        raise WitnessNotFound("E is not of prime exponent")
    r = orders.pop()
    partition = orbitals(E_gens, degree)
    nclass = data.class_masks.shape[0]
    members = [np.flatnonzero(data.point_class == c) for c in range(nclass)]
    candidates = [np.flatnonzero(~data.class_masks[c]) for c in range(nclass)]
    tried = 0
    for choice in itertools.product(*candidates):
        tried += 1
        if tried > budget:
            break
        images = np.empty(degree, dtype=np.int32)
        for c, e in enumerate(choice):
            pts = members[c]
            images[pts] = elems[e][pts]
        if np.unique(images).size != degree:
            continue
        sigma = Permutation(images)
        if fixed_points(sigma) or element_order(sigma) != r:
            continue
        if not verify_in_closure(sigma, partition):
            continue
        classes = [(int(members[c][0]), elems[e]) for c, e in enumerate(choice)]
        checks = {
            "order": r,
            "fixed_points": 0,
            "preserves_E_orbitals": True,
            "E_rank": partition.rank,
            "classes": nclass,
            "combinations_tried": tried,
        }
        return DissectionWitness(sigma, r, classes, checks)
    raise WitnessNotFound(f"no valid class assignment within {budget} combinations")


def audit_witness(witness: DissectionWitness, X_gens: Sequence[Permutation], degree: int,
                  X_group: PermGroup | None = None) -> dict:
    """Independent checks of a witness against the whole group X."""
    sigma = witness.sigma
    x_part = orbitals(X_gens, degree)
    group = X_group or PermGroup(X_gens, degree)
    checks = {
        "order": element_order(sigma),
        "fixed_points": len(fixed_points(sigma)),
        "preserves_X_orbitals": verify_in_closure(sigma, x_part),
        "in_X": sigma in group,
        "X_rank": x_part.rank,
    }
    checks["ok"] = (checks["order"] == witness.prime and checks["fixed_points"] == 0
                    and checks["preserves_X_orbitals"] and not checks["in_X"])
    return checks
