"""Builders that turn each construction into a transitive permutation group
bundle, plus the inputs needed for the structured certificates."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from . import fp
from .modules import (
    Subspace,
    VectorSpaceAction,
    all_vectors,
    dihedral_generators,
    encode_vectors,
    omega3_action,
    plus_type_invariant_plane,
)
from .perm import (
    DEFAULT_INDEX_CAP,
    PermGroup,
    Permutation,
    coset_action,
    orbits,
)
from .residue import (
    MatrixCosetAction,
    ResidueGroupStructure,
    ResidueRingContext,
    is_mersenne_prime,
    is_prime,
    level_generators,
    prime_factors,
    psl2_dihedral_action,
    sl2_order,
    yhat_coset_action,
)

# Mathieu group M11 in its 3-transitive action on 12 points
M11_GENERATORS = (
    "(2,3,4,6,9,12,5,7,11,8,10)",
    "(1,2)(3,5,8,4)(6,10)(7,9,11,12)",
)
M11_ORDER = 7920

# Above this degree the permutation-level invariant checks are skipped and
# the matrix-level facts stand in for them.
DEEP_CHECK_DEGREE = 5000
# groups up to this order have their point stabilizer counted element by element
STAB_COUNT_LIMIT = 10**6


@dataclass
class ConstructedGroup:
    name: str
    params: dict[str, Any]
    action_generators: list[Permutation]
    degree: int
    N_gens: list[Permutation]
    Y_order: int
    E_choices: dict[str, list[Permutation]] = field(default_factory=dict)
    E_default: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)
    order_hint: int | None = None
    # live objects for structured certificates; never serialized
    extras: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    @property
    def E_gens(self) -> list[Permutation]:
        if self.E_default is None:
            return []
        return self.E_choices[self.E_default]

    @cached_property
    def group(self) -> PermGroup:
        return PermGroup(self.action_generators, self.degree, order_hint=self.order_hint)

    def order(self) -> int:
        if self.order_hint is not None and self.degree > DEEP_CHECK_DEGREE:
            return self.order_hint
        return self.group.order()

    @property
    def subject(self) -> str:
        if not self.params:
            return self.name
        return self.name + "(" + ",".join(f"{k}={v}" for k, v in sorted(self.params.items())) + ")"

    def is_transitive(self) -> bool:
        return len(orbits(self.action_generators, self.degree)) == 1

    def check_invariants(self) -> list[str]:
        """Transitivity, normality of <N_gens>, orbit-stabilizer and E's shape.

        Returns the list of failures (empty when all hold).
        """
        failures = []
        if not self.is_transitive():
            failures.append("action is not transitive")
        if self.degree > DEEP_CHECK_DEGREE:
            return failures
        g = self.group
        if g.order() <= STAB_COUNT_LIMIT:
            stab = sum(int((blk[:, 0] == 0).sum()) for blk in g.element_blocks())
        else:
            stab = g.order() // len(g.orbit(0))
        if stab * self.degree != g.order():
            failures.append("degree * stabilizer order != group order")
        if stab != self.Y_order:
            failures.append(f"stabilizer order {stab}, expected {self.Y_order}")
        if self.N_gens:
            n = PermGroup(self.N_gens, self.degree)
            for s in self.action_generators:
                for x in self.N_gens:
                    if (x ** s) not in n:
                        failures.append("<N_gens> is not normal")
                        break
        for label, gens in self.E_choices.items():
            if not is_elementary_abelian(gens, self.degree):
                failures.append(f"E={label} is not elementary abelian")
        return failures

    def to_json(self) -> dict:
        body = {
            "name": self.name,
            "params": self.params,
            "degree": self.degree,
            "Y_order": self.Y_order,
            "order_hint": self.order_hint,
            "action_generators": [g.to_json() for g in self.action_generators],
            "N_gens": [g.to_json() for g in self.N_gens],
            "E_choices": {k: [g.to_json() for g in v] for k, v in sorted(self.E_choices.items())},
            "E_default": self.E_default,
            "metadata": self.metadata,
        }
        return {**body, "hash": content_hash(body)}

    @property
    def content_hash(self) -> str:
        return self.to_json()["hash"]

    @classmethod
    def from_json(cls, data: dict, *, check_hash: bool = True) -> "ConstructedGroup":
        body = {k: v for k, v in data.items() if k != "hash"}
        if check_hash and content_hash(body) != data.get("hash"):
            raise ValueError("bundle hash does not match its contents")
        return cls(
            name=data["name"],
            params=data["params"],
            action_generators=[Permutation.from_json(g) for g in data["action_generators"]],
            degree=data["degree"],
            N_gens=[Permutation.from_json(g) for g in data["N_gens"]],
            Y_order=data["Y_order"],
            E_choices={k: [Permutation.from_json(g) for g in v] for k, v in data["E_choices"].items()},
            E_default=data["E_default"],
            metadata=data["metadata"],
            order_hint=data.get("order_hint"),
        )


def content_hash(body: dict) -> str:
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def is_elementary_abelian(gens: list[Permutation], degree: int) -> bool:
    if not gens:
        return True
    r = None
    for g in gens:
        order = math.lcm(*[len(c) for c in g.cycles()] or [1])
        if order == 1:
            continue
        if r is None:
            r = order
        if order != r or not is_prime(order):
            return False
    return all(a * b == b * a for a in gens for b in gens)


def lagrange_forced_primes(group_order: int, stabilizer_order: int) -> list[int]:
    """Primes dividing |X| but not |Y|: every element of such order is a derangement."""
    return [r for r in prime_factors(group_order) if stabilizer_order % r]


def block_action(generators: list[Permutation], normal_gens: list[Permutation],
                 degree: int) -> tuple[list[Permutation], list[list[int]]]:
    """The action on the orbits of a normal subgroup (blocks ordered by least point)."""
    blocks = orbits(normal_gens, degree)
    block_of = np.empty(degree, dtype=np.int64)
    for i, b in enumerate(blocks):
        block_of[b] = i
    reps = np.array([b[0] for b in blocks])
    perms = [Permutation(block_of[g.images[reps]]) for g in generators]
    return perms, blocks


# -- SL_2(Z/p^k Z) quotients -----------------------------------------------

def build_sl2_quotient(p: int, k: int, cap: int = DEFAULT_INDEX_CAP) -> ConstructedGroup:
    """SL_2(Z/p^k) / {+-I} acting on the cosets of Y-hat / {+-I}."""
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p = {p} is not an odd prime")
    if k < 2:
        raise ValueError("k must be at least 2")
    ctx = ResidueRingContext(p, k)
    structure = ResidueGroupStructure(ctx)
    action = yhat_coset_action(ctx, cap=cap, structure=structure)
    n_gens = [action.image(a) for a in level_generators(ctx, 1)]
    e_gens = [action.image(a) for a in level_generators(ctx, k - 1)]
    x_order = sl2_order(ctx) // 2
    y_order = structure.yhat_order_expected // 2
    mersenne = is_mersenne_prime(p) and p >= 7
    forced = lagrange_forced_primes(x_order, y_order)
    return ConstructedGroup(
        name="sl2-quotient",
        params={"p": p, "k": k},
        action_generators=action.generator_images,
        degree=action.degree,
        N_gens=n_gens,
        Y_order=y_order,
        E_choices={"bottom": e_gens},
        E_default="bottom",
        metadata={
            "claimed_degree": p ** (3 * k - 4) * (p + 1) // 2,
            "claimed_order": x_order,
            "N_order": p ** (3 * (k - 1)),
            "mersenne": mersenne,
            "expected": {"elusive": True} if mersenne
            else {"elusive": False, "non_elusive_primes": forced} if forced
            else {"elusive": None},
        },
        order_hint=x_order,
        extras={"ctx": ctx, "structure": structure, "action": action},
    )


# -- the mixed A_5 construction -----------------------------------------------

A5_MIXED_ORDER = 3**4 * 5**3 * 60


def build_a5_mixed(stabilizer_choice: str = "Y", E: str = "U",
                   max_cosets: int = fp.DEFAULT_MAX_COSETS) -> ConstructedGroup:
    if stabilizer_choice not in ("Y", "W"):
        raise ValueError("stabilizer_choice must be 'Y' or 'W'")
    if E not in ("U", "V"):
        raise ValueError("E must be 'U' or 'V'")
    pres = fp.catalog_presentation("a5-mixed")
    words = fp.catalog_subgroup(f"a5-mixed-{stabilizer_choice}", pres)
    table = fp.coset_enumerate(pres, words, max_cosets=max_cosets)
    perms = fp.action_from_table(table)
    if not fp.verify_map_satisfies(pres, perms):
        raise AssertionError("coset action violates a relator")
    names = pres.generator_names
    u = [perms[names.index(f"u{i}")] for i in range(1, 5)]
    v = [perms[names.index(f"v{i}")] for i in range(1, 4)]
    degree = table.count
    group = PermGroup(perms, degree)
    if group.order() != A5_MIXED_ORDER:
        raise AssertionError(f"image has order {group.order()}, expected {A5_MIXED_ORDER}")
    bundle = ConstructedGroup(
        name="a5-mixed",
        params={"stab": stabilizer_choice, "E": E},
        action_generators=perms,
        degree=degree,
        N_gens=u + v,
        Y_order=A5_MIXED_ORDER // degree,
        E_choices={"U": u, "V": v},
        E_default=E,
        metadata={
            "claimed_degree": {"Y": 225, "W": 450}[stabilizer_choice],
            "claimed_order": A5_MIXED_ORDER,
            "N_order": 3**4 * 5**3,
            "generator_names": list(names),
            "expected": {"elusive": True},
        },
        order_hint=A5_MIXED_ORDER,
        extras={"presentation": pres, "table": table},
    )
    bundle.__dict__["group"] = group
    return bundle


# -- the finitely presented family --------------------------------------------

@dataclass
class MersenneInputs:
    """Everything the orbit-coverage certificate needs for C_p^3 . PSL_2(p)."""

    p: int
    mersenne: bool
    presentation: fp.Presentation
    quotient: fp.Presentation
    sylow: fp.Presentation
    psi: VectorSpaceAction
    H: list[np.ndarray]
    M: Subspace
    claimed_degree: int

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "mersenne": self.mersenne,
            "presentation": self.presentation.name,
            "quotient": self.quotient.name,
            "sylow": self.sylow.name,
            "psi": [g.tolist() for g in self.psi.generators],
            "form": self.psi.form.tolist(),
            "H": [h.tolist() for h in self.H],
            "M": self.M.to_json(),
            "claimed_degree": self.claimed_degree,
        }


def build_mersenne_fp(p: int) -> MersenneInputs:
    if p < 5 or not is_prime(p):
        raise ValueError(f"p = {p} must be a prime >= 5")
    pres = fp.catalog_presentation("cp3-psl2", p=p)
    quotient = fp.catalog_presentation("psl2-quotient", p=p)
    sylow = fp.catalog_presentation("sylow-abcs", p=p)
    psi = omega3_action(p)
    H = dihedral_generators(psi)
    # for p = 5 the dihedral group is a Klein four-group fixing several planes
    M = plus_type_invariant_plane(psi, H, unique=p > 5)
    return MersenneInputs(p, is_mersenne_prime(p), pres, quotient, sylow, psi, H, M,
                          p * p * (p + 1) // 2)


# -- split control ---------------------------------------------------------

def affine_generators(action: VectorSpaceAction) -> tuple[list[Permutation], list[Permutation]]:
    """Translations by the standard basis and the linear generators, on p^d points."""
    p, d = action.p, action.d
    vecs = all_vectors(p, d)
    translations = [Permutation(encode_vectors(vecs + np.eye(d, dtype=np.int64)[i], p))
                    for i in range(d)]
    return translations, action.as_permutations()


def translation(v, p: int, d: int) -> Permutation:
    vecs = all_vectors(p, d)
    return Permutation(encode_vectors(vecs + np.asarray(v, dtype=np.int64), p))


def linear_perm(g: np.ndarray, p: int, d: int) -> Permutation:
    return Permutation(encode_vectors(all_vectors(p, d) @ g % p, p))


def build_split_control(p: int) -> ConstructedGroup:
    """The split extension C_p^3 : Omega_3(p) on the cosets of M : H."""
    if p not in (5, 7):
        raise ValueError("split control is built for p in {5, 7}")
    psi = omega3_action(p)
    trans, lin = affine_generators(psi)
    affine = PermGroup(trans + lin, p ** 3)
    H = dihedral_generators(psi)
    M = plus_type_invariant_plane(psi, H, unique=p > 5)
    y0 = [translation(v, p, 3) for v in M.basis] + [linear_perm(h, p, 3) for h in H]
    perms, degree = coset_action(affine, y0)
    x_order = affine.order()
    return ConstructedGroup(
        name="split-control",
        params={"p": p},
        action_generators=perms,
        degree=degree,
        N_gens=perms[:3],
        Y_order=x_order // degree,
        E_choices={"bottom": perms[:3]},
        E_default="bottom",
        metadata={
            "claimed_degree": p * p * (p + 1) // 2,
            "claimed_order": x_order,
            "affine_degree": p ** 3,
            "affine_transitive": affine.is_transitive(),
            "N_order": p ** 3,
            "expected": {"elusive": False, "non_elusive_primes": [p]},
        },
        order_hint=x_order,
        extras={"affine": affine, "psi": psi, "M": M, "H": H},
    )


# -- reference groups ----------------------------------------------------

def psl2_dihedral_group(p: int) -> ConstructedGroup:
    action: MatrixCosetAction = psl2_dihedral_action(p)
    order = p * (p * p - 1) // 2
    non = [p]
    return ConstructedGroup(
        name="psl2-dihedral",
        params={"p": p},
        action_generators=action.generator_images,
        degree=action.degree,
        N_gens=[],
        Y_order=p - 1,
        metadata={
            "claimed_order": order,
            "expected": {"elusive": False, "non_elusive_primes": non,
                         "elusive_primes": [r for r in prime_factors(order) if r != p]},
        },
        order_hint=order,
        extras={"action": action},
    )


def a5_coset_group(stabilizer: list[str], name: str) -> ConstructedGroup:
    """A_5 on the cosets of a subgroup given by 5-point cycle strings."""
    x, y = Permutation.parse("(1,2)(3,4)", 5), Permutation.parse("(1,3,5)", 5)
    a5 = PermGroup([x, y], 5)
    perms, degree = coset_action(a5, [Permutation.parse(s, 5) for s in stabilizer])
    return ConstructedGroup(name=name, params={}, action_generators=perms, degree=degree,
                            N_gens=[], Y_order=60 // degree, metadata={"claimed_order": 60},
                            order_hint=60)


def a5_on_15() -> ConstructedGroup:
    g = a5_coset_group(["(1,2)(3,4)", "(1,3)(2,4)"], "a5-15")
    g.metadata["expected"] = {"elusive": False, "elusive_primes": [2], "non_elusive_primes": [3, 5]}
    return g


def a5_on_30() -> ConstructedGroup:
    g = a5_coset_group(["(1,2)(3,4)"], "a5-30")
    g.metadata["expected"] = {"elusive": False, "elusive_primes": [2], "non_elusive_primes": [3, 5]}
    return g


def m11_on_12() -> ConstructedGroup:
    perms = [Permutation.parse(s, 12) for s in M11_GENERATORS]
    group = PermGroup(perms, 12)
    if group.order() != M11_ORDER:
        raise AssertionError(f"M11 generators give order {group.order()}")
    g = ConstructedGroup(name="m11-12", params={}, action_generators=perms, degree=12,
                         N_gens=[], Y_order=M11_ORDER // 12,
                         metadata={"claimed_order": M11_ORDER, "expected": {"elusive": True}},
                         order_hint=M11_ORDER)
    g.__dict__["group"] = group
    return g


def build_reference_groups() -> list[ConstructedGroup]:
    return [psl2_dihedral_group(7), psl2_dihedral_group(31), a5_on_15(), m11_on_12()]


BUILDERS = {
    "sl2-quotient": lambda params: build_sl2_quotient(params["p"], params["k"]),
    "a5-mixed": lambda params: build_a5_mixed(params.get("stab", "Y"), params.get("E", "U")),
    "split-control": lambda params: build_split_control(params["p"]),
    "psl2-dihedral": lambda params: psl2_dihedral_group(params["p"]),
    "a5-15": lambda params: a5_on_15(),
    "a5-30": lambda params: a5_on_30(),
    "m11-12": lambda params: m11_on_12(),
}


def rebuild(name: str, params: dict) -> ConstructedGroup:
    if name not in BUILDERS:
        raise KeyError(f"no builder named {name!r}")
    return BUILDERS[name](params)


# -- the two presentations of the Sylow subgroup --------------------------------

FORWARD_MAP = {"a": "x^p", "b": "x^{p*(p-1)/2}y^-1", "c": "z^-2", "s": "x"}
INVERSE_MAP = {"x": "s", "y": "a^{(p-1)/2}b^-1", "z": "c^{(p-1)/2}"}


@dataclass
class CorrespondenceReport:
    p: int
    order_a: int
    order_x: int
    forward: fp.MapCheck
    inverse: fp.MapCheck
    round_trip: bool

    @property
    def ok(self) -> bool:
        return (self.order_a == self.order_x == self.p ** 4 and bool(self.forward)
                and bool(self.inverse) and self.round_trip)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {"p": self.p, "order_abcs": self.order_a, "order_xyz": self.order_x,
                "forward": bool(self.forward), "inverse": bool(self.inverse),
                "round_trip": self.round_trip, "ok": self.ok}


def sylow_correspondence(p: int, max_cosets: int = fp.DEFAULT_MAX_COSETS) -> CorrespondenceReport:
    """Check that a -> x^p, b -> x^(p(p-1)/2) y^-1, c -> z^-2, s -> x and
    x -> s, y -> a^((p-1)/2) b^-1, z -> c^((p-1)/2) are mutually inverse
    isomorphisms between the two regular representations."""
    pa = fp.catalog_presentation("sylow-abcs", p=p)
    px = fp.catalog_presentation("sylow-xyz", p=p)
    ta = fp.coset_enumerate(pa, [], max_cosets=max_cosets)
    tx = fp.coset_enumerate(px, [], max_cosets=max_cosets)
    ga, gx = fp.action_from_table(ta), fp.action_from_table(tx)
    params = {"p": p}
    fwd_words = [px.word(FORWARD_MAP[n], params) for n in pa.generator_names]
    inv_words = [pa.word(INVERSE_MAP[n], params) for n in px.generator_names]
    fwd = [fp.perm_word(w, gx) for w in fwd_words]
    inv = [fp.perm_word(w, ga) for w in inv_words]
    forward = fp.verify_map_satisfies(pa, fwd)
    inverse = fp.verify_map_satisfies(px, inv)
    # x -> (image word of x under the inverse map) -> back through the forward map
    round_trip = all(fp.perm_word(w, fwd) == g for w, g in zip(inv_words, gx)) and \
        all(fp.perm_word(w, inv) == g for w, g in zip(fwd_words, ga))
    return CorrespondenceReport(p, PermGroup(ga).order(), PermGroup(gx).order(),
                                forward, inverse, round_trip)
