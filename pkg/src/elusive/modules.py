"""Linear actions on small F_p-spaces: the orthogonal action of PSL_2(p) on
F_p^3, the A_5-modules U = F_3^4 and V = F_5^3, invariant subspaces, and the
orbit-coverage checks that show every vector can be moved into a subspace.

Vectors are rows and matrices act on the right (``v -> v @ g``).  Dense
scans encode a vector ``(v_0, ..., v_{d-1})`` as the base-p integer with
``v_0`` most significant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .perm import Permutation, PermGroup

MAX_SPACE = 10**7


def all_vectors(p: int, d: int) -> np.ndarray:
    """Every vector of F_p^d, row i encoding the integer i."""
    codes = np.arange(p ** d, dtype=np.int64)
    out = np.empty((codes.shape[0], d), dtype=np.int64)
    for i in range(d - 1, -1, -1):
        out[:, i] = codes % p
        codes = codes // p
    return out


def encode_vectors(vecs: np.ndarray, p: int) -> np.ndarray:
    vecs = np.atleast_2d(vecs) % p
    code = np.zeros(vecs.shape[0], dtype=np.int64)
    for i in range(vecs.shape[1]):
        code = code * p + vecs[:, i]
    return code


def mat_inverse_mod(g: np.ndarray, p: int) -> np.ndarray:
    """Gauss-Jordan inverse over F_p; raises if singular."""
    d = g.shape[0]
    aug = np.concatenate([g % p, np.eye(d, dtype=np.int64)], axis=1)
    for col in range(d):
        piv = next((r for r in range(col, d) if aug[r, col] % p), None)
        if piv is None:
            raise ValueError("matrix is singular mod p")
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] * pow(int(aug[col, col]), -1, p) % p
        for r in range(d):
            if r != col and aug[r, col]:
                aug[r] = (aug[r] - aug[r, col] * aug[col]) % p
    return aug[:, d:]


def rank_mod(rows: np.ndarray, p: int) -> int:
    m = np.array(rows, dtype=np.int64) % p
    if m.size == 0:
        return 0
    rank = 0
    for col in range(m.shape[1]):
        piv = next((r for r in range(rank, m.shape[0]) if m[r, col]), None)
        if piv is None:
            continue
        m[[rank, piv]] = m[[piv, rank]]
        m[rank] = m[rank] * pow(int(m[rank, col]), -1, p) % p
        for r in range(m.shape[0]):
            if r != rank and m[r, col]:
                m[r] = (m[r] - m[r, col] * m[rank]) % p
        rank += 1
    return rank


def mat_order(g: np.ndarray, p: int, limit: int = 10**6) -> int:
    ident = np.eye(g.shape[0], dtype=np.int64)
    acc = g % p
    n = 1
    while not np.array_equal(acc, ident):
        acc = acc @ g % p
        n += 1
        if n > limit:
            raise RuntimeError("matrix order exceeds limit")
    return n


def matrix_group_elements(generators: Sequence[np.ndarray], p: int,
                          limit: int = 10**6) -> list[np.ndarray]:
    """Breadth-first closure of a matrix group over F_p."""
    d = generators[0].shape[0]
    ident = np.eye(d, dtype=np.int64)
    seen = {ident.tobytes()}
    out = [ident]
    for g in out:
        for s in generators:
            h = g @ s % p
            key = h.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(h)
                if len(out) > limit:
                    raise RuntimeError(f"matrix group larger than {limit}")
    return out


@dataclass
class Subspace:
    p: int
    basis: list[tuple[int, ...]]
    dim_ambient: int

    def __post_init__(self):
        self.basis = [tuple(int(x) % self.p for x in v) for v in self.basis]
        if self.basis and rank_mod(np.array(self.basis), self.p) != len(self.basis):
            raise ValueError("basis vectors are not independent")

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def vectors(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((1, self.dim_ambient), dtype=np.int64)
        b = np.array(self.basis, dtype=np.int64)
        coeffs = all_vectors(self.p, len(self.basis))
        return coeffs @ b % self.p

    @cached_property
    def codes(self) -> frozenset[int]:
        return frozenset(encode_vectors(self.vectors(), self.p).tolist())

    def contains(self, v: Sequence[int]) -> bool:
        return int(encode_vectors(np.array(v), self.p)[0]) in self.codes

    def image(self, g: np.ndarray) -> "Subspace":
        return Subspace(self.p, [tuple(np.array(v) @ g % self.p) for v in self.basis], self.dim_ambient)

    def to_json(self) -> dict:
        return {"p": self.p, "d": self.dim_ambient, "basis": [list(v) for v in self.basis]}


@dataclass
class VectorSpaceAction:
    """Generators of a matrix group acting on F_p^d, optionally with a
    quadratic form given by upper-triangular coefficients:
    ``Q(v) = sum_{i <= j} form[i, j] v_i v_j``."""

    p: int
    d: int
    generators: list[np.ndarray]
    form: np.ndarray | None = None
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.generators = [np.array(g, dtype=np.int64) % self.p for g in self.generators]
        for g in self.generators:
            if g.shape != (self.d, self.d):
                raise ValueError("generator has the wrong shape")
            mat_inverse_mod(g, self.p)
        if self.form is not None:
            self.form = np.triu(np.array(self.form, dtype=np.int64))

    def Q(self, vecs: np.ndarray) -> np.ndarray:
        if self.form is None:
            raise ValueError("this action carries no quadratic form")
        vecs = np.atleast_2d(vecs)
        return np.einsum("ni,ij,nj->n", vecs, self.form, vecs) % self.p

    def form_preserved(self) -> bool:
        """Exhaustive check that every generator preserves Q."""
        vecs = all_vectors(self.p, self.d)
        q0 = self.Q(vecs)
        return all(np.array_equal(q0, self.Q(vecs @ g % self.p)) for g in self.generators)

    @cached_property
    def point_maps(self) -> list[np.ndarray]:
        """Each generator as a map on encoded vectors."""
        if self.p ** self.d > MAX_SPACE:
            raise ValueError(f"space of size {self.p ** self.d} exceeds {MAX_SPACE}")
        vecs = all_vectors(self.p, self.d)
        return [encode_vectors(vecs @ g % self.p, self.p) for g in self.generators]

    def as_permutations(self) -> list[Permutation]:
        return [Permutation(m) for m in self.point_maps]

    def word_matrix(self, word: Sequence[int]) -> np.ndarray:
        """Matrix of a word in signed 1-based generator indices."""
        acc = np.eye(self.d, dtype=np.int64)
        for x in word:
            g = self.generators[abs(x) - 1]
            if x < 0:
                g = mat_inverse_mod(g, self.p)
            acc = acc @ g % self.p
        return acc


@dataclass
class OrbitWitness:
    representative: tuple[int, ...]
    size: int
    element: np.ndarray | None
    image: tuple[int, ...] | None


@dataclass
class CoverageReport:
    ok: bool
    orbits: list[OrbitWitness]

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "orbits": [
                {"representative": list(o.representative), "size": o.size,
                 "element": None if o.element is None else o.element.tolist(),
                 "image": None if o.image is None else list(o.image)}
                for o in self.orbits
            ],
        }


def _decode(code: int, p: int, d: int) -> tuple[int, ...]:
    out = []
    for _ in range(d):
        out.append(code % p)
        code //= p
    return tuple(reversed(out))


def orbit_coverage_check(action: VectorSpaceAction, target: Subspace) -> CoverageReport:
    """Does every orbit on nonzero vectors meet ``target``?

    Each orbit is explored breadth-first from its least vector; the first
    vector found inside the target yields a group element (a product of
    generators) carrying the representative into the target.
    """
    p, d = action.p, action.d
    maps = action.point_maps
    size = p ** d
    orbit_id = np.full(size, -1, dtype=np.int64)
    in_target = np.zeros(size, dtype=bool)
    in_target[list(target.codes)] = True
    witnesses = []
    ok = True
    for start in range(1, size):
        if orbit_id[start] >= 0:
            continue
        oid = len(witnesses)
        orbit_id[start] = oid
        parent = {start: (None, None)}
        queue = [start]
        hit = start if in_target[start] else None
        for v in queue:
            for gi, mp in enumerate(maps):
                w = int(mp[v])
                if orbit_id[w] < 0:
                    orbit_id[w] = oid
                    parent[w] = (v, gi)
                    queue.append(w)
                    if hit is None and in_target[w]:
                        hit = w
        if hit is None:
            ok = False
            witnesses.append(OrbitWitness(_decode(start, p, d), len(queue), None, None))
            continue
        word = []
        cur = hit
        while parent[cur][0] is not None:
            prev, gi = parent[cur]
            word.append(gi + 1)
            cur = prev
        elem = action.word_matrix(list(reversed(word)))
        rep = np.array(_decode(start, p, d))
        image = tuple(int(x) for x in rep @ elem % p)
        if not target.contains(image):
            raise AssertionError("coverage witness does not land in the target")
        witnesses.append(OrbitWitness(_decode(start, p, d), len(queue), elem, image))
    return CoverageReport(ok, witnesses)


def form_values_on_subspace(action: VectorSpaceAction, sub: Subspace) -> set[int]:
    if action.form is None:
        raise ValueError("this action carries no quadratic form")
    return set(int(x) for x in action.Q(sub.vectors()))


def two_subspaces(p: int) -> list[Subspace]:
    """All 2-subspaces of F_p^3, as kernels of normalized functionals."""
    subs = []
    for f in all_vectors(p, 3)[1:]:
        lead = next(x for x in f if x)
        if lead != 1:
            continue
        kernel = [v for v in all_vectors(p, 3)[1:] if int(v @ f % p) == 0]
        basis = [kernel[0]]
        for v in kernel[1:]:
            if rank_mod(np.array(basis + [v]), p) == 2:
                basis.append(v)
                break
        subs.append(Subspace(p, [tuple(int(x) for x in b) for b in basis], 3))
    return subs


def subspace_type(action: VectorSpaceAction, sub: Subspace) -> str:
    """plus iff the subspace holds 2(p-1) nonzero singular vectors."""
    vals = action.Q(sub.vectors())
    singular = int((vals == 0).sum()) - 1
    if singular == 2 * (action.p - 1):
        return "plus"
    if singular == 0:
        return "minus"
    return "degenerate"


def is_invariant(sub: Subspace, generators: Sequence[np.ndarray], p: int) -> bool:
    return all(sub.contains(tuple(np.array(v) @ g % p)) for g in generators for v in sub.basis)


def invariant_two_subspaces(action: VectorSpaceAction,
                            subgroup_gens: Sequence[np.ndarray]) -> list[tuple[Subspace, str]]:
    if action.d != 3 or action.form is None:
        raise ValueError("invariant_two_subspaces needs d = 3 and a quadratic form")
    return [(s, subspace_type(action, s)) for s in two_subspaces(action.p)
            if is_invariant(s, subgroup_gens, action.p)]


def is_irreducible(action: VectorSpaceAction) -> bool:
    """No proper nonzero invariant subspace: every nonzero vector's orbit spans."""
    p, d = action.p, action.d
    vecs = all_vectors(p, d)
    maps = action.point_maps
    done = np.zeros(p ** d, dtype=bool)
    for start in range(1, p ** d):
        if done[start]:
            continue
        orbit = [start]
        seen = {start}
        for v in orbit:
            for mp in maps:
                w = int(mp[v])
                if w not in seen:
                    seen.add(w)
                    orbit.append(w)
        done[orbit] = True
        if rank_mod(vecs[orbit], p) < d:
            return False
    return True


# -- the orthogonal action on F_p^3 ----------------------------------------------

def psi_matrices(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Action of S and T on N = <a, b, c> = F_p^3, read off the conjugation relators."""
    S = np.array([[1, 0, 0], [1, 1, 0], [-1, -2, 1]], dtype=np.int64) % p
    T = np.array([[0, 0, -1], [0, -1, 0], [-1, 0, 0]], dtype=np.int64) % p
    return S, T


def orthogonal_form() -> np.ndarray:
    """Q(alpha, beta, gamma) = 4 alpha gamma + beta^2."""
    return np.array([[0, 0, 4], [0, 1, 0], [0, 0, 0]], dtype=np.int64)


def omega3_action(p: int) -> VectorSpaceAction:
    S, T = psi_matrices(p)
    return VectorSpaceAction(p, 3, [S, T], orthogonal_form(), ["S", "T"])


def dihedral_generators(action: VectorSpaceAction) -> list[np.ndarray]:
    """Generators <h, t> of a dihedral subgroup of order p-1 of the action group.

    ``h`` is the first element (breadth-first order) of order (p-1)/2 and
    ``t`` the first involution outside <h> inverting it.
    """
    p = action.p
    half = (p - 1) // 2
    elems = matrix_group_elements(action.generators, p)
    h = next(g for g in elems if mat_order(g, p) == half)
    h_inv = mat_inverse_mod(h, p)
    ident = np.eye(action.d, dtype=np.int64)
    cyclic = matrix_group_elements([h], p)
    for t in elems:
        if any(np.array_equal(t, c) for c in cyclic):
            continue
        if np.array_equal(t @ t % p, ident):
            if np.array_equal(t @ h @ t % p, h_inv):
                return [h, t]
    raise AssertionError("no involution inverts the chosen torus element")


def plus_type_invariant_plane(action: VectorSpaceAction, subgroup_gens,
                              unique: bool = True) -> Subspace:
    """The invariant plus-type plane; with ``unique=False`` the first of several."""
    planes = [s for s, kind in invariant_two_subspaces(action, subgroup_gens) if kind == "plus"]
    if not planes or (unique and len(planes) != 1):
        raise AssertionError(f"expected one invariant plus-type plane, found {len(planes)}")
    return planes[0]


# -- the A_5 modules ---------------------------------------------------------

# Rows are the images of the basis vectors: u_1^x = u_2 gives row 0 = e_2, etc.
U_X = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
U_Y = [[-1, 0, 1, 0], [-1, 1, 0, 0], [-1, 0, 0, 0], [-1, 0, 0, 1]]
V_X = [[0, 1, 0], [1, 0, 0], [-1, -1, -1]]
V_Y = [[-1, 0, 1], [-1, 1, 0], [-1, 0, 0]]

A5_X = Permutation.parse("(1,2)(3,4)", 5)
A5_Y = Permutation.parse("(1,3,5)", 5)


def u_module() -> VectorSpaceAction:
    return VectorSpaceAction(3, 4, [np.array(U_X), np.array(U_Y)], None, ["x", "y"])


def v_module() -> VectorSpaceAction:
    return VectorSpaceAction(5, 3, [np.array(V_X), np.array(V_Y)], None, ["x", "y"])


def permutation_module_matrix(perm: Permutation, p: int, dim: int) -> np.ndarray:
    """Matrix of ``perm`` on the deleted permutation module with basis e_i - e_5.

    For dim 4 this is U over F_3; for dim 3 (p = 5) the vector e_4 - e_5 is
    rewritten through the relation sum_i (e_i - e_5) = 0.
    """
    rows = []
    for i in range(dim):
        a, b = perm(i), perm(4)
        row = np.zeros(5, dtype=np.int64)
        row[a] += 1
        row[b] -= 1
        rows.append(row[:4])
    m = np.array(rows) % p
    if dim == 4:
        return m
    # fold coordinate 4 (e_4 - e_5) into -(v_1 + v_2 + v_3)
    folded = m[:, :3] - m[:, 3:4]
    return folded % p


def a5_word(target: Permutation) -> tuple[int, ...]:
    """Shortest word in x = (1,2)(3,4), y = (1,3,5) for ``target`` (breadth-first)."""
    gens = [(1, A5_X), (2, A5_Y)]
    ident = Permutation.identity(5)
    words = {ident: ()}
    queue = [ident]
    for g in queue:
        if g == target:
            return words[g]
        for idx, s in gens:
            h = g * s
            if h not in words:
                words[h] = words[g] + (idx,)
                queue.append(h)
    raise ValueError(f"{target.to_cycles()} is not in A5")


M_CAP_U = [(1, 1, 0, 0), (0, 1, -1, 0), (0, 0, 1, 1)]
M_CAP_V = [(1, 1, 0), (0, 1, -1)]
COVERAGE_CONJUGATORS = ["()", "(1,4,5)", "(2,4,5)", "(3,4,5)", "(4,2,5)", "(4,3,5)"]
NINE_TRIPLES = [(1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]


@dataclass
class UCoverageReport:
    ok: bool
    sizes: list[int]
    pairs: dict[tuple[int, ...], int]
    triples: dict[tuple[int, ...], int]
    quadruples: dict[tuple[int, ...], int]
    union_size: int
    inclusion_exclusion: int
    failures: list[str]

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        def fmt(d):
            return {",".join(map(str, k)): v for k, v in d.items()}
        return {"ok": self.ok, "sizes": self.sizes, "pairs": fmt(self.pairs),
                "triples": fmt(self.triples), "quadruples": fmt(self.quadruples),
                "union": self.union_size, "inclusion_exclusion": self.inclusion_exclusion,
                "failures": self.failures}


def u_coverage_subgroups() -> list[Subspace]:
    """U_1..U_6: images of M cap U under the listed elements of A_5."""
    mod = u_module()
    base = Subspace(3, M_CAP_U, 4)
    out = []
    for text in COVERAGE_CONJUGATORS:
        g = Permutation.parse(text, 5)
        mat = mod.word_matrix(a5_word(g))
        if not np.array_equal(mat, permutation_module_matrix(g, 3, 4)):
            raise AssertionError(f"word matrix for {text} disagrees with the permutation module")
        out.append(base.image(mat))
    return out


def a5_u_coverage() -> UCoverageReport:
    subs = u_coverage_subgroups()
    sets = [s.codes for s in subs]
    failures = []
    sizes = [len(s) for s in sets]
    failures += [f"|U_{i + 1}| = {n}, expected 27" for i, n in enumerate(sizes) if n != 27]

    def inter(idx):
        acc = sets[idx[0] - 1]
        for i in idx[1:]:
            acc = acc & sets[i - 1]
        return len(acc)

    pairs = {c: inter(c) for c in itertools.combinations(range(1, 7), 2)}
    triples = {c: inter(c) for c in itertools.combinations(range(1, 7), 3)}
    quads = {c: inter(c) for c in itertools.combinations(range(1, 7), 4)}
    failures += [f"|U_{c}| pair order {n}" for c, n in pairs.items() if n != 9]
    for c, n in triples.items():
        want = 9 if c in NINE_TRIPLES else 3
        if n != want:
            failures.append(f"triple {c} has order {n}, expected {want}")
    failures += [f"quadruple {c} has order {n}" for c, n in quads.items() if n != 3]
    union = len(frozenset().union(*sets))
    incl_excl = 0
    for r in range(1, 7):
        sign = (-1) ** (r + 1)
        incl_excl += sign * sum(inter(c) for c in itertools.combinations(range(1, 7), r))
    if union != 81:
        failures.append(f"union has order {union}, expected 81")
    if incl_excl != union:
        failures.append(f"inclusion-exclusion gives {incl_excl}, union is {union}")
    return UCoverageReport(not failures, sizes, pairs, triples, quads, union, incl_excl, failures)


def a5_word_to_perm(word: Sequence[int]) -> Permutation:
    acc = Permutation.identity(5)
    for x in word:
        g = A5_X if abs(x) == 1 else A5_Y
        acc = acc * (g if x > 0 else ~g)
    return acc


def a5_group() -> PermGroup:
    return PermGroup([A5_X, A5_Y])
