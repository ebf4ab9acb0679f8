"""2x2 matrices over Z/p^kZ, the subgroups P, Q, Y-hat, the congruence
filtration N_1 > ... > N_k = 1, and coset actions of SL_2(Z/p^kZ).

Matrices are stored as ``(a, b, c, d)`` for ``[[a, b], [c, d]]``.  Bulk work
uses ``(n, 4)`` int64 arrays; products are ordinary matrix products, and the
group acts on row vectors from the right, matching the permutation
convention in :mod:`elusive.perm`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .perm import CapExceeded, DEFAULT_INDEX_CAP, Permutation


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def is_mersenne_prime(n: int) -> bool:
    return is_prime(n) and (n + 1) & n == 0


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(p: int) -> int:
    """Smallest g >= 2 generating (Z/pZ)^x."""
    phi = p - 1
    for g in range(2, p + 1):
        if all(pow(g, phi // q, p) != 1 for q in prime_factors(phi)):
            return g
    raise ValueError(f"no primitive root mod {p}")


@dataclass(frozen=True)
class ResidueRingContext:
    p: int
    k: int

    def __post_init__(self):
        if not (self.p > 2 and is_prime(self.p)):
            raise ValueError(f"p must be an odd prime, got {self.p}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    @cached_property
    def w(self) -> int:
        """A unit of order exactly p-1: a primitive root raised to p^(k-1)."""
        return pow(primitive_root(self.p), self.p ** (self.k - 1), self.modulus)

    def unit_inverse(self, x: int) -> int:
        return pow(x % self.modulus, -1, self.modulus)


@dataclass(frozen=True)
class RMatrix:
    a: int
    b: int
    c: int
    d: int
    modulus: int

    def __post_init__(self):
        m = self.modulus
        for name in "abcd":
            object.__setattr__(self, name, getattr(self, name) % m)

    @classmethod
    def identity(cls, modulus: int) -> "RMatrix":
        return cls(1, 0, 0, 1, modulus)

    @classmethod
    def from_array(cls, row, modulus: int) -> "RMatrix":
        return cls(int(row[0]), int(row[1]), int(row[2]), int(row[3]), modulus)

    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.modulus

    def trace(self) -> int:
        return (self.a + self.d) % self.modulus

    def __mul__(self, o: "RMatrix") -> "RMatrix":
        if o.modulus != self.modulus:
            raise ValueError("modulus mismatch")
        return RMatrix(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                       self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d, self.modulus)

    def inverse(self) -> "RMatrix":
        det = self.det()
        di = pow(det, -1, self.modulus)
        return RMatrix(self.d * di, -self.b * di, -self.c * di, self.a * di, self.modulus)

    def __pow__(self, e: int) -> "RMatrix":
        base = self if e >= 0 else self.inverse()
        e = abs(e)
        acc = RMatrix.identity(self.modulus)
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def conj(self, g: "RMatrix") -> "RMatrix":
        """``g^-1 self g``."""
        return g.inverse() * self * g

    def neg(self) -> "RMatrix":
        return RMatrix(-self.a, -self.b, -self.c, -self.d, self.modulus)

    def is_identity(self) -> bool:
        return self.entries() == (1, 0, 0, 1)

    def projective(self) -> "RMatrix":
        """Representative of {A, -A} whose first nonzero entry is in 1..(m-1)/2."""
        half = (self.modulus - 1) // 2
        for x in self.entries():
            if x:
                return self if x <= half else self.neg()
        return self

    def order(self, limit: int | None = None) -> int:
        ident = RMatrix.identity(self.modulus)
        acc = self
        n = 1
        while acc != ident:
            acc = acc * self
            n += 1
            if limit is not None and n > limit:
                raise RuntimeError("order exceeds limit")
        return n

    def to_json(self) -> list[int]:
        return list(self.entries())

    def __repr__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]] mod {self.modulus}"


# -- bulk arithmetic ---------------------------------------------------------

def mat_mul(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """Row-wise (broadcasting) product of (..., 4) arrays mod m."""
    a = (x[..., 0] * y[..., 0] + x[..., 1] * y[..., 2]) % m
    b = (x[..., 0] * y[..., 1] + x[..., 1] * y[..., 3]) % m
    c = (x[..., 2] * y[..., 0] + x[..., 3] * y[..., 2]) % m
    d = (x[..., 2] * y[..., 1] + x[..., 3] * y[..., 3]) % m
    return np.stack([a, b, c, d], axis=-1)


def encode(x: np.ndarray, m: int) -> np.ndarray:
    x = x.astype(np.int64)
    return ((x[..., 0] * m + x[..., 1]) * m + x[..., 2]) * m + x[..., 3]


def decode(keys: np.ndarray, m: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    d = keys % m
    keys = keys // m
    c = keys % m
    keys = keys // m
    return np.stack([keys // m, keys % m, c, d], axis=-1)


def mat_power(x: np.ndarray, e: int, m: int) -> np.ndarray:
    acc = np.zeros_like(x)
    acc[..., 0] = 1
    acc[..., 3] = 1
    base = x
    while e:
        if e & 1:
            acc = mat_mul(acc, base, m)
        base = mat_mul(base, base, m)
        e >>= 1
    return acc


def closure(generators: list[np.ndarray], m: int, limit: int = 10**6) -> np.ndarray:
    """All elements of the matrix group generated, in breadth-first order."""
    ident = np.array([1, 0, 0, 1], dtype=np.int64)
    gens = np.array(generators, dtype=np.int64).reshape(-1, 4)
    seen = {int(encode(ident, m))}
    elems = [ident]
    frontier = ident[None, :]
    while frontier.shape[0]:
        prods = mat_mul(frontier[:, None, :], gens[None, :, :], m).reshape(-1, 4)
        new = []
        for row, key in zip(prods, encode(prods, m).tolist()):
            if key not in seen:
                seen.add(key)
                new.append(row)
        if len(seen) > limit:
            raise CapExceeded("matrix group closure", limit, len(seen))
        elems.extend(new)
        frontier = np.array(new, dtype=np.int64).reshape(-1, 4)
    return np.array(elems, dtype=np.int64)


# -- SL_2 bookkeeping ------------------------------------------------------

def sl2_order(ctx: ResidueRingContext) -> int:
    p, k = ctx.p, ctx.k
    return p ** (3 * k - 2) * (p * p - 1)


def sl2_order_bruteforce(ctx: ResidueRingContext) -> int:
    """Count det-1 matrices by scanning all of (Z/p^kZ)^4; small moduli only."""
    m = ctx.modulus
    if m ** 4 > 10**8:
        raise CapExceeded("brute-force SL2 count", 10**8, m ** 4)
    r = np.arange(m, dtype=np.int64)
    ad = (r[:, None] * r[None, :]) % m
    counts = np.bincount(ad.ravel(), minlength=m)
    # ad - bc = 1  <=>  ad = 1 + bc
    return int(sum(counts[(1 + v) % m] * counts[v] for v in range(m)))


def sl2_elements(ctx: ResidueRingContext, chunk_rows: int | None = None):
    """Yield all of SL_2(Z/p^kZ) in (n, 4) chunks, ordered by the entry a."""
    m, p = ctx.modulus, ctx.p
    r = np.arange(m, dtype=np.int64)
    for a in range(m):
        if a % p:
            ai = pow(a, -1, m)
            b, c = np.meshgrid(r, r, indexing="ij")
            b, c = b.ravel(), c.ravel()
            d = ((1 + b * c) * ai) % m
        else:
            units = r[r % p != 0]
            b, d = np.meshgrid(units, r, indexing="ij")
            b, d = b.ravel(), d.ravel()
            binv = np.array([pow(int(x), -1, m) for x in units], dtype=np.int64)
            binv = np.repeat(binv, m)
            c = ((a * d - 1) * binv) % m
        yield np.stack([np.full_like(b, a), b, c, d], axis=-1)


def reduce_mod_p(A: RMatrix, p: int) -> RMatrix:
    if A.det() != 1:
        raise ValueError("reduce_mod_p expects a determinant-1 matrix")
    return RMatrix(A.a, A.b, A.c, A.d, p)


def filtration_level(A: RMatrix, ctx: ResidueRingContext) -> int:
    """Largest l <= k with A = I mod p^l (0 when A is not in N_1)."""
    if A.det() != 1:
        raise ValueError("filtration_level expects a determinant-1 matrix")
    level = 0
    for ell in range(1, ctx.k + 1):
        q = ctx.p ** ell
        if (A.a - 1) % q or A.b % q or A.c % q or (A.d - 1) % q:
            break
        level = ell
    return level


def level_generators(ctx: ResidueRingContext, ell: int) -> tuple[RMatrix, RMatrix, RMatrix]:
    """The elements A_l, B_l, C_l of N_l."""
    if not 1 <= ell < ctx.k:
        raise ValueError(f"level must be in 1..{ctx.k - 1}")
    m, q = ctx.modulus, ctx.p ** ell
    return (RMatrix(1 + q, q, -q, 1 - q, m), RMatrix(1, q, 0, 1, m), RMatrix(1, 0, q, 1, m))


def level_coordinates(A: RMatrix, ctx: ResidueRingContext, ell: int) -> tuple[int, int, int]:
    """Exponents (x, y, z) with A = A_l^x B_l^y C_l^z mod N_(l+1), for A in N_l."""
    q = ctx.p ** ell
    p = ctx.p
    a = ((A.a - 1) // q) % p
    b = (A.b // q) % p
    c = (A.c // q) % p
    return (a, (b - a) % p, (c + a) % p)


# -- the subgroups of the construction -----------------------------------------

class ResidueGroupStructure:
    """P, the two generators of Q, Y-hat = P:Q, Z = {+-I}, and the filtration."""

    def __init__(self, ctx: ResidueRingContext):
        if ctx.k < 2:
            raise ValueError("the construction needs k >= 2")
        self.ctx = ctx
        m, p, k = ctx.modulus, ctx.p, ctx.k
        q = p ** (k - 1)
        self.P = [RMatrix(1, q * b, q * c, 1, m) for b in range(p) for c in range(p)]
        w = ctx.w
        self.q_generators = [RMatrix(w, 0, 0, ctx.unit_inverse(w), m), RMatrix(0, 1, -1, 0, m)]
        self.Z = [RMatrix.identity(m), RMatrix(-1, 0, 0, -1, m)]

    @property
    def yhat_generators(self) -> list[RMatrix]:
        p = self.ctx.p
        q = p ** (self.ctx.k - 1)
        m = self.ctx.modulus
        return [RMatrix(1, q, 0, 1, m), RMatrix(1, 0, q, 1, m)] + self.q_generators

    @cached_property
    def yhat(self) -> np.ndarray:
        gens = [np.array(g.entries(), dtype=np.int64) for g in self.yhat_generators]
        return closure(gens, self.ctx.modulus)

    @property
    def yhat_order_expected(self) -> int:
        p = self.ctx.p
        return 2 * p * p * (p - 1)

    def in_P(self, A: RMatrix) -> bool:
        q = self.ctx.p ** (self.ctx.k - 1)
        return A.a == 1 and A.d == 1 and A.b % q == 0 and A.c % q == 0

    def in_yhat(self, A: RMatrix) -> bool:
        keys = self.yhat_keys
        return int(encode(np.array(A.entries()), self.ctx.modulus)) in keys

    @cached_property
    def yhat_keys(self) -> set[int]:
        return set(encode(self.yhat, self.ctx.modulus).tolist())

    def filtration_generators(self, ell: int) -> tuple[RMatrix, RMatrix, RMatrix]:
        return level_generators(self.ctx, ell)


def structural_order_p_elements(ctx: ResidueRingContext) -> list[RMatrix]:
    """N_(k-1) minus the identity: I + p^(k-1)[[a, b], [c, -a]], a, b, c mod p."""
    p, k, m = ctx.p, ctx.k, ctx.modulus
    if k < 2:
        raise ValueError("order_p_elements needs k >= 2")
    q = p ** (k - 1)
    return [RMatrix(1 + q * a, q * b, q * c, 1 - q * a, m)
            for a in range(p) for b in range(p) for c in range(p) if a or b or c]


def scan_order_p_elements(ctx: ResidueRingContext) -> list[RMatrix]:
    """All order-p elements, found by powering every element of SL_2(R)."""
    p, m = ctx.p, ctx.modulus
    ident = np.array([1, 0, 0, 1])
    keys: list[int] = []
    for chunk in sl2_elements(ctx):
        pw = mat_power(chunk, p, m)
        hit = (pw == ident).all(axis=1) & ~(chunk == ident).all(axis=1)
        keys.extend(encode(chunk[hit], m).tolist())
    return [RMatrix.from_array(row, m) for row in decode(np.array(sorted(keys)), m)]


def order_p_elements(ctx: ResidueRingContext, cross_validate: bool = False) -> list[RMatrix]:
    """Elements of order p in SL_2(Z/p^kZ).

    For p >= 5 these are exactly N_(k-1) minus the identity.  The binomial
    expansion behind that fact leaves a term E B E with coefficient
    p(p-1)(p-2)/6, which is not divisible by p when p = 3; there the set is
    strictly larger and is found by exhaustive powering instead.

    ``cross_validate`` scans the whole group and checks both inclusions, and
    that no order-p element reduces to [[1,1],[0,1]] mod p.
    """
    p, m = ctx.p, ctx.modulus
    if ctx.k < 2:
        raise ValueError("order_p_elements needs k >= 2")
    if p == 3:
        return scan_order_p_elements(ctx)
    out = structural_order_p_elements(ctx)
    if cross_validate:
        expected = set(encode(np.array([x.entries() for x in out]), m).tolist())
        found = scan_order_p_elements(ctx)
        if any((x.a % p, x.b % p, x.c % p, x.d % p) == (1, 1, 0, 1) for x in found):
            raise AssertionError("an order-p element reduces to [[1,1],[0,1]]")
        found_keys = set(encode(np.array([x.entries() for x in found]), m).tolist())
        if found_keys != expected:
            raise AssertionError(
                f"order-p elements differ from N_(k-1)\\{{I}}: {len(found_keys)} found, "
                f"{len(expected)} expected")
    return out


def conjugator_into_yhat(A: RMatrix, ctx: ResidueRingContext) -> RMatrix:
    """A matrix D in SL_2(R) with D^-1 A D in P, for A of order p."""
    p, k, m = ctx.p, ctx.k, ctx.modulus
    q = p ** (k - 1)
    if A.is_identity():
        raise ValueError("the identity has no order-p conjugate")
    if (A ** p) != RMatrix.identity(m):
        raise ValueError(f"{A} does not have order {p}")
    if (A.a - 1) % q or A.b % q or A.c % q or (A.d - 1) % q:
        raise ValueError(f"{A} is of order {p} but not in N_(k-1)")
    a = (A.a - 1) // q % p
    b = A.b // q % p
    c = A.c // q % p
    if b:
        e = ctx.unit_inverse(b)
        D = RMatrix(1, 0, -a * e, 1, m)
    elif c:
        f = ctx.unit_inverse(c)
        D = RMatrix(1, a * f, 0, 1, m)
    else:
        U = RMatrix(1, 1, 0, 1, m)
        D = U * conjugator_into_yhat(A.conj(U), ctx)
    result = A.conj(D)
    q_ok = result.a == 1 and result.d == 1 and result.b % q == 0 and result.c % q == 0
    if D.det() != 1 or not q_ok:
        raise AssertionError(f"conjugator {D} fails to move {A} into P")
    return D


# -- coset actions -----------------------------------------------------------

SL2_GENERATORS = ((1, 1, 0, 1), (1, 0, 1, 1))


class MatrixCosetAction:
    """Right-multiplication action of SL_2(Z/mZ) on right cosets of a subgroup.

    The coset ``H R`` is keyed by the least encoded entry of ``{hR : h in H}``.
    Points are numbered in breadth-first order from the subgroup coset.
    """

    def __init__(self, modulus: int, subgroup: np.ndarray,
                 generators=SL2_GENERATORS, cap: int = DEFAULT_INDEX_CAP,
                 expected_degree: int | None = None, chunk: int = 2048):
        self.m = modulus
        self.sub = np.asarray(subgroup, dtype=np.int64)
        self.gens = [np.array(g, dtype=np.int64) for g in generators]
        self.chunk = chunk
        if expected_degree is not None and expected_degree > cap:
            raise CapExceeded("matrix coset action degree", cap, expected_degree)
        self._bfs(cap)
        if expected_degree is not None and self.degree != expected_degree:
            raise AssertionError(f"coset BFS found {self.degree} cosets, expected {expected_degree}")

    def keys(self, reps: np.ndarray) -> np.ndarray:
        out = np.empty(reps.shape[0], dtype=np.int64)
        for s in range(0, reps.shape[0], self.chunk):
            blk = reps[s:s + self.chunk]
            prods = mat_mul(self.sub[:, None, :], blk[None, :, :], self.m)
            out[s:s + self.chunk] = encode(prods, self.m).min(axis=0)
        return out

    def _bfs(self, cap: int) -> None:
        ident = np.array([[1, 0, 0, 1]], dtype=np.int64)
        reps = [ident]
        index = {int(self.keys(ident)[0]): 0}
        images: list[list[int]] = [[] for _ in self.gens]
        frontier = ident
        while frontier.shape[0]:
            new_rows = []
            prods = [mat_mul(frontier, g[None, :], self.m) for g in self.gens]
            keys = [self.keys(x).tolist() for x in prods]
            for r in range(frontier.shape[0]):
                for gi in range(len(self.gens)):
                    kk = keys[gi][r]
                    j = index.get(kk)
                    if j is None:
                        j = len(index)
                        if j >= cap:
                            raise CapExceeded("matrix coset action degree", cap, j + 1)
                        index[kk] = j
                        new_rows.append(prods[gi][r])
                    images[gi].append(j)
            frontier = np.array(new_rows, dtype=np.int64).reshape(-1, 4)
            if frontier.shape[0]:
                reps.append(frontier)
        self.reps = np.concatenate(reps)
        self.degree = self.reps.shape[0]
        self._sorted_keys = np.array(sorted(index), dtype=np.int64)
        self._sorted_pts = np.array([index[k] for k in self._sorted_keys.tolist()], dtype=np.int64)
        self.generator_images = [Permutation(im) for im in images]

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        pos = np.searchsorted(self._sorted_keys, keys)
        if (pos >= len(self._sorted_keys)).any() or (self._sorted_keys[pos] != keys).any():
            raise KeyError("coset key not found")
        return self._sorted_pts[pos]

    def image(self, A: RMatrix | np.ndarray) -> Permutation:
        """The permutation induced by a matrix of SL_2."""
        arr = np.array(A.entries() if isinstance(A, RMatrix) else A, dtype=np.int64)
        prods = mat_mul(self.reps, arr[None, :], self.m)
        return Permutation(self.lookup(self.keys(prods)))

    def fixes_some_coset(self, A: RMatrix) -> bool:
        """True iff R A R^-1 lies in the subgroup for some coset representative R."""
        return bool((self.image(A).images == np.arange(self.degree)).any())


def yhat_degree(ctx: ResidueRingContext) -> int:
    p, k = ctx.p, ctx.k
    return p ** (3 * k - 4) * (p + 1) // 2


def yhat_coset_action(ctx: ResidueRingContext, cap: int = DEFAULT_INDEX_CAP,
                      structure: ResidueGroupStructure | None = None) -> MatrixCosetAction:
    """SL_2(Z/p^kZ) on right cosets of Y-hat; the kernel is Z = {+-I}."""
    st = structure or ResidueGroupStructure(ctx)
    if st.yhat.shape[0] != st.yhat_order_expected:
        raise AssertionError(f"|Y-hat| = {st.yhat.shape[0]}, expected {st.yhat_order_expected}")
    return MatrixCosetAction(ctx.modulus, st.yhat, cap=cap, expected_degree=yhat_degree(ctx))


def dihedral_subgroup_mod_p(p: int) -> np.ndarray:
    """Q reduced mod p: <diag(w, w^-1), [[0,1],[-1,0]]>, of order 2(p-1)."""
    ctx = ResidueRingContext(p, 1)
    w = ctx.w
    gens = [np.array([w, 0, 0, pow(w, -1, p)]), np.array([0, 1, p - 1, 0])]
    return closure(gens, p)


def psl2_dihedral_action(p: int, cap: int = DEFAULT_INDEX_CAP) -> MatrixCosetAction:
    """PSL_2(p) on the p(p+1)/2 cosets of its dihedral subgroup of order p-1."""
    sub = dihedral_subgroup_mod_p(p)
    if sub.shape[0] != 2 * (p - 1):
        raise AssertionError(f"dihedral subgroup has order {sub.shape[0]}")
    return MatrixCosetAction(p, sub, cap=cap, expected_degree=p * (p + 1) // 2)


def matrix_prime_order_scan(ctx: ResidueRingContext, action: MatrixCosetAction,
                            primes: list[int]) -> dict[int, dict]:
    """Exhaustive scan of X = SL_2(R)/Z for derangements of the given prime orders.

    Every element of SL_2(R) is generated; elements of prime order r in X
    (A^r = +-I, A != +-I) are compared against the set of all conjugates
    of the prime-order elements of the subgroup, which is exactly the set
    of prime-order elements fixing some coset.
    """
    m = ctx.modulus
    sub = action.sub
    reps = action.reps
    rep_inv = np.stack([reps[:, 3], (-reps[:, 1]) % m, (-reps[:, 2]) % m, reps[:, 0]], axis=-1)
    ident = np.array([1, 0, 0, 1])
    negid = np.array([m - 1, 0, 0, m - 1])
    result = {}
    for r in primes:
        pw = mat_power(sub, r, m)
        central = (pw == ident).all(axis=1) | (pw == negid).all(axis=1)
        nontriv = ~((sub == ident).all(axis=1) | (sub == negid).all(axis=1))
        sub_r = sub[central & nontriv]
        fixing: set[int] = set()
        for s in range(0, reps.shape[0], 1024):
            R, Ri = reps[s:s + 1024], rep_inv[s:s + 1024]
            conj = mat_mul(mat_mul(Ri[:, None, :], sub_r[None, :, :], m), R[:, None, :], m)
            fixing.update(encode(conj, m).ravel().tolist())
        fixing_arr = np.array(sorted(fixing), dtype=np.int64)
        count = 0
        witness = None
        for chunk in sl2_elements(ctx):
            pw = mat_power(chunk, r, m)
            central = (pw == ident).all(axis=1) | (pw == negid).all(axis=1)
            nontriv = ~((chunk == ident).all(axis=1) | (chunk == negid).all(axis=1))
            sel = chunk[central & nontriv]
            count += sel.shape[0]
            if witness is None and sel.shape[0]:
                keys = encode(sel, m)
                miss = ~np.isin(keys, fixing_arr)
                if miss.any():
                    witness = RMatrix.from_array(sel[np.flatnonzero(miss)[0]], m)
        # each element of X has two lifts
        result[r] = {"elements": count // 2, "witness": witness}
    return result
