"""Permutations and stabilizer-chain permutation groups.

Points are 0-based internally.  Cycle notation in and out of the package is
1-based.  Products act on the right: ``p * q`` applies ``p`` first, so
``(p * q)(i) == q(p(i))`` and conjugation is ``p ** g == g^-1 p g``.
"""

from __future__ import annotations

import math
import re
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_ENUM_CAP = 10**8
DEFAULT_INDEX_CAP = 10**7
SUBGROUP_HASH_LIMIT = 10**6

_INDEX = np.int32


class CapExceeded(RuntimeError):
    """A configured resource cap would be exceeded."""

    def __init__(self, what: str, cap: int, needed: int | None = None):
        self.cap = cap
        self.needed = needed
        msg = f"{what} exceeds cap {cap}"
        if needed is not None:
            msg += f" (needs {needed})"
        super().__init__(msg)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Permutation:
    """An immutable permutation of ``{0, ..., degree-1}``."""

    __slots__ = ("_img", "_hash")

    def __init__(self, images: Sequence[int] | np.ndarray):
        arr = np.array(images, dtype=_INDEX)
        n = arr.shape[0] if arr.ndim == 1 else 0
        if arr.ndim != 1 or n < 1:
            raise ValueError("a permutation needs a 1-d image array of length >= 1")
        seen = np.zeros(n, dtype=bool)
        if arr.min() < 0 or arr.max() >= n:
            raise ValueError("image out of range")
        seen[arr] = True
        if not seen.all():
            raise ValueError("images do not form a bijection")
        self._img = _frozen(arr)
        self._hash = None

    @classmethod
    def _raw(cls, arr: np.ndarray) -> "Permutation":
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=_INDEX)
        if arr.flags.writeable:
            arr = arr.copy() if arr.base is not None else arr
            arr.setflags(write=False)
        obj._img = arr
        obj._hash = None
        return obj

    @classmethod
    def identity(cls, degree: int) -> "Permutation":
        return cls._raw(np.arange(degree, dtype=_INDEX))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], degree: int) -> "Permutation":
        """Build from 1-based cycles, e.g. ``[(1, 2), (3, 4)]``."""
        img = np.arange(degree, dtype=_INDEX)
        touched: set[int] = set()
        for cyc in cycles:
            pts = [int(c) - 1 for c in cyc]
            if any(p < 0 or p >= degree for p in pts):
                raise ValueError(f"cycle {tuple(cyc)} leaves the domain of size {degree}")
            if touched.intersection(pts) or len(set(pts)) != len(pts):
                raise ValueError("cycles must be disjoint")
            touched.update(pts)
            for a, b in zip(pts, pts[1:] + pts[:1]):
                img[a] = b
        return cls._raw(img)

    @classmethod
    def parse(cls, text: str, degree: int) -> "Permutation":
        """Parse 1-based cycle notation such as ``"(1,2)(3,4)"`` or ``"()"``."""
        text = text.strip()
        if not re.fullmatch(r"(\(\s*(\d+\s*(,\s*\d+\s*)*)?\))*", text.replace(" ", "")):
            raise ValueError(f"bad cycle notation: {text!r}")
        cycles = []
        for body in re.findall(r"\(([^)]*)\)", text):
            body = body.strip()
            if body:
                cycles.append([int(t) for t in body.split(",")])
        return cls.from_cycles(cycles, degree)

    @property
    def images(self) -> np.ndarray:
        return self._img

    @property
    def degree(self) -> int:
        return int(self._img.shape[0])

    def __call__(self, point: int) -> int:
        return int(self._img[point])

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def __invert__(self) -> "Permutation":
        return inverse(self)

    def __pow__(self, e) -> "Permutation":
        if isinstance(e, Permutation):
            return conjugate(self, e)
        return power(self, int(e))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.degree == other.degree and bool(np.array_equal(self._img, other._img))

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._img.tobytes())
        return self._hash

    def __repr__(self) -> str:
        return f"Permutation({self.to_cycles()!r}, degree={self.degree})"

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._img, np.arange(self.degree)))

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, 0-based, each starting at its least point."""
        img = self._img
        seen = np.zeros(self.degree, dtype=bool)
        out = []
        for i in range(self.degree):
            if seen[i] or img[i] == i:
                continue
            cyc = [i]
            seen[i] = True
            j = int(img[i])
            while j != i:
                cyc.append(j)
                seen[j] = True
                j = int(img[j])
            out.append(tuple(cyc))
        return out

    def to_cycles(self) -> str:
        """1-based cycle notation."""
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + ",".join(str(i + 1) for i in c) + ")" for c in cyc)

    def to_json(self) -> list[int]:
        return [int(i) for i in self._img]

    @classmethod
    def from_json(cls, data: Sequence[int]) -> "Permutation":
        return cls(data)


def _check_degrees(p: Permutation, q: Permutation) -> None:
    if p.degree != q.degree:
        raise ValueError(f"degree mismatch: {p.degree} vs {q.degree}")


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Apply ``p`` first, then ``q``."""
    _check_degrees(p, q)
    return Permutation._raw(q.images[p.images])


def inverse(p: Permutation) -> Permutation:
    inv = np.empty_like(p.images)
    inv[p.images] = np.arange(p.degree, dtype=_INDEX)
    return Permutation._raw(inv)


def conjugate(p: Permutation, g: Permutation) -> Permutation:
    """``p^g = g^-1 p g``."""
    return compose(compose(inverse(g), p), g)


def power(p: Permutation, e: int) -> Permutation:
    if e < 0:
        p, e = inverse(p), -e
    result = np.arange(p.degree, dtype=_INDEX)
    base = p.images
    while e:
        if e & 1:
            result = base[result]
        base = base[base]
        e >>= 1
    return Permutation._raw(result)


def cycle_lengths(p: Permutation) -> list[int]:
    img = p.images
    seen = np.zeros(p.degree, dtype=bool)
    lengths = []
    for i in range(p.degree):
        if seen[i]:
            continue
        n = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = int(img[j])
            n += 1
        lengths.append(n)
    return lengths


def element_order(p: Permutation) -> int:
    return math.lcm(*cycle_lengths(p))


def fixed_points(p: Permutation) -> set[int]:
    img = p.images
    return set(int(i) for i in np.flatnonzero(img == np.arange(p.degree)))


def is_derangement(p: Permutation) -> bool:
    return not bool((p.images == np.arange(p.degree)).any())


def orbits(generators: Sequence[Permutation], domain_size: int) -> list[list[int]]:
    """Orbit partition of ``<generators>``; blocks sorted, ordered by least point."""
    parent = np.arange(domain_size)

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for g in generators:
        if g.degree != domain_size:
            raise ValueError("generator degree does not match domain size")
        for i, j in zip(range(domain_size), g.images):
            a, b = find(i), find(int(j))
            if a != b:
                parent[max(a, b)] = min(a, b)
    blocks: dict[int, list[int]] = {}
    for i in range(domain_size):
        blocks.setdefault(find(i), []).append(i)
    return sorted(blocks.values(), key=lambda b: b[0])


def orbit_of(point: int, generators: Sequence[np.ndarray]) -> list[int]:
    seen = {point}
    queue = [point]
    for beta in queue:
        for g in generators:
            gamma = int(g[beta])
            if gamma not in seen:
                seen.add(gamma)
                queue.append(gamma)
    return queue


class _Level:
    __slots__ = ("point", "gens", "orbit", "trans", "itrans")

    def __init__(self, point: int):
        self.point = point
        self.gens: list[np.ndarray] = []
        self.orbit: list[int] = []
        self.trans: dict[int, np.ndarray] = {}
        self.itrans: dict[int, np.ndarray] = {}

    def rebuild(self, n: int) -> None:
        ident = np.arange(n, dtype=_INDEX)
        self.orbit = [self.point]
        self.trans = {self.point: ident}
        self.itrans = {self.point: ident}
        for beta in self.orbit:
            u = self.trans[beta]
            for s in self.gens:
                gamma = int(s[beta])
                if gamma not in self.trans:
                    v = s[u]
                    inv = np.empty_like(v)
                    inv[v] = ident
                    self.trans[gamma] = v
                    self.itrans[gamma] = inv
                    self.orbit.append(gamma)


def _smallest_moved(arr: np.ndarray) -> int:
    moved = np.flatnonzero(arr != np.arange(arr.shape[0]))
    return int(moved[0])


class PermGroup:
    """A permutation group carried by a deterministic Schreier-Sims chain.

    ``order_hint`` lets callers with an independently known group order stop
    the Schreier generator sweep as soon as the chain reaches that order; the
    chain order never exceeds the true order, so a matching hint certifies
    completeness.  Pass it only when the value is genuinely known.
    """

    def __init__(self, generators: Sequence[Permutation], degree: int | None = None,
                 *, order_hint: int | None = None):
        gens = list(generators)
        if degree is None:
            if not gens:
                raise ValueError("need a degree or at least one generator")
            degree = gens[0].degree
        for g in gens:
            if g.degree != degree:
                raise ValueError("all generators must share one degree")
        self.degree = degree
        self.generators = gens
        self._levels: list[_Level] = []
        self._schreier_sims([g.images for g in gens], order_hint)

    # -- construction ------------------------------------------------------

    def _sift(self, h: np.ndarray, start: int = 0) -> tuple[np.ndarray, int]:
        for j in range(start, len(self._levels)):
            lev = self._levels[j]
            beta = int(h[lev.point])
            inv = lev.itrans.get(beta)
            if inv is None:
                return h, j
            h = inv[h]
        return h, len(self._levels)

    def _chain_order(self) -> int:
        return math.prod(len(lev.orbit) for lev in self._levels)

    def _schreier_sims(self, gens: list[np.ndarray], order_hint: int | None) -> None:
        n = self.degree
        ident = np.arange(n, dtype=_INDEX)
        levels = self._levels
        for g in gens:
            if np.array_equal(g, ident):
                continue
            if all(g[lev.point] == lev.point for lev in levels):
                levels.append(_Level(_smallest_moved(g)))
            for lev in levels:
                lev.gens.append(g)
                if g[lev.point] != lev.point:
                    break
        # every generator was appended to levels 0..(first level it moves)
        for lev in levels:
            lev.rebuild(n)
        if order_hint is not None and self._chain_order() == order_hint:
            return
        i = len(levels) - 1
        while i >= 0:
            lev = levels[i]
            restart = None
            for beta in list(lev.orbit):
                u = lev.trans[beta]
                for s in lev.gens:
                    gamma = int(s[beta])
                    h = lev.itrans[gamma][s[u]]
                    if np.array_equal(h, ident):
                        continue
                    res, j = self._sift(h, i + 1)
                    if np.array_equal(res, ident):
                        continue
                    if j == len(levels):
                        levels.append(_Level(_smallest_moved(res)))
                    for m in range(i + 1, j + 1):
                        levels[m].gens.append(res)
                        levels[m].rebuild(n)
                    restart = j
                    break
                if restart is not None:
                    break
            if restart is not None:
                if order_hint is not None and self._chain_order() == order_hint:
                    return
                i = restart
                continue
            i -= 1

    # -- queries -----------------------------------------------------------

    @property
    def base(self) -> list[int]:
        return [lev.point for lev in self._levels]

    @property
    def strong_generators(self) -> list[Permutation]:
        seen: dict[bytes, np.ndarray] = {}
        for lev in self._levels:
            for g in lev.gens:
                seen.setdefault(g.tobytes(), g)
        return [Permutation._raw(g) for g in seen.values()]

    @property
    def transversal_sizes(self) -> list[int]:
        return [len(lev.orbit) for lev in self._levels]

    def order(self) -> int:
        return self._chain_order()

    def contains(self, p: Permutation) -> bool:
        if p.degree != self.degree:
            return False
        res, j = self._sift(p.images)
        return j == len(self._levels) and bool(np.array_equal(res, np.arange(self.degree)))

    __contains__ = contains

    def is_transitive(self) -> bool:
        if self.degree == 1:
            return True
        return len(orbit_of(0, [g.images for g in self.generators])) == self.degree

    def orbit(self, point: int) -> list[int]:
        return orbit_of(point, [g.images for g in self.generators])

    def stabilizer_chain_point_orbits(self) -> list[list[int]]:
        return [list(lev.orbit) for lev in self._levels]

    # -- enumeration -------------------------------------------------------

    def _split_level(self, block_target: int) -> int:
        """Smallest level s such that the tail group G^(s) has <= block_target elements."""
        sizes = self.transversal_sizes
        tail = 1
        s = len(sizes)
        while s > 0 and tail * sizes[s - 1] <= block_target:
            tail *= sizes[s - 1]
            s -= 1
        return s

    def tail_elements(self, level: int) -> np.ndarray:
        """All elements of the chain subgroup G^(level) as a 2-d array."""
        arr = np.arange(self.degree, dtype=_INDEX)[None, :]
        for lev in reversed(self._levels[level:]):
            arr = np.concatenate([lev.trans[b][arr] for b in lev.orbit])
        return arr

    def top_count(self, block_target: int = 1 << 14) -> int:
        s = self._split_level(block_target)
        return math.prod(self.transversal_sizes[:s])

    def element_blocks(self, block_target: int = 1 << 14, cap: int = DEFAULT_ENUM_CAP,
                       part: tuple[int, int] | None = None) -> Iterator[np.ndarray]:
        """Yield every element exactly once, as rows of 2-d image arrays.

        Elements are products of transversal representatives along the chain.
        ``part=(i, k)`` restricts to the i-th of k interleaved slices of the
        top-level coset products, for splitting a scan across workers.
        """
        order = self.order()
        if order > cap:
            raise CapExceeded("group order for enumeration", cap, order)
        s = self._split_level(block_target)
        tail = self.tail_elements(s)
        top_levels = self._levels[:s]
        ident = np.arange(self.degree, dtype=_INDEX)
        counter = 0

        def rec(depth: int, acc: np.ndarray) -> Iterator[np.ndarray]:
            # acc is the product of representatives chosen for levels depth..s-1,
            # applied before the representatives of shallower levels.
            nonlocal counter
            if depth < 0:
                idx = counter
                counter += 1
                if part is None or idx % part[1] == part[0]:
                    yield acc[tail]
                return
            lev = top_levels[depth]
            for b in lev.orbit:
                yield from rec(depth - 1, lev.trans[b][acc])

        yield from rec(s - 1, ident)

    def elements(self, cap: int = DEFAULT_ENUM_CAP) -> Iterator[Permutation]:
        for block in self.element_blocks(cap=cap):
            for row in block:
                yield Permutation._raw(row.copy())


def build_bsgs(generators: Sequence[Permutation], degree: int | None = None,
               *, order_hint: int | None = None) -> PermGroup:
    return PermGroup(generators, degree, order_hint=order_hint)


def enumerate_elements(g: PermGroup, cap: int = DEFAULT_ENUM_CAP) -> Iterator[Permutation]:
    return g.elements(cap=cap)


def batch_orders(block: np.ndarray, base: Sequence[int]) -> np.ndarray:
    """Element orders of a batch, from cycle lengths through the base points.

    A group element is the identity iff it fixes every base point, so its
    order is the lcm of the cycle lengths of the base points.
    """
    rows = block.shape[0]
    if not base or rows == 0:
        return np.ones(rows, dtype=np.int64)
    b = np.asarray(base, dtype=np.intp)
    cur = block[:, b].astype(np.intp)
    lengths = np.zeros(cur.shape, dtype=np.int64)
    step = 1
    pending = np.ones(cur.shape, dtype=bool)
    while True:
        hit = pending & (cur == b)
        lengths[hit] = step
        pending &= ~hit
        if not pending.any():
            break
        cur = np.take_along_axis(block, cur, axis=1).astype(np.intp)
        step += 1
        if step > block.shape[1] + 1:
            raise RuntimeError("cycle length exceeded degree; block rows are not permutations")
    return np.lcm.reduce(lengths, axis=1)


def _lexmin_row(arr: np.ndarray) -> np.ndarray:
    idx = np.arange(arr.shape[0])
    for col in range(arr.shape[1]):
        if idx.shape[0] == 1:
            break
        v = arr[idx, col]
        idx = idx[v == v.min()]
    return arr[idx[0]]


def coset_action(g: PermGroup, subgroup_gens: Sequence[Permutation],
                 cap: int = DEFAULT_INDEX_CAP) -> tuple[list[Permutation], int]:
    """Action of ``g.generators`` on the right cosets of ``<subgroup_gens>``.

    Point 0 is the subgroup itself.  A coset ``Hx`` is keyed by the
    lexicographically least row of ``{hx : h in H}``.
    """
    for h in subgroup_gens:
        if h not in g:
            raise ValueError(f"subgroup generator {h.to_cycles()} is not in the group")
    n = g.degree
    sub = PermGroup(subgroup_gens, n) if subgroup_gens else PermGroup([], n)
    index, rem = divmod(g.order(), sub.order())
    if rem:
        raise RuntimeError("subgroup order does not divide group order")
    if index > cap:
        raise CapExceeded("coset action index", cap, index)
    if sub.order() > SUBGROUP_HASH_LIMIT:
        raise CapExceeded("subgroup order for coset keys", SUBGROUP_HASH_LIMIT, sub.order())
    h_arr = sub.tail_elements(0)

    def key(x: np.ndarray) -> bytes:
        return _lexmin_row(x[h_arr]).tobytes()

    ident = np.arange(n, dtype=_INDEX)
    reps = [ident]
    index_of = {key(ident): 0}
    images = [[] for _ in g.generators]
    i = 0
    while i < len(reps):
        r = reps[i]
        for gi, s in enumerate(g.generators):
            x = s.images[r]
            k = key(x)
            j = index_of.get(k)
            if j is None:
                j = len(reps)
                index_of[k] = j
                reps.append(x)
            images[gi].append(j)
        i += 1
    if len(reps) != index:
        raise RuntimeError(f"coset BFS found {len(reps)} cosets, expected {index}")
    return [Permutation(im) for im in images], index
