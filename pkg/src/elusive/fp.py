"""Finitely presented groups and HLT coset enumeration.

Words are tuples of signed 1-based generator indices; ``-i`` is the inverse
of generator ``i``.  Relator text follows the usual conventions:

* ``x^3`` powers, ``x^-1`` or ``x^{-1}`` inverses, ``x^{(p+1)/2}``
  arithmetic exponents in the presentation parameters,
* ``a^s`` conjugation ``s^-1 a s`` when the exponent is a generator,
* ``[a,b]`` the commutator ``a^-1 b^-1 a b``,
* ``*`` between factors is optional,
* ``u=v`` is stored as the relator ``u v^-1``; ``1`` is the empty word.
"""

from __future__ import annotations

import ast
import json
import operator
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping, Sequence

from .perm import Permutation, compose, inverse

Word = tuple[int, ...]

DEFAULT_MAX_COSETS = 10**7


class CosetLimitExceeded(RuntimeError):
    def __init__(self, limit: int, high_water: int):
        self.limit = limit
        self.high_water = high_water
        super().__init__(f"coset enumeration exceeded {limit} cosets (high-water mark {high_water})")


def free_reduce(w: Sequence[int]) -> Word:
    out: list[int] = []
    for letter in w:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def word_power(w: Sequence[int], e: int) -> Word:
    if e < 0:
        return tuple(word_inverse(w)) * (-e)
    return tuple(w) * e


# -- exponent arithmetic ----------------------------------------------------

_BINOPS: dict[type, Callable[[int, int], int]] = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Pow: operator.pow,
    ast.Mod: operator.mod,
}


def _eval_int(expr: str, params: Mapping[str, int]) -> int:
    tree = ast.parse(expr.replace("^", "**"), mode="eval")

    def ev(node: ast.AST) -> int:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in params:
                raise ValueError(f"unknown parameter {node.id!r} in exponent {expr!r}")
            return int(params[node.id])
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, (ast.Div, ast.FloorDiv)):
                q, r = divmod(a, b)
                if r:
                    raise ValueError(f"exponent {expr!r} is not an integer")
                return q
            op = _BINOPS.get(type(node.op))
            if op is not None:
                return op(a, b)
        raise ValueError(f"unsupported exponent expression {expr!r}")

    return ev(tree)


# -- parsing ----------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, names: Sequence[str], params: Mapping[str, int]):
        self.s = text.replace(" ", "").replace("⁻¹", "^-1").replace("−", "-")
        self.i = 0
        self.names = sorted(names, key=len, reverse=True)
        self.index = {n: k + 1 for k, n in enumerate(names)}
        self.params = params

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise ValueError(f"expected {ch!r} at position {self.i} in {self.s!r}")
        self.i += 1

    def name_here(self) -> str | None:
        for n in self.names:
            if self.s.startswith(n, self.i):
                return n
        return None

    def relations(self) -> list[Word]:
        """``w1=w2=...=wn`` gives the relators ``wi wn^-1`` for i < n."""
        parts = [self.word()]
        while self.peek() == "=":
            self.i += 1
            parts.append(self.word())
        if self.i != len(self.s):
            raise ValueError(f"trailing text at position {self.i} in {self.s!r}")
        last = word_inverse(parts[-1])
        if len(parts) == 1:
            return [free_reduce(parts[0])]
        return [free_reduce(w + last) for w in parts[:-1]]

    def word(self) -> Word:
        out: Word = ()
        while self.peek() and self.peek() not in "=,)]":
            if self.peek() == "*":
                self.i += 1
                continue
            out += self.factor()
        return out

    def atom(self) -> Word:
        ch = self.peek()
        if ch == "(":
            self.i += 1
            w = self.word()
            self.expect(")")
            return w
        if ch == "[":
            self.i += 1
            a = self.word()
            self.expect(",")
            b = self.word()
            self.expect("]")
            return word_inverse(a) + word_inverse(b) + a + b
        if ch == "1":
            self.i += 1
            return ()
        n = self.name_here()
        if n is None:
            raise ValueError(f"unexpected {ch!r} at position {self.i} in {self.s!r}")
        self.i += len(n)
        return (self.index[n],)

    def factor(self) -> Word:
        w = self.atom()
        while self.peek() == "^":
            self.i += 1
            w = self.apply_exponent(w)
        return w

    def apply_exponent(self, w: Word) -> Word:
        ch = self.peek()
        if ch == "{":
            depth = 0
            start = self.i + 1
            while True:
                c = self.peek()
                if c == "{":
                    depth += 1
                elif c == "}":
                    depth -= 1
                    if depth == 0:
                        break
                if not c:
                    raise ValueError("unbalanced braces")
                self.i += 1
            body = self.s[start:self.i]
            self.i += 1
            try:
                return word_power(w, _eval_int(body, self.params))
            except (ValueError, SyntaxError):
                conj = _Parser(body, self.names, self.params).word()
                return word_inverse(conj) + w + conj
        if ch == "-" or ch.isdigit():
            j = self.i + 1
            while j < len(self.s) and self.s[j].isdigit():
                j += 1
            e = int(self.s[self.i:j])
            self.i = j
            return word_power(w, e)
        n = self.name_here()
        if n is not None:
            self.i += len(n)
            g = (self.index[n],)
            return word_inverse(g) + w + g
        for pname in sorted(self.params, key=len, reverse=True):
            if self.s.startswith(pname, self.i):
                self.i += len(pname)
                return word_power(w, int(self.params[pname]))
        raise ValueError(f"bad exponent at position {self.i} in {self.s!r}")


def parse_relations(text: str, names: Sequence[str],
                    params: Mapping[str, int] | None = None) -> list[Word]:
    return _Parser(text, names, params or {}).relations()


def parse_word(text: str, names: Sequence[str], params: Mapping[str, int] | None = None) -> Word:
    """Parse a word or relation ``u=v`` (returned as ``u v^-1``)."""
    rels = parse_relations(text, names, params)
    if len(rels) != 1:
        raise ValueError(f"{text!r} holds {len(rels)} relations, expected one word")
    return rels[0]


def format_word(w: Sequence[int], names: Sequence[str]) -> str:
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        e = (j - i) * (1 if w[i] > 0 else -1)
        name = names[abs(w[i]) - 1]
        parts.append(name if e == 1 else f"{name}^{e}")
        i = j
    return "*".join(parts)


@dataclass
class Presentation:
    generator_names: list[str]
    relators: list[Word]
    name: str = ""
    relator_text: list[str] = field(default_factory=list)

    @classmethod
    def from_text(cls, names: Sequence[str], relations: Sequence[str],
                  params: Mapping[str, int] | None = None, name: str = "") -> "Presentation":
        rels: list[Word] = []
        texts: list[str] = []
        for text in relations:
            for k, r in enumerate(parse_relations(text, names, params)):
                if r:
                    rels.append(r)
                    texts.append(text if k == 0 else f"{text} [part {k + 1}]")
        return cls(list(names), rels, name, texts)

    @property
    def ngens(self) -> int:
        return len(self.generator_names)

    def word(self, text: str, params: Mapping[str, int] | None = None) -> Word:
        return parse_word(text, self.generator_names, params)

    def validate_word(self, w: Sequence[int]) -> None:
        for x in w:
            if x == 0 or abs(x) > self.ngens:
                raise ValueError(f"letter {x} does not name a generator")


# -- coset enumeration ------------------------------------------------------

@dataclass
class CosetTable:
    """A closed coset table; ``rows[i][2g]`` / ``rows[i][2g+1]`` are the images
    of coset ``i`` under generator ``g`` and its inverse.  Row 0 is the subgroup."""

    rows: list[list[int]]
    ngens: int
    high_water: int = 0

    @property
    def count(self) -> int:
        return len(self.rows)

    def apply(self, coset: int, w: Sequence[int]) -> int:
        for x in w:
            coset = self.rows[coset][_col(x)]
        return coset


def _col(letter: int) -> int:
    return 2 * (abs(letter) - 1) + (1 if letter < 0 else 0)


def coset_enumerate(pres: Presentation, subgroup_words: Sequence[Word],
                    max_cosets: int = DEFAULT_MAX_COSETS) -> CosetTable:
    """HLT coset enumeration; returns the standardized table.

    Coincidences are resolved with a union-find queue.  The result is
    renumbered in breadth-first order from the subgroup coset, so the output
    depends only on the inputs.
    """
    if max_cosets < 1:
        raise ValueError("max_cosets must be >= 1")
    for w in list(pres.relators) + list(subgroup_words):
        pres.validate_word(w)
    ncols = 2 * pres.ngens
    inv = [c ^ 1 for c in range(ncols)]
    rels = [[_col(x) for x in r] for r in sorted(pres.relators, key=len)]
    subs = [[_col(x) for x in w] for w in subgroup_words]

    table: list[list[int]] = [[-1] * ncols]
    parent = [0]

    def rep(k: int) -> int:
        r = k
        while parent[r] != r:
            r = parent[r]
        while parent[k] != r:
            parent[k], k = r, parent[k]
        return r

    def define(c: int, x: int) -> None:
        d = len(table)
        if d >= max_cosets:
            raise CosetLimitExceeded(max_cosets, d)
        table.append([-1] * ncols)
        parent.append(d)
        table[c][x] = d
        table[d][inv[x]] = c

    def coincidence(a: int, b: int) -> None:
        queue: list[int] = []

        def merge(k: int, l: int) -> None:
            k, l = rep(k), rep(l)
            if k != l:
                lo, hi = (k, l) if k < l else (l, k)
                parent[hi] = lo
                queue.append(hi)

        merge(a, b)
        qi = 0
        while qi < len(queue):
            e = queue[qi]
            qi += 1
            row = table[e]
            for x in range(ncols):
                f = row[x]
                if f < 0:
                    continue
                ix = inv[x]
                if table[f][ix] == e:
                    table[f][ix] = -1
                e1, f1 = rep(e), rep(f)
                t = table[e1][x]
                if t >= 0:
                    merge(f1, t)
                elif table[f1][ix] >= 0:
                    merge(e1, table[f1][ix])
                else:
                    table[e1][x] = f1
                    table[f1][ix] = e1

    def scan_and_fill(c: int, w: list[int]) -> None:
        f = b = c
        i, j = 0, len(w) - 1
        while True:
            while i <= j:
                nxt = table[f][w[i]]
                if nxt < 0:
                    break
                f = nxt
                i += 1
            if i > j:
                if f != c:
                    coincidence(f, c)
                return
            while j >= i:
                nxt = table[b][inv[w[j]]]
                if nxt < 0:
                    break
                b = nxt
                j -= 1
            if j < i:
                coincidence(f, b)
                return
            if i == j:
                table[f][w[i]] = b
                table[b][inv[w[i]]] = f
                return
            define(f, w[i])

    for w in subs:
        scan_and_fill(0, w)
    c = 0
    while c < len(table):
        if parent[c] == c:
            for r in rels:
                scan_and_fill(c, r)
                if parent[c] != c:
                    break
            if parent[c] == c:
                row = table[c]
                for x in range(ncols):
                    if row[x] < 0:
                        define(c, x)
        c += 1

    high_water = len(table)
    # standardize: breadth-first renumbering of live cosets from coset 0
    order = [0]
    new_index = {0: 0}
    for k in order:
        for x in range(ncols):
            t = rep(table[k][x])
            if t not in new_index:
                new_index[t] = len(order)
                order.append(t)
    rows = [[new_index[rep(table[k][x])] for x in range(ncols)] for k in order]
    return CosetTable(rows, pres.ngens, high_water)


def action_from_table(table: CosetTable) -> list[Permutation]:
    """One permutation per generator, acting on cosets by right multiplication."""
    return [Permutation([row[2 * g] for row in table.rows]) for g in range(table.ngens)]


def evaluate_word(w: Sequence[int], images: Sequence[Any], identity: Any,
                  mul: Callable[[Any, Any], Any], inv: Callable[[Any], Any]) -> Any:
    invs: dict[int, Any] = {}
    acc = identity
    for x in w:
        if x > 0:
            acc = mul(acc, images[x - 1])
        else:
            k = -x - 1
            if k not in invs:
                invs[k] = inv(images[k])
            acc = mul(acc, invs[k])
    return acc


def perm_word(w: Sequence[int], images: Sequence[Permutation]) -> Permutation:
    ident = Permutation.identity(images[0].degree)
    return evaluate_word(w, images, ident, compose, inverse)


@dataclass
class MapCheck:
    ok: bool
    failing_relator: int | None = None
    failing_text: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_map_satisfies(pres: Presentation, images: Sequence[Any], *,
                         identity: Any = None, mul: Callable | None = None,
                         inv: Callable | None = None,
                         eq: Callable[[Any, Any], bool] | None = None) -> MapCheck:
    """Check every relator evaluates to the identity under ``generator -> image``.

    Permutations need no extra arguments; other groups (e.g. matrices) supply
    ``identity``, ``mul``, ``inv`` and optionally ``eq``.
    """
    if len(images) != pres.ngens:
        raise ValueError(f"{len(images)} images for {pres.ngens} generators")
    if identity is None:
        if not images or not isinstance(images[0], Permutation):
            raise ValueError("non-permutation images need identity/mul/inv")
        identity = Permutation.identity(images[0].degree)
        mul, inv = compose, inverse
    eq = eq or (lambda a, b: a == b)
    for k, r in enumerate(pres.relators):
        if not eq(evaluate_word(r, images, identity, mul, inv), identity):
            text = pres.relator_text[k] if k < len(pres.relator_text) else None
            return MapCheck(False, k, text or format_word(r, pres.generator_names))
    return MapCheck(True)


# -- catalog ----------------------------------------------------------------

def _catalog_data() -> dict:
    with resources.files("elusive.data").joinpath("presentations.json").open() as fh:
        return json.load(fh)


def catalog_names() -> list[str]:
    return sorted(_catalog_data()["presentations"])


def catalog_presentation(name: str, **params: int) -> Presentation:
    """Load a catalog entry such as ``catalog_presentation("sylow-abcs", p=7)``."""
    entry = _catalog_data()["presentations"].get(name)
    if entry is None:
        raise KeyError(f"no presentation named {name!r}")
    needed = entry.get("parameters", [])
    missing = [k for k in needed if k not in params]
    if missing:
        raise ValueError(f"{name} needs parameters {missing}")
    relations = list(entry["relations"])
    relations += _expand_families(entry.get("families", []), entry["generators"])
    label = name + ("(" + ",".join(f"{params[k]}" for k in needed) + ")" if needed else "")
    return Presentation.from_text(entry["generators"], relations, params, label)


def _expand_families(families: Sequence[dict], names: Sequence[str]) -> list[str]:
    """Expand shorthand like "u_i^3 for all i" and "[u_i,u_j] for i<j"."""
    out = []
    for fam in families:
        groups = [[n for n in names if n.startswith(pfx)] for pfx in fam["over"]]
        if fam["kind"] == "power":
            out += [f"{g}^{fam['exponent']}" for g in groups[0]]
        elif fam["kind"] == "commute-within":
            gs = groups[0]
            out += [f"[{a},{b}]" for i, a in enumerate(gs) for b in gs[i + 1:]]
        elif fam["kind"] == "commute-between":
            out += [f"[{a},{b}]" for a in groups[0] for b in groups[1]]
        else:
            raise ValueError(f"unknown relator family {fam['kind']!r}")
    return out


def catalog_subgroup(name: str, pres: Presentation, **params: int) -> list[Word]:
    entry = _catalog_data()["subgroups"].get(name)
    if entry is None:
        raise KeyError(f"no subgroup word set named {name!r}")
    return [parse_word(t, pres.generator_names, params) for t in entry["words"]]
