"""Known degrees of elusive groups and their multiplicative closure.

Base families:

* ``family-1``: p^k 2^n q_1...q_r with p a Mersenne prime, k >= 1,
  2^n > p and each q_i a prime power sharing a factor with p - 1
  (repetition allowed),
* ``family-2``: 7^k * 12,
* ``sl2(p,k)``: p^(3k-4) (p+1)/2 for Mersenne p >= 7 and k >= 2,
* ``a5-mixed``: 225 and 450.

The closure adds products of entries.  Every value keeps one derivation
with the fewest base factors.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from dataclasses import dataclass, field

from .residue import is_mersenne_prime, prime_factors

MAX_BOUND = 10**9


@dataclass(frozen=True)
class DegreeEntry:
    value: int
    provenance: str
    params: dict = field(default_factory=dict, hash=False, compare=False)
    depth: int = 1

    def rederive(self) -> int:
        p = self.params
        if self.provenance == "family-1":
            return p["p"] ** p["k"] * 2 ** p["n"] * math.prod(p["q"])
        if self.provenance == "family-2":
            return 7 ** p["k"] * 12
        if self.provenance == "sl2":
            return p["p"] ** (3 * p["k"] - 4) * (p["p"] + 1) // 2
        if self.provenance == "a5-mixed":
            return p["degree"]
        if self.provenance == "product":
            return p["factors"][0] * p["factors"][1]
        raise ValueError(f"unknown provenance {self.provenance!r}")

    def to_json(self) -> dict:
        return {"value": self.value, "provenance": self.provenance, "params": self.params,
                "depth": self.depth, "factorization": factorization(self.value)}


def factorization(n: int) -> dict[str, int]:
    out = {}
    for q in prime_factors(n):
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        out[str(q)] = e
    return out


def _smooth_numbers(primes: list[int], bound: int) -> list[int]:
    """All positive integers <= bound whose prime factors lie in ``primes``."""
    out = [1]
    for q in primes:
        extra = []
        for v in out:
            v *= q
            while v <= bound:
                extra.append(v)
                v *= q
        out += extra
    return sorted(out)


def mersenne_primes(limit: int) -> list[int]:
    out = []
    m = 2
    while 2 ** m - 1 <= limit:
        if is_mersenne_prime(2 ** m - 1):
            out.append(2 ** m - 1)
        m += 1
    return out


def base_entries(bound: int) -> list[DegreeEntry]:
    found: dict[int, DegreeEntry] = {}

    def add(entry: DegreeEntry) -> None:
        if entry.value > bound or entry.value < 2:
            return
        if entry.value not in found:
            found[entry.value] = entry

    for p in mersenne_primes(bound):
        odd_q = [q for q in prime_factors(p - 1) if q != 2]
        n0 = p.bit_length()  # least n with 2^n > p
        pk, k = p, 1
        while pk * 2 ** n0 <= bound:
            n = n0
            while pk * 2 ** n <= bound:
                for t in _smooth_numbers(odd_q, bound // (pk * 2 ** n)):
                    q = [int(s) ** e for s, e in factorization(t).items()]
                    add(DegreeEntry(pk * 2 ** n * t, "family-1", {"p": p, "k": k, "n": n, "q": q}))
                n += 1
            pk *= p
            k += 1
    k = 1
    while 7 ** k * 12 <= bound:
        add(DegreeEntry(7 ** k * 12, "family-2", {"k": k}))
        k += 1
    for p in mersenne_primes(bound):
        if p < 7:
            continue
        k = 2
        while p ** (3 * k - 4) * (p + 1) // 2 <= bound:
            add(DegreeEntry(p ** (3 * k - 4) * (p + 1) // 2, "sl2", {"p": p, "k": k}))
            k += 1
    for d in (225, 450):
        add(DegreeEntry(d, "a5-mixed", {"degree": d}))
    return sorted(found.values(), key=lambda e: e.value)


def generate_catalog(bound: int) -> list[DegreeEntry]:
    """Base degrees up to ``bound`` and all products of them within the bound."""
    if bound > MAX_BOUND:
        raise ValueError(f"bound {bound} exceeds {MAX_BOUND}")
    best: dict[int, DegreeEntry] = {e.value: e for e in base_entries(bound)}
    heap = list(best)
    heapq.heapify(heap)
    final: list[int] = []
    done: set[int] = set()
    while heap:
        v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        dv = best[v].depth
        # products with every finalized entry (including v itself)
        for u in final + [v]:
            w = u * v
            if w > bound:
                break
            cand = DegreeEntry(w, "product", {"factors": [u, v]}, best[u].depth + dv)
            old = best.get(w)
            if old is None or (old.provenance == "product" and (cand.depth, [u, v]) < (
                    old.depth, old.params["factors"])):
                best[w] = cand
            if w not in done:
                heapq.heappush(heap, w)
        final.append(v)
    return [best[v] for v in sorted(done)]


def density_report(bound: int) -> dict:
    entries = generate_catalog(bound)
    values = [e.value for e in entries]
    odd = [v for v in values if v % 2]
    twice_odd = [v for v in values if v % 4 == 2]
    return {
        "label": "known degrees only (a lower bound for the set of elusive degrees)",
        "bound": bound,
        "count": len(values),
        "ratio": len(values) / bound if bound else 0.0,
        "smallest_known_odd": odd[0] if odd else None,
        "smallest_known_twice_odd": twice_odd[0] if twice_odd else None,
    }


def catalog_json(entries: list[DegreeEntry]) -> str:
    return json.dumps([e.to_json() for e in entries], sort_keys=True, indent=1)


def catalog_csv(entries: list[DegreeEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "provenance", "params", "factorization"])
    for e in entries:
        fac = " * ".join(f"{q}^{k}" if k > 1 else q for q, k in factorization(e.value).items())
        w.writerow([e.value, e.provenance, json.dumps(e.params, sort_keys=True), fac])
    return buf.getvalue()
