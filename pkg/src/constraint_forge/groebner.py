"""Buchberger completion and multivariate division over Q(a, e, lam).

Polynomials inside this module are dense-exponent dicts ``{exps: coeff}``
over a fixed, ordered variable list (index 0 is the highest variable).  A
:class:`PolyRing` converts to and from :class:`JetPolynomial`.

Only what the package needs is here: graded orders, a heap-driven division
algorithm with optional quotient tracking, and Buchberger's algorithm with
the product and chain criteria, returning the reduced basis.
"""
from __future__ import annotations

import heapq
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

from .jet import JetPolynomial, JetVariable, var_id, var_of
from .params import ONE, ParamCoefficient

Exps = Tuple[int, ...]
Poly = Dict[Exps, ParamCoefficient]


class MonomialOrder:
    """A graded monomial order; ``key`` sorts ascending, larger key = larger monomial."""

    def __init__(self, name: str):
        if name not in ("grlex", "grevlex"):
            raise ValueError(f"unknown monomial order {name!r}")
        self.name = name
        if name == "grlex":
            self.key: Callable[[Exps], tuple] = lambda e: (sum(e), e)
            self.neg_key: Callable[[Exps], tuple] = lambda e: (-sum(e), tuple(-x for x in e))
        else:
            self.key = lambda e: (sum(e), tuple(-x for x in reversed(e)))
            self.neg_key = lambda e: (-sum(e), tuple(reversed(e)))

    def lead(self, p: Poly) -> Exps:
        return max(p, key=self.key)

    def __repr__(self):
        return f"MonomialOrder({self.name!r})"


GRLEX = MonomialOrder("grlex")
GREVLEX = MonomialOrder("grevlex")


class PolyRing:
    """Polynomial ring over an ordered list of jet variables."""

    def __init__(self, variables: Sequence[JetVariable], order: MonomialOrder = GRLEX):
        self.variables = tuple(variables)
        self.order = order
        self.index = {var_id(v): i for i, v in enumerate(self.variables)}
        self.nvars = len(self.variables)

    def to_dense(self, p: JetPolynomial) -> Poly:
        out: Poly = {}
        n = self.nvars
        for m, c in p.terms.items():
            e = [0] * n
            for i, k in m:
                pos = self.index.get(i)
                if pos is None:
                    raise KeyError(f"variable {var_of(i).label()} is not in this ring")
                e[pos] = k
            out[tuple(e)] = c
        return out

    def from_dense(self, p: Poly) -> JetPolynomial:
        ids = [var_id(v) for v in self.variables]
        terms = {}
        for e, c in p.items():
            m = tuple(sorted((ids[i], k) for i, k in enumerate(e) if k))
            terms[m] = c
        return JetPolynomial(terms, _trusted=True)

    def contains(self, p: JetPolynomial) -> bool:
        return all(i in self.index for m in p.terms for i, _ in m)


# dense helpers ------------------------------------------------------------------

def _divides(a: Exps, b: Exps) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: Exps, b: Exps) -> Exps:
    return tuple(max(x, y) for x, y in zip(a, b))


def _sub(a: Exps, b: Exps) -> Exps:
    return tuple(x - y for x, y in zip(a, b))


def _add(a: Exps, b: Exps) -> Exps:
    return tuple(x + y for x, y in zip(a, b))


def mul_term(p: Poly, e: Exps, c: ParamCoefficient) -> Poly:
    return {_add(m, e): v * c for m, v in p.items()}


def add_into(target: Poly, p: Poly, scale: ParamCoefficient | None = None) -> None:
    for m, v in p.items():
        if scale is not None:
            v = v * scale
        s = target.get(m)
        if s is None:
            target[m] = v
        else:
            s = s + v
            if s:
                target[m] = s
            else:
                del target[m]


def dense_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _add(m1, m2)
            s = out.get(m)
            v = c1 * c2
            if s is None:
                out[m] = v
            else:
                s = s + v
                if s:
                    out[m] = s
                else:
                    del out[m]
    return out


class Basis:
    """Polynomials with cached leading data, ready for division."""

    def __init__(self, polys: Iterable[Poly], order: MonomialOrder):
        self.order = order
        self.polys: List[Poly] = []
        self.leads: List[Exps] = []
        self.lead_inv: List[ParamCoefficient] = []
        for p in polys:
            self.append(p)

    def append(self, p: Poly) -> None:
        lm = self.order.lead(p)
        self.polys.append(p)
        self.leads.append(lm)
        self.lead_inv.append(p[lm].inverse())

    def __len__(self):
        return len(self.polys)

    def __iter__(self):
        return iter(self.polys)


def divide(p: Poly, basis: Basis, track: bool = False, choose: Callable[[List[int]], int] | None = None):
    """Full multivariate division.

    Returns ``(remainder, quotients)`` with ``p = sum(q_i * g_i) + remainder``
    and no term of the remainder divisible by a leading monomial.  ``choose``
    picks among several eligible divisors (default: the first); confluence
    tests pass a randomized chooser.
    """
    order = basis.order
    work = dict(p)
    heap = [(order.neg_key(m), m) for m in work]
    heapq.heapify(heap)
    rem: Poly = {}
    quots: List[Poly] = [dict() for _ in range(len(basis))] if track else []
    leads = basis.leads
    while heap:
        _, m = heapq.heappop(heap)
        c = work.pop(m, None)
        if c is None:
            continue
        eligible = [i for i, lm in enumerate(leads) if _divides(lm, m)]
        if not eligible:
            rem[m] = c
            continue
        i = eligible[0] if choose is None or len(eligible) == 1 else choose(eligible)
        shift = _sub(m, leads[i])
        factor = c * basis.lead_inv[i]
        if track:
            add_into(quots[i], {shift: factor})
        lm = leads[i]
        for gm, gc in basis.polys[i].items():
            if gm == lm:
                continue
            t = _add(gm, shift)
            v = -(gc * factor)
            s = work.get(t)
            if s is None:
                work[t] = v
                heapq.heappush(heap, (order.neg_key(t), t))
            else:
                s = s + v
                if s:
                    work[t] = s
                else:
                    del work[t]
    return rem, quots


def _monic(p: Poly, order: MonomialOrder) -> Poly:
    lm = order.lead(p)
    inv = p[lm].inverse()
    if inv == ONE:
        return p
    return {m: c * inv for m, c in p.items()}


def spoly(f: Poly, g: Poly, order: MonomialOrder) -> Poly:
    lf, lg = order.lead(f), order.lead(g)
    lcm = _lcm(lf, lg)
    out = mul_term(f, _sub(lcm, lf), f[lf].inverse())
    add_into(out, mul_term(g, _sub(lcm, lg), -g[lg].inverse()))
    return out


def groebner(polys: Iterable[Poly], order: MonomialOrder = GRLEX) -> List[Poly]:
    """Reduced Groebner basis (monic, sorted by leading monomial) of the given polynomials."""
    basis = Basis([], order)
    pairs: List[Tuple[tuple, int, int]] = []
    processed: set = set()

    def add_element(p: Poly):
        p = _monic(p, order)
        basis.append(p)
        k = len(basis) - 1
        for i in range(k):
            lcm = _lcm(basis.leads[i], basis.leads[k])
            heapq.heappush(pairs, (order.key(lcm), i, k))

    for f in polys:
        f = {m: c for m, c in f.items() if c}
        if not f:
            continue
        r, _ = divide(f, basis)
        if r:
            add_element(r)

    while pairs:
        _, i, j = heapq.heappop(pairs)
        processed.add((i, j))
        li, lj = basis.leads[i], basis.leads[j]
        lcm = _lcm(li, lj)
        if _add(li, lj) == lcm:
            continue  # coprime leading monomials
        if _chain_skip(basis.leads, i, j, lcm, processed):
            continue
        s = spoly(basis.polys[i], basis.polys[j], order)
        if not s:
            continue
        r, _ = divide(s, basis)
        if r:
            add_element(r)

    return _interreduce(basis.polys, order)


def _chain_skip(leads, i, j, lcm, processed) -> bool:
    for k, lk in enumerate(leads):
        if k in (i, j) or not _divides(lk, lcm):
            continue
        if (min(i, k), max(i, k)) in processed and (min(j, k), max(j, k)) in processed:
            return True
    return False


def _interreduce(polys: List[Poly], order: MonomialOrder) -> List[Poly]:
    leads = [order.lead(p) for p in polys]
    keep = []
    for i, li in enumerate(leads):
        dominated = any(
            j != i and _divides(lj, li) and (lj != li or j < i) for j, lj in enumerate(leads)
        )
        if not dominated:
            keep.append(polys[i])
    out = []
    for i, p in enumerate(keep):
        others = Basis([q for j, q in enumerate(keep) if j != i], order)
        lm = order.lead(p)
        tail = {m: c for m, c in p.items() if m != lm}
        r, _ = divide(tail, others)
        r[lm] = p[lm]
        out.append(_monic(r, order))
    out.sort(key=lambda p: order.key(order.lead(p)))
    return out


def normal_form(p: Poly, basis: Basis) -> Poly:
    return divide(p, basis)[0]


def is_groebner(polys: Sequence[Poly], order: MonomialOrder) -> bool:
    """Buchberger's criterion: every S-polynomial reduces to zero."""
    b = Basis(polys, order)
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if divide(spoly(polys[i], polys[j], order), b)[0]:
                return False
    return True
