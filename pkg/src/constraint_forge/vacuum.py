"""The Higgs-vacuum ideal: |phi|^2 = a^2 and its differential consequences.

Generators (``phi`` an iso 3-vector, derivatives lower-index):

* ``chi      = phi.phi - a^2``
* ``g[mu]    = phi . d_mu phi``            (half the first prolongation of chi)
* ``g[mu,nu] = d_nu phi . d_mu phi + phi . d_mu d_nu phi``

Normal forms
------------
Depth 0 and 1 reduce by a reduced Groebner basis computed with
:func:`groebner.groebner` (grlex, highest derivatives first, ``phi3 > phi2 >
phi1``).  At depth 2 a Buchberger completion over all 4 directions is out of
reach, so second derivatives are first replaced by ``w - phi (phi.w +
v_mu.v_nu) / a^2``.  This substitution differs from the identity by multiples
of ``g[mu,nu]`` and sends the whole depth-2 ideal into the depth-1 ideal
extended to polynomials in ``w``; the remaining coefficients are then reduced
by the depth-1 basis.  The result depends only on the class of ``p`` modulo
the ideal, which is all a normal form has to guarantee.

Cofactors come from a second, independent map: tangential projection of
first and second derivatives followed by division by ``chi``.  Each step is
telescoped into explicit multiples of the generators, so membership
certificates are checked by re-expansion.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from .groebner import GRLEX, Basis, PolyRing, divide, groebner
from .jet import (NO_DERIVS, ONE_POLY, ZERO_POLY, DepthError, JetPolynomial, JetVariable,
                  poly_sum, total_derivative, var_id, var_of)
from .params import A, ParamCoefficient

FIELD = "phi"
DIRECTIONS = (0, 1, 2, 3)


def phi(i: int, derivs=NO_DERIVS, name: str = FIELD) -> JetPolynomial:
    return JetPolynomial.variable(JetVariable(name, i, tuple(derivs)))


def _unit(mu: int, nu: int | None = None) -> Tuple[int, int, int, int]:
    k = [0, 0, 0, 0]
    k[mu] += 1
    if nu is not None:
        k[nu] += 1
    return tuple(k)


def chi(name: str = FIELD) -> JetPolynomial:
    return poly_sum(phi(i, name=name) ** 2 for i in (1, 2, 3)) - JetPolynomial.constant(A ** 2)


def _is_vacuum_var(v: JetVariable, name: str) -> bool:
    return v.kind == "field" and v.field == name


def _pairs(directions):
    return [(mu, nu) for i, mu in enumerate(directions) for nu in directions[i:]]


@lru_cache(maxsize=None)
def _ring(depth: int, directions: Tuple[int, ...], name: str) -> PolyRing:
    # highest derivatives first, then phi3 > phi2 > phi1
    variables: List[JetVariable] = []
    if depth >= 2:
        for mu, nu in reversed(_pairs(directions)):
            variables += [JetVariable(name, i, _unit(mu, nu)) for i in (3, 2, 1)]
    if depth >= 1:
        for mu in reversed(directions):
            variables += [JetVariable(name, i, _unit(mu)) for i in (3, 2, 1)]
    variables += [JetVariable(name, i) for i in (3, 2, 1)]
    return PolyRing(variables, GRLEX)


@lru_cache(maxsize=None)
def _completed_basis(depth: int, directions: Tuple[int, ...], name: str) -> Tuple[PolyRing, Basis]:
    ring = _ring(depth, directions, name)
    gens = [chi(name)]
    if depth >= 1:
        gens += [phi_dot(name, mu) for mu in directions]
    polys = groebner([ring.to_dense(g) for g in gens], GRLEX)
    return ring, Basis(polys, GRLEX)


def phi_dot(name: str, mu: int, nu: int | None = None) -> JetPolynomial:
    """``phi . d_mu phi`` or, with ``nu``, ``d_nu(phi . d_mu phi)``."""
    g = poly_sum(phi(i, name=name) * phi(i, _unit(mu), name) for i in (1, 2, 3))
    if nu is None:
        return g
    return total_derivative(g, nu, depth=2)


@dataclass(frozen=True)
class MembershipResult:
    member: bool
    cofactors: Dict[str, JetPolynomial]
    normal_form: JetPolynomial

    def recombine(self, ideal: "StrongIdeal") -> JetPolynomial:
        gens = ideal.generator_map()
        return poly_sum(c * gens[n] for n, c in self.cofactors.items())


@dataclass(frozen=True)
class StrongIdeal:
    """Vacuum ideal of a given jet depth; ``depth=None`` is the zero ideal."""

    depth: int | None
    directions: Tuple[int, ...] = DIRECTIONS
    field: str = FIELD
    generators: Tuple[Tuple[str, JetPolynomial], ...] = ()
    _cache: dict = dataclasses.field(default_factory=dict, compare=False, repr=False, hash=False)

    # construction -----------------------------------------------------------
    @classmethod
    def empty(cls) -> "StrongIdeal":
        return cls(None, (), FIELD, ())

    def generator_map(self) -> Dict[str, JetPolynomial]:
        return dict(self.generators)

    @property
    def reduction_basis(self) -> List[JetPolynomial]:
        if self.depth is None:
            return []
        ring, basis = _completed_basis(min(self.depth, 1), self.directions, self.field)
        out = [ring.from_dense(p) for p in basis.polys]
        if self.depth >= 2:
            out += [g for n, g in self.generators if n.count(",") == 1]
        return out

    # reduction ----------------------------------------------------------------
    def check_depth(self, p: JetPolynomial) -> None:
        if self.depth is None:
            return
        for v in p.variables():
            if _is_vacuum_var(v, self.field):
                if v.order > self.depth:
                    raise DepthError(f"{v.label()} exceeds ideal depth {self.depth}")
                if any(k and mu not in self.directions for mu, k in enumerate(v.derivs)):
                    raise DepthError(f"{v.label()} uses a direction outside {self.directions}")

    def reduce(self, p: JetPolynomial) -> JetPolynomial:
        """Canonical normal form of ``p`` modulo the ideal."""
        if self.depth is None or not p:
            return p
        self.check_depth(p)
        if self.depth >= 2:
            p = p.subs(self._w_substitution())
        ring, basis = _completed_basis(min(self.depth, 1), self.directions, self.field)
        return _reduce_coefficients(p, ring, basis, self.field, max_order=min(self.depth, 1))

    def contains(self, p: JetPolynomial) -> bool:
        return self.reduce(p).is_zero()

    def _w_substitution(self) -> Dict[JetVariable, JetPolynomial]:
        sub = self._cache.get("w")
        if sub is None:
            sub = {}
            inv = JetPolynomial.constant(A ** -2)
            for mu, nu in _pairs(self.directions):
                h = self.generator_map()[_gname(mu, nu)]
                for i in (1, 2, 3):
                    w = JetVariable(self.field, i, _unit(mu, nu))
                    sub[w] = JetPolynomial.variable(w) - phi(i, name=self.field) * h * inv
            self._cache["w"] = sub
        return sub

    # certificates -------------------------------------------------------------
    def membership_with_cofactors(self, p: JetPolynomial) -> MembershipResult:
        """Decide membership and, for members, return cofactors with ``sum c_g g = p``."""
        if self.depth is None:
            return MembershipResult(p.is_zero(), {}, p)
        self.check_depth(p)
        projected, cof = _project_with_cofactors(p, self)
        q, r = _divide_by_chi(projected, self.field)
        if r:
            return MembershipResult(False, {}, self.reduce(p))
        if q:
            cof["chi"] = cof.get("chi", ZERO_POLY) + q
        cof = {k: v for k, v in cof.items() if v}
        result = MembershipResult(True, cof, ZERO_POLY)
        if result.recombine(self) != p:
            raise ArithmeticError("cofactor certificate failed to re-expand")
        return result


def _gname(mu: int, nu: int | None = None) -> str:
    return f"g[{mu}]" if nu is None else f"g[{mu},{nu}]"


def build_ideal(depth: int | None = 2, directions: Sequence[int] = DIRECTIONS, name: str = FIELD) -> StrongIdeal:
    """Vacuum ideal with prolongations up to total derivative order ``depth`` (0, 1 or 2)."""
    if depth is None:
        return StrongIdeal.empty()
    if depth not in (0, 1, 2):
        raise ValueError(f"ideal depth must be 0, 1 or 2, got {depth}")
    directions = tuple(sorted(directions))
    c = chi(name)
    gens = [("chi", c)]
    if depth >= 1:
        for mu in directions:
            g = total_derivative(c, mu, depth=1).scale(ParamCoefficient(1) / 2)
            gens.append((_gname(mu), g))
    if depth >= 2:
        first = dict(gens)
        for mu, nu in _pairs(directions):
            gens.append((_gname(mu, nu), total_derivative(first[_gname(mu)], nu, depth=2)))
    return StrongIdeal(depth, directions, name, tuple(gens))


# helpers ----------------------------------------------------------------------------

def _reduce_coefficients(p: JetPolynomial, ring: PolyRing, basis: Basis, name: str, max_order: int) -> JetPolynomial:
    def inside(v: JetVariable) -> bool:
        return _is_vacuum_var(v, name) and v.order <= max_order

    groups = p.split(lambda v: not inside(v))
    parts = []
    for outer, coeff in groups.items():
        r, _ = divide(ring.to_dense(coeff), basis)
        if r:
            parts.append(ring.from_dense(r) * JetPolynomial({outer: ParamCoefficient(1)}, _trusted=True))
    return poly_sum(parts)


def _divide_by_chi(p: JetPolynomial, name: str) -> Tuple[JetPolynomial, JetPolynomial]:
    """``p = q*chi + r`` with no term of ``r`` containing ``phi3^2``."""
    c = chi(name)
    p3 = JetVariable(name, 3)
    q_parts, work = [], p
    while True:
        heavy = {m: cf for m, cf in work.terms.items() if any(var_of(i) == p3 and e >= 2 for i, e in m)}
        if not heavy:
            return poly_sum(q_parts), work
        quot = _lower_phi3(JetPolynomial(heavy, _trusted=True), p3)
        q_parts.append(quot)
        work = work - quot * c


def _lower_phi3(p: JetPolynomial, p3: JetVariable) -> JetPolynomial:
    """Divide each term by phi3^2 (all terms must contain it)."""
    i3 = var_id(p3)
    terms = {}
    for m, c in p.terms.items():
        nm = []
        for i, e in m:
            if i == i3:
                if e > 2:
                    nm.append((i, e - 2))
            else:
                nm.append((i, e))
        terms[tuple(nm)] = c
    return JetPolynomial(terms, _trusted=True)


def _project_with_cofactors(p: JetPolynomial, ideal: StrongIdeal):
    """Apply the tangential projection to every derivative of phi.

    Returns ``(Psi(p), cofactors)`` with ``p - Psi(p) = sum cofactors[g] * g``.
    """
    name = ideal.field
    gens = ideal.generator_map()
    a2inv = JetPolynomial.constant(A ** -2)
    images: Dict[JetVariable, JetPolynomial] = {}
    diffs: Dict[JetVariable, Dict[str, JetPolynomial]] = {}

    def g(mu, nu=None):
        return gens[_gname(mu, nu)]

    def proj_v(mu, i):
        return phi(i, _unit(mu), name) - phi(i, name=name) * g(mu) * a2inv

    for v in p.variables():
        if not _is_vacuum_var(v, name) or v.order == 0:
            continue
        dirs = [mu for mu, k in enumerate(v.derivs) for _ in range(k)]
        i = v.component
        fi = phi(i, name=name)
        if len(dirs) == 1:
            mu = dirs[0]
            images[v] = proj_v(mu, i)
            diffs[v] = {_gname(mu): fi * a2inv}
        else:
            mu, nu = dirs
            pvpv = poly_sum(proj_v(mu, j) * proj_v(nu, j) for j in (1, 2, 3))
            pw = JetPolynomial.variable(v) - fi * poly_sum(phi(j, name=name) * phi(j, v.derivs, name)
                                                              for j in (1, 2, 3)) * a2inv
            images[v] = pw - fi * pvpv * a2inv
            a4inv = JetPolynomial.constant(A ** -4)
            diffs[v] = {
                _gname(*sorted((mu, nu))): fi * a2inv,
                _gname(mu): -fi * g(nu) * a4inv,
                "chi": fi * g(mu) * g(nu) * a4inv * a2inv,
            }

    projected = p.subs(images)
    cof: Dict[str, List[JetPolynomial]] = {}
    for m, c in p.terms.items():
        factors = []
        for idx, e in m:
            factors += [var_of(idx)] * e
        prefix = JetPolynomial.constant(c)
        for j, v in enumerate(factors):
            if v in diffs:
                suffix = ONE_POLY
                for u in factors[j + 1:]:
                    suffix = suffix * JetPolynomial.variable(u)
                for gname, cg in diffs[v].items():
                    cof.setdefault(gname, []).append(prefix * cg * suffix)
            prefix = prefix * images.get(v, JetPolynomial.variable(v))
    return projected, {k: poly_sum(v) for k, v in cof.items()}


def prolongation_basis(directions: Sequence[int], name: str = FIELD) -> Tuple[PolyRing, Basis]:
    """Groebner basis of ``<phi . d_mu phi>`` alone (no ``chi``) for the given directions."""
    return _prolongation_basis(tuple(sorted(directions)), name)


@lru_cache(maxsize=None)
def _prolongation_basis(directions, name):
    variables = []
    for mu in reversed(directions):
        variables += [JetVariable(name, i, _unit(mu)) for i in (3, 2, 1)]
    variables += [JetVariable(name, i) for i in (3, 2, 1)]
    ring = PolyRing(variables, GRLEX)
    polys = groebner([ring.to_dense(phi_dot(name, mu)) for mu in directions], GRLEX)
    return ring, Basis(polys, GRLEX)


def reduce_modulo_prolongations(p: JetPolynomial, directions: Sequence[int], name: str = FIELD) -> JetPolynomial:
    """Normal form modulo ``<phi . d_mu phi : mu in directions>`` (chi not included)."""
    ring, basis = prolongation_basis(directions, name)
    return _reduce_coefficients(p, ring, basis, name, max_order=1)


def tangential_residual(p: JetPolynomial, ideal: StrongIdeal) -> JetPolynomial:
    """Independent normal form: projection followed by division by chi."""
    projected, _ = _project_with_cofactors(p, ideal)
    return _divide_by_chi(projected, ideal.field)[1]


__all__ = [
    "StrongIdeal", "MembershipResult", "build_ideal", "chi", "phi", "phi_dot", "prolongation_basis",
    "reduce_modulo_prolongations", "tangential_residual",
]
