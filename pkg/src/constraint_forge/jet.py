"""Sparse polynomials over jet variables with exact parameter coefficients.

A jet variable is a field (or momentum) component together with a derivative
multi-index ``(k0, k1, k2, k3)`` counting lower-index derivatives
``d_0^k0 d_1^k1 d_2^k2 d_3^k3``.  Every distinct jet variable is an independent
polynomial indeterminate.

Monomials are tuples of ``(variable id, exponent)`` pairs sorted by id, where
ids come from a process-wide intern table.  Term order for printing and
serialization is always recomputed from the variables themselves, so the
intern order never leaks into output.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, Mapping, NamedTuple, Tuple

from .params import ONE, ZERO, ParamCoefficient

DEFAULT_DEPTH = 2
NO_DERIVS = (0, 0, 0, 0)


class DepthError(ValueError):
    """A derivative order exceeded the jet depth allowed in the current context."""


class JetVariable(NamedTuple):
    """One polynomial indeterminate.

    Field order is also the canonical variable order: field name, component,
    derivative multi-index, lattice site, kind.
    """

    field: str
    component: int
    derivs: Tuple[int, int, int, int] = NO_DERIVS
    site: tuple = ()
    kind: str = "field"  # field | momentum | multiplier | euler | symbol

    @property
    def order(self) -> int:
        return sum(self.derivs)

    @property
    def base(self) -> "JetVariable":
        return self._replace(derivs=NO_DERIVS)

    def differentiated(self, direction: int, times: int = 1) -> "JetVariable":
        k = list(self.derivs)
        k[direction] += times
        return self._replace(derivs=tuple(k))

    def label(self) -> str:
        text = f"{self.field}{self.component}"
        for mu, k in enumerate(self.derivs):
            text = f"d{mu}" * k + text if k else text
        if self.site:
            text += "@" + ",".join(map(str, self.site))
        return text


_VARS: list = []
_IDS: Dict[JetVariable, int] = {}


def var_id(v: JetVariable) -> int:
    i = _IDS.get(v)
    if i is None:
        i = len(_VARS)
        _VARS.append(v)
        _IDS[v] = i
    return i


def var_of(i: int) -> JetVariable:
    return _VARS[i]


Monomial = Tuple[Tuple[int, int], ...]


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for i, e in m2:
        d[i] = d.get(i, 0) + e
    return tuple(sorted(d.items()))


def _coerce_coeff(c):
    if isinstance(c, ParamCoefficient):
        return c
    return ParamCoefficient.coerce(c)


class JetPolynomial:
    """Immutable sparse polynomial: ``{monomial: ParamCoefficient}`` with no zero entries."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, ParamCoefficient] | None = None, _trusted: bool = False):
        if terms is None:
            terms = {}
        if _trusted:
            self.terms = terms
        else:
            self.terms = {m: _coerce_coeff(c) for m, c in terms.items() if c}
        self._hash = None

    # constructors ----------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "JetPolynomial":
        c = _coerce_coeff(c)
        return cls({(): c} if c else {}, _trusted=True)

    @classmethod
    def variable(cls, v: JetVariable) -> "JetPolynomial":
        return cls({((var_id(v), 1),): ONE}, _trusted=True)

    @classmethod
    def from_monomial(cls, powers: Mapping[JetVariable, int], c=ONE) -> "JetPolynomial":
        c = _coerce_coeff(c)
        if not c:
            return ZERO_POLY
        m = tuple(sorted((var_id(v), e) for v, e in powers.items() if e))
        return cls({m: c}, _trusted=True)

    # ring operations ---------------------------------------------------------
    def __add__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return JetPolynomial(out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return JetPolynomial({m: -c for m, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, ParamCoefficient)):
            return self.scale(other)
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        if not self.terms or not other.terms:
            return ZERO_POLY
        out: Dict[Monomial, ParamCoefficient] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                s = out.get(m)
                if s is None:
                    out[m] = c
                else:
                    s = s + c
                    if s:
                        out[m] = s
                    else:
                        del out[m]
        return JetPolynomial(out, _trusted=True)

    __rmul__ = __mul__

    def scale(self, c) -> "JetPolynomial":
        c = _coerce_coeff(c)
        if not c:
            return ZERO_POLY
        if c == ONE:
            return self
        return JetPolynomial({m: v * c for m, v in self.terms.items()}, _trusted=True)

    def __truediv__(self, c):
        return self.scale(_coerce_coeff(c).inverse())

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomial")
        out, base = ONE_POLY, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison ------------------------------------------------------------
    def __eq__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # inspection ------------------------------------------------------------
    def variables(self) -> set:
        return {var_of(i) for m in self.terms for i, _ in m}

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant_term(self) -> ParamCoefficient:
        return self.terms.get((), ZERO)

    def max_order(self, pred: Callable[[JetVariable], bool] = lambda v: True) -> int:
        return max((v.order for v in self.variables() if pred(v)), default=0)

    def items(self) -> Iterator[Tuple[Dict[JetVariable, int], ParamCoefficient]]:
        """Terms as ``({variable: exponent}, coefficient)`` in canonical order."""
        for m, c in self.sorted_terms():
            yield {var_of(i): e for i, e in m}, c

    def sorted_terms(self):
        def key(item):
            m = item[0]
            return sorted(((var_of(i), e) for i, e in m), reverse=True)

        return sorted(self.terms.items(), key=key, reverse=True)

    def coefficient(self, powers: Mapping[JetVariable, int]) -> ParamCoefficient:
        m = tuple(sorted((var_id(v), e) for v, e in powers.items() if e))
        return self.terms.get(m, ZERO)

    def split(self, pred: Callable[[JetVariable], bool]) -> Dict[Monomial, "JetPolynomial"]:
        """Group terms by the part of each monomial built from variables satisfying ``pred``.

        Returns ``{monomial in pred-variables: polynomial in the other variables}``.
        """
        groups: Dict[Monomial, dict] = {}
        for m, c in self.terms.items():
            inner = tuple(p for p in m if pred(var_of(p[0])))
            rest = tuple(p for p in m if not pred(var_of(p[0])))
            groups.setdefault(inner, {})[rest] = c
        return {k: JetPolynomial(v, _trusted=True) for k, v in groups.items()}

    # substitution / evaluation ----------------------------------------------
    def subs(self, mapping: Mapping[JetVariable, "JetPolynomial"]) -> "JetPolynomial":
        ids = {var_id(v): _as_poly(p) for v, p in mapping.items()}
        out = ZERO_POLY
        cache: Dict[Tuple[int, int], JetPolynomial] = {}
        for m, c in self.terms.items():
            kept = []
            term = JetPolynomial.constant(c)
            for i, e in m:
                if i in ids:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = ids[i] ** e
                    term = term * cache[key]
                else:
                    kept.append((i, e))
            if kept:
                term = term * JetPolynomial({tuple(kept): ONE}, _trusted=True)
            out = out + term
        return out

    def map_coefficients(self, fn: Callable[[ParamCoefficient], ParamCoefficient]) -> "JetPolynomial":
        return JetPolynomial({m: fn(c) for m, c in self.terms.items()})

    def evaluate(self, values: Mapping[JetVariable, object], params: Mapping[str, float]):
        """Numerically evaluate; values may be floats or numpy arrays."""
        total = 0.0
        for m, c in self.terms.items():
            t = c.evaluate(params)
            for i, e in m:
                t = t * values[var_of(i)] ** e
            total = total + t
        return total

    def __repr__(self):
        return f"JetPolynomial({to_text(self)!r})"

    def __str__(self):
        return to_text(self)


def _as_poly(x):
    if isinstance(x, JetPolynomial):
        return x
    if isinstance(x, (int, Fraction, ParamCoefficient)):
        return JetPolynomial.constant(x)
    return None


ZERO_POLY = JetPolynomial({}, _trusted=True)
ONE_POLY = JetPolynomial({(): ONE}, _trusted=True)


def poly_sum(polys: Iterable[JetPolynomial]) -> JetPolynomial:
    out: Dict[Monomial, ParamCoefficient] = {}
    for p in polys:
        for m, c in p.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
    return JetPolynomial(out, _trusted=True)


def jet(field: str, component: int, derivs=NO_DERIVS, *, kind: str = "field", site: tuple = ()) -> JetPolynomial:
    return JetPolynomial.variable(JetVariable(field, component, tuple(derivs), tuple(site), kind))


# calculus ----------------------------------------------------------------------
def differentiate_jet(p: JetPolynomial, v: JetVariable) -> JetPolynomial:
    """Formal partial derivative treating every jet variable as independent."""
    vid = _IDS.get(v)
    if vid is None:
        return ZERO_POLY
    out: Dict[Monomial, ParamCoefficient] = {}
    for m, c in p.terms.items():
        for j, (i, e) in enumerate(m):
            if i == vid:
                nm = m[:j] + ((i, e - 1),) + m[j + 1:] if e > 1 else m[:j] + m[j + 1:]
                cc = c * e
                s = out.get(nm)
                out[nm] = cc if s is None else s + cc
                if not out[nm]:
                    del out[nm]
                break
    return JetPolynomial(out, _trusted=True)


_DERIV_CACHE: Dict[Tuple[int, int], int] = {}


def _bumped(i: int, direction: int) -> int:
    key = (i, direction)
    j = _DERIV_CACHE.get(key)
    if j is None:
        j = var_id(var_of(i).differentiated(direction))
        _DERIV_CACHE[key] = j
    return j


def total_derivative(p: JetPolynomial, direction: int, depth: int | None = DEFAULT_DEPTH,
                     pred: Callable[[JetVariable], bool] | None = None) -> JetPolynomial:
    """Total derivative d_direction by the Leibniz rule.

    Variables for which ``pred`` is False (parameters-like symbols such as
    multipliers) are treated as constants.  Momenta at fixed time carry no time
    derivatives, so ``direction == 0`` on a momentum raises.
    """
    if direction not in (0, 1, 2, 3):
        raise ValueError(f"direction must be 0..3, got {direction}")
    out: Dict[Monomial, ParamCoefficient] = {}
    for m, c in p.terms.items():
        for j, (i, e) in enumerate(m):
            v = var_of(i)
            if v.kind in ("multiplier", "symbol") or (pred is not None and not pred(v)):
                continue
            if v.kind == "momentum" and direction == 0:
                raise DepthError(f"momentum {v.label()} carries no time derivatives")
            if depth is not None and v.order + 1 > depth:
                raise DepthError(f"derivative of {v.label()} exceeds jet depth {depth}")
            k = _bumped(i, direction)
            rest = m[:j] + ((i, e - 1),) + m[j + 1:] if e > 1 else m[:j] + m[j + 1:]
            nm = _mono_mul(rest, ((k, 1),))
            cc = c * e
            s = out.get(nm)
            if s is None:
                out[nm] = cc
            else:
                s = s + cc
                if s:
                    out[nm] = s
                else:
                    del out[nm]
    return JetPolynomial(out, _trusted=True)


def normal_form(p: JetPolynomial) -> JetPolynomial:
    """Canonical representative: terms re-inserted in the fixed variable order.

    The dict representation is already canonical (equal polynomials compare
    equal); this only fixes iteration order so that printing is deterministic.
    """
    return JetPolynomial(dict(p.sorted_terms()), _trusted=True)


# serialization -----------------------------------------------------------------
def _coeff_text(c: ParamCoefficient) -> str:
    s = str(c)
    if " " in s or "/" in s and not c.is_simple:
        return f"({s})"
    return s


def to_text(p: JetPolynomial) -> str:
    """Deterministic text form used in reports and golden files."""
    if not p.terms:
        return "0"
    parts = []
    for m, c in p.sorted_terms():
        mono = "*".join(
            var_of(i).label() + (f"^{e}" if e != 1 else "")
            for i, e in sorted(m, key=lambda t: var_of(t[0]))
        )
        cs = _coeff_text(c)
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append("-" + mono)
        else:
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")
