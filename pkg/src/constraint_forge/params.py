"""Exact coefficients: rational functions in the model parameters a, e, lam.

Coefficients are stored as a Laurent polynomial numerator over a polynomial
denominator.  Almost every coefficient met in practice is a single Laurent
monomial such as ``-1/2 * a^-3 * e^-1``; those stay on a fast path that never
leaves Python dicts.  Only genuine polynomial denominators (``1/(a^2 - 1)``)
go through sympy for gcd cancellation.
"""
from __future__ import annotations

from fractions import Fraction
from functools import reduce as _fold
from typing import Mapping, Union

PARAMS = ("a", "e", "lam")
_ZERO_EXP = (0, 0, 0)
_ONE_POLY = {_ZERO_EXP: Fraction(1)}

Number = Union[int, Fraction]


def _padd(x, y):
    out = dict(x)
    for k, v in y.items():
        s = out.get(k, 0) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _pmul(x, y):
    out = {}
    for k1, v1 in x.items():
        for k2, v2 in y.items():
            k = (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2])
            s = out.get(k, 0) + v1 * v2
            if s:
                out[k] = s
            else:
                out.pop(k, None)
    return out


def _shift(x, m, sign=1):
    return {(k[0] + sign * m[0], k[1] + sign * m[1], k[2] + sign * m[2]): v for k, v in x.items()}


def _min_exps(x):
    return tuple(min(k[i] for k in x) for i in range(3))


def _sympy_gens():
    import sympy

    return sympy.symbols(" ".join(PARAMS))


def _to_sympy_poly(d):
    import sympy

    return sympy.Poly.from_dict({k: sympy.Rational(v.numerator, v.denominator) for k, v in d.items()},
                                *_sympy_gens(), domain=sympy.QQ)


def _from_sympy_poly(p):
    out = {}
    for k, v in p.as_dict().items():
        k = tuple(k) + (0,) * (3 - len(k))
        out[k] = Fraction(int(v.p), int(v.q))
    return out


class ParamCoefficient:
    """Exact element of Q(a, e, lam); immutable and hashable."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Mapping | Number = 0, den: Mapping | None = None, _normalized: bool = False):
        if not isinstance(num, Mapping):
            num = {_ZERO_EXP: Fraction(num)} if num else {}
        if den is None or _normalized:
            self.num = {k: Fraction(v) for k, v in num.items() if v}
            self.den = dict(den) if den is not None else _ONE_POLY
        else:
            n, d = _normalize({k: Fraction(v) for k, v in num.items() if v},
                              {k: Fraction(v) for k, v in den.items() if v})
            self.num, self.den = n, d
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def param(cls, name: str, power: int = 1) -> "ParamCoefficient":
        exps = [0, 0, 0]
        exps[PARAMS.index(name)] = power
        return cls({tuple(exps): Fraction(1)})

    @classmethod
    def coerce(cls, x) -> "ParamCoefficient":
        if isinstance(x, ParamCoefficient):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        raise TypeError(f"cannot use {type(x).__name__} as an exact coefficient")

    @property
    def is_simple(self) -> bool:
        return self.den is _ONE_POLY or self.den == _ONE_POLY

    def is_zero(self) -> bool:
        return not self.num

    def is_monomial(self) -> bool:
        return self.is_simple and len(self.num) == 1

    def is_constant(self) -> bool:
        return self.is_simple and (not self.num or set(self.num) == {_ZERO_EXP})

    def as_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a rational constant")
        return self.num.get(_ZERO_EXP, Fraction(0))

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.is_simple and other.is_simple:
            return ParamCoefficient(_padd(self.num, other.num), _normalized=True)
        return ParamCoefficient(_padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
                                _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return ParamCoefficient({k: -v for k, v in self.num.items()}, self.den, _normalized=True)

    def __sub__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return ZERO
            return ParamCoefficient({k: v * other for k, v in self.num.items()}, self.den, _normalized=True)
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if self.is_simple and other.is_simple:
            return ParamCoefficient(_pmul(self.num, other.num), _normalized=True)
        return ParamCoefficient(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inverse(self) -> "ParamCoefficient":
        if not self.num:
            raise ZeroDivisionError("inverse of zero coefficient")
        if self.is_simple and len(self.num) == 1:
            (k, v), = self.num.items()
            return ParamCoefficient({(-k[0], -k[1], -k[2]): 1 / v}, _normalized=True)
        return ParamCoefficient(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce_or_none(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return ParamCoefficient.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    # comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ParamCoefficient(other)
        if not isinstance(other, ParamCoefficient):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    def __bool__(self):
        return bool(self.num)

    # evaluation / display -------------------------------------------------
    def evaluate(self, values: Mapping[str, float]) -> float:
        vals = [values.get(p, 1.0) for p in PARAMS]

        def ev(d):
            return sum(float(c) * vals[0] ** k[0] * vals[1] ** k[1] * vals[2] ** k[2] for k, c in d.items())

        return ev(self.num) / ev(self.den)

    def to_sympy(self):
        import sympy

        a, e, lam = _sympy_gens()

        def ev(d):
            return sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * a ** k[0] * e ** k[1] * lam ** k[2]
                               for k, c in d.items()])

        return ev(self.num) / ev(self.den)

    def __repr__(self):
        return f"ParamCoefficient({self})"

    def __str__(self):
        num = _poly_str(self.num)
        if self.is_simple:
            return num
        return f"({num})/({_poly_str(self.den)})"


def _poly_str(d) -> str:
    if not d:
        return "0"
    parts = []
    for k in sorted(d, reverse=True):
        c = d[k]
        factors = [f"{p}^{x}" if x != 1 else p for p, x in zip(PARAMS, k) if x]
        if not factors:
            parts.append(str(c))
        elif c == 1:
            parts.append("*".join(factors))
        elif c == -1:
            parts.append("-" + "*".join(factors))
        else:
            parts.append(f"{c}*" + "*".join(factors))
    return " + ".join(parts).replace("+ -", "- ")


def _coerce_or_none(x):
    if isinstance(x, ParamCoefficient):
        return x
    if isinstance(x, (int, Fraction)):
        return ParamCoefficient(x)
    return None


def _normalize(num, den):
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return {}, _ONE_POLY
    # clear negative exponents so that both sides are genuine polynomials
    m = tuple(min(0, v) for v in _min_exps(num))
    num = _shift(num, m, -1)
    den = _shift(den, m, -1)
    if len(den) == 1:
        (k, v), = den.items()
        return {kk: c / v for kk, c in _shift(num, k, -1).items()}, _ONE_POLY
    pn, pd = _to_sympy_poly(num), _to_sympy_poly(den)
    g = pn.gcd(pd)
    pn, pd = pn.exquo(g), pd.exquo(g)
    num, den = _from_sympy_poly(pn), _from_sympy_poly(pd)
    content = _min_exps(den)
    den = _shift(den, content, -1)
    num = _shift(num, content, -1)
    lead = den[max(den)]
    num = {k: v / lead for k, v in num.items()}
    den = {k: v / lead for k, v in den.items()}
    if den == _ONE_POLY:
        den = _ONE_POLY
    return num, den


def param_product(coeffs) -> ParamCoefficient:
    return _fold(lambda x, y: x * y, coeffs, ONE)


ZERO = ParamCoefficient(0)
ONE = ParamCoefficient(1)
A = ParamCoefficient.param("a")
E = ParamCoefficient.param("e")
LAM = ParamCoefficient.param("lam")
