"""Index-notation expressions and their expansion into jet polynomials.

Conventions
-----------
* Lorentz indices are always written upstairs.  A repeated Lorentz index is
  contracted with the metric diag(+1, -1, -1, -1), so ``X[mu]*Y[mu]`` means
  ``X^mu Y_mu``.
* Greek index names (``mu``, ``nu``, ...) in a Lorentz slot run over 0..3,
  Latin names in a Lorentz slot run over the spatial values 1..3.
* Iso-space (internal) indices run over 1..n and are summed without a metric.
* ``d(X, mu)`` is the contravariant derivative ``d^mu X = eta^{mu mu} d_mu X``.
* Coordinates of a Lorentz field are stored upstairs (``A^mu``) while
  canonical momenta are stored downstairs (``Pi_mu``); ``Pi[mu]`` in an
  expression therefore means ``eta^{mu mu} Pi_mu``.

Expansion is table based: each node evaluates to a table mapping values of
its free indices to a :class:`JetPolynomial`, and products contract shared
indices as soon as both factors are known.  This keeps the cost proportional
to the number of nonzero components rather than to ``4**(bound indices)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Sequence, Tuple, Union

from .jet import DEFAULT_DEPTH, NO_DERIVS, ZERO_POLY, JetPolynomial, JetVariable, poly_sum, total_derivative
from .params import PARAMS, ParamCoefficient


class TensorError(ValueError):
    category = "tensor"


class IndexDisciplineError(TensorError):
    category = "index-discipline"


class MissingAssignmentError(TensorError):
    category = "missing-assignment"


class IndexRangeError(TensorError):
    category = "index-range"


class UnknownSymbolError(TensorError):
    category = "unknown-symbol"


class ArityError(TensorError):
    category = "arity"


GREEK = {"alpha", "beta", "gamma", "kappa", "mu", "nu", "omega", "rho", "sigma", "tau", "xi", "zeta"}
LORENTZ_VALUES = (0, 1, 2, 3)
SPATIAL_VALUES = (1, 2, 3)


def is_greek(name: str) -> bool:
    return re.sub(r"[0-9_']+$", "", name) in GREEK


def metric(v: int) -> int:
    return 1 if v == 0 else -1


# ---------------------------------------------------------------------------
# declarations

@dataclass(frozen=True)
class FieldDecl:
    """A declared indexed symbol.

    ``slot`` is ``"lorentz"`` (components 0..3) or ``"iso"`` (components
    1..size).  ``kind`` is ``field``, ``momentum`` or ``symbol``; ``jet_name``
    is the name used for the underlying :class:`JetVariable`.
    """

    name: str
    slot: str
    size: int
    kind: str = "field"
    jet_name: str | None = None

    @property
    def components(self) -> Tuple[int, ...]:
        return LORENTZ_VALUES if self.slot == "lorentz" else tuple(range(1, self.size + 1))

    def variable(self, component: int) -> JetVariable:
        return JetVariable(self.jet_name or self.name, component, NO_DERIVS, (), self.kind)


@dataclass
class Scope:
    """Symbol table used while expanding: fields, momenta, opaque symbols and macros."""

    decls: Dict[str, FieldDecl] = field(default_factory=dict)
    macros: Dict[str, Tuple[Tuple[str, ...], "Node"]] = field(default_factory=dict)
    params: Tuple[str, ...] = PARAMS
    depth: int = DEFAULT_DEPTH
    _macro_cache: Dict[str, "Table"] = field(default_factory=dict, repr=False)

    def declare(self, decl: FieldDecl) -> None:
        self.decls[decl.name] = decl

    def define(self, name: str, indices: Sequence[str], body: "Node") -> None:
        self.macros[name] = (tuple(indices), body)
        self._macro_cache.pop(name, None)


# ---------------------------------------------------------------------------
# expression nodes

Index = Union[str, int]


class Node:
    def __add__(self, other):
        return Add((self, _node(other)))

    def __radd__(self, other):
        return Add((_node(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Num(-1), _node(other)))))

    def __mul__(self, other):
        return Mul((self, _node(other)))

    def __rmul__(self, other):
        return Mul((_node(other), self))

    def __neg__(self):
        return Mul((Num(-1), self))

    def __truediv__(self, other):
        return Div(self, _node(other))

    def __pow__(self, n: int):
        return Pow(self, n)


def _node(x) -> Node:
    if isinstance(x, Node):
        return x
    return Num(x)


@dataclass(frozen=True, eq=True)
class Num(Node):
    value: Union[int, Fraction, ParamCoefficient]

    def __str__(self):
        v = self.value
        if isinstance(v, ParamCoefficient):
            return f"({v})"
        if isinstance(v, Fraction) and v.denominator != 1:
            return f"({v})"
        return str(v) if v >= 0 else f"({v})"


@dataclass(frozen=True, eq=True)
class Sym(Node):
    """A parameter (``a``), an indexed field (``phi[i]``) or a macro reference (``F[mu,nu]``)."""

    name: str
    indices: Tuple[Index, ...] = ()

    def __str__(self):
        if not self.indices:
            return self.name
        return f"{self.name}[{','.join(map(str, self.indices))}]"


@dataclass(frozen=True, eq=True)
class Deriv(Node):
    expr: Node
    indices: Tuple[Index, ...]

    def __str__(self):
        return f"d({self.expr},{','.join(map(str, self.indices))})"


@dataclass(frozen=True, eq=True)
class Eps(Node):
    indices: Tuple[Index, ...]

    def __str__(self):
        return f"eps({','.join(map(str, self.indices))})"


@dataclass(frozen=True, eq=True)
class Delta(Node):
    indices: Tuple[Index, ...]

    def __str__(self):
        return f"delta({','.join(map(str, self.indices))})"


@dataclass(frozen=True, eq=True)
class Eta(Node):
    indices: Tuple[Index, ...]

    def __str__(self):
        return f"eta({','.join(map(str, self.indices))})"


@dataclass(frozen=True, eq=True)
class Add(Node):
    terms: Tuple[Node, ...]

    def __str__(self):
        out = str(self.terms[0])
        for t in self.terms[1:]:
            out += f" + {t}"
        return f"({out})"


@dataclass(frozen=True, eq=True)
class Mul(Node):
    factors: Tuple[Node, ...]

    def __str__(self):
        return "*".join(str(f) for f in self.factors)


@dataclass(frozen=True, eq=True)
class Div(Node):
    num: Node
    den: Node

    def __str__(self):
        return f"(({self.num})/({self.den}))"


@dataclass(frozen=True, eq=True)
class Pow(Node):
    base: Node
    exponent: int

    def __str__(self):
        return f"({self.base})^{self.exponent}"


# ---------------------------------------------------------------------------
# tables

@dataclass(frozen=True)
class IndexKind:
    values: Tuple[int, ...]
    lorentz: bool


@dataclass
class Table:
    """Components of an expression: ``data[values of free indices] -> polynomial``."""

    indices: Tuple[str, ...]
    kinds: Tuple[IndexKind, ...]
    data: Dict[Tuple[int, ...], JetPolynomial]

    @classmethod
    def scalar(cls, p: JetPolynomial) -> "Table":
        return cls((), (), {(): p})

    def scalar_value(self) -> JetPolynomial:
        return self.data.get((), ZERO_POLY)


def _slot_kind(slot: str, name: Index, size: int = 3) -> IndexKind:
    if slot == "lorentz":
        if isinstance(name, int):
            return IndexKind(LORENTZ_VALUES, True)
        return IndexKind(LORENTZ_VALUES if is_greek(name) else SPATIAL_VALUES, True)
    return IndexKind(tuple(range(1, size + 1)), False)


def _check_literal(value: int, kind: IndexKind, where: str) -> None:
    if value not in kind.values:
        raise IndexRangeError(f"index value {value} out of range {kind.values[0]}..{kind.values[-1]} in {where}")


def _raw_table(slots: Sequence[Tuple[Index, IndexKind]], fill, where: str) -> Table:
    """Build a table from a node with possibly repeated index names, then contract repeats."""
    names = [n for n, _ in slots if not isinstance(n, int)]
    counts = {n: names.count(n) for n in names}
    for n, c in counts.items():
        if c > 2:
            raise IndexDisciplineError(f"index {n!r} appears {c} times in {where}")
    free = []
    kinds: Dict[str, IndexKind] = {}
    for n, k in slots:
        if isinstance(n, int):
            _check_literal(n, k, where)
            continue
        if n in kinds and kinds[n] != k:
            raise IndexDisciplineError(f"index {n!r} used with incompatible ranges in {where}")
        kinds[n] = k
        if n not in free:
            free.append(n)
    bound = [n for n in free if counts[n] == 2]
    free = [n for n in free if counts[n] == 1]
    data: Dict[Tuple[int, ...], JetPolynomial] = {}

    def rec(i, assign):
        if i == len(free):
            total = []
            for vals in _product([kinds[b].values for b in bound]):
                env = dict(assign)
                env.update(zip(bound, vals))
                weight = 1
                for b, v in zip(bound, vals):
                    if kinds[b].lorentz:
                        weight *= metric(v)
                values = [n if isinstance(n, int) else env[n] for n, _ in slots]
                p = fill(values)
                if p:
                    total.append(p if weight == 1 else -p)
            s = poly_sum(total)
            if s:
                data[tuple(assign[f] for f in free)] = s
            return
        for v in kinds[free[i]].values:
            assign[free[i]] = v
            rec(i + 1, assign)
        assign.pop(free[i], None)

    rec(0, {})
    return Table(tuple(free), tuple(kinds[f] for f in free), data)


def _product(ranges):
    if not ranges:
        yield ()
        return
    head, *rest = ranges
    for v in head:
        for tail in _product(rest):
            yield (v,) + tail


def _levi_civita(values: Sequence[int]) -> int:
    if len(set(values)) != len(values):
        return 0
    sign = 1
    vals = list(values)
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if vals[i] > vals[j]:
                sign = -sign
    return sign


def _mul_tables(t1: Table, t2: Table, where: str) -> Table:
    shared = [n for n in t1.indices if n in t2.indices]
    for n in shared:
        if t1.kinds[t1.indices.index(n)] != t2.kinds[t2.indices.index(n)]:
            raise IndexDisciplineError(f"index {n!r} used with incompatible ranges in {where}")
    pos1 = [t1.indices.index(n) for n in shared]
    pos2 = [t2.indices.index(n) for n in shared]
    keep1 = [i for i, n in enumerate(t1.indices) if n not in shared]
    keep2 = [i for i, n in enumerate(t2.indices) if n not in shared]
    lorentz = [t1.kinds[p].lorentz for p in pos1]
    by_shared: Dict[tuple, list] = {}
    for k2, p2 in t2.data.items():
        by_shared.setdefault(tuple(k2[p] for p in pos2), []).append((k2, p2))
    acc: Dict[tuple, list] = {}
    for k1, p1 in t1.data.items():
        sv = tuple(k1[p] for p in pos1)
        sign = 1
        for v, lz in zip(sv, lorentz):
            if lz:
                sign *= metric(v)
        for k2, p2 in by_shared.get(sv, ()):
            key = tuple(k1[i] for i in keep1) + tuple(k2[i] for i in keep2)
            prod = p1 * p2
            acc.setdefault(key, []).append(prod if sign == 1 else -prod)
    data = {}
    for key, parts in acc.items():
        s = poly_sum(parts)
        if s:
            data[key] = s
    return Table(tuple(t1.indices[i] for i in keep1) + tuple(t2.indices[i] for i in keep2),
                 tuple(t1.kinds[i] for i in keep1) + tuple(t2.kinds[i] for i in keep2), data)


def _reindex(t: Table, order: Sequence[str]) -> Table:
    perm = [t.indices.index(n) for n in order]
    return Table(tuple(order), tuple(t.kinds[p] for p in perm),
                 {tuple(k[p] for p in perm): v for k, v in t.data.items()})


# ---------------------------------------------------------------------------
# expansion

def expand_table(node: Node, scope: Scope) -> Table:
    if isinstance(node, Num):
        return Table.scalar(JetPolynomial.constant(node.value))
    if isinstance(node, Sym):
        return _sym_table(node, scope)
    if isinstance(node, Eps):
        n = len(node.indices)
        if n != 3:
            raise ArityError(f"eps takes 3 indices, got {n}")
        kind = IndexKind((1, 2, 3), False)
        return _raw_table([(i, kind) for i in node.indices],
                          lambda vals: JetPolynomial.constant(_levi_civita(vals)), str(node))
    if isinstance(node, Delta):
        if len(node.indices) != 2:
            raise ArityError(f"delta takes 2 indices, got {len(node.indices)}")
        kinds = [_slot_kind("lorentz", i) if isinstance(i, str) and is_greek(i) else IndexKind((1, 2, 3), False)
                 for i in node.indices]
        if kinds[0] != kinds[1] and all(isinstance(i, str) for i in node.indices):
            raise IndexDisciplineError(f"delta mixes index types in {node}")
        return _raw_table(list(zip(node.indices, kinds)),
                          lambda vals: JetPolynomial.constant(int(vals[0] == vals[1])), str(node))
    if isinstance(node, Eta):
        if len(node.indices) != 2:
            raise ArityError(f"eta takes 2 indices, got {len(node.indices)}")
        return _raw_table([(i, _slot_kind("lorentz", i)) for i in node.indices],
                          lambda vals: JetPolynomial.constant(metric(vals[0]) if vals[0] == vals[1] else 0),
                          str(node))
    if isinstance(node, Deriv):
        inner = expand_table(node.expr, scope)
        for idx in node.indices:
            inner = _deriv_table(inner, idx, scope, str(node))
        return inner
    if isinstance(node, Mul):
        _check_product_discipline(node, scope)
        t = expand_table(node.factors[0], scope)
        for f in node.factors[1:]:
            t = _mul_tables(t, expand_table(f, scope), str(node))
        return t
    if isinstance(node, Add):
        tables = [expand_table(t, scope) for t in node.terms]
        first = set(tables[0].indices)
        for t in tables[1:]:
            if set(t.indices) != first:
                raise IndexDisciplineError(
                    f"free indices of summands disagree: {sorted(first)} vs {sorted(t.indices)} in {node}")
        order = tables[0].indices
        acc: Dict[tuple, list] = {}
        for t in tables:
            t = _reindex(t, order)
            for k, v in t.data.items():
                acc.setdefault(k, []).append(v)
        data = {k: s for k, parts in acc.items() if (s := poly_sum(parts))}
        return Table(order, tables[0].kinds, data)
    if isinstance(node, Div):
        den = expand_table(node.den, scope)
        if den.indices:
            raise IndexDisciplineError(f"denominator carries free indices in {node}")
        dp = den.scalar_value()
        if not dp.is_constant() or dp.is_zero():
            raise TensorError(f"division only by nonzero parameter expressions, got {node.den}")
        num = expand_table(node.num, scope)
        inv = dp.constant_term().inverse()
        return Table(num.indices, num.kinds, {k: v.scale(inv) for k, v in num.data.items()})
    if isinstance(node, Pow):
        base = expand_table(node.base, scope)
        if base.indices:
            raise IndexDisciplineError(f"power of an expression with free indices: {node}")
        value = base.scalar_value()
        if node.exponent < 0:
            if not value.is_constant() or value.is_zero():
                raise TensorError(f"negative powers only of nonzero parameter expressions: {node}")
            return Table.scalar(JetPolynomial.constant(value.constant_term() ** node.exponent))
        return Table.scalar(value ** node.exponent)
    raise TypeError(f"not a tensor expression: {node!r}")


def _free_names(node: Node, scope: Scope) -> list:
    """Free index names of a node, without expanding it."""
    if isinstance(node, (Num,)):
        return []
    if isinstance(node, (Sym, Eps, Delta, Eta)):
        names = [i for i in node.indices if isinstance(i, str)]
        return [n for n in names if names.count(n) == 1]
    if isinstance(node, Deriv):
        names = _free_names(node.expr, scope) + [i for i in node.indices if isinstance(i, str)]
        return [n for n in names if names.count(n) == 1]
    if isinstance(node, Mul):
        names = [n for f in node.factors for n in _free_names(f, scope)]
        return [n for n in names if names.count(n) == 1]
    if isinstance(node, Add):
        return _free_names(node.terms[0], scope)
    if isinstance(node, Div):
        return _free_names(node.num, scope)
    return []


def _check_product_discipline(node: Mul, scope: Scope) -> None:
    names = [n for f in node.factors for n in _free_names(f, scope)]
    for n in set(names):
        c = names.count(n)
        if c > 2:
            raise IndexDisciplineError(f"index {n!r} appears {c} times in product {node}")


def _deriv_table(inner: Table, idx: Index, scope: Scope, where: str) -> Table:
    kind = _slot_kind("lorentz", idx)
    if isinstance(idx, int):
        _check_literal(idx, kind, where)
        data = {}
        for k, p in inner.data.items():
            d = total_derivative(p, idx, scope.depth)
            if d:
                data[k] = d if metric(idx) == 1 else -d
        return Table(inner.indices, inner.kinds, data)
    data = {}
    for k, p in inner.data.items():
        for v in kind.values:
            d = total_derivative(p, v, scope.depth)
            if d:
                data[k + (v,)] = d if metric(v) == 1 else -d
    t = Table(inner.indices + (idx,), inner.kinds + (kind,), data)
    if idx in inner.indices:
        t = _contract_repeat(t, idx, where)
    return t


def _contract_repeat(t: Table, name: str, where: str) -> Table:
    pos = [i for i, n in enumerate(t.indices) if n == name]
    p1, p2 = pos
    if t.kinds[p1] != t.kinds[p2]:
        raise IndexDisciplineError(f"index {name!r} used with incompatible ranges in {where}")
    keep = [i for i in range(len(t.indices)) if i not in pos]
    acc: Dict[tuple, list] = {}
    for k, p in t.data.items():
        if k[p1] != k[p2]:
            continue
        sign = metric(k[p1]) if t.kinds[p1].lorentz else 1
        acc.setdefault(tuple(k[i] for i in keep), []).append(p if sign == 1 else -p)
    data = {k: s for k, parts in acc.items() if (s := poly_sum(parts))}
    return Table(tuple(t.indices[i] for i in keep), tuple(t.kinds[i] for i in keep), data)


def _sym_table(node: Sym, scope: Scope) -> Table:
    name = node.name
    if name in scope.params and not node.indices:
        return Table.scalar(JetPolynomial.constant(ParamCoefficient.param(name)))
    if name in scope.macros:
        formal, body = scope.macros[name]
        if len(formal) != len(node.indices):
            raise ArityError(f"{name} takes {len(formal)} indices, got {len(node.indices)}")
        if name not in scope._macro_cache:
            scope._macro_cache[name] = _reindex(expand_table(body, scope), formal)
        body_t = scope._macro_cache[name]
        slots = list(zip(node.indices, body_t.kinds))
        return _raw_table(slots, lambda vals: body_t.data.get(tuple(vals), ZERO_POLY), str(node))
    decl = scope.decls.get(name)
    if decl is None:
        raise UnknownSymbolError(f"unknown symbol {name!r}")
    if len(node.indices) != 1:
        raise ArityError(f"{name} takes 1 index, got {len(node.indices)}")
    kind = _slot_kind(decl.slot, node.indices[0], decl.size)
    lower_momentum = decl.kind == "momentum" and decl.slot == "lorentz"

    def fill(vals):
        p = JetPolynomial.variable(decl.variable(vals[0]))
        if lower_momentum and metric(vals[0]) == -1:
            return -p
        return p

    return _raw_table([(node.indices[0], kind)], fill, str(node))


def expand_tensor(node: Node, assignment: Mapping[str, int] | None = None, scope: Scope | None = None) -> JetPolynomial:
    """Expand ``node`` at the given values of its free indices."""
    scope = scope or default_scope()
    assignment = dict(assignment or {})
    t = expand_table(node, scope)
    missing = [n for n in t.indices if n not in assignment]
    if missing:
        raise MissingAssignmentError(f"no value assigned to free index {', '.join(missing)}")
    key = []
    for n, k in zip(t.indices, t.kinds):
        _check_literal(assignment[n], k, f"assignment of {n}")
        key.append(assignment[n])
    return t.data.get(tuple(key), ZERO_POLY)


def default_scope() -> Scope:
    """Scope with the Higgs-vacuum fields, their momenta and a few opaque symbols."""
    s = Scope()
    s.declare(FieldDecl("phi", "iso", 3))
    s.declare(FieldDecl("A", "lorentz", 4))
    s.declare(FieldDecl("pi", "iso", 3, "momentum"))
    s.declare(FieldDecl("Pi", "lorentz", 4, "momentum"))
    for name in ("Phi", "X", "Y"):
        s.declare(FieldDecl(name, "iso", 3, "symbol"))
    return s

