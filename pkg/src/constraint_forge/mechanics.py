"""Finite-dimensional constrained Hamiltonian mechanics.

Legendre transform of Lagrangians quadratic in velocities, canonical Poisson
brackets, the generational consistency loop and first/second-class
classification.  Weak equality is reduction modulo a Groebner basis of the
current constraint set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Collection, Dict, List, Mapping, Sequence, Tuple

from .groebner import GRLEX, Basis, PolyRing, divide, groebner
from .jet import (NO_DERIVS, ZERO_POLY, JetPolynomial, JetVariable, differentiate_jet, poly_sum, to_text,
                  total_derivative, var_of)
from .params import ONE, ZERO, ParamCoefficient

log = logging.getLogger(__name__)


class MechanicsError(ValueError):
    category = "mechanics"


class UnsupportedModelError(MechanicsError):
    category = "unsupported-model"


class InconsistencyError(MechanicsError):
    category = "inconsistent"


class InternalConsistencyError(MechanicsError):
    category = "internal-consistency"


class SymbolError(MechanicsError):
    category = "unknown-symbol"


# ---------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class Constraint:
    name: str
    expression: JetPolynomial
    generation: int = 1
    klass: str = "unclassified"  # first | second | unclassified
    origin: str = "dirac"  # dirac | conjecture | reference | gauge-fixing

    def __post_init__(self):
        if self.generation < 1:
            raise ValueError("generation must be >= 1")
        if self.expression.is_zero():
            raise ValueError(f"constraint {self.name} is identically zero")

    def to_dict(self) -> dict:
        return {"name": self.name, "expression": to_text(self.expression), "generation": self.generation,
                "class": self.klass, "origin": self.origin}


@dataclass(frozen=True)
class ConstraintSet:
    constraints: Tuple[Constraint, ...] = ()

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def __getitem__(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> List[str]:
        return [c.name for c in self.constraints]

    def select(self, names: Sequence[str]) -> "ConstraintSet":
        return ConstraintSet(tuple(self[n] for n in names))


@dataclass(frozen=True)
class PointMechanicsModel:
    """Coordinates are jet variables without derivatives; velocities are their time derivatives."""

    name: str
    coordinates: Tuple[JetVariable, ...]
    lagrangian: JetPolynomial
    momentum_names: Mapping[str, str] = field(default_factory=dict)

    def velocity(self, q: JetVariable) -> JetVariable:
        return q.differentiated(0)

    def momentum(self, q: JetVariable) -> JetVariable:
        name = self.momentum_names.get(q.field, "p" if q.field == "q" else f"p_{q.field}")
        return JetVariable(name, q.component, NO_DERIVS, q.site, "momentum")

    def phase_pairs(self) -> List[Tuple[JetVariable, JetVariable]]:
        return [(q, self.momentum(q)) for q in self.coordinates]

    def __post_init__(self):
        allowed = set(self.coordinates) | {self.velocity(q) for q in self.coordinates}
        for v in self.lagrangian.variables():
            if v not in allowed:
                raise SymbolError(f"lagrangian of {self.name} uses undeclared variable {v.label()}")


@dataclass
class LegendreResult:
    momenta: Dict[JetVariable, JetPolynomial]  # momentum symbol -> definition in (q, qdot)
    primaries: List[JetPolynomial]
    hamiltonian: JetPolynomial
    total_hamiltonian: JetPolynomial
    multipliers: List[JetVariable]
    undetermined_velocities: List[JetVariable]


@dataclass
class Classification:
    labels: Dict[str, str]
    first_class_count: int
    second_class_count: int
    kernel: List[Dict[str, ParamCoefficient]]

    def to_dict(self) -> dict:
        return {"labels": dict(sorted(self.labels.items())), "first": self.first_class_count,
                "second": self.second_class_count,
                "kernel": [{k: str(v) for k, v in sorted(vec.items())} for vec in self.kernel]}


@dataclass
class DiracReport:
    model: str
    generations: List[List[Constraint]]
    multipliers: Dict[str, str]
    classification: Classification
    bracket_matrix: List[List[JetPolynomial]]
    redundant: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    total_hamiltonian: JetPolynomial = ZERO_POLY

    @property
    def constraints(self) -> List[Constraint]:
        return [c for gen in self.generations for c in gen]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "generations": [[c.to_dict() for c in gen] for gen in self.generations],
            "multipliers": dict(sorted(self.multipliers.items())),
            "classification": self.classification.to_dict(),
            "bracket_matrix": [[to_text(x) for x in row] for row in self.bracket_matrix],
            "redundant": list(self.redundant),
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# exact linear algebra over Q(a, e, lam)

def _rank_and_pivots(rows: List[List[ParamCoefficient]]):
    """Row-reduce a copy; returns (reduced rows, pivot columns)."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def nullspace(rows: List[List[ParamCoefficient]], ncols: int) -> List[List[ParamCoefficient]]:
    if not rows:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    red, pivots = _rank_and_pivots(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for row, pc in zip(red, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def _invert(mat: List[List[ParamCoefficient]]) -> List[List[ParamCoefficient]]:
    n = len(mat)
    aug = [list(r) + [ONE if i == j else ZERO for j in range(n)] for i, r in enumerate(mat)]
    red, pivots = _rank_and_pivots(aug)
    if pivots[:n] != list(range(n)):
        raise ArithmeticError("singular block")
    return [row[n:] for row in red]


# ---------------------------------------------------------------------------
# Legendre transform

def legendre_transform(m: PointMechanicsModel) -> LegendreResult:
    qs = list(m.coordinates)
    us = [m.velocity(q) for q in qs]
    uset = set(us)
    L = m.lagrangian
    for powers, _ in L.items():
        if sum(e for v, e in powers.items() if v in uset) > 2:
            raise UnsupportedModelError(f"{m.name}: lagrangian has velocity degree above 2")
    n = len(qs)
    grad = [differentiate_jet(L, u) for u in us]
    W: List[List[ParamCoefficient]] = []
    for i in range(n):
        row = []
        for j in range(n):
            h = differentiate_jet(grad[i], us[j])
            if not h.is_constant():
                raise UnsupportedModelError(
                    f"{m.name}: velocity Hessian entry ({i},{j}) depends on coordinates; only constant "
                    "Hessians are supported")
            row.append(h.constant_term())
        W.append(row)
    zero_u = {u: ZERO_POLY for u in us}
    b = [g.subs(zero_u) for g in grad]
    ps = [JetPolynomial.variable(m.momentum(q)) for q in qs]

    # maximal nonsingular principal block: greedy over columns of W
    _, pivots = _rank_and_pivots(W) if n else ([], [])
    S = _principal_block(W, pivots)
    N = [i for i in range(n) if i not in S]
    Winv = _invert([[W[i][j] for j in S] for i in S]) if S else []
    rhs = [ps[i] - b[i] for i in S]
    u_sol: Dict[JetVariable, JetPolynomial] = {}
    for r, i in enumerate(S):
        u_sol[us[i]] = poly_sum(rhs[k].scale(Winv[r][k]) for k in range(len(S)))
    for i in N:
        u_sol[us[i]] = ZERO_POLY
    primaries = []
    for i in N:
        expr = ps[i] - b[i]
        for r in range(len(S)):
            coef = sum((W[i][sj] * Winv[k][r] for k, sj in enumerate(S)), ZERO)
            if coef:
                expr = expr - rhs[r].scale(coef)
        primaries.append(expr)
    H = poly_sum(p * u_sol[u] for p, u in zip(ps, us)) - L.subs(u_sol)
    multipliers = [JetVariable("lambda", k + 1, NO_DERIVS, (), "multiplier") for k in range(len(primaries))]
    HT = H + poly_sum(JetPolynomial.variable(lv) * ph for lv, ph in zip(multipliers, primaries))
    momenta = {m.momentum(q): grad[i] for i, q in enumerate(qs)}
    return LegendreResult(momenta, primaries, H, HT, multipliers, [us[i] for i in N])


def _principal_block(W, pivots) -> List[int]:
    """Indices of a nonsingular principal submatrix of maximal size (W symmetric)."""
    S: List[int] = []
    for i in range(len(W)):
        trial = S + [i]
        sub = [[W[r][c] for c in trial] for r in trial]
        _, piv = _rank_and_pivots(sub)
        if len(piv) == len(trial):
            S = trial
    if len(S) != len(pivots):
        raise UnsupportedModelError("velocity Hessian has no maximal nonsingular principal block")
    return S


# ---------------------------------------------------------------------------
# brackets and weak equality

def poisson_bracket(f: JetPolynomial, g: JetPolynomial, pairs: Sequence[Tuple[JetVariable, JetVariable]]) -> JetPolynomial:
    fv, gv = f.variables(), g.variables()
    parts = []
    for q, p in pairs:
        if q in fv and p in gv:
            parts.append(differentiate_jet(f, q) * differentiate_jet(g, p))
        if p in fv and q in gv:
            parts.append(-(differentiate_jet(f, p) * differentiate_jet(g, q)))
    return poly_sum(parts)


class SurfaceReducer:
    """Normal forms modulo the ideal generated by a list of constraints.

    Multipliers (kind ``multiplier``) are kept outside the ring and act as
    opaque coefficients.
    """

    def __init__(self, constraints: Sequence[JetPolynomial], extra_variables: Sequence[JetVariable] = ()):
        vars_ = set(extra_variables)
        for c in constraints:
            vars_ |= {v for v in c.variables() if v.kind != "multiplier"}
        self.ring = PolyRing(sorted(vars_, reverse=True), GRLEX)
        polys = [self.ring.to_dense(c) for c in constraints if c]
        self.basis = Basis(groebner(polys, GRLEX) if polys else [], GRLEX)

    def reduce(self, p: JetPolynomial) -> JetPolynomial:
        if not p or not len(self.basis):
            return p
        known = set(self.ring.variables)
        groups = p.split(lambda v: v not in known)
        parts = []
        for outer, coeff in groups.items():
            r, _ = divide(self.ring.to_dense(coeff), self.basis)
            if r:
                parts.append(self.ring.from_dense(r) * JetPolynomial({outer: ONE}, _trusted=True))
        return poly_sum(parts)


def _split_multipliers(p: JetPolynomial) -> Tuple[Dict[JetVariable, JetPolynomial], JetPolynomial]:
    groups = p.split(lambda v: v.kind == "multiplier")
    linear: Dict[JetVariable, JetPolynomial] = {}
    rest = ZERO_POLY
    for outer, coeff in groups.items():
        if not outer:
            rest = coeff
        elif len(outer) == 1 and outer[0][1] == 1:
            linear[var_of(outer[0][0])] = coeff
        else:
            raise UnsupportedModelError("consistency condition is nonlinear in multipliers")
    return linear, rest


def _is_product_of_factors(p: JetPolynomial) -> bool:
    """True when ``p`` factors into two or more nonconstant polynomials (a bifurcation)."""
    import sympy

    from .params import _sympy_gens

    variables = sorted(p.variables())
    syms = sympy.symbols(" ".join(f"x{i}" for i in range(len(variables)))) if variables else ()
    if len(variables) == 1:
        syms = (syms,)
    lookup = dict(zip(variables, syms))
    expr = 0
    for powers, c in p.items():
        term = c.to_sympy()
        for v, e in powers.items():
            term *= lookup[v] ** e
        expr += term
    _, factors = sympy.factor_list(sympy.together(expr), *syms, *_sympy_gens())
    nonconstant = [f for f, _ in factors if f.free_symbols & set(syms)]
    return sum(e for f, e in factors if f in nonconstant) >= 2


def dirac_iterate(m: PointMechanicsModel, max_generations: int = 10) -> DiracReport:
    lt = legendre_transform(m)
    pairs = m.phase_pairs()
    phase_vars = [v for pq in pairs for v in pq]
    HT = lt.total_hamiltonian
    found: List[Constraint] = []
    generations: List[List[Constraint]] = []
    warnings: List[str] = []
    redundant: List[str] = []
    fixed: Dict[JetVariable, JetPolynomial] = {}

    first = []
    for k, expr in enumerate(lt.primaries, start=1):
        reducer = SurfaceReducer([c.expression for c in found + first], phase_vars)
        if reducer.reduce(expr).is_zero():
            redundant.append(f"P{k}")
            continue
        first.append(Constraint(f"P{k}", expr, 1))
    pending = first
    counter = {1: len(lt.primaries)}
    gen = 1
    while pending:
        found.extend(pending)
        generations.append(pending)
        if gen >= max_generations:
            raise MechanicsError("constraint algorithm did not terminate")
        reducer = SurfaceReducer([c.expression for c in found], phase_vars)
        rows: List[Tuple[Dict[JetVariable, JetPolynomial], JetPolynomial, str]] = []
        for c in sorted(pending, key=lambda c: (c.generation, c.name)):
            cond = reducer.reduce(poisson_bracket(c.expression, HT, pairs))
            if cond.is_zero():
                continue
            linear, rest = _split_multipliers(cond)
            linear = {k: v for k, v in linear.items() if v}
            rows.append((linear, rest, c.name))
        new_exprs = _solve_multipliers(rows, fixed, reducer)
        for lam, value in fixed.items():
            HT = HT.subs({lam: value})
        gen += 1
        pending = []
        for expr, origin in new_exprs:
            if expr.is_constant():
                raise InconsistencyError(f"{m.name}: consistency of {origin} requires {to_text(expr)} = 0")
            current = SurfaceReducer([c.expression for c in found + pending], phase_vars)
            nf = current.reduce(expr)
            counter[gen] = counter.get(gen, 0) + 1
            name = f"S{gen}_{counter[gen]}"
            if nf.is_zero():
                redundant.append(name)
                continue
            if _is_product_of_factors(nf):
                warnings.append(f"consistency of {origin} gives a product of factors {to_text(nf)}; "
                                "treated as weakly satisfied")
                log.warning(warnings[-1])
                continue
            pending.append(Constraint(name, _positive_lead(expr), gen))

    exprs = [c.expression for c in found]
    reducer = SurfaceReducer(exprs, phase_vars)
    matrix = [[reducer.reduce(poisson_bracket(f, g, pairs)) for g in exprs] for f in exprs]
    cls = classify_constraints(ConstraintSet(tuple(found)), matrix)
    generations = [[replace(c, klass=cls.labels[c.name]) for c in gen_] for gen_ in generations]
    mult = {lv.label(): to_text(fixed[lv]) if lv in fixed else "undetermined" for lv in lt.multipliers}
    return DiracReport(m.name, generations, mult, cls, matrix, redundant, warnings, HT)


def _positive_lead(p: JetPolynomial) -> JetPolynomial:
    _, c = p.sorted_terms()[0]
    return -p if c.is_constant() and c.as_fraction() < 0 else p


def _solve_multipliers(rows, fixed, reducer):
    """Fix multipliers from rows with invertible (constant) coefficients; return multiplier-free rows."""
    rows = [(dict(lin), rest, name) for lin, rest, name in rows]
    out = []
    while rows:
        idx = next((i for i, (lin, _, _) in enumerate(rows)
                    if any(c.is_constant() for c in lin.values())), None)
        if idx is None:
            break
        lin, rest, name = rows.pop(idx)
        lam = next(k for k in sorted(lin) if lin[k].is_constant())
        inv = lin[lam].constant_term().inverse()
        value = -(rest + poly_sum(JetPolynomial.variable(k) * v for k, v in lin.items() if k != lam)).scale(inv)
        fixed[lam] = value
        for k in list(fixed):
            fixed[k] = fixed[k].subs({lam: value})
        new_rows = []
        for l2, r2, n2 in rows:
            if lam in l2:
                coeff = l2.pop(lam)
                full = r2 + poly_sum(JetPolynomial.variable(k) * v for k, v in l2.items()) + coeff * value
                full = reducer.reduce(full)
                l2, r2 = _split_multipliers(full)
                l2 = {k: v for k, v in l2.items() if v}
            new_rows.append((l2, r2, n2))
        rows = new_rows
    for lin, rest, name in rows:
        if lin:
            log.warning("multiplier coefficients of %s are not invertible; keeping multiplier-free part", name)
        if rest:
            out.append((rest, name))
    return out


# ---------------------------------------------------------------------------
# classification

def classify_constraints(cset: ConstraintSet, matrix: Sequence[Sequence[JetPolynomial]]) -> Classification:
    n = len(cset)
    if len(matrix) != n or any(len(r) != n for r in matrix):
        raise InternalConsistencyError("bracket matrix is not square with one row per constraint")
    for i in range(n):
        for j in range(n):
            if matrix[i][j] != -matrix[j][i]:
                raise InternalConsistencyError(f"bracket matrix is not antisymmetric at ({i},{j})")
    rows = []
    for r in matrix:
        row = []
        for x in r:
            if not x.is_constant():
                raise UnsupportedModelError("bracket matrix has non-constant entries on the constraint surface")
            row.append(x.constant_term())
        rows.append(row)
    names = cset.names()
    kernel = nullspace([r for r in rows if any(r)], n) if n else []
    labels = {}
    for i, name in enumerate(names):
        labels[name] = "first" if not any(rows[i]) else "second"
    kvecs = [{names[i]: v[i] for i in range(n) if v[i]} for v in kernel]
    return Classification(labels, len(kernel), n - len(kernel), kvecs)


# ---------------------------------------------------------------------------
# pullback checks

def verify_primary(c: Constraint, momenta: Mapping[JetVariable, JetPolynomial], ideal=None, depth: int = 2) -> JetPolynomial:
    """Substitute momentum definitions into ``c`` (spatial derivatives included) and reduce.

    ``momenta`` maps each base momentum variable to its velocity-space
    expression; ``ideal`` (optional) is the strong ideal used for reduction.
    """
    sub: Dict[JetVariable, JetPolynomial] = {}
    for v in c.expression.variables():
        if v.kind != "momentum":
            continue
        base = v.base
        if base not in momenta:
            raise SymbolError(f"constraint {c.name} uses unknown momentum {base.label()}")
        expr = momenta[base]
        for mu, k in enumerate(v.derivs):
            for _ in range(k):
                expr = total_derivative(expr, mu, depth=depth)
        sub[v] = expr
    residual = c.expression.subs(sub)
    return ideal.reduce(residual) if ideal is not None else residual


def cpb_compatibility(c: Constraint, discarded_momenta: Collection[JetVariable] | None = None) -> bool:
    """False when ``c`` is a single bare momentum component (times a constant).

    With ``discarded_momenta`` given, only momenta of coordinates the model
    discards count: the others keep their canonical bracket relations.
    """
    terms = c.expression.terms
    if len(terms) != 1:
        return True
    (m, coeff), = terms.items()
    if len(m) != 1 or m[0][1] != 1:
        return True
    v = var_of(m[0][0])
    bare = v.kind == "momentum" and v.derivs == NO_DERIVS and coeff.is_constant()
    if bare and discarded_momenta is not None:
        return v not in discarded_momenta
    return not bare


__all__ = [
    "Constraint", "ConstraintSet", "PointMechanicsModel", "LegendreResult", "DiracReport", "Classification",
    "legendre_transform", "poisson_bracket", "dirac_iterate", "classify_constraints", "verify_primary",
    "cpb_compatibility", "SurfaceReducer", "nullspace", "MechanicsError", "UnsupportedModelError",
    "InconsistencyError", "InternalConsistencyError", "SymbolError",
]
