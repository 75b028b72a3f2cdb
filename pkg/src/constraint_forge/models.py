"""Built-in models and the variational machinery that runs on them.

``FieldModel`` bundles declared fields, a Lagrangian written in index
notation, gauge generators, reference constraints and the strong ideal the
model lives on.  Point-mechanics models are field models without spatial
derivatives and convert to :class:`PointMechanicsModel`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, List, Mapping, Sequence, Tuple

from .gauge import Component, GaugeGenerator, GeneratorRule, generator_from_rules
from .jet import (NO_DERIVS, JetPolynomial, JetVariable, differentiate_jet, poly_sum, to_text, total_derivative)
from .mechanics import Constraint, ConstraintSet, PointMechanicsModel, cpb_compatibility
from .params import A, E, ONE, ParamCoefficient
from .tensor import Add, Deriv, Eps, FieldDecl, Mul, Node, Num, Scope, Sym, expand_table
from .vacuum import StrongIdeal, build_ideal, chi

REFERENCE_CLASSES = ("first", "second", "unclassified")


@dataclass(frozen=True)
class ReferenceSpec:
    """Source form of a reference constraint."""

    name: str
    expr: Node
    klass: str = "unclassified"
    generation: int = 1
    origin: str = "reference"


@dataclass(frozen=True)
class MatchExpectation:
    """Expected pairing of a reference with a rule output: sign and chi-cofactor."""

    reference: str
    candidate: str
    sign: int
    chi_cofactor: Node | None = None


@dataclass
class FieldModel:
    name: str
    scope: Scope
    fields: Tuple[FieldDecl, ...]
    momenta: Mapping[str, str]
    lagrangian_expr: Node
    params: Tuple[str, ...] = ("a", "e")
    discarded: FrozenSet[Component] = frozenset()
    generator_specs: Tuple[Tuple[str, Tuple[GeneratorRule, ...]], ...] = ()
    reference_specs: Tuple[ReferenceSpec, ...] = ()
    defines: Tuple[Tuple[str, Tuple[str, ...], Node], ...] = ()
    vacuum: str | None = None
    ideal_depth: int | None = None
    expectations: Tuple[MatchExpectation, ...] = ()

    # expanded data ---------------------------------------------------------
    @cached_property
    def lagrangian(self) -> JetPolynomial:
        t = expand_table(self.lagrangian_expr, self.scope)
        if t.indices:
            raise ValueError(f"lagrangian of {self.name} has free indices {t.indices}")
        return t.scalar_value()

    @property
    def coordinates(self) -> List[Component]:
        return [(f.name, c) for f in self.fields for c in f.components]

    def coordinate_variable(self, comp: Component) -> JetVariable:
        return JetVariable(comp[0], comp[1])

    def momentum_variable(self, comp: Component) -> JetVariable:
        return JetVariable(self.momenta[comp[0]], comp[1], NO_DERIVS, (), "momentum")

    @property
    def momentum_of(self) -> Dict[Component, JetVariable]:
        return {c: self.momentum_variable(c) for c in self.coordinates}

    def cpb_compatible(self, c: Constraint) -> bool:
        return cpb_compatibility(c, {self.momentum_variable(d) for d in self.discarded})

    @cached_property
    def generators(self) -> Tuple[GaugeGenerator, ...]:
        comps = {f.name: f.components for f in self.fields}
        return tuple(generator_from_rules(label, rules, self.scope, comps) for label, rules in self.generator_specs)

    @cached_property
    def references(self) -> ConstraintSet:
        out = []
        for spec in self.reference_specs:
            t = expand_table(spec.expr, self.scope)
            if t.indices:
                raise ValueError(f"reference {spec.name} has free indices {t.indices}")
            out.append(Constraint(spec.name, t.scalar_value(), spec.generation, spec.klass, spec.origin))
        return ConstraintSet(tuple(out))

    @cached_property
    def ideal(self) -> StrongIdeal:
        if self.vacuum is None or self.ideal_depth is None:
            return StrongIdeal.empty()
        return build_ideal(self.ideal_depth, name=self.vacuum)

    def expectation_map(self) -> Dict[str, Tuple[int, JetPolynomial]]:
        out = {}
        for ex in self.expectations:
            cof = JetPolynomial.constant(0)
            if ex.chi_cofactor is not None:
                cof = expand_table(ex.chi_cofactor, self.scope).scalar_value()
            out[ex.reference] = (ex.sign, cof)
        return out

    @property
    def is_point_model(self) -> bool:
        return all(f.slot == "iso" for f in self.fields) and not any(
            any(v.derivs[1:]) for v in self.lagrangian.variables())

    def to_point_model(self) -> PointMechanicsModel:
        if not self.is_point_model:
            raise ValueError(f"{self.name} has spatial structure; discretize it first")
        coords = tuple(JetVariable(f, c) for f, c in self.coordinates)
        return PointMechanicsModel(self.name, coords, self.lagrangian, dict(self.momenta))

    def signature(self) -> dict:
        """Structural fingerprint used to compare models built in different ways."""
        return {
            "name": self.name,
            "params": tuple(self.params),
            "fields": tuple((f.name, f.slot, f.size) for f in self.fields),
            "momenta": tuple(sorted(self.momenta.items())),
            "lagrangian": to_text(self.lagrangian),
            "discarded": tuple(sorted(self.discarded)),
            "generators": tuple(g.signature() for g in self.generators),
            "references": tuple((c.name, to_text(c.expression), c.klass, c.generation, c.origin)
                                for c in self.references),
            "vacuum": (self.vacuum, self.ideal_depth),
            "expectations": tuple(sorted((k, v[0], to_text(v[1])) for k, v in self.expectation_map().items())),
        }


# ---------------------------------------------------------------------------
# variational calculus on jet Lagrangians

def euler_lagrange(m: FieldModel, depth: int = 2) -> Dict[Component, JetPolynomial]:
    """``dL/dq - d_sigma dL/d(d_sigma q)`` for every coordinate component."""
    L = m.lagrangian
    out = {}
    for comp in m.coordinates:
        q = m.coordinate_variable(comp)
        parts = [differentiate_jet(L, q)]
        for sigma in range(4):
            dq = q.differentiated(sigma)
            g = differentiate_jet(L, dq)
            if g:
                parts.append(-total_derivative(g, sigma, depth))
        out[comp] = poly_sum(parts)
    return out


def conjugate_momenta(m: FieldModel) -> Dict[Component, JetPolynomial]:
    """``dL/d(d_0 q)`` for every coordinate component (lower index for Lorentz fields)."""
    L = m.lagrangian
    return {comp: differentiate_jet(L, m.coordinate_variable(comp).differentiated(0)) for comp in m.coordinates}


def momentum_definitions(m: FieldModel) -> Dict[JetVariable, JetPolynomial]:
    return {m.momentum_variable(c): p for c, p in conjugate_momenta(m).items()}


# ---------------------------------------------------------------------------
# expression helpers for the builders

def _phi(i):
    return Sym("phi", (i,))


def _A(mu):
    return Sym("A", (mu,))


def _d(x, *idx):
    return Deriv(x, tuple(idx))


def _mul(*factors):
    return Mul(tuple(factors))


def _add(*terms):
    return Add(tuple(terms))


def _num(x):
    return Num(Fraction(x) if not isinstance(x, ParamCoefficient) else x)


def _param_inv_a3e() -> Node:
    return Num(A ** -3 * E ** -1)


def _field_scope(extra: Sequence[FieldDecl] = ()) -> Scope:
    s = Scope()
    for decl in extra:
        s.declare(decl)
    return s


HP_FIELDS = (FieldDecl("phi", "iso", 3), FieldDecl("A", "lorentz", 4))
HP_MOMENTA = {"phi": "pi", "A": "Pi"}


def _hp_scope() -> Scope:
    return _field_scope(HP_FIELDS + (FieldDecl("pi", "iso", 3, "momentum"), FieldDecl("Pi", "lorentz", 4, "momentum")))


def field_strength_expr() -> Node:
    """``F^{mu nu} = (1/a^3 e) eps_ijk phi_i d^mu phi_j d^nu phi_k + d^mu A^nu - d^nu A^mu``."""
    return _add(
        _mul(_param_inv_a3e(), Eps(("i", "j", "k")), _phi("i"), _d(_phi("j"), "mu"), _d(_phi("k"), "nu")),
        _d(_A("nu"), "mu"),
        _mul(_num(-1), _d(_A("mu"), "nu")),
    )


def isorotation_rules(k: int) -> Tuple[GeneratorRule, ...]:
    """Rotation about iso-axis ``k`` combined with the compensating abelian shift of A."""
    inv_ae = Num(A ** -1 * E ** -1)
    return (
        GeneratorRule("phi", "m", _mul(Eps((k, "n", "m")), _phi("n"))),
        GeneratorRule("A", "mu", _mul(_num(-1), inv_ae, _d(_phi(k), "mu"))),
    )


def hp_generator_specs() -> Tuple[Tuple[str, Tuple[GeneratorRule, ...]], ...]:
    return (
        ("R1", isorotation_rules(3)),
        ("R2", isorotation_rules(1)),
        ("R3", (GeneratorRule("A", "mu", _num(-1), ("mu",)),)),
    )


def isorotation_generators(m: "FieldModel") -> Tuple[GaugeGenerator, ...]:
    """The three k-indexed isorotation generators T1, T2, T3 of the vacuum model."""
    comps = {f.name: f.components for f in m.fields}
    return tuple(generator_from_rules(f"T{k}", isorotation_rules(k), m.scope, comps) for k in (1, 2, 3))


def hp_reference_specs() -> Tuple[ReferenceSpec, ...]:
    Phi = lambda m: Sym("Phi", (m,))  # noqa: E731
    alpha = lambda k: Sym("alpha", (k,))  # noqa: E731
    chi_ = Sym("chi")
    half = _num(Fraction(1, 2))
    inv_ae = Num(A ** -1 * E ** -1)
    return (
        ReferenceSpec("zeta0", Sym("Pi", (0,)), "first", 1, "reference"),
        ReferenceSpec("zeta1", _add(_mul(_phi(2), Phi(1)), _mul(_num(-1), _phi(1), Phi(2)),
                                    _mul(_num(-1), half, alpha(3), chi_)), "first", 1),
        ReferenceSpec("zeta2", _add(_mul(_phi(3), Phi(2)), _mul(_num(-1), _phi(2), Phi(3)),
                                    _mul(_num(-1), half, alpha(1), chi_)), "first", 1),
        ReferenceSpec("zeta3", _mul(Num(ParamCoefficient(Fraction(1, 2)) * A ** -2), _phi("m"), Phi("m")),
                      "second", 1),
        ReferenceSpec("zeta4", chi_, "second", 1),
        ReferenceSpec("zeta5", _d(Sym("Pi", ("i",)), "i"), "first", 2),
        ReferenceSpec("zeta6", _add(_mul(inv_ae, _add(_mul(_phi(2), _d(_phi(1), 3)),
                                                     _mul(_num(-1), _phi(1), _d(_phi(2), 3)))),
                                    _mul(_num(-1), _A(3), _phi(3))), "unclassified", 1, "gauge-fixing"),
        ReferenceSpec("zeta7", _add(_mul(inv_ae, _add(_mul(_phi(3), _d(_phi(2), 3)),
                                                     _mul(_num(-1), _phi(2), _d(_phi(3), 3)))),
                                    _mul(_num(-1), _A(3), _phi(1))), "unclassified", 1, "gauge-fixing"),
        ReferenceSpec("zeta8", _A(3), "unclassified", 1, "gauge-fixing"),
    )


def hp_defines() -> Tuple[Tuple[str, Tuple[str, ...], Node], ...]:
    Phi = _add(Sym("pi", ("m",)),
               _mul(_param_inv_a3e(), Eps(("i", "j", "m")), _phi("i"), _d(_phi("j"), "k"), Sym("Pi", ("k",))))
    alpha = _mul(Num(3 * A ** -3 * E ** -1), Sym("Pi", ("j",)), _d(_phi("k"), "j"))
    chi_ = _add(_mul(_phi("i"), _phi("i")), _mul(_num(-1), Num(A ** 2)))
    return (
        ("F", ("mu", "nu"), field_strength_expr()),
        ("Phi", ("m",), Phi),
        ("alpha", ("k",), alpha),
        ("chi", (), chi_),
    )


def hp_expectations() -> Tuple[MatchExpectation, ...]:
    half = _num(Fraction(-1, 2))
    return (
        MatchExpectation("zeta1", "D1", -1, _mul(half, Sym("alpha", (3,)))),
        MatchExpectation("zeta2", "D2", -1, _mul(half, Sym("alpha", (1,)))),
        MatchExpectation("zeta5", "D3", 1, None),
    )


def _with_defines(scope: Scope, defines) -> Scope:
    for name, idx, body in defines:
        scope.define(name, idx, body)
    return scope


def hp_model() -> FieldModel:
    """Higgs-vacuum monopole model: L = -1/4 F^{mu nu} F_{mu nu} with the composite F above."""
    defines = hp_defines()
    scope = _with_defines(_hp_scope(), defines)
    L = _mul(_num(Fraction(-1, 4)), Sym("F", ("mu", "nu")), Sym("F", ("mu", "nu")))
    return FieldModel(
        name="hp",
        scope=scope,
        fields=HP_FIELDS,
        momenta=dict(HP_MOMENTA),
        lagrangian_expr=L,
        discarded=frozenset({("A", 0)}),
        generator_specs=hp_generator_specs(),
        reference_specs=hp_reference_specs(),
        defines=defines,
        vacuum="phi",
        ideal_depth=2,
        expectations=hp_expectations(),
    )


def maxwell_model() -> FieldModel:
    """Free Maxwell field with its single gauge generator and the Gauss law as reference."""
    fields = (FieldDecl("A", "lorentz", 4),)
    F = _add(_d(_A("nu"), "mu"), _mul(_num(-1), _d(_A("mu"), "nu")))
    defines = (("F", ("mu", "nu"), F),)
    scope = _with_defines(_field_scope(fields + (FieldDecl("Pi", "lorentz", 4, "momentum"),)), defines)
    L = _mul(_num(Fraction(-1, 4)), Sym("F", ("mu", "nu")), Sym("F", ("mu", "nu")))
    return FieldModel(
        name="maxwell",
        scope=scope,
        fields=fields,
        momenta={"A": "Pi"},
        lagrangian_expr=L,
        params=(),
        discarded=frozenset({("A", 0)}),
        generator_specs=(("G", (GeneratorRule("A", "mu", _num(-1), ("mu",)),)),),
        reference_specs=(ReferenceSpec("pi0", Sym("Pi", (0,)), "first", 1),
                         ReferenceSpec("gauss", _d(Sym("Pi", ("i",)), "i"), "first", 2)),
        defines=defines,
        expectations=(MatchExpectation("gauss", "D1", 1, None),),
    )


def _point_scope(size: int) -> Scope:
    return _field_scope((FieldDecl("q", "iso", size), FieldDecl("p", "iso", size, "momentum")))


def _q(i):
    return Sym("q", (i,))


def toy_models() -> List[FieldModel]:
    """Gauge toy, second-class toy and a regular control model (all point mechanics)."""
    qdot = lambda i: _d(_q(i), 0)  # noqa: E731
    fields = (FieldDecl("q", "iso", 2),)
    gauge = FieldModel(
        name="toy-gauge",
        scope=_point_scope(2),
        fields=fields,
        momenta={"q": "p"},
        lagrangian_expr=_mul(_num(Fraction(1, 2)), _add(qdot(1), _mul(_num(-1), _q(2))),
                             _add(qdot(1), _mul(_num(-1), _q(2)))),
        params=(),
        discarded=frozenset({("q", 2)}),
        generator_specs=(("G", (GeneratorRule("q", 1, _num(1)), GeneratorRule("q", 2, _num(1), (0,)))),),
        reference_specs=(ReferenceSpec("c1", Sym("p", (2,)), "first", 1),
                         ReferenceSpec("c2", Sym("p", (1,)), "first", 2)),
        expectations=(MatchExpectation("c2", "D1", 1, None),),
    )
    second = FieldModel(
        name="toy-secondclass",
        scope=_point_scope(2),
        fields=fields,
        momenta={"q": "p"},
        lagrangian_expr=_add(_mul(qdot(1), _q(2)),
                             _mul(_num(Fraction(-1, 2)), _add(_mul(_q(1), _q(1)), _mul(_q(2), _q(2))))),
        params=(),
        reference_specs=(ReferenceSpec("c1", _add(Sym("p", (1,)), _mul(_num(-1), _q(2))), "second", 1),
                         ReferenceSpec("c2", Sym("p", (2,)), "second", 1)),
    )
    regular = FieldModel(
        name="toy-regular",
        scope=_point_scope(2),
        fields=fields,
        momenta={"q": "p"},
        lagrangian_expr=_mul(_num(Fraction(1, 2)), _add(_mul(qdot(1), qdot(1)), _mul(qdot(2), qdot(2)))),
        params=(),
    )
    return [gauge, second, regular]


def builtin_models() -> Dict[str, FieldModel]:
    out = {"hp": hp_model(), "maxwell": maxwell_model()}
    for m in toy_models():
        out[m.name] = m
    return out


# ---------------------------------------------------------------------------
# Higgs-vacuum reduction of the full gauge-Higgs Lagrangian

@dataclass
class VacuumReductionReport:
    covariant_derivative: JetPolynomial
    field_strength: JetPolynomial
    lagrangian: JetPolynomial

    @property
    def residuals(self) -> Dict[str, JetPolynomial]:
        return {"covariant_derivative": self.covariant_derivative, "field_strength": self.field_strength,
                "lagrangian": self.lagrangian}

    def to_dict(self) -> dict:
        return {k: to_text(v) for k, v in self.residuals.items()}


def _sq(components):
    return poly_sum(c * c for c in components)


def verify_vacuum_reduction(m: FieldModel, ideal: StrongIdeal | None = None) -> VacuumReductionReport:
    """Check the vacuum ansatz for the non-abelian potential against the reduced model.

    With ``W^mu = (1/a^2 e) phi x d^mu phi + (1/a) phi A^mu``:

    * ``D^mu phi = d^mu phi - e W^mu x phi`` vanishes,
    * ``G^{mu nu} - (1/a) phi F^{mu nu}`` vanishes, with
      ``G^{mu nu} = d^mu W^nu - d^nu W^mu - e W^mu x W^nu``,
    * ``-1/4 G.G + 1/2 D phi . D phi`` equals ``-1/4 F F`` (the potential is
      ``lam/4 chi^2`` and lies in the ideal as well).

    Residuals are reduced componentwise modulo ``ideal``.
    """
    ideal = ideal or m.ideal
    phi = [JetPolynomial.variable(JetVariable("phi", i)) for i in (1, 2, 3)]

    def up(p, mu):  # contravariant derivative
        d = total_derivative(p, mu, depth=2)
        return d if mu == 0 else -d

    def cross(u, v):
        return [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]

    Aup = [JetPolynomial.variable(JetVariable("A", mu)) for mu in range(4)]
    inv_a2e = A ** -2 * E ** -1
    inv_a = A ** -1
    W = []
    for mu in range(4):
        dphi = [up(f, mu) for f in phi]
        W.append([c.scale(inv_a2e) + f.scale(inv_a) * Aup[mu] for c, f in zip(cross(phi, dphi), phi)])
    # (i) covariant derivative
    cov_parts = []
    for mu in range(4):
        wxphi = cross(W[mu], phi)
        Dphi = [up(f, mu) - c.scale(E) for f, c in zip(phi, wxphi)]
        cov_parts.append(Dphi)
    res_cov = poly_sum(ideal.reduce(c) * _probe(mu, i) for mu, comp in enumerate(cov_parts)
                       for i, c in enumerate(comp, 1))
    # (ii) field strength
    F = {}
    G = {}
    Ftab = expand_table(Sym("F", ("mu", "nu")), m.scope)
    for mu in range(4):
        for nu in range(4):
            Fmn = Ftab.data.get((mu, nu), JetPolynomial.constant(0))
            F[mu, nu] = Fmn
            wxw = cross(W[mu], W[nu])
            G[mu, nu] = [up(W[nu][a], mu) - up(W[mu][a], nu) - wxw[a].scale(E) for a in range(3)]
    res_G = poly_sum(
        ideal.reduce(G[mu, nu][a] - phi[a] * F[mu, nu].scale(inv_a)) * _probe(4 * mu + nu, a + 1)
        for mu in range(4) for nu in range(4) for a in range(3))
    # (iii) Lagrangian
    eta = [1, -1, -1, -1]
    LG = poly_sum(_sq(G[mu, nu]).scale(ParamCoefficient(Fraction(-1, 4)) * eta[mu] * eta[nu])
                  for mu in range(4) for nu in range(4))
    LD = poly_sum(_sq(Dphi).scale(ParamCoefficient(Fraction(1, 2)) * eta[mu]) for mu, Dphi in enumerate(cov_parts))
    chi_ = chi()
    V = (chi_ * chi_).scale(ParamCoefficient.param("lam") * Fraction(1, 4))
    res_L = ideal.reduce(LG + LD - V - m.lagrangian)
    return VacuumReductionReport(res_cov, res_G, res_L)


def _probe(i: int, j: int) -> JetPolynomial:
    """Marker symbol keeping component residuals apart inside one polynomial."""
    return JetPolynomial.variable(JetVariable("slot", 100 * i + j, NO_DERIVS, (), "symbol"))


__all__ = [
    "FieldModel", "ReferenceSpec", "MatchExpectation", "VacuumReductionReport", "hp_model", "maxwell_model",
    "toy_models", "builtin_models", "isorotation_generators", "isorotation_rules", "euler_lagrange", "conjugate_momenta", "momentum_definitions",
    "verify_vacuum_reduction", "field_strength_expr", "ONE", "chi",
]
