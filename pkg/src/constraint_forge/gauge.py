"""Gauge generators in local form, Lagrangian gauge identities and the momentum rule.

A generator is a table ``Omega[(field, component)][k]`` of jet-polynomial
coefficients indexed by a lower derivative multi-index ``k = (k0, k1, k2,
k3)``.  Paired with Euler-Lagrange expressions it gives the point form of the
identity ``sum_k (-1)^|k| d^k (Omega_k * EL)``; paired with canonical momenta
(with discarded components removed first) it gives a candidate constraint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .jet import (NO_DERIVS, ZERO_POLY, DepthError, JetPolynomial, JetVariable, poly_sum, to_text,
                  total_derivative)
from .mechanics import ConstraintSet, nullspace
from .params import ZERO, ParamCoefficient
from .tensor import Node, Scope, expand_table, metric
from .vacuum import StrongIdeal, chi, reduce_modulo_prolongations

Component = Tuple[str, int]
MultiIndex = Tuple[int, int, int, int]


class RuleInapplicableError(ValueError):
    category = "rule-inapplicable"


class AmbiguousMatchError(ValueError):
    category = "ambiguous-match"


@dataclass(frozen=True)
class GeneratorRule:
    """Source form of one generator line: ``field[index] += expr @ d(derivs)``."""

    field: str
    index: object
    expr: Node
    derivs: Tuple[object, ...] = ()

    def __str__(self):
        return f"{self.field}[{self.index}] += {self.expr} @ d({','.join(map(str, self.derivs))})"


@dataclass(frozen=True)
class GaugeGenerator:
    label: str
    entries: Mapping[Component, Mapping[MultiIndex, JetPolynomial]]
    rules: Tuple[GeneratorRule, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not any(p for tab in self.entries.values() for p in tab.values()):
            raise ValueError(f"generator {self.label} has no nonzero entry")

    def items(self):
        for comp in sorted(self.entries):
            for k in sorted(self.entries[comp]):
                yield comp, k, self.entries[comp][k]

    def combine(self, other: "GaugeGenerator", c1, c2, label: str | None = None) -> "GaugeGenerator":
        out: Dict[Component, Dict[MultiIndex, JetPolynomial]] = {}
        for gen, c in ((self, c1), (other, c2)):
            for comp, k, p in gen.items():
                tab = out.setdefault(comp, {})
                tab[k] = tab.get(k, ZERO_POLY) + p.scale(c)
        out = {comp: {k: p for k, p in tab.items() if p} for comp, tab in out.items()}
        return GaugeGenerator(label or f"{self.label}+{other.label}", {c: t for c, t in out.items() if t})

    def signature(self) -> tuple:
        return (self.label, tuple((comp, k, to_text(p)) for comp, k, p in self.items()))

    def to_dict(self) -> dict:
        return {"label": self.label,
                "entries": [{"component": f"{c[0]}[{c[1]}]", "multi_index": list(k), "omega": to_text(p)}
                            for c, k, p in self.items()]}


def generator_from_rules(label: str, rules: Sequence[GeneratorRule], scope: Scope,
                         components: Mapping[str, Sequence[int]]) -> GaugeGenerator:
    """Expand source rules into an Omega table.

    ``@ d(mu)`` means the contravariant derivative of the delta function, so a
    spatial direction contributes a factor -1 to the coefficient.
    """
    entries: Dict[Component, Dict[MultiIndex, List[JetPolynomial]]] = {}
    for rule in rules:
        table = expand_table(rule.expr, scope)
        free = [n for n in table.indices]
        idx = rule.index
        values = components[rule.field] if isinstance(idx, str) else [idx]
        for v in values:
            env = {idx: v} if isinstance(idx, str) else {}
            extra = [n for n in free if n not in env]
            if extra:
                raise ValueError(f"generator {label}: free index {extra[0]} not bound by the component index")
            key = tuple(env[n] for n in table.indices)
            coeff = table.data.get(key, ZERO_POLY)
            if not coeff:
                continue
            k = [0, 0, 0, 0]
            sign = 1
            for d in rule.derivs:
                dv = env[d] if isinstance(d, str) else d
                if not isinstance(dv, int):
                    raise ValueError(f"generator {label}: derivative index {d} is not bound")
                k[dv] += 1
                sign *= metric(dv)
            entries.setdefault((rule.field, v), {}).setdefault(tuple(k), []).append(coeff if sign == 1 else -coeff)
    tab = {c: {k: s for k, parts in t.items() if (s := poly_sum(parts))} for c, t in entries.items()}
    return GaugeGenerator(label, {c: t for c, t in tab.items() if t}, tuple(rules))


# ---------------------------------------------------------------------------
# identities

def formal_euler(components: Iterable[Component]) -> Dict[Component, JetPolynomial]:
    """Opaque symbols standing for the Euler-Lagrange expressions."""
    return {c: JetPolynomial.variable(JetVariable(f"E{c[0]}", c[1], NO_DERIVS, (), "euler")) for c in components}


def _apply_derivatives(p: JetPolynomial, k: MultiIndex, depth: int) -> JetPolynomial:
    for mu, times in enumerate(k):
        for _ in range(times):
            p = total_derivative(p, mu, depth)
    return p


def identity_point_form(g: GaugeGenerator, el: Mapping[Component, JetPolynomial], depth: int = 3) -> JetPolynomial:
    parts = []
    for comp, k, omega in g.items():
        if comp not in el:
            raise KeyError(f"no Euler-Lagrange expression for {comp[0]}[{comp[1]}]")
        term = _apply_derivatives(omega * el[comp], k, depth)
        parts.append(term if sum(k) % 2 == 0 else -term)
    return poly_sum(parts)


def verify_identity(g: GaugeGenerator, el: Mapping[Component, JetPolynomial], ideal: StrongIdeal,
                    depth: int = 3) -> JetPolynomial:
    """Residual of the gauge identity modulo the strong ideal (zero certifies it)."""
    return ideal.reduce(identity_point_form(g, el, depth))


@dataclass
class DependencyReport:
    labels: List[str]
    relations: List[Dict[str, JetPolynomial]]
    independent: int

    def to_dict(self) -> dict:
        return {"labels": self.labels, "independent": self.independent,
                "relations": [{k: to_text(v) for k, v in sorted(r.items())} for r in self.relations]}


def default_cofactor_basis(field_name: str = "phi", size: int = 3) -> List[JetPolynomial]:
    return [JetPolynomial.constant(1)] + [JetPolynomial.variable(JetVariable(field_name, i)) for i in
                                          range(1, size + 1)]


def generator_dependency(gens: Sequence[GaugeGenerator], ideal: StrongIdeal,
                         el: Mapping[Component, JetPolynomial] | None = None,
                         basis: Sequence[JetPolynomial] | None = None, depth: int = 3) -> DependencyReport:
    """Search for cofactors ``c_k`` (from ``basis``, default ``{1, phi_i}``) with ``sum c_k T_k`` in the ideal.

    Euler-Lagrange expressions default to opaque symbols, so a relation found
    here holds for any Lagrangian with these generators.
    """
    comps = sorted({c for g in gens for c, _, _ in g.items()})
    el = el or formal_euler(comps)
    basis = list(basis) if basis is not None else default_cofactor_basis()
    forms = [identity_point_form(g, el, depth) for g in gens]
    columns = []
    for f in forms:
        for b in basis:
            columns.append(ideal.reduce(b * f))
    monos = sorted({m for col in columns for m in col.terms}, key=repr)
    rows = [[col.terms.get(m, ZERO) for col in columns] for m in monos]
    kernel = nullspace(rows, len(columns)) if rows else nullspace([], len(columns))
    relations = []
    for vec in kernel:
        rel = {}
        for gi, g in enumerate(gens):
            c = poly_sum(basis[bi].scale(vec[gi * len(basis) + bi]) for bi in range(len(basis))
                         if vec[gi * len(basis) + bi])
            if c:
                rel[g.label] = c
        relations.append(rel)
    return DependencyReport([g.label for g in gens], relations, len(gens) - len(relations))


# ---------------------------------------------------------------------------
# the momentum rule

@dataclass(frozen=True)
class CandidateConstraint:
    label: str
    expression: JetPolynomial

    def to_dict(self) -> dict:
        return {"label": self.label, "expression": to_text(self.expression)}


def apply_rule(gens: Sequence[GaugeGenerator], momentum_of: Mapping[Component, JetVariable],
               discarded: Iterable[Component] = (), momentum_definitions: Mapping[Component, JetPolynomial] | None = None,
               depth: int = 3, labels: Sequence[str] | None = None) -> List[CandidateConstraint]:
    """Contract canonical momenta with each generator at fixed time.

    Momenta of discarded components are set to zero before any derivative is
    taken.  When ``momentum_definitions`` is given, each discarded component
    must have an identically vanishing momentum (a bare-momentum primary that
    is incompatible with the canonical brackets).
    """
    discarded = set(discarded)
    if momentum_definitions is not None:
        for comp in sorted(discarded):
            definition = momentum_definitions.get(comp)
            if definition is None:
                raise RuleInapplicableError(f"discarded component {comp[0]}[{comp[1]}] is not a coordinate")
            if definition:
                raise RuleInapplicableError(
                    f"discarded component {comp[0]}[{comp[1]}] has momentum {to_text(definition)}, not a "
                    "bare-momentum constraint")
    out = []
    for n, g in enumerate(gens):
        parts = []
        for comp, k, omega in g.items():
            if comp in discarded:
                continue
            if comp not in momentum_of:
                raise KeyError(f"no momentum for {comp[0]}[{comp[1]}]")
            if k[0]:
                raise RuleInapplicableError(
                    f"generator {g.label}: time derivative of the momentum of {comp[0]}[{comp[1]}] survives")
            try:
                term = _apply_derivatives(omega * JetPolynomial.variable(momentum_of[comp]), k, depth)
            except DepthError as exc:
                raise RuleInapplicableError(str(exc)) from exc
            parts.append(term if sum(k) % 2 == 0 else -term)
        expr = poly_sum(parts)
        for v in expr.variables():
            if v.kind == "field" and v.derivs[0]:
                raise RuleInapplicableError(f"generator {g.label}: candidate contains the velocity {v.label()}")
        out.append(CandidateConstraint(labels[n] if labels else f"D{n + 1}", expr))
    return out


# ---------------------------------------------------------------------------
# matching against reference constraints

@dataclass
class Match:
    candidate: str
    reference: str
    sign: int
    cofactors: Dict[str, JetPolynomial]
    chi_cofactor: JetPolynomial
    expected_chi_cofactor: JetPolynomial | None = None
    expected_admissible: bool | None = None
    discrepancy: str | None = None

    def to_dict(self) -> dict:
        d = {"candidate": self.candidate, "reference": self.reference, "sign": self.sign,
             "chi_cofactor": to_text(self.chi_cofactor),
             "cofactors": {k: to_text(v) for k, v in sorted(self.cofactors.items())}}
        if self.expected_chi_cofactor is not None:
            d["expected_chi_cofactor"] = to_text(self.expected_chi_cofactor)
            d["expected_admissible"] = self.expected_admissible
            d["discrepancy"] = self.discrepancy
        return d


@dataclass
class MatchReport:
    matches: List[Match]
    unmatched_candidates: List[str]
    unmatched_references: List[str]

    def to_dict(self) -> dict:
        return {"matches": [m.to_dict() for m in self.matches],
                "unmatched_candidates": self.unmatched_candidates,
                "unmatched_references": self.unmatched_references}


def canonical_chi_cofactor(c: JetPolynomial, ideal: StrongIdeal) -> JetPolynomial:
    """Representative of a chi-cofactor modulo the first prolongations ``phi . d_mu phi``.

    Two decompositions of the same element differ in their chi-cofactor by a
    member of that ideal, so this representative is decomposition independent.
    """
    if ideal.depth is None or ideal.depth < 1 or c.max_order(lambda v: v.field == ideal.field) > 1:
        return c
    return reduce_modulo_prolongations(c, ideal.directions, ideal.field)


def match_constraints(cands: Sequence[CandidateConstraint], refs: ConstraintSet, ideal: StrongIdeal,
                      expectations: Mapping[str, Tuple[int, JetPolynomial]] | None = None) -> MatchReport:
    """Pair each candidate with a reference up to sign, modulo the strong ideal (which contains chi)."""
    expectations = expectations or {}
    matches: List[Match] = []
    matched_refs = set()
    unmatched = []
    for cand in cands:
        found = []
        for ref in refs:
            for sign in (1, -1):
                diff = cand.expression - ref.expression.scale(sign)
                if ideal.reduce(diff).is_zero():
                    found.append((ref, sign, diff))
        names = sorted({f[0].name for f in found})
        if len(names) > 1:
            raise AmbiguousMatchError(f"candidate {cand.label} matches several references: {', '.join(names)}")
        if not found:
            unmatched.append(cand.label)
            continue
        ref, sign, diff = found[0]
        cert = ideal.membership_with_cofactors(diff)
        chi_cof = canonical_chi_cofactor(cert.cofactors.get("chi", ZERO_POLY), ideal)
        m = Match(cand.label, ref.name, sign, cert.cofactors, chi_cof)
        if ref.name in expectations:
            exp_sign, exp_cof = expectations[ref.name]
            m.expected_chi_cofactor = exp_cof
            rest = diff - exp_cof * chi(ideal.field)
            m.expected_admissible = reduce_modulo_prolongations(rest, ideal.directions, ideal.field).is_zero()
            if exp_sign != sign:
                m.discrepancy = f"sign {sign:+d} differs from expected {exp_sign:+d}"
            elif canonical_chi_cofactor(exp_cof, ideal) != chi_cof:
                m.discrepancy = _describe_ratio(chi_cof, exp_cof)
        matches.append(m)
        matched_refs.add(ref.name)
    unmatched_refs = [r.name for r in refs if r.name not in matched_refs]
    return MatchReport(matches, unmatched, unmatched_refs)


def _describe_ratio(engine: JetPolynomial, expected: JetPolynomial) -> str:
    """Human-readable comparison of two chi-cofactors."""
    if engine and expected and len(engine) == len(expected):
        ratio = None
        for m, c in engine.terms.items():
            other = expected.terms.get(m)
            if other is None:
                ratio = None
                break
            r = c / other
            if ratio is None:
                ratio = r
            elif r != ratio:
                ratio = None
                break
        if ratio is not None:
            return f"engine chi-cofactor is {ratio} times the expected one"
    return "engine chi-cofactor differs from the expected one"


def scaled_generator(g: GaugeGenerator, c: ParamCoefficient | int, label: str | None = None) -> GaugeGenerator:
    tab = {comp: {k: p.scale(c) for k, p in t.items()} for comp, t in g.entries.items()}
    return GaugeGenerator(label or g.label, tab)


__all__ = [
    "GaugeGenerator", "GeneratorRule", "CandidateConstraint", "DependencyReport", "Match", "MatchReport",
    "RuleInapplicableError", "AmbiguousMatchError", "generator_from_rules", "formal_euler",
    "identity_point_form", "verify_identity", "generator_dependency", "apply_rule", "match_constraints",
    "canonical_chi_cofactor", "scaled_generator",
]
