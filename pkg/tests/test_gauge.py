import pytest

from conftest import fixture_text
from constraint_forge.dsl import parse_expression, parse_model
from constraint_forge.gauge import (AmbiguousMatchError, CandidateConstraint, RuleInapplicableError, apply_rule,
                                    formal_euler, generator_dependency, identity_point_form, match_constraints,
                                    scaled_generator, verify_identity)
from constraint_forge.jet import JetPolynomial, poly_sum, total_derivative
from constraint_forge.mechanics import Constraint, ConstraintSet
from constraint_forge.models import conjugate_momenta, euler_lagrange, isorotation_generators
from constraint_forge.params import ParamCoefficient
from constraint_forge.tensor import expand_tensor, metric
from constraint_forge.vacuum import StrongIdeal, chi
from oracles import sphere_value

A = ParamCoefficient.param("a")
E = ParamCoefficient.param("e")
INV_AE = A.inverse() / E


def expand(m, text):
    return expand_tensor(parse_expression(text), {}, m.scope)


def candidates(m):
    return {c.label: c.expression for c in apply_rule(m.generators, m.momentum_of, m.discarded, conjugate_momenta(m))}


# point forms ---------------------------------------------------------------------

def test_point_form_of_abelian_shift(hp):
    R3 = hp.generators[2]
    el = formal_euler(hp.coordinates)
    want = poly_sum(total_derivative(el[("A", mu)], mu, depth=None).scale(metric(mu)) for mu in range(4))
    assert identity_point_form(R3, el) == want


def test_point_form_of_isorotation(hp):
    R1 = hp.generators[0]
    el = formal_euler(hp.coordinates)
    phi = lambda i: expand(hp, f"phi[{i}]")  # noqa: E731
    want = phi(1) * el[("phi", 2)] - phi(2) * el[("phi", 1)]
    for mu in range(4):
        want = want - (expand(hp, f"d(phi[3],{mu})") * el[("A", mu)]).scale(INV_AE)
    assert identity_point_form(R1, el) == want


def test_point_form_of_toy_generator(toys):
    m = toys["toy-gauge"]
    el = formal_euler(m.coordinates)
    want = el[("q", 1)] - total_derivative(el[("q", 2)], 0, depth=None)
    assert identity_point_form(m.generators[0], el) == want


def test_toy_identity_holds(toys):
    m = toys["toy-gauge"]
    assert verify_identity(m.generators[0], euler_lagrange(m), StrongIdeal.empty()).is_zero()


# identities ----------------------------------------------------------------------

def test_hp_identities(hp, ideal2):
    el = euler_lagrange(hp)
    R1, R2, R3 = hp.generators
    assert verify_identity(R1, el, ideal2).is_zero()
    assert verify_identity(R2, el, ideal2).is_zero()
    assert verify_identity(R3, el, StrongIdeal.empty()).is_zero()
    # the isorotation identities genuinely need the vacuum constraint
    assert not verify_identity(R1, el, StrongIdeal.empty()).is_zero()


def test_maxwell_identity(maxwell):
    assert verify_identity(maxwell.generators[0], euler_lagrange(maxwell), StrongIdeal.empty()).is_zero()


def test_corrupted_generator_leaves_residual(ideal2):
    m = parse_model(fixture_text("hp-mutant-01"))
    res = verify_identity(m.generators[0], euler_lagrange(m), ideal2)
    assert not res.is_zero()
    assert any(sphere_value(res, s) != 0 for s in range(2))


def test_zero_omega_term_does_not_change_residual(ideal2):
    text = fixture_text("hp").replace("generator R1 { phi[m] += eps(3,n,m)*phi[n] @ d() ;",
                                      "generator R1 { phi[m] += eps(3,n,m)*phi[n] @ d() ; "
                                      "phi[m] += delta(1,2)*d(phi[m],1) @ d(2) ;")
    m = parse_model(text)
    base = parse_model(fixture_text("hp"))
    assert m.generators[0].signature() == base.generators[0].signature()
    assert verify_identity(m.generators[0], euler_lagrange(m), ideal2).is_zero()


# dependency ----------------------------------------------------------------------

def test_isorotation_dependency(hp, ideal2):
    T = isorotation_generators(hp)
    dep = generator_dependency(T, ideal2)
    assert dep.independent == 2
    assert len(dep.relations) == 1
    rel = dep.relations[0]
    phi = {i: expand(hp, f"phi[{i}]") for i in (1, 2, 3)}
    # normalize the relation so that the T1 cofactor is phi1
    (m, c), = rel["T1"].terms.items()
    scale = c.inverse()
    assert {k: v.scale(scale) for k, v in rel.items()} == {"T1": phi[1], "T2": phi[2], "T3": phi[3]}


def test_hp_generators_independent(hp, ideal2):
    dep = generator_dependency(hp.generators, ideal2)
    assert dep.independent == 3 and dep.relations == []
    assert generator_dependency(hp.generators[:1], ideal2).independent == 1


# momentum rule -------------------------------------------------------------------

def test_hp_candidates(hp):
    got = candidates(hp)
    assert got["D1"] == expand(hp, "eps(3,i,k)*phi[i]*pi[k] - (1/(a*e))*Pi[j]*d(phi[3],j)")
    assert got["D2"] == expand(hp, "eps(1,i,k)*phi[i]*pi[k] - (1/(a*e))*Pi[j]*d(phi[1],j)")
    assert got["D3"] == expand(hp, "d(Pi[j],j)")


def test_candidates_are_phase_space_functions(hp):
    for expr in candidates(hp).values():
        assert all(v.derivs[0] == 0 for v in expr.variables())


def test_rule_is_linear(hp):
    R1, R2, R3 = hp.generators
    combo = R1.combine(R2, ParamCoefficient(2), A, label="X").combine(R3, ParamCoefficient(1), -E, label="X")
    c = candidates(hp)
    got = apply_rule([combo], hp.momentum_of, hp.discarded)[0].expression
    assert got == (c["D1"].scale(2) + c["D2"].scale(A) - c["D3"].scale(E))
    doubled = apply_rule([scaled_generator(R1, 3)], hp.momentum_of, hp.discarded)[0].expression
    assert doubled == c["D1"].scale(3)


def test_toy_and_maxwell_candidates(toys, maxwell):
    assert candidates(toys["toy-gauge"]) == {"D1": expand(toys["toy-gauge"], "p[1]")}
    assert candidates(maxwell) == {"D1": expand(maxwell, "d(Pi[j],j)")}


def test_wrong_discard_is_rejected():
    m = parse_model(fixture_text("hp-mutant-10"))
    with pytest.raises(RuleInapplicableError):
        apply_rule(m.generators, m.momentum_of, m.discarded, conjugate_momenta(m))


def test_surviving_time_derivative_is_rejected(toys):
    m = toys["toy-gauge"]
    with pytest.raises(RuleInapplicableError):
        apply_rule(m.generators, m.momentum_of, discarded=())


# matching ------------------------------------------------------------------------

def test_hp_matches(hp, ideal2):
    mr = match_constraints(apply_rule(hp.generators, hp.momentum_of, hp.discarded), hp.references, ideal2,
                           hp.expectation_map())
    got = {m.candidate: (m.reference, m.sign) for m in mr.matches}
    assert got == {"D1": ("zeta1", -1), "D2": ("zeta2", -1), "D3": ("zeta5", 1)}
    by = {m.candidate: m for m in mr.matches}
    assert by["D3"].cofactors == {} and by["D3"].chi_cofactor.is_zero()
    alpha3 = expand(hp, "alpha[3]")
    alpha1 = expand(hp, "alpha[1]")
    # engine cofactor is -alpha/6; the printed -alpha/2 is flagged, not normalized away
    assert by["D1"].chi_cofactor == alpha3.scale(ParamCoefficient(-1) / 6)
    assert by["D2"].chi_cofactor == alpha1.scale(ParamCoefficient(-1) / 6)
    assert by["D1"].expected_chi_cofactor == alpha3.scale(ParamCoefficient(-1) / 2)
    assert by["D1"].discrepancy == "engine chi-cofactor is 1/3 times the expected one"
    assert by["D1"].expected_admissible is False
    assert sorted(mr.unmatched_references) == ["zeta0", "zeta3", "zeta4", "zeta6", "zeta7", "zeta8"]


def test_match_certificates_reexpand(hp, ideal2):
    cands = apply_rule(hp.generators, hp.momentum_of, hp.discarded)
    mr = match_constraints(cands, hp.references, ideal2)
    gens = ideal2.generator_map()
    exprs = {c.label: c.expression for c in cands}
    for m in mr.matches:
        rebuilt = hp.references[m.reference].expression.scale(m.sign)
        rebuilt = rebuilt + poly_sum(c * gens[n] for n, c in m.cofactors.items())
        assert rebuilt == exprs[m.candidate]


def test_candidate_count_equals_compatible_first_class(hp, ideal2):
    mr = match_constraints(apply_rule(hp.generators, hp.momentum_of, hp.discarded), hp.references, ideal2)
    first = {c.name for c in hp.references if c.klass == "first" and hp.cpb_compatible(c)}
    assert {m.reference for m in mr.matches} == first == {"zeta1", "zeta2", "zeta5"}


def test_ambiguous_match_raises(hp, ideal2):
    zeta5 = hp.references["zeta5"]
    refs = ConstraintSet((zeta5, Constraint("copy", zeta5.expression + chi(), 2, "first", "reference")))
    with pytest.raises(AmbiguousMatchError):
        match_constraints([CandidateConstraint("D3", zeta5.expression)], refs, ideal2)


def test_unmatched_candidate_is_listed(hp, ideal2):
    mr = match_constraints([CandidateConstraint("X", JetPolynomial.constant(1))], hp.references, ideal2)
    assert mr.unmatched_candidates == ["X"] and mr.matches == []
