"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS`` or ``criterion N: FAIL`` line (visible
under ``pytest -s`` or ``-v``) and then asserts the same condition.
"""
import time

import pytest

from conftest import fixture_text
from constraint_forge.dsl import parse_expression, parse_model
from constraint_forge.gauge import RuleInapplicableError, apply_rule, generator_dependency, match_constraints, \
    verify_identity
from constraint_forge.jet import poly_sum
from constraint_forge.lattice import (LatticeGrid, classify_numeric, discretize, lattice_apply_rule,
                                      ultralocal_coefficient, ultralocal_oracle)
from constraint_forge.mechanics import cpb_compatibility, dirac_iterate, verify_primary
from constraint_forge.models import (conjugate_momenta, euler_lagrange, hp_model, isorotation_generators,
                                     maxwell_model, momentum_definitions, toy_models, verify_vacuum_reduction)
from constraint_forge.pipeline import classifiable
from constraint_forge.tensor import expand_tensor
from constraint_forge.vacuum import StrongIdeal, build_ideal

IDEAL = build_ideal(2)
HP = hp_model()


def expand(model, text, **assign):
    return expand_tensor(parse_expression(text), assign, model.scope)


def report(capsys, n, ok, detail=""):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
    assert ok, detail


# criteria that are rerun on the mutants ----------------------------------------------

def identities_hold(m):
    """Residuals of all generator identities; the Abelian shift is checked without the ideal."""
    el = euler_lagrange(m)
    out = {}
    for g in m.generators:
        start = time.perf_counter()
        ideal = StrongIdeal.empty() if g.label == "R3" else IDEAL
        res = verify_identity(g, el, ideal)
        out[g.label] = (res.is_zero(), time.perf_counter() - start)
    return out


EXPECTED_CANDIDATES = {
    "D1": "eps(3,i,k)*phi[i]*pi[k] - (1/(a*e))*Pi[j]*d(phi[3],j)",
    "D2": "eps(1,i,k)*phi[i]*pi[k] - (1/(a*e))*Pi[j]*d(phi[1],j)",
    "D3": "d(Pi[j],j)",
}


def conjecture_outputs(m):
    try:
        cands = apply_rule(m.generators, m.momentum_of, m.discarded, conjugate_momenta(m))
    except RuleInapplicableError as exc:
        return False, str(exc)
    got = {c.label: c.expression for c in cands}
    want = {k: expand(HP, v) for k, v in EXPECTED_CANDIDATES.items()}
    wrong = sorted(k for k in want if got.get(k) != want[k])
    return not wrong and set(got) == set(want), f"mismatched {wrong}" if wrong else "D1, D2, D3 exact"


def equivalence(m):
    try:
        cands = apply_rule(m.generators, m.momentum_of, m.discarded)
    except RuleInapplicableError as exc:
        return False, str(exc)
    mr = match_constraints(cands, m.references, IDEAL, m.expectation_map())
    by = {x.candidate: x for x in mr.matches}
    got = {k: (x.reference, x.sign) for k, x in by.items()}
    if got != {"D1": ("zeta1", -1), "D2": ("zeta2", -1), "D3": ("zeta5", 1)}:
        return False, f"matches {got}"
    if by["D3"].cofactors or not by["D3"].chi_cofactor.is_zero():
        return False, "D3 needs a cofactor"
    notes = []
    for k in ("D1", "D2"):
        x = by[k]
        if x.expected_chi_cofactor is None:
            return False, f"{k} has no expected chi-cofactor to compare with"
        if x.chi_cofactor != x.expected_chi_cofactor and not x.discrepancy:
            return False, f"{k} chi-cofactor differs without being flagged"
        notes.append(f"{k} chi-cofactor {x.chi_cofactor}; flagged: {x.discrepancy}")
    return True, "; ".join(notes)


# criteria ----------------------------------------------------------------------------

def test_criterion_1_gauge_identities(capsys):
    res = identities_hold(HP)
    ok = all(z for z, _ in res.values()) and set(res) == {"R1", "R2", "R3"} and all(t <= 60 for _, t in res.values())
    report(capsys, 1, ok, ", ".join(f"{k} zero={z} in {t:.1f}s" for k, (z, t) in res.items()))


def test_criterion_2_dependency(capsys):
    dep = generator_dependency(isorotation_generators(HP), IDEAL)
    phi = [expand(HP, f"phi[{i}]") for i in (1, 2, 3)]
    ok = dep.independent == 2 and len(dep.relations) == 1
    if ok:
        rel = dep.relations[0]
        (_, c), = rel["T1"].terms.items()
        ok = [rel[f"T{k}"].scale(c.inverse()) for k in (1, 2, 3)] == phi
    full = generator_dependency(HP.generators, IDEAL).independent
    report(capsys, 2, ok and full == 3, f"isorotations independent={dep.independent}, R1..R3 r={full}")


def test_criterion_3_conjecture_outputs(capsys):
    ok, detail = conjecture_outputs(HP)
    report(capsys, 3, ok, detail)


def test_criterion_4_equivalence(capsys):
    ok, detail = equivalence(HP)
    report(capsys, 4, ok, detail)


def test_criterion_5_vacuum_reduction(capsys):
    rep = verify_vacuum_reduction(HP, IDEAL)
    ok = len(rep.residuals) == 3 and all(r.is_zero() for r in rep.residuals.values())
    report(capsys, 5, ok, ", ".join(f"{k}={'0' if r.is_zero() else 'nonzero'}" for k, r in rep.residuals.items()))


def test_criterion_6_momenta(capsys):
    mom = conjugate_momenta(HP)
    ok = mom[("A", 0)].is_zero()
    for i in (1, 2, 3):
        # lowered F_{i0} equals minus the stored upper F^{i0}
        ok &= mom[("A", i)] == -expand(HP, "F[i,0]", i=i)
    for m in (1, 2, 3):
        printed = poly_sum(
            expand(HP, f"(1/(a^3*e))*eps(i,j,m)*phi[i]*d(phi[j],{k})", m=m)
            * expand(HP, f"(1/(a^3*e))*eps(r,s,t)*phi[r]*d(phi[s],0)*(-d(phi[t],{k})) - d(A[{k}],0) + d(A[0],{k})")
            for k in (1, 2, 3))
        ok &= mom[("phi", m)] == printed
    report(capsys, 6, ok, "Pi_0, Pi_i and pi_m compared exactly")


def test_criterion_7_primary_pullbacks(capsys):
    defs = momentum_definitions(HP)
    zero = {n: verify_primary(HP.references[n], defs, IDEAL).is_zero() for n in ("zeta1", "zeta2", "zeta3", "zeta4")}
    z5 = verify_primary(HP.references["zeta5"], defs, IDEAL).is_zero()
    cpb0 = cpb_compatibility(HP.references["zeta0"])
    ok = all(zero.values()) and not z5 and not cpb0
    report(capsys, 7, ok, f"zero residuals {zero}, zeta5 zero={z5}, zeta0 compatible={cpb0}")


def test_criterion_8_dirac_cross_checks(capsys):
    toys = {m.name: m for m in toy_models()}
    r = dirac_iterate(toys["toy-gauge"].to_point_model())
    p = {i: expand(toys["toy-gauge"], f"p[{i}]") for i in (1, 2)}
    gauge_ok = ([[c.expression for c in g] for g in r.generations] == [[p[2]], [p[1]]]
                and set(r.classification.labels.values()) == {"first"})
    r = dirac_iterate(toys["toy-secondclass"].to_point_model())
    second_ok = (len(r.generations) == 1 and len(r.generations[0]) == 2
                 and set(r.classification.labels.values()) == {"second"})

    start = time.perf_counter()
    mx = maxwell_model()
    grid = LatticeGrid(2)
    r = dirac_iterate(discretize(mx, grid, "forward"))
    prim = sorted(str(c.expression) for c in r.generations[0])
    prim_ok = prim == sorted(f"Pi0@{s[0]},{s[1]},{s[2]}" for s in grid.sites())
    secondaries = [c.expression for c in r.generations[1]]
    cands = [c.expression for c in lattice_apply_rule(mx.generators, mx, grid, "forward")["G"]]
    matched = [c for c in cands if any(c == s or c == -s for s in secondaries)]
    leftover = [c for c in cands if c not in matched]
    # the one Gauss law Dirac drops as redundant is minus the sum of the others on a periodic lattice
    span_ok = len(leftover) == 1 and leftover[0] == -poly_sum(matched)
    every_sec = all(any(s == c or s == -c for c in cands) for s in secondaries)
    lattice_ok = (prim_ok and len(secondaries) == 7 and every_sec and span_ok
                  and set(r.classification.labels.values()) == {"first"})
    elapsed = time.perf_counter() - start
    ok = gauge_ok and second_ok and lattice_ok and elapsed <= 120
    report(capsys, 8, ok, f"toy-gauge {gauge_ok}, toy-secondclass {second_ok}, "
                          f"2^3 Maxwell {lattice_ok} in {elapsed:.1f}s")


def test_criterion_9_numeric_classification(capsys):
    refs = classifiable(HP)
    z = {c.name: c.expression for c in refs}
    coeff = IDEAL.reduce(ultralocal_coefficient(z["zeta3"], z["zeta4"]))
    scale = float(coeff.constant_term().evaluate({"a": 1.0, "e": 1.0}))
    start = time.perf_counter()
    nc = classify_numeric(refs, [LatticeGrid(4, 1.0), LatticeGrid(8, 0.5)], range(5),
                          oracles={("zeta3", "zeta4"): ultralocal_oracle(scale)})
    per_grid = (time.perf_counter() - start) / 2
    gauge = {"zeta1", "zeta2", "zeta5"}
    failing = [f"{p.first},{p.second} ratio {p.ratio:.3g}" for p in nc.pairs
               if ({p.first, p.second} & gauge) and not p.weakly_vanishing]
    oracle_err = nc.oracle_checks["zeta3,zeta4"]
    ok = scale == -1.0 and not failing and oracle_err <= 1e-9 and per_grid <= 10
    detail = (f"scaling failures: {failing or 'none'}; zeta3,zeta4 relative error {oracle_err:.1e}; "
              f"{per_grid:.2f}s per grid")
    report(capsys, 9, ok, detail)


MUTANTS = [f"hp-mutant-{i:02d}" for i in range(1, 11)]


@pytest.mark.parametrize("name", MUTANTS)
def test_criterion_10_mutation_sensitivity(capsys, name):
    m = parse_model(fixture_text(name))
    caught = []
    if not all(z for z, _ in identities_hold(m).values()):
        caught.append("1")
    if not conjecture_outputs(m)[0]:
        caught.append("3")
    if not equivalence(m)[0]:
        caught.append("4")
    report(capsys, 10, bool(caught), f"{name} fails criteria {', '.join(caught) or 'none'}")
