import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from constraint_forge.groebner import GREVLEX, GRLEX, Basis, PolyRing, divide, groebner, is_groebner
from constraint_forge.jet import DepthError, JetPolynomial, JetVariable, poly_sum, total_derivative
from constraint_forge.params import ParamCoefficient
from constraint_forge.vacuum import (_completed_basis, build_ideal, chi, phi_dot, reduce_modulo_prolongations,
                                     tangential_residual)
from oracles import sphere_value
from strategies import A, E, FIELD_POOL, Pi_var, phi_var, polynomials

phi = lambda i, d=(0, 0, 0, 0): JetPolynomial.variable(phi_var(i, d))  # noqa: E731
Pi = lambda i: JetPolynomial.variable(Pi_var(i))  # noqa: E731
D1 = (0, 1, 0, 0)

IDEALS = {d: build_ideal(d) for d in (0, 1, 2)}


# groebner engine -----------------------------------------------------------------

def test_groebner_textbook_example():
    x, y = JetVariable("x", 1, kind="symbol"), JetVariable("y", 1, kind="symbol")
    ring = PolyRing([x, y], GRLEX)
    X, Y = JetPolynomial.variable(x), JetPolynomial.variable(y)
    polys = [X ** 3 - 2 * X * Y, X ** 2 * Y - 2 * Y ** 2 + X]
    gb = groebner([ring.to_dense(p) for p in polys], GRLEX)
    assert is_groebner(gb, GRLEX)
    got = sorted(str(ring.from_dense(g)) for g in gb)
    # reduced basis of this ideal under grlex with x > y
    assert got == sorted(["x1^2", "x1*y1", "y1^2 - 1/2*x1"])


def test_division_identity_with_quotients():
    ring, basis = _completed_basis(1, (0, 1, 2, 3), "phi")
    p = ring.to_dense(phi(3) ** 3 * phi(2, D1) + phi(1) * phi(3))
    rem, quots = divide(p, basis, track=True)
    total = JetPolynomial()
    for q, g in zip(quots, basis.polys):
        total = total + ring.from_dense(q) * ring.from_dense(g)
    assert total + ring.from_dense(rem) == ring.from_dense(p)


def test_grevlex_supported():
    x, y = JetVariable("x", 1, kind="symbol"), JetVariable("y", 1, kind="symbol")
    ring = PolyRing([x, y], GREVLEX)
    X, Y = JetPolynomial.variable(x), JetPolynomial.variable(y)
    gb = groebner([ring.to_dense(X * Y - 1), ring.to_dense(Y ** 2 - X)], GREVLEX)
    assert is_groebner(gb, GREVLEX)


@settings(max_examples=100, deadline=None)
@given(polynomials(pool=FIELD_POOL[:6], max_terms=5, max_degree=4), st.integers(0, 2 ** 32))
def test_reduction_is_confluent(p, seed):
    ring, basis = _completed_basis(1, (0, 1, 2, 3), "phi")
    dense = ring.to_dense(p)
    rng = random.Random(seed)
    first = divide(dense, basis)[0]
    shuffled = divide(dense, basis, choose=lambda opts: rng.choice(opts))[0]
    assert first == shuffled


# ideal construction ---------------------------------------------------------------

def test_generators_by_depth():
    assert list(IDEALS[0].generator_map()) == ["chi"]
    g1 = IDEALS[1].generator_map()
    assert set(g1) == {"chi", "g[0]", "g[1]", "g[2]", "g[3]"}
    for mu in range(4):
        assert g1[f"g[{mu}]"] == poly_sum(phi(i) * phi(i, tuple(int(k == mu) for k in range(4))) for i in (1, 2, 3))
    g2 = IDEALS[2].generator_map()
    assert len(g2) == 15


def test_prolongations_are_total_derivatives():
    gens = IDEALS[2].generator_map()
    for mu in range(4):
        assert 2 * gens[f"g[{mu}]"] == total_derivative(gens["chi"], mu)
        for nu in range(mu, 4):
            assert gens[f"g[{mu},{nu}]"] == total_derivative(gens[f"g[{mu}]"], nu)


def test_depth2_generator_shape():
    g = IDEALS[2].generator_map()["g[1,2]"]
    want = poly_sum(phi(i, (0, 0, 1, 0)) * phi(i, D1) + phi(i) * phi(i, (0, 1, 1, 0)) for i in (1, 2, 3))
    assert g == want


@pytest.mark.parametrize("depth", [0, 1, 2])
def test_generators_reduce_to_zero(depth):
    ideal = IDEALS[depth]
    for name, g in ideal.generators:
        assert ideal.reduce(g).is_zero(), name


def test_empty_ideal_is_identity():
    p = chi()
    assert build_ideal(None).reduce(p) == p


def test_depth_mismatch_raises():
    with pytest.raises(DepthError):
        IDEALS[0].reduce(phi(1, D1))
    with pytest.raises(DepthError):
        IDEALS[1].reduce(phi(1, (0, 1, 1, 0)))


# reduction examples ----------------------------------------------------------------

def test_reduce_examples():
    ideal = IDEALS[2]
    assert ideal.reduce(chi()).is_zero()
    grad = poly_sum(Pi(j) * phi(3, tuple(int(k == j) for k in range(4))) for j in (1, 2, 3))
    dot = poly_sum(phi(i) ** 2 for i in (1, 2, 3))
    lhs = ideal.reduce((dot * grad).scale(A ** -3 / E))
    assert lhs == ideal.reduce(grad.scale(A ** -1 / E))
    assert ideal.reduce(phi(2) * phi(2, D1) + phi(1) * phi(1, D1)) == ideal.reduce(-phi(3) * phi(3, D1))


def test_reduce_example_agrees_with_sphere_oracle():
    p = phi(2) * phi(2, D1) + phi(1) * phi(1, D1) + phi(3) * phi(3, D1)
    for seed in range(3):
        assert sphere_value(p, seed) == 0


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(polynomials(pool=FIELD_POOL + [Pi_var(1)], max_terms=4, max_degree=3))
def test_reduce_is_idempotent(p):
    ideal = IDEALS[2]
    r = ideal.reduce(p)
    assert ideal.reduce(r) == r


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(polynomials(pool=FIELD_POOL, max_terms=3, max_degree=2),
       st.lists(polynomials(pool=FIELD_POOL, max_terms=2, max_degree=2), min_size=5, max_size=5))
def test_completeness_and_soundness(q, cofactors):
    ideal = IDEALS[1]
    gens = list(ideal.generator_map().values())
    r = poly_sum(c * g for c, g in zip(cofactors, gens))
    assert ideal.reduce(q + r) == ideal.reduce(q)
    m = ideal.membership_with_cofactors(r)
    assert m.member
    assert m.recombine(ideal) == r


def test_membership_at_depth_two_recombines():
    ideal = IDEALS[2]
    gens = ideal.generator_map()
    r = phi(1) * gens["g[1,2]"] + phi(2, D1) * gens["g[3]"] - JetPolynomial.constant(A) * gens["chi"]
    m = ideal.membership_with_cofactors(r)
    assert m.member and m.recombine(ideal) == r


def test_membership_examples():
    ideal = IDEALS[2]
    m = ideal.membership_with_cofactors(chi())
    assert m.member and m.cofactors == {"chi": JetPolynomial.constant(1)}
    m = ideal.membership_with_cofactors(phi(1))
    assert not m.member and m.normal_form == phi(1)


@pytest.mark.parametrize("seed", range(4))
def test_zero_normal_form_vanishes_on_sphere(seed):
    ideal = IDEALS[2]
    rng = random.Random(seed)
    gens = list(ideal.generator_map().values())
    p = poly_sum(JetPolynomial.constant(ParamCoefficient(rng.randint(-3, 3))) * phi(rng.randint(1, 3)) * g
                 for g in rng.sample(gens, 4))
    assert ideal.reduce(p).is_zero()
    assert sphere_value(p, seed) == 0


def test_nonmember_does_not_vanish_on_sphere():
    p = phi(3) * phi(3, D1)
    assert not IDEALS[1].reduce(p).is_zero()
    assert any(sphere_value(p, s) != 0 for s in range(3))


def test_tangential_helpers():
    g = phi(1) * phi(1, D1) + phi(2) * phi(2, D1) + phi(3) * phi(3, D1)
    assert reduce_modulo_prolongations(g, (1,)).is_zero()
    assert tangential_residual(g, IDEALS[1]).is_zero()
