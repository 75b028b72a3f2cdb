import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constraint_forge.dsl import parse_expression
from constraint_forge.jet import (DepthError, JetPolynomial, JetVariable, differentiate_jet, jet, normal_form, to_text,
                                  total_derivative)
from constraint_forge.params import ParamCoefficient
from constraint_forge.tensor import (ArityError, IndexDisciplineError, MissingAssignmentError, UnknownSymbolError,
                                     expand_tensor)
from strategies import A, E, FIELD_POOL, coefficients, phi_var, polynomials

phi = lambda i, d=(0, 0, 0, 0): JetPolynomial.variable(phi_var(i, d))  # noqa: E731


def ex(text, **assign):
    return expand_tensor(parse_expression(text), assign)


# coefficients ------------------------------------------------------------------

def test_coefficient_reduces_common_factors():
    c = (A ** 2 - 1) / (A - 1)
    assert c == A + 1
    assert c.is_simple


def test_coefficient_zero_and_inverse():
    assert not ParamCoefficient(0)
    assert (A * E).inverse() * A * E == ParamCoefficient(1)
    with pytest.raises(ZeroDivisionError):
        ParamCoefficient(0).inverse()


def test_coefficient_rejects_floats():
    with pytest.raises(TypeError):
        ParamCoefficient.coerce(0.5)


def test_coefficient_evaluate():
    assert (A ** -3 / E * 3).evaluate({"a": 2.0, "e": 0.5}) == pytest.approx(0.75)


@given(coefficients(), coefficients(), coefficients())
def test_coefficient_field_axioms(x, y, z):
    assert (x + y) * z == x * z + y * z
    assert x * y == y * x
    if y:
        assert (x / y) * y == x


# polynomials -------------------------------------------------------------------

@settings(max_examples=1000, deadline=None)
@given(polynomials(), polynomials(), polynomials())
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p + q == q + p
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p - p == JetPolynomial()


def test_normal_form_examples():
    v, w = phi(1), phi(2)
    assert normal_form(v * w + w * v - 2 * w * v).is_zero()
    c = A / E
    assert (v.scale(c) - v.scale(c)).is_zero()


@given(polynomials())
def test_normal_form_idempotent(p):
    assert to_text(normal_form(normal_form(p))) == to_text(normal_form(p))


@given(polynomials(), polynomials())
def test_equality_matches_text(p, q):
    assert ((p - q).is_zero()) == (to_text(normal_form(p)) == to_text(normal_form(q)))


def test_to_text_is_deterministic():
    p = phi(2) * phi(1) + JetPolynomial.constant(A ** -1) * phi(3, (0, 1, 0, 0))
    q = JetPolynomial.constant(A ** -1) * phi(3, (0, 1, 0, 0)) + phi(1) * phi(2)
    assert to_text(p) == to_text(q)


# derivatives -------------------------------------------------------------------

def test_differentiate_examples():
    v = phi_var(1)
    assert differentiate_jet(phi(1) ** 2, v) == 2 * phi(1)
    assert differentiate_jet(phi(2) * phi(3), v).is_zero()


@given(polynomials(), polynomials(), st.sampled_from(FIELD_POOL))
def test_differentiate_is_a_derivation(p, q, v):
    assert differentiate_jet(p * q, v) == differentiate_jet(p, v) * q + p * differentiate_jet(q, v)


def test_total_derivative_examples():
    chi = phi(1) ** 2 + phi(2) ** 2 + phi(3) ** 2 - JetPolynomial.constant(A ** 2)
    d1 = total_derivative(chi, 1)
    assert d1 == sum((2 * phi(i) * phi(i, (0, 1, 0, 0)) for i in (1, 2, 3)), JetPolynomial())
    assert total_derivative(JetPolynomial.constant(A / E), 0).is_zero()
    got = total_derivative(phi(3) * phi(3, (0, 0, 1, 0)), 1)
    assert got == phi(3, (0, 1, 0, 0)) * phi(3, (0, 0, 1, 0)) + phi(3) * phi(3, (0, 1, 1, 0))


def test_total_derivative_depth_limit():
    with pytest.raises(DepthError):
        total_derivative(phi(1, (0, 1, 1, 0)), 2, depth=2)
    assert total_derivative(phi(1, (0, 1, 1, 0)), 2, depth=3) == phi(1, (0, 1, 2, 0))


def test_momenta_have_no_time_derivatives():
    with pytest.raises(DepthError):
        total_derivative(jet("Pi", 1, kind="momentum"), 0)


@settings(deadline=None)
@given(polynomials(pool=FIELD_POOL), st.integers(0, 3), st.integers(0, 3))
def test_mixed_partials_commute(p, mu, nu):
    lhs = total_derivative(total_derivative(p, mu, depth=None), nu, depth=None)
    rhs = total_derivative(total_derivative(p, nu, depth=None), mu, depth=None)
    assert lhs == rhs


# tensor expansion --------------------------------------------------------------

def test_epsilon_contraction_identity_exhaustive():
    lhs = parse_expression("eps(a,b,c)*eps(a,d,e)")
    rhs = parse_expression("delta(b,d)*delta(c,e) - delta(b,e)*delta(c,d)")
    for b, c, d, e in itertools.product((1, 2, 3), repeat=4):
        assign = dict(b=b, c=c, d=d, e=e)
        assert expand_tensor(lhs, assign) == expand_tensor(rhs, assign)
    assert ex("eps(a,b,c)*eps(a,d,e)", b=1, c=2, d=1, e=2) == JetPolynomial.constant(1)
    assert ex("eps(a,b,c)*eps(a,d,e)", b=1, c=2, d=2, e=1) == JetPolynomial.constant(-1)


def test_epsilon_antisymmetry():
    for i, j, k in itertools.product((1, 2, 3), repeat=3):
        assert ex("eps(i,j,k)", i=i, j=j, k=k) == -ex("eps(i,j,k)", i=j, j=i, k=k)


def test_opaque_symbol_contraction():
    phi_sym = JetPolynomial.variable(JetVariable("Phi", 2, kind="symbol"))
    phi_sym1 = JetPolynomial.variable(JetVariable("Phi", 1, kind="symbol"))
    assert ex("eps(3,m,n)*phi[m]*Phi[n]") == phi(1) * phi_sym - phi(2) * phi_sym1


def test_kronecker_contraction():
    assert ex("delta(i,j)*phi[i]*phi[j]") == phi(1) ** 2 + phi(2) ** 2 + phi(3) ** 2


def test_metric_signature():
    a0 = JetPolynomial.variable(JetVariable("A", 0))
    a1 = JetPolynomial.variable(JetVariable("A", 1))
    assert ex("A[mu]*A[mu]") == a0 ** 2 - a1 ** 2 - ex("A[2]*A[2]") - ex("A[3]*A[3]")
    # raised spatial derivative flips sign
    assert ex("d(phi[1],1)") == -phi(1, (0, 1, 0, 0))
    assert ex("d(phi[1],0)") == phi(1, (1, 0, 0, 0))


def test_index_errors():
    with pytest.raises(IndexDisciplineError):
        ex("phi[i]*phi[i]*phi[i]")
    with pytest.raises(IndexDisciplineError):
        ex("phi[i] + phi[j]", i=1, j=1)
    with pytest.raises(MissingAssignmentError):
        ex("phi[i]")
    with pytest.raises(UnknownSymbolError):
        ex("psi[1]")
    with pytest.raises(ArityError):
        ex("eps(1,2)")


def test_parameter_division_and_powers():
    got = ex("phi[1]^2/(a*e)")
    assert got == (phi(1) ** 2).scale(A.inverse() / E)
    assert ex("a^-3*phi[1]") == phi(1).scale(A ** -3)
    assert ex("phi[1]/2") == phi(1).scale(Fraction(1, 2))
