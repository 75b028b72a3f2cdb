"""Hypothesis strategies for jet polynomials and coefficients."""
from fractions import Fraction

from hypothesis import strategies as st

from constraint_forge.jet import JetPolynomial, JetVariable
from constraint_forge.params import ParamCoefficient

A = ParamCoefficient.param("a")
E = ParamCoefficient.param("e")


def phi_var(i, derivs=(0, 0, 0, 0)):
    return JetVariable("phi", i, tuple(derivs))


def Pi_var(i, derivs=(0, 0, 0, 0)):
    return JetVariable("Pi", i, tuple(derivs), (), "momentum")


POOL = ([phi_var(i) for i in (1, 2, 3)] + [phi_var(i, (0, 1, 0, 0)) for i in (1, 2, 3)]
        + [phi_var(3, (1, 0, 0, 0)), JetVariable("A", 1), Pi_var(2)])
FIELD_POOL = [phi_var(i) for i in (1, 2, 3)] + [phi_var(i, d) for i in (1, 2, 3)
                                                  for d in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0))]

small_fraction = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def coefficients(draw, allow_params=True):
    c = ParamCoefficient(draw(small_fraction))
    if allow_params and draw(st.booleans()):
        c = c * A ** draw(st.integers(-2, 2)) * E ** draw(st.integers(-1, 1))
    return c


@st.composite
def polynomials(draw, pool=POOL, max_terms=4, max_degree=3, allow_params=True):
    p = JetPolynomial()
    for _ in range(draw(st.integers(0, max_terms))):
        powers = {}
        for _ in range(draw(st.integers(0, max_degree))):
            v = draw(st.sampled_from(pool))
            powers[v] = powers.get(v, 0) + 1
        p = p + JetPolynomial.from_monomial(powers, draw(coefficients(allow_params)))
    return p


def frac(x):
    return Fraction(x)
