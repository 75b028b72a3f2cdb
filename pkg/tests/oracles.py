"""Independent evaluation oracles built on sympy.

``sphere_value`` evaluates a jet polynomial on a field configuration that
satisfies the vacuum constraint identically: phi is the inverse stereographic
image of two random polynomial functions u, v of (t, x, y, z).  Anything in
the vacuum ideal must evaluate to exactly zero there.
"""
import random
from functools import lru_cache

import sympy

from constraint_forge.jet import JetPolynomial

X = sympy.symbols("t x y z")
PARAM_SYMBOLS = dict(zip(("a", "e", "lam"), sympy.symbols("a e lam")))


def _random_poly(rng):
    expr = sympy.Rational(rng.randint(-4, 4), rng.randint(1, 3))
    for x in X:
        expr += sympy.Rational(rng.randint(-3, 3), rng.randint(1, 3)) * x
    for i, x in enumerate(X):
        for y in X[i:]:
            expr += sympy.Rational(rng.randint(-2, 2), rng.randint(1, 4)) * x * y
    return expr


def sphere_fields(seed, a):
    rng = random.Random(seed)
    u, v = _random_poly(rng), _random_poly(rng)
    den = 1 + u ** 2 + v ** 2
    return {1: a * 2 * u / den, 2: a * 2 * v / den, 3: a * (1 - u ** 2 - v ** 2) / den}


def _setup(seed):
    rng = random.Random(10_000 + seed)
    params = {k: sympy.Rational(rng.randint(1, 5), rng.randint(1, 3)) for k in PARAM_SYMBOLS}
    point = {x: sympy.Rational(rng.randint(-3, 3), rng.randint(1, 2)) for x in X}
    return params, point


@lru_cache(maxsize=None)
def _field_value(seed, component, derivs):
    params, point = _setup(seed)
    expr = sphere_fields(seed, params["a"])[component]
    for mu, k in enumerate(derivs):
        if k:
            expr = sympy.diff(expr, X[mu], k)
    return sympy.Rational(expr.subs(point))


def sphere_value(p: JetPolynomial, seed: int, field: str = "phi"):
    """Exact value of ``p`` on a random vacuum configuration at a random point."""
    params, _ = _setup(seed)
    cache = {}
    total = sympy.Integer(0)
    for powers, c in p.items():
        term = c.to_sympy().subs({PARAM_SYMBOLS[k]: v for k, v in params.items()})
        for var, e in powers.items():
            if var not in cache:
                if var.field == field and not var.site:
                    cache[var] = _field_value(seed, var.component, var.derivs)
                else:
                    r = random.Random(f"{seed}:{var.kind}:{var.label()}")
                    cache[var] = sympy.Rational(r.randint(-5, 5), r.randint(1, 4))
            term *= cache[var] ** e
        total += term
    return sympy.Rational(total)
