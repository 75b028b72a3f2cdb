"""Dirac's algorithm on two one-line mechanical models.

Run with ``python3 demos/toy_models.py``.
"""
from constraint_forge.jet import to_text
from constraint_forge.mechanics import dirac_iterate
from constraint_forge.models import toy_models

for model in toy_models():
    result = dirac_iterate(model.to_point_model())
    print(model.name)
    print("  H_T =", to_text(result.total_hamiltonian))
    for k, gen in enumerate(result.generations, start=1):
        for c in gen:
            print(f"  gen {k}: {to_text(c.expression)}  ({c.klass})")
    if not result.generations:
        print("  no constraints")
