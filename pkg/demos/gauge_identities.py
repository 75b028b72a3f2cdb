"""Walk through the gauge side of the monopole vacuum model.

Run with ``python3 demos/gauge_identities.py``.
"""
from constraint_forge.gauge import generator_dependency, verify_identity
from constraint_forge.jet import to_text
from constraint_forge.models import euler_lagrange, hp_model, isorotation_generators
from constraint_forge.vacuum import StrongIdeal, build_ideal

model = hp_model()
ideal = build_ideal(2)  # chi, phi.d(phi) and one more round of prolongations
el = euler_lagrange(model)

# %% each generator kills the Euler-Lagrange expressions identically
for g in model.generators:
    res = verify_identity(g, el, ideal)
    print(g.label, "residual modulo the vacuum ideal:", to_text(res))

# the isorotations only close once |phi| = a is imposed
R1 = model.generators[0]
print("R1 without the ideal leaves", len(verify_identity(R1, el, StrongIdeal.empty()).terms), "terms")

# %% three isorotations, but only two independent ones
dep = generator_dependency(isorotation_generators(model), ideal)
print("independent isorotations:", dep.independent)
for name, cofactor in dep.relations[0].items():
    print(f"  {name} x {to_text(cofactor)}")
print("R1, R2, R3 independent:", generator_dependency(model.generators, ideal).independent)
