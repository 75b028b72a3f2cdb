"""Contract momenta with the gauge generators and compare with the known constraints.

Run with ``python3 demos/conjecture_vs_dirac.py``.
"""
from constraint_forge.gauge import apply_rule, match_constraints
from constraint_forge.jet import to_text
from constraint_forge.models import conjugate_momenta, hp_model
from constraint_forge.vacuum import build_ideal

model = hp_model()
ideal = build_ideal(2)

cands = apply_rule(model.generators, model.momentum_of, model.discarded, conjugate_momenta(model))
for c in cands:
    print(c.label, "=", to_text(c.expression))

# %% every candidate is a known first-class constraint, up to sign and the vacuum ideal
report = match_constraints(cands, model.references, ideal, model.expectation_map())
for m in report.matches:
    sign = "+" if m.sign > 0 else "-"
    print(f"{m.candidate} = {sign}{m.reference}")
    print("   chi cofactor found:   ", to_text(m.chi_cofactor))
    print("   chi cofactor expected:", to_text(m.expected_chi_cofactor))
    if m.discrepancy:
        print("   note:", m.discrepancy)

# Pi0 and the gauge-fixing conditions are not produced, as expected
print("not produced:", ", ".join(report.unmatched_references))
