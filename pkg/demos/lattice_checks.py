"""Numeric cross-checks on small periodic lattices.

Run with ``python3 demos/lattice_checks.py``. Takes a few seconds.
"""
from constraint_forge.lattice import LatticeGrid, classify_numeric, discretize, lattice_apply_rule
from constraint_forge.mechanics import dirac_iterate
from constraint_forge.models import hp_model, maxwell_model
from constraint_forge.pipeline import classifiable

# %% Maxwell on 2^3 sites: Dirac's algorithm by brute force
mx = maxwell_model()
grid = LatticeGrid(2)
dirac = dirac_iterate(discretize(mx, grid, "forward"))
print("generations:", [len(g) for g in dirac.generations], "redundant:", dirac.redundant)
print("classes:", sorted(set(dirac.classification.labels.values())))

gauss = lattice_apply_rule(mx.generators, mx, grid, "forward")["G"]
print("rule gives", len(gauss), "lattice Gauss laws, e.g.", gauss[0].expression)

# %% monopole vacuum: classify from bracket scaling
refs = classifiable(hp_model())
for coarse in (4, 8):
    grids = [LatticeGrid(coarse, 1.0), LatticeGrid(2 * coarse, 0.5)]
    nc = classify_numeric(refs, grids, range(5))
    print(f"{coarse}^3 -> {2 * coarse}^3:", nc.classification.labels)
    for p in nc.pairs:
        if p.ratio is not None:
            print(f"   {p.first},{p.second}: ratio {p.ratio:.2f}")
# the coarse pair of grids is still pre-asymptotic for zeta1,zeta3 and zeta2,zeta3
