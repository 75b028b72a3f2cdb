"""Periodic spatial lattices: exact discretization and numeric smeared brackets.

Two routes share one set of difference stencils:

* the symbolic route turns a field model into a finite point-mechanics model
  (one coordinate per component and site) with exact coefficients, so the
  Dirac algorithm can run on it;
* the numeric route evaluates constraint densities on sampled configurations
  with numpy and computes Poisson brackets of smeared constraints from
  analytic functional derivatives.

Lattice momenta are ``p = h^3 * Pi`` where ``Pi`` is the continuum momentum
density, so ``{q(x), p(y)} = delta_xy``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .gauge import CandidateConstraint, GaugeGenerator, RuleInapplicableError
from .jet import NO_DERIVS, JetPolynomial, JetVariable, differentiate_jet, poly_sum
from .mechanics import Classification, ConstraintSet, PointMechanicsModel, classify_constraints
from .models import FieldModel
from .params import ParamCoefficient

SCHEMES = ("central", "forward", "backward")
ADJOINT = {"central": "central", "forward": "backward", "backward": "forward"}
Site = Tuple[int, int, int]


class LatticeConfigurationError(ValueError):
    category = "configuration"


@dataclass(frozen=True)
class LatticeGrid:
    """``N`` sites per axis with periodic wrap and spacing ``h``."""

    N: int
    h: Fraction | float = 1

    def __post_init__(self):
        if self.N < 2:
            raise LatticeConfigurationError("a lattice needs at least 2 sites per axis")
        if self.h <= 0:
            raise LatticeConfigurationError("lattice spacing must be positive")

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.N,) * 3

    @property
    def extent(self) -> float:
        return self.N * float(self.h)

    @property
    def volume_element(self) -> float:
        return float(self.h) ** 3

    def sites(self) -> List[Site]:
        return list(itertools.product(range(self.N), repeat=3))

    def exact_spacing(self) -> Fraction:
        return Fraction(self.h) if not isinstance(self.h, float) else Fraction(self.h).limit_denominator(10 ** 9)

    def positions(self) -> np.ndarray:
        """Array of shape (3, N, N, N) with the coordinates of every site."""
        r = np.arange(self.N) * float(self.h)
        return np.array(np.meshgrid(r, r, r, indexing="ij"))


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise LatticeConfigurationError(f"unknown difference scheme {scheme!r}")


def stencil(axis: int, scheme: str) -> Dict[int, Fraction]:
    """Offsets along one axis and weights (in units of 1/h) of a first difference."""
    _check_scheme(scheme)
    if scheme == "central":
        return {1: Fraction(1, 2), -1: Fraction(-1, 2)}
    if scheme == "forward":
        return {1: Fraction(1), 0: Fraction(-1)}
    return {0: Fraction(1), -1: Fraction(-1)}


def composite_stencil(derivs: Sequence[int], scheme: str) -> Dict[Site, Fraction]:
    """Offsets and weights (in units of h^-order) for a spatial multi-index (k1, k2, k3)."""
    out: Dict[Site, Fraction] = {(0, 0, 0): Fraction(1)}
    for axis, times in enumerate(derivs):
        for _ in range(times):
            nxt: Dict[Site, Fraction] = {}
            for off, w in out.items():
                for step, sw in stencil(axis, scheme).items():
                    o = list(off)
                    o[axis] += step
                    o = tuple(o)
                    nxt[o] = nxt.get(o, Fraction(0)) + w * sw
            out = {o: w for o, w in nxt.items() if w}
    return out


def _shift(site: Site, off: Site, N: int) -> Site:
    return tuple((s + o) % N for s, o in zip(site, off))


# ---------------------------------------------------------------------------
# symbolic route

def lattice_variable(v: JetVariable, site: Site) -> JetVariable:
    return JetVariable(v.field, v.component, (v.derivs[0], 0, 0, 0), site, v.kind)


def lattice_jet(v: JetVariable, site: Site, grid: LatticeGrid, scheme: str = "central",
                momentum_scale: bool = False) -> JetPolynomial:
    """A continuum jet variable at ``site`` as a combination of site variables.

    With ``momentum_scale`` a momentum density is expressed through lattice
    momenta, ``Pi = p / h^3``.
    """
    h = grid.exact_spacing()
    order = sum(v.derivs[1:])
    parts = {}
    for off, w in composite_stencil(v.derivs[1:], scheme).items():
        target = lattice_variable(v, _shift(site, off, grid.N))
        parts[target] = parts.get(target, Fraction(0)) + w
    scale = Fraction(1) / h ** order
    if momentum_scale and v.kind == "momentum":
        scale /= h ** 3
    return poly_sum(JetPolynomial.variable(t).scale(ParamCoefficient(w * scale)) for t, w in parts.items() if w)


def discretize_density(expr: JetPolynomial, site: Site, grid: LatticeGrid, scheme: str = "central",
                       momentum_scale: bool = True) -> JetPolynomial:
    mapping = {v: lattice_jet(v, site, grid, scheme, momentum_scale) for v in expr.variables()
               if v.kind in ("field", "momentum")}
    return expr.subs(mapping)


def smeared_symbolic(expr: JetPolynomial, profile: Mapping[Site, Fraction | int], grid: LatticeGrid,
                     scheme: str = "central") -> JetPolynomial:
    """``h^3 sum_x f(x) expr(x)`` in lattice variables (exact)."""
    h3 = grid.exact_spacing() ** 3
    return poly_sum(discretize_density(expr, s, grid, scheme).scale(ParamCoefficient(Fraction(w) * h3))
                    for s, w in profile.items() if w)


def discretize(m: FieldModel, grid: LatticeGrid, scheme: str = "central") -> PointMechanicsModel:
    """Finite-dimensional model with Lagrangian ``h^3 sum_x L(x)``."""
    _check_scheme(scheme)
    L = m.lagrangian
    for v in L.variables():
        if v.derivs[0] > 1 or (v.derivs[0] and any(v.derivs[1:])):
            raise RuleInapplicableError(f"{v.label()} mixes time and space derivatives; not a first-order model")
    h3 = ParamCoefficient(grid.exact_spacing() ** 3)
    density = poly_sum(discretize_density(L, s, grid, scheme, momentum_scale=False) for s in grid.sites())
    coords = tuple(JetVariable(f, c, NO_DERIVS, s) for f, c in m.coordinates for s in grid.sites())
    return PointMechanicsModel(f"{m.name}@{grid.N}^3", coords, density.scale(h3), dict(m.momenta))


def lattice_apply_rule(gens: Sequence[GaugeGenerator], m: FieldModel, grid: LatticeGrid,
                       scheme: str = "central") -> Dict[str, List[CandidateConstraint]]:
    """Momentum rule on the lattice with the gauge parameter localized at each site.

    For a generator with entries ``Omega`` at multi-index ``k`` this returns,
    per site ``s``, ``sum_x Pi(x) Omega(x) (D^k delta_s)(x)`` written in lattice
    momenta, where ``D`` is the difference operator of ``scheme``.
    """
    out = {}
    for g in gens:
        cands = []
        for s0 in grid.sites():
            parts = []
            for comp, k, omega in g.items():
                if comp in m.discarded:
                    continue
                if k[0]:
                    raise RuleInapplicableError(
                        f"generator {g.label}: time derivative of the momentum of {comp[0]}[{comp[1]}] survives")
                mom = m.momentum_variable(comp)
                for off, w in composite_stencil(k[1:], scheme).items():
                    # (D^k delta_s0)(x) = sum_off w delta(x + off, s0)
                    x = _shift(s0, tuple(-o for o in off), grid.N)
                    weight = ParamCoefficient(w / grid.exact_spacing() ** sum(k[1:]))
                    term = discretize_density(omega * JetPolynomial.variable(mom), x, grid, scheme)
                    parts.append(term.scale(weight))
            cands.append(CandidateConstraint(f"{g.label}@{s0}", poly_sum(parts)))
        out[g.label] = cands
    return out


# ---------------------------------------------------------------------------
# numeric route

def difference(arr: np.ndarray, axis: int, scheme: str, h: float) -> np.ndarray:
    _check_scheme(scheme)
    if scheme == "central":
        return (np.roll(arr, -1, axis) - np.roll(arr, 1, axis)) / (2 * h)
    if scheme == "forward":
        return (np.roll(arr, -1, axis) - arr) / h
    return (arr - np.roll(arr, 1, axis)) / h


def apply_derivs(arr: np.ndarray, derivs: Sequence[int], scheme: str, h: float) -> np.ndarray:
    for axis, times in enumerate(derivs):
        for _ in range(times):
            arr = difference(arr, axis, scheme, h)
    return arr


def apply_adjoint(arr: np.ndarray, derivs: Sequence[int], scheme: str, h: float) -> np.ndarray:
    """Transpose of :func:`apply_derivs`: each first difference contributes ``-D`` of the adjoint scheme."""
    sign = (-1) ** sum(derivs)
    return sign * apply_derivs(arr, derivs, ADJOINT[scheme], h)


FIELD_COLUMNS = (("phi", (1, 2, 3)), ("A", (0, 1, 2, 3)), ("pi", (1, 2, 3)), ("Pi", (0, 1, 2, 3)))


@dataclass
class FieldConfig:
    """Site values of every field and momentum component on a grid."""

    grid: LatticeGrid
    values: Dict[Tuple[str, int], np.ndarray]
    seed: int | None = None
    params: Dict[str, float] = field(default_factory=lambda: {"a": 1.0, "e": 1.0, "lam": 0.0})

    def __getitem__(self, key: Tuple[str, int]) -> np.ndarray:
        return self.values[key]

    def columns(self) -> List[Tuple[str, int]]:
        return [(n, c) for n, comps in FIELD_COLUMNS for c in comps if (n, c) in self.values]

    def jet_values(self, variables: Iterable[JetVariable], scheme: str = "central") -> Dict[JetVariable, np.ndarray]:
        h = float(self.grid.h)
        out = {}
        for v in variables:
            if v.derivs[0]:
                raise LatticeConfigurationError(f"{v.label()} is a time derivative; configs are equal-time")
            out[v] = apply_derivs(self.values[(v.field, v.component)], v.derivs[1:], scheme, h)
        return out

    def evaluate(self, expr: JetPolynomial, scheme: str = "central") -> np.ndarray:
        vals = self.jet_values(expr.variables(), scheme)
        out = expr.evaluate(vals, self.params)
        return np.broadcast_to(np.asarray(out, dtype=float), self.grid.shape)

    def to_text(self) -> str:
        """Plain-text export: header comments, then one site per row in x-major order."""
        cols = self.columns()
        lines = [f"# grid N={self.grid.N} h={float(self.grid.h)!r}",
                 f"# seed {self.seed}",
                 "# params " + " ".join(f"{k}={v!r}" for k, v in sorted(self.params.items())),
                 "# columns x y z " + " ".join(f"{n}{c}" for n, c in cols)]
        for s in self.grid.sites():
            row = [str(i) for i in s] + [repr(float(self.values[c][s])) for c in cols]
            lines.append(" ".join(row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FieldConfig":
        header = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, rest = line[1:].strip().partition(" ")
                header[key] = rest
            elif line.strip():
                rows.append(line.split())
        kv = dict(item.split("=") for item in header["grid"].split())
        grid = LatticeGrid(int(kv["N"]), float(kv["h"]))
        params = {k: float(v) for k, v in (item.split("=") for item in header.get("params", "").split())}
        names = header["columns"].split()[3:]
        cols = []
        for n in names:
            i = len(n.rstrip("0123456789"))
            cols.append((n[:i], int(n[i:])))
        values = {c: np.zeros(grid.shape) for c in cols}
        for row in rows:
            s = tuple(int(x) for x in row[:3])
            for c, x in zip(cols, row[3:]):
                values[c][s] = float(x)
        seed = header.get("seed")
        return cls(grid, values, None if seed in (None, "None") else int(seed), params)


MODE_SETS = ("axial", "cube")


def _modes(mode_set: str) -> List[Site]:
    if mode_set == "cube":
        return list(itertools.product((-1, 0, 1), repeat=3))
    if mode_set == "axial":
        return [n for n in itertools.product((-1, 0, 1), repeat=3) if sum(map(abs, n)) <= 1]
    raise LatticeConfigurationError(f"unknown mode set {mode_set!r}")


def _smooth_field(rng: np.random.Generator, grid: LatticeGrid, extent: float, amplitude: float = 1.0,
                  mode_set: str = "cube") -> np.ndarray:
    """Random trigonometric polynomial sampled at the sites.

    ``axial`` keeps the constant and the six unit wave vectors along the axes;
    ``cube`` uses every wave vector with components in {-1, 0, 1}.
    """
    x = grid.positions()
    out = np.zeros(grid.shape)
    modes = _modes(mode_set)
    coeffs = rng.normal(size=len(modes)) / len(modes) ** 0.5
    phases = rng.uniform(0, 2 * math.pi, size=len(modes))
    for n, c, ph in zip(modes, coeffs, phases):
        arg = sum(2 * math.pi * ni * xi / extent for ni, xi in zip(n, x))
        out += c * np.cos(arg + ph)
    return amplitude * out


def sample_vacuum_config(grid: LatticeGrid, seed: int, a: float = 1.0, e: float = 1.0,
                         extent: float | None = None, on_surface: bool = True,
                         fluctuation: float = 0.4) -> FieldConfig:
    """Smooth Higgs-vacuum configuration, deterministic in ``seed``.

    The random functions are fixed continuum functions of position (on a box
    of side ``extent``, default the grid extent), so grids of the same extent
    sample the same configuration at different resolutions.  ``phi`` is
    radially projected onto ``|phi| = a``.  With ``on_surface`` the momenta
    solve the momentum constraints: ``Pi_i`` is the central-difference curl
    of a random potential and ``pi`` makes the combination ``Phi`` vanish.
    """
    extent = grid.extent if extent is None else extent
    rng = np.random.default_rng(seed)
    h = float(grid.h)
    base = rng.normal(size=3)
    base /= np.linalg.norm(base)
    phi = np.array([base[i] + fluctuation * _smooth_field(rng, grid, extent) for i in range(3)])
    phi *= a / np.sqrt((phi ** 2).sum(axis=0))
    values: Dict[Tuple[str, int], np.ndarray] = {}
    for i in range(3):
        values[("phi", i + 1)] = phi[i]
    values[("A", 0)] = np.zeros(grid.shape)
    for k in (1, 2, 3):
        values[("A", k)] = _smooth_field(rng, grid, extent)
    values[("Pi", 0)] = np.zeros(grid.shape)
    if on_surface:
        pot = [_smooth_field(rng, grid, extent) for _ in range(3)]
        for k in range(3):
            l, m = (k + 1) % 3, (k + 2) % 3
            values[("Pi", k + 1)] = difference(pot[m], l, "central", h) - difference(pot[l], m, "central", h)
        dphi = [[difference(phi[j], k, "central", h) for k in range(3)] for j in range(3)]
        # pi_m = (1/a^3 e) eps_ijm phi_i sum_k Pi_k d_k phi_j
        for mm in range(3):
            acc = np.zeros(grid.shape)
            for i in range(3):
                for j in range(3):
                    s = _levi((i, j, mm))
                    if s:
                        acc += s * phi[i] * sum(values[("Pi", k + 1)] * dphi[j][k] for k in range(3))
            values[("pi", mm + 1)] = acc / (a ** 3 * e)
    else:
        for k in (1, 2, 3):
            values[("Pi", k)] = _smooth_field(rng, grid, extent)
        for i in (1, 2, 3):
            values[("pi", i)] = _smooth_field(rng, grid, extent)
    return FieldConfig(grid, values, seed, {"a": float(a), "e": float(e), "lam": 0.0})


def _levi(idx: Tuple[int, int, int]) -> int:
    i, j, k = idx
    return (i - j) * (j - k) * (k - i) // 2


def smooth_profile(grid: LatticeGrid, seed: int, extent: float | None = None) -> np.ndarray:
    """Positive low-frequency smearing profile, a fixed continuum function of position."""
    extent = grid.extent if extent is None else extent
    rng = np.random.default_rng([seed, 7919])
    return 1.0 + 0.5 * _smooth_field(rng, grid, extent)


@dataclass
class SmearedFunctional:
    """``h^3 sum_x f(x) expr(x)`` for a constraint density ``expr`` and profile ``f``."""

    expression: JetPolynomial
    profile: np.ndarray
    label: str = ""

    def value(self, config: FieldConfig, scheme: str = "central") -> float:
        return float(config.grid.volume_element * np.sum(self.profile * config.evaluate(self.expression, scheme)))

    def gradient(self, config: FieldConfig, scheme: str = "central") -> Dict[Tuple[str, int], np.ndarray]:
        """Partial derivatives of the value with respect to every site value it depends on."""
        h = float(config.grid.h)
        h3 = config.grid.volume_element
        partials = _partials(self.expression)
        vals = config.jet_values(self.expression.variables(), scheme)
        out: Dict[Tuple[str, int], np.ndarray] = {}
        for v, dp in partials:
            w = self.profile * np.broadcast_to(np.asarray(dp.evaluate(vals, config.params), dtype=float),
                                               config.grid.shape)
            contrib = h3 * apply_adjoint(w, v.derivs[1:], scheme, h)
            key = (v.field, v.component)
            out[key] = out[key] + contrib if key in out else contrib
        return out


@lru_cache(maxsize=None)
def _partials(expr: JetPolynomial) -> Tuple[Tuple[JetVariable, JetPolynomial], ...]:
    return tuple((v, differentiate_jet(expr, v)) for v in sorted(expr.variables()))


DEFAULT_PAIRS = {"phi": "pi", "A": "Pi"}


def bracket_from_gradients(dF, dG, h: float, pairs: Mapping[str, str] = DEFAULT_PAIRS) -> float:
    total = 0.0
    for (name, comp), gq in dF.items():
        mom = pairs.get(name)
        if mom is not None and (mom, comp) in dG:
            total += float(np.sum(gq * dG[(mom, comp)]))
    for (name, comp), gq in dG.items():
        mom = pairs.get(name)
        if mom is not None and (mom, comp) in dF:
            total -= float(np.sum(dF[(mom, comp)] * gq))
    return total / h ** 3


def numeric_poisson_bracket(F: SmearedFunctional, G: SmearedFunctional, config: FieldConfig,
                            scheme: str = "central", pairs: Mapping[str, str] = DEFAULT_PAIRS) -> float:
    """``sum_y (dF/dq dG/dPi - dF/dPi dG/dq) / h^3`` with exact functional derivatives."""
    if F is G:
        return 0.0
    return bracket_from_gradients(F.gradient(config, scheme), G.gradient(config, scheme),
                                  float(config.grid.h), pairs)


# ---------------------------------------------------------------------------
# numeric classification

@dataclass
class PairEvidence:
    first: str
    second: str
    medians: List[float]
    signed_medians: List[float]
    exact_zero: bool
    ratio: float | None
    weakly_vanishing: bool

    def to_dict(self) -> dict:
        return {"pair": [self.first, self.second], "median_abs": [_round(x) for x in self.medians],
                "signed_median": [_round(x) for x in self.signed_medians], "exact_zero": self.exact_zero,
                "ratio": None if self.ratio is None else _round(self.ratio),
                "weakly_vanishing": self.weakly_vanishing}


def _round(x: float) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.10g}")


@dataclass
class NumericClassification:
    grids: List[LatticeGrid]
    seeds: List[int]
    pairs: List[PairEvidence]
    classification: Classification
    oracle_checks: Dict[str, float] = field(default_factory=dict)

    def pair(self, a: str, b: str) -> PairEvidence:
        for p in self.pairs:
            if {p.first, p.second} == {a, b} and (a != b or p.first == p.second == a):
                return p
        raise KeyError((a, b))

    def to_dict(self) -> dict:
        return {"grids": [{"N": g.N, "h": float(g.h)} for g in self.grids], "seeds": self.seeds,
                "pairs": [p.to_dict() for p in self.pairs], "classification": self.classification.to_dict(),
                "oracle_relative_error": {k: _round(v) for k, v in sorted(self.oracle_checks.items())}}


Oracle = Callable[[np.ndarray, np.ndarray, FieldConfig], float]


def classify_numeric(refs: ConstraintSet, grids: Sequence[LatticeGrid], seeds: Sequence[int],
                     profiles_per_seed: int = 2, scheme: str = "central", a: float = 1.0, e: float = 1.0,
                     oracles: Mapping[Tuple[str, str], Oracle] | None = None,
                     zero_tol: float = 1e-11) -> NumericClassification:
    """Classify constraints from brackets at several resolutions of one box.

    A pair counts as weakly vanishing when every sample is zero to rounding,
    or when the median magnitude drops by at least a factor 2 each time the
    spacing halves.  Grids are sorted from coarse to fine and must share the
    same extent.
    """
    grids = sorted(grids, key=lambda g: -float(g.h))
    if len(grids) < 2 or len({float(g.h) for g in grids}) < 2:
        raise LatticeConfigurationError("numeric classification needs at least two resolutions")
    extent = grids[0].extent
    if any(abs(g.extent - extent) > 1e-12 * extent for g in grids):
        raise LatticeConfigurationError("all grids must cover the same box")
    if not seeds:
        raise LatticeConfigurationError("at least one seed is required")
    names = refs.names()
    exprs = {c.name: c.expression for c in refs}
    oracles = dict(oracles or {})
    samples: Dict[Tuple[str, str], List[List[float]]] = {}
    oracle_err: Dict[str, float] = {}
    for gi, grid in enumerate(grids):
        for seed in seeds:
            cfg = sample_vacuum_config(grid, seed, a, e, extent)
            for t in range(profiles_per_seed):
                f = smooth_profile(grid, 2 * (seed * profiles_per_seed + t), extent)
                g = smooth_profile(grid, 2 * (seed * profiles_per_seed + t) + 1, extent)
                gf = {n: SmearedFunctional(exprs[n], f, n).gradient(cfg, scheme) for n in names}
                gg = {n: SmearedFunctional(exprs[n], g, n).gradient(cfg, scheme) for n in names}
                for i, n1 in enumerate(names):
                    for n2 in names[i:]:
                        b = bracket_from_gradients(gf[n1], gg[n2], float(grid.h))
                        samples.setdefault((n1, n2), [[] for _ in grids])[gi].append(b)
                        if (n1, n2) in oracles:
                            ref = oracles[(n1, n2)](f, g, cfg)
                            err = abs(b - ref) / max(abs(ref), 1e-300)
                            key = f"{n1},{n2}"
                            oracle_err[key] = max(oracle_err.get(key, 0.0), err)
    pairs = []
    n = len(names)
    matrix = [[ParamCoefficient(0) for _ in range(n)] for _ in range(n)]
    for (n1, n2), per_grid in samples.items():
        med = [float(np.median(np.abs(v))) for v in per_grid]
        signed = [float(np.median(v)) for v in per_grid]
        scale = max(1.0, max(max(abs(x) for x in v) for v in per_grid))
        exact = all(abs(x) <= zero_tol * scale for v in per_grid for x in v)
        ratio = None
        if not exact:
            ratios = [med[k] / med[k + 1] if med[k + 1] else math.inf for k in range(len(med) - 1)]
            ratio = min(ratios)
        weak = exact or (ratio is not None and ratio >= 2)
        pairs.append(PairEvidence(n1, n2, med, signed, exact, ratio, weak))
        if not weak and n1 != n2:
            i, j = names.index(n1), names.index(n2)
            sign = 1 if signed[-1] > 0 else -1
            matrix[i][j] = ParamCoefficient(sign)
            matrix[j][i] = ParamCoefficient(-sign)
    mat = [[JetPolynomial.constant(c) for c in row] for row in matrix]
    cls = classify_constraints(refs, mat)
    return NumericClassification(list(grids), list(seeds), pairs, cls, oracle_err)


def ultralocal_coefficient(f: JetPolynomial, g: JetPolynomial,
                           pairs: Mapping[str, str] = DEFAULT_PAIRS) -> JetPolynomial | None:
    """Density ``c`` with ``{f(x), g(y)} = c(x) delta(x - y)``, or None when derivatives of delta appear."""
    by_q = {}
    by_p = {}
    for poly, tag in ((f, 0), (g, 1)):
        for v in poly.variables():
            if v.field in pairs:
                by_q.setdefault((v.field, v.component), [set(), set()])[tag].add(v)
            elif v.field in pairs.values():
                q = next(k for k, val in pairs.items() if val == v.field)
                by_p.setdefault((q, v.component), [set(), set()])[tag].add(v)
    parts = []
    for comp in set(by_q) & set(by_p):
        qs, ps = by_q[comp], by_p[comp]
        for a, b, sign in ((0, 1, 1), (1, 0, -1)):
            if qs[a] and ps[b]:
                if any(any(v.derivs) for v in qs[a] | ps[b]):
                    return None
                q = next(iter(qs[a]))
                p = next(iter(ps[b]))
                src, dst = (f, g) if a == 0 else (g, f)
                term = differentiate_jet(src, q) * differentiate_jet(dst, p)
                parts.append(term if sign == 1 else -term)
    return poly_sum(parts)


def ultralocal_oracle(scale: float = -1.0) -> Oracle:
    """``scale * h^3 sum_x f g``: the bracket of two smeared densities with a constant delta coefficient."""

    def oracle(f, g, cfg):
        return scale * cfg.grid.volume_element * float(np.sum(f * g))

    return oracle


__all__ = [
    "LatticeGrid", "FieldConfig", "SmearedFunctional", "PairEvidence", "NumericClassification",
    "LatticeConfigurationError", "stencil", "composite_stencil", "lattice_jet", "discretize_density",
    "smeared_symbolic", "discretize", "lattice_apply_rule", "difference", "apply_derivs", "apply_adjoint",
    "sample_vacuum_config", "smooth_profile", "numeric_poisson_bracket", "bracket_from_gradients",
    "classify_numeric", "ultralocal_oracle", "ultralocal_coefficient",
]
