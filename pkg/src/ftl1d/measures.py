"""Reconstructions of a particle state as measures, and exact transport metrics.

A particle configuration induces three objects: a piecewise-constant density
(cell value = particle mass over gap), the empirical measure of the mass
carrying particles (leader excluded), and the Lagrangian density living on
mass cells.  Cumulative distributions, generalized inverses, the scaled
1-Wasserstein distance and L1 distances are all computed in closed form by
merged-breakpoint arithmetic; no quadrature is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .initial_data import InitialDatum, ParticleConfiguration

MASS_MISMATCH_RTOL = 1e-9

STEP = "step_right_continuous"
LINEAR = "piecewise_linear"


# ---------------------------------------------------------------------------
# measure types

@dataclass(frozen=True)
class PiecewiseConstantDensity:
    """Density that is constant on cells and zero outside them."""

    breakpoints: np.ndarray
    values: np.ndarray
    total_mass: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.size != vals.size + 1 or np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing, one more than values")
        if np.any(vals < 0.0) or not np.all(np.isfinite(vals)):
            raise ValueError("cell values must be finite and nonnegative")
        area = float(np.sum(vals * np.diff(bp)))
        if abs(area - self.total_mass) > MASS_MISMATCH_RTOL * max(1.0, abs(self.total_mass)):
            raise ValueError("total_mass inconsistent with cell areas")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Finite sum of point masses with one common weight."""

    atoms: np.ndarray
    weight: float

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim != 1 or atoms.size == 0 or np.any(np.diff(atoms) < 0.0):
            raise ValueError("atoms must be a nonempty non-decreasing 1-d array")
        if not self.weight > 0.0:
            raise ValueError("weight must be positive")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self) -> float:
        return self.atoms.size * self.weight


@dataclass(frozen=True)
class LagrangianDensity:
    """Cell densities transported to mass coordinates [i*m, (i+1)*m)."""

    values: np.ndarray
    cell_mass: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0 or np.any(vals <= 0.0):
            raise ValueError("values must be positive")
        if not self.cell_mass > 0.0:
            raise ValueError("cell_mass must be positive")
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# reconstructions from a particle configuration

def hat_density(config: ParticleConfiguration) -> PiecewiseConstantDensity:
    """Piecewise-constant reconstruction: mass/gap on each particle cell."""
    return PiecewiseConstantDensity(
        breakpoints=config.positions.copy(),
        values=config.densities(),
        total_mass=config.total_mass,
    )


def empirical(config: ParticleConfiguration) -> EmpiricalMeasure:
    """Empirical measure of the mass-carrying particles (leader excluded)."""
    return EmpiricalMeasure(atoms=config.positions[:-1].copy(), weight=config.particle_mass)


def check_density(config: ParticleConfiguration) -> LagrangianDensity:
    """Cell densities as a function of the mass coordinate."""
    return LagrangianDensity(values=config.densities(), cell_mass=config.particle_mass)


def lagrangian_l1(a: LagrangianDensity, b: LagrangianDensity) -> float:
    """L1 distance in the mass coordinate between two Lagrangian densities."""
    if a.values.size != b.values.size or a.cell_mass != b.cell_mass:
        raise ValueError("Lagrangian densities live on different mass grids")
    return float(a.cell_mass * np.sum(np.abs(a.values - b.values)))


# ---------------------------------------------------------------------------
# monotone piecewise functions (CDFs and their generalized inverses)

@dataclass(frozen=True)
class PiecewiseMonotone:
    """Non-decreasing step or piecewise-linear function.

    step_right_continuous: ``breakpoints`` are jump locations (strictly
    increasing) and ``values`` the post-jump values; ``left_value`` applies
    before the first jump.

    piecewise_linear: ``breakpoints``/``values`` are nodes of a continuous
    polyline, constant outside the node range.  Repeated breakpoints encode
    jump discontinuities; evaluation is right-continuous.

    ``domain`` is set for generalized inverses (mass interval), None for
    CDFs defined on the whole line.
    """

    kind: str
    breakpoints: np.ndarray
    values: np.ndarray
    left_value: float
    domain: tuple | None = None

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size == 0:
            raise ValueError("breakpoints and values must be nonempty 1-d arrays")
        if np.any(np.diff(vals) < 0.0):
            raise ValueError("function must be non-decreasing")
        if self.kind == STEP:
            if bp.size != vals.size or np.any(np.diff(bp) <= 0.0):
                raise ValueError("step kind needs strictly increasing jump locations")
            if self.left_value > vals[0]:
                raise ValueError("function must be non-decreasing")
        elif self.kind == LINEAR:
            if bp.size != vals.size or np.any(np.diff(bp) < 0.0):
                raise ValueError("linear kind needs non-decreasing node locations")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def range_top(self) -> float:
        return float(self.values[-1])

    @property
    def range_bottom(self) -> float:
        return float(self.left_value if self.kind == STEP else self.values[0])

    def _linear_right(self, x: np.ndarray) -> np.ndarray:
        """Right-continuous evaluation of a polyline with jump nodes."""
        bp, vals = self.breakpoints, self.values
        n = bp.size
        idx = np.searchsorted(bp, x, side="right") - 1  # last node <= x
        out = np.empty(x.shape)
        lo = idx < 0
        hi = idx >= n - 1
        mid = ~(lo | hi)
        out[lo] = vals[0]
        out[hi] = vals[-1]
        ii = idx[mid]
        x0, x1 = bp[ii], bp[ii + 1]   # x1 > x >= x0, never degenerate
        w = (x[mid] - x0) / (x1 - x0)
        out[mid] = vals[ii] + w * (vals[ii + 1] - vals[ii])
        return out

    def _linear_left(self, x: np.ndarray) -> np.ndarray:
        """Left limits of a polyline with jump nodes."""
        bp, vals = self.breakpoints, self.values
        n = bp.size
        idx = np.searchsorted(bp, x, side="left")  # first node >= x
        out = np.empty(x.shape)
        lo = idx <= 0
        hi = idx >= n
        hit = ~lo & ~hi & (bp[np.minimum(idx, n - 1)] == x)
        mid = ~(lo | hi | hit)
        out[lo] = vals[0]
        out[hi] = vals[-1]
        out[hit] = vals[idx[hit]]     # first node at x: value before the jump
        ii = idx[mid]
        x0, x1 = bp[ii - 1], bp[ii]   # x0 < x < x1
        w = (x[mid] - x0) / (x1 - x0)
        out[mid] = vals[ii - 1] + w * (vals[ii] - vals[ii - 1])
        return out

    def right_limits(self, x) -> np.ndarray:
        """Values f(x+), i.e. right-continuous evaluation."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == STEP:
            idx = np.searchsorted(self.breakpoints, x, side="right")
            padded = np.concatenate(([self.left_value], self.values))
            return padded[idx]
        return self._linear_right(x)

    def left_limits(self, x) -> np.ndarray:
        """Values f(x-), the limit from the left."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == STEP:
            idx = np.searchsorted(self.breakpoints, x, side="left")
            padded = np.concatenate(([self.left_value], self.values))
            return padded[idx]
        return self._linear_left(x)

    def value(self, x):
        """Right-continuous point evaluation (scalars in, floats out)."""
        out = self.right_limits(x)
        return float(out[0]) if np.ndim(x) == 0 else out

    __call__ = value


def cdf(measure) -> PiecewiseMonotone:
    """Cumulative distribution of a density, empirical measure, or datum.

    Densities and initial data give continuous piecewise-linear CDFs;
    empirical measures give right-continuous step CDFs jumping by the atom
    weight at every atom.
    """
    if isinstance(measure, PiecewiseConstantDensity):
        nodes = np.concatenate(
            ([0.0], np.cumsum(measure.values * np.diff(measure.breakpoints))))
        return PiecewiseMonotone(LINEAR, measure.breakpoints.copy(), nodes, 0.0)
    if isinstance(measure, InitialDatum):
        nodes = measure.cdf_values(measure.breakpoints)
        return PiecewiseMonotone(LINEAR, measure.breakpoints.copy(), nodes, 0.0)
    if isinstance(measure, EmpiricalMeasure):
        locs, counts = np.unique(measure.atoms, return_counts=True)
        jumps = np.cumsum(counts * measure.weight)
        return PiecewiseMonotone(STEP, locs, jumps, 0.0)
    raise TypeError(f"cannot build a CDF from {type(measure).__name__}")


def pseudo_inverse(F: PiecewiseMonotone) -> PiecewiseMonotone:
    """Generalized inverse X(z) = inf{x : F(x) > z} on [bottom, top].

    At z = top (where the infimum is over an empty set) the value is the
    rightmost support point.  Plateaus of F become jumps of X and vice versa.
    """
    if F.kind == LINEAR:
        xs, fs = F.breakpoints, F.values
        bottom, top = float(fs[0]), float(fs[-1])
        start = int(np.searchsorted(fs, bottom, side="right")) - 1
        end = int(np.searchsorted(fs, top, side="left"))
        return PiecewiseMonotone(
            LINEAR, fs[start:end + 1].copy(), xs[start:end + 1].copy(),
            float(xs[start]), domain=(bottom, top))
    # step CDF: constant value a_j on [c_{j-1}, c_j)
    locs, post = F.breakpoints, F.values
    z_nodes = np.concatenate(([F.left_value], post[:-1]))
    if np.any(np.diff(z_nodes) <= 0.0):
        raise ValueError("step function must be strictly increasing at jumps")
    return PiecewiseMonotone(
        STEP, z_nodes, locs.copy(), float(locs[0]),
        domain=(float(F.left_value), float(post[-1])))


def cdf_from_quantile(X: PiecewiseMonotone) -> PiecewiseMonotone:
    """Inverse operator: F(x) = measure of {z in domain : X(z) <= x}."""
    if X.domain is None:
        raise ValueError("quantile function needs an explicit mass domain")
    lo, hi = X.domain
    if X.kind == LINEAR:
        return PiecewiseMonotone(LINEAR, X.values.copy(), X.breakpoints.copy(), lo)
    widths = np.diff(np.concatenate((X.breakpoints, [hi])))
    locs, inverse = np.unique(X.values, return_inverse=True)
    mass = np.zeros(locs.size)
    np.add.at(mass, inverse, widths)
    return PiecewiseMonotone(STEP, locs, lo + np.cumsum(mass), float(lo))


# ---------------------------------------------------------------------------
# exact integration of |f - g|

def _segment_l1(da, db, widths) -> float:
    """Exact integral of |linear| over segments with endpoint values da, db."""
    same_sign = da * db >= 0.0
    trapezoid = 0.5 * widths * (np.abs(da) + np.abs(db))
    denom = np.abs(da) + np.abs(db)
    crossing = np.where(denom > 0.0,
                        0.5 * widths * (da * da + db * db) / np.where(denom > 0.0, denom, 1.0),
                        0.0)
    return float(np.sum(np.where(same_sign, trapezoid, crossing)))


def integrate_abs_difference(f: PiecewiseMonotone, g: PiecewiseMonotone,
                             lo: float | None = None, hi: float | None = None) -> float:
    """Closed-form integral of |f - g| over [lo, hi] (or the whole line).

    Breakpoints of both functions are merged; on each subinterval both
    restrictions are linear, so every piece integrates exactly.  Without
    bounds the functions must agree outside the merged breakpoint range.
    """
    mesh = np.concatenate((f.breakpoints, g.breakpoints))
    if lo is not None:
        mesh = mesh[(mesh > lo) & (mesh < hi)]
        mesh = np.concatenate((mesh, [lo, hi]))
    mesh = np.unique(mesh)
    if mesh.size < 2:
        return 0.0
    a, b = mesh[:-1], mesh[1:]
    da = f.right_limits(a) - g.right_limits(a)
    db = f.left_limits(b) - g.left_limits(b)
    return _segment_l1(da, db, b - a)


def _as_cdf(measure) -> PiecewiseMonotone:
    if isinstance(measure, PiecewiseMonotone):
        return measure
    return cdf(measure)


def wasserstein(m1, m2) -> float:
    """Scaled 1-Wasserstein distance: integral over x of |F1 - F2|.

    Both measures must carry (numerically) the same total mass.
    """
    F1, F2 = _as_cdf(m1), _as_cdf(m2)
    top1, top2 = F1.range_top, F2.range_top
    if abs(top1 - top2) > MASS_MISMATCH_RTOL * max(top1, top2):
        raise ValueError(f"total masses differ: {top1} vs {top2}")
    return integrate_abs_difference(F1, F2)


def wasserstein_via_quantiles(m1, m2) -> float:
    """Same distance computed on the inverse side: integral of |X1 - X2| dz."""
    F1, F2 = _as_cdf(m1), _as_cdf(m2)
    top1, top2 = F1.range_top, F2.range_top
    if abs(top1 - top2) > MASS_MISMATCH_RTOL * max(top1, top2):
        raise ValueError(f"total masses differ: {top1} vs {top2}")
    X1, X2 = pseudo_inverse(F1), pseudo_inverse(F2)
    return integrate_abs_difference(X1, X2, lo=0.0, hi=min(top1, top2))


def _cells_of(density):
    if isinstance(density, PiecewiseConstantDensity):
        return density.breakpoints, density.values
    if isinstance(density, InitialDatum):
        return density.breakpoints, density.values
    raise TypeError(f"not a piecewise-constant density: {type(density).__name__}")


def l1_distance(d1, d2) -> float:
    """Exact integral of |d1 - d2| over the union of supports."""
    bp1, v1 = _cells_of(d1)
    bp2, v2 = _cells_of(d2)
    mesh = np.unique(np.concatenate((bp1, bp2)))
    mids = 0.5 * (mesh[:-1] + mesh[1:])

    def cell_values(bp, vals):
        idx = np.searchsorted(bp, mids, side="right") - 1
        inside = (idx >= 0) & (idx < vals.size)
        return np.where(inside, vals[np.clip(idx, 0, vals.size - 1)], 0.0)

    diff = np.abs(cell_values(bp1, v1) - cell_values(bp2, v2))
    return float(np.sum(diff * np.diff(mesh)))
