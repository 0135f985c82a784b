"""Piecewise-constant initial data and the equal-mass particle atomization.

The initial density is stored exactly as breakpoints plus cell values, so
masses, the cumulative distribution, and its inversion are all closed-form.
Atomization splits the subgraph into equal-mass slabs whose edges become the
initial particle positions; at a vacuum plateau the edge is placed at the
plateau's left end (the strict-inequality set ends there), and the last
particle is pinned to the right end of the support hull.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class InitialDatum:
    """Compactly supported, nonnegative, piecewise-constant density."""

    breakpoints: np.ndarray   # len m+1, strictly increasing
    values: np.ndarray        # len m, >= 0, not all zero
    mass: float = field(init=False)
    sup_norm: float = field(init=False)
    support_min: float = field(init=False)
    support_max: float = field(init=False)
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size + 1:
            raise ValueError("need len(breakpoints) == len(values) + 1")
        if not np.all(np.isfinite(bp)) or np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be finite and strictly increasing")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
            raise ValueError("values must be finite and nonnegative")
        if not np.any(vals > 0.0):
            raise ValueError("datum must carry positive mass")
        cum = np.concatenate(([0.0], np.cumsum(vals * np.diff(bp))))
        positive = np.nonzero(vals > 0.0)[0]
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "mass", float(cum[-1]))
        object.__setattr__(self, "sup_norm", float(np.max(vals)))
        object.__setattr__(self, "support_min", float(bp[positive[0]]))
        object.__setattr__(self, "support_max", float(bp[positive[-1] + 1]))

    @property
    def support(self):
        """Convex hull [x_min, x_max] of the support."""
        return (self.support_min, self.support_max)

    def cdf_values(self, x):
        """Cumulative mass F(x) = integral of the density up to x (exact)."""
        return np.interp(x, self.breakpoints, self._cum)

    def quantile(self, level: float) -> float:
        """Leftmost position where the cumulative mass reaches ``level``."""
        if not 0.0 <= level <= self.mass:
            raise ValueError("level outside [0, mass]")
        j = int(np.searchsorted(self._cum, level, side="left"))
        if j < self._cum.size and self._cum[j] == level:
            return float(self.breakpoints[j])
        return float(self.breakpoints[j - 1]
                     + (level - self._cum[j - 1]) / self.values[j - 1])


def from_piecewise(breakpoints, values) -> InitialDatum:
    """Build a datum from cell edges and per-cell densities."""
    return InitialDatum(np.asarray(breakpoints, float), np.asarray(values, float))


def mass_between(datum: InitialDatum, a: float, b: float) -> float:
    """Exact integral of the datum over [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    return float(datum.cdf_values(b) - datum.cdf_values(a))


@dataclass(frozen=True)
class ParticleConfiguration:
    """Ordered particle positions at one instant, each carrying equal mass."""

    time: float
    particle_mass: float      # mass per particle
    positions: np.ndarray     # len N+1, strictly increasing

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 2:
            raise ValueError("need at least two particles")
        if not np.all(np.isfinite(pos)) or np.any(np.diff(pos) <= 0.0):
            raise ValueError("positions must be finite and strictly increasing")
        if not (np.isfinite(self.particle_mass) and self.particle_mass > 0.0):
            raise ValueError("particle mass must be positive")
        if not (np.isfinite(self.time) and self.time >= 0.0):
            raise ValueError("time must be nonnegative")
        object.__setattr__(self, "positions", pos)

    @property
    def n_cells(self) -> int:
        """Number of gaps ( = number of mass-carrying particles)."""
        return self.positions.size - 1

    @property
    def total_mass(self) -> float:
        return self.n_cells * self.particle_mass

    def gaps(self) -> np.ndarray:
        return np.diff(self.positions)

    def densities(self) -> np.ndarray:
        """Per-cell discrete densities: particle mass over gap."""
        return self.particle_mass / self.gaps()

    def max_density(self) -> float:
        return float(np.max(self.densities()))


def atomize(datum: InitialDatum, n_particles: int) -> ParticleConfiguration:
    """Split the datum's subgraph into ``n_particles`` equal-mass slabs.

    Returns the time-0 configuration whose N+1 positions are the slab edges:
    the first and last coincide with the support hull, interior edges invert
    the cumulative distribution at levels i * mass / N (leftmost solution).
    Every initial gap is at least particle_mass / sup_norm.
    """
    if n_particles < 2:
        raise ValueError("need at least 2 particles")
    n = int(n_particles)
    cell_mass = datum.mass / n
    positions = np.empty(n + 1)
    positions[0] = datum.support_min
    positions[n] = datum.support_max
    for i in range(1, n):
        positions[i] = datum.quantile(i * cell_mass)
    return ParticleConfiguration(time=0.0, particle_mass=cell_mass, positions=positions)


def scenario(name: str, **params) -> InitialDatum:
    """Build one of the named initial data used by the experiment harness.

    box: single box of given height/width.
    double_hump: two equal boxes separated by interior vacuum.
    riemann_like: tall box abutting a short box (single interior jump).
    sawtooth_bv: monotone decreasing steps.
    """
    if name == "box":
        height = float(params.get("height", 1.0))
        width = float(params.get("width", 1.0))
        left = float(params.get("left", 0.0))
        return from_piecewise([left, left + width], [height])
    if name == "double_hump":
        height = float(params.get("height", 1.0))
        width = float(params.get("hump_width", 0.5))
        gap = float(params.get("gap", 1.0))
        left = float(params.get("left", 0.0))
        bp = [left, left + width, left + width + gap, left + 2.0 * width + gap]
        return from_piecewise(bp, [height, 0.0, height])
    if name == "riemann_like":
        left_h = float(params.get("left_height", 0.8))
        right_h = float(params.get("right_height", 0.2))
        half = float(params.get("half_width", 1.0))
        jump = float(params.get("jump_at", 0.0))
        return from_piecewise([jump - half, jump, jump + half], [left_h, right_h])
    if name == "sawtooth_bv":
        steps = int(params.get("steps", 4))
        top = float(params.get("top", 1.0))
        width = float(params.get("step_width", 0.5))
        left = float(params.get("left", 0.0))
        bp = left + width * np.arange(steps + 1)
        vals = top * (steps - np.arange(steps)) / steps
        return from_piecewise(bp, vals)
    raise ValueError(f"unknown scenario {name!r}")


def datum_from_config(cfg: dict) -> InitialDatum:
    """Datum from configuration: named scenario or explicit arrays."""
    if "name" in cfg:
        params = {k: v for k, v in cfg.items() if k != "name"}
        return scenario(cfg["name"], **params)
    if "breakpoints" in cfg and "values" in cfg:
        return from_piecewise(cfg["breakpoints"], cfg["values"])
    raise ValueError("scenario config needs 'name' or 'breakpoints'+'values'")
