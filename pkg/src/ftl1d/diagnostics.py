"""Certification of the discrete estimates satisfied by the particle flow.

Each check evaluates a quantitative bound that the exact particle dynamics
provably satisfies: the gap floor (discrete maximum principle), the one-sided
Oleinik-type residuals, total-variation contractivity, the velocity-profile
BV bound with its explicit constant, entropy-term nonnegativity, and the two
time-continuity moduli.  Checks run on integrator output, so each carries a
small tolerance absorbing integration error.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import measures
from .dynamics import Trajectory
from .initial_data import InitialDatum, ParticleConfiguration
from .measures import LagrangianDensity, PiecewiseConstantDensity
from .velocity import VelocityModel, check_assumptions

GAP_RATIO_TOL = 1e-6
OLEINIK_REL_TOL = 1e-6
TV_CONTRACT_TOL = 1e-8
VELOCITY_TV_TOL = 1e-6
ENTROPY_TOL = 1e-12


def min_gap_ratio(config: ParticleConfiguration, rho_max: float) -> float:
    """Smallest gap divided by the guaranteed floor particle_mass/rho_max."""
    if not rho_max > 0.0:
        raise ValueError("rho_max must be positive")
    floor = config.particle_mass / rho_max
    return float(np.min(config.gaps()) / floor)


@dataclass(frozen=True)
class OleinikResidual:
    """One-sided residuals z_i = t * y_i * (v(y_right) - v(y_i)).

    ``interior`` holds the residuals between neighbouring cells; ``leader``
    is the residual of the last cell against the vacuum speed.  The exact
    flow keeps every residual at or below the particle mass.
    """

    time: float
    cell_mass: float
    interior: np.ndarray
    leader: float

    @property
    def max_interior(self) -> float:
        return float(np.max(self.interior)) if self.interior.size else 0.0

    @property
    def max_all(self) -> float:
        return max(self.max_interior, self.leader)


def oleinik_residual(config: ParticleConfiguration, model: VelocityModel,
                     verify_assumptions: bool = True) -> OleinikResidual:
    """Evaluate the Oleinik-type residuals on one state.

    The guarantee requires rho * v'(rho) to be non-increasing on the density
    range; when a sampled check of that condition fails, a warning is issued
    and the residuals are still reported.
    """
    y = config.densities()
    if verify_assumptions:
        report = check_assumptions(model, float(np.max(y)), samples=64)
        if not report.weighted_slope_non_increasing:
            warnings.warn("velocity law fails the sampled weighted-slope "
                          "condition; Oleinik bound not guaranteed", stacklevel=2)
    t = config.time
    v = model.value(y)
    interior = t * y[:-1] * (v[1:] - v[:-1])
    leader = float(t * y[-1] * (model.v_max - v[-1]))
    return OleinikResidual(time=t, cell_mass=config.particle_mass,
                           interior=interior, leader=leader)


def total_variation(density) -> float:
    """TV of a cellwise-constant profile, edge jumps to vacuum included."""
    if isinstance(density, (PiecewiseConstantDensity, LagrangianDensity, InitialDatum)):
        vals = density.values
    else:
        vals = np.asarray(density, dtype=float)
    return float(vals[0] + vals[-1] + np.sum(np.abs(np.diff(vals))))


def velocity_total_variation(config: ParticleConfiguration, model: VelocityModel) -> float:
    """TV of the velocity profile v(density), with jumps to v_max outside."""
    w = model.value(config.densities())
    return float(abs(model.v_max - w[0]) + abs(model.v_max - w[-1])
                 + np.sum(np.abs(np.diff(w))))


def bv_constant(model: VelocityModel, rho_max: float, span: float, delta: float) -> float:
    """The explicit bound 3*(v_max - v(R)) + 2*span/delta for times >= delta."""
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    return 3.0 * (model.v_max - model.value(rho_max)) + 2.0 * span / delta


@dataclass(frozen=True)
class VelocityBVReport:
    times: np.ndarray
    tv_values: np.ndarray
    c_delta: float
    delta: float

    @property
    def exceedances(self):
        bad = self.tv_values > self.c_delta + VELOCITY_TV_TOL
        return [(float(t), float(v)) for t, v in
                zip(self.times[bad], self.tv_values[bad])]


def bv_velocity_bound(trajectory: Trajectory, model: VelocityModel,
                      delta: float, datum: InitialDatum) -> VelocityBVReport:
    """TV of the velocity profile at every sample time >= delta vs its bound."""
    span = datum.support_max - datum.support_min
    c_delta = bv_constant(model, datum.sup_norm, span, delta)
    times, tvs = [], []
    for state in trajectory.states:
        if state.time >= delta:
            times.append(state.time)
            tvs.append(velocity_total_variation(state, model))
    return VelocityBVReport(np.asarray(times), np.asarray(tvs), c_delta, delta)


def entropy_K_terms(config: ParticleConfiguration, model: VelocityModel, k: float) -> np.ndarray:
    """Entropy production terms at the particle positions for level k >= 0.

    With the convention that the density beyond the leader is zero, term i
    (i = 1..N) equals k * (v(k) - v(y_i)) * (sgn(y_i - k) - sgn(y_{i-1} - k));
    every term is nonnegative for a decreasing velocity law.
    """
    if k < 0.0:
        raise ValueError("k must be nonnegative")
    y = np.concatenate((config.densities(), [0.0]))
    v_y = model.value(y)
    v_k = model.value(k)
    sgn = np.sign(y - k)
    return k * (v_k - v_y[1:]) * (sgn[1:] - sgn[:-1])


@dataclass(frozen=True)
class TimeContinuityReport:
    """Worst slack of the two time-continuity moduli over sample pairs."""

    wasserstein_rate: float
    l1_rate: float
    delta: float
    wasserstein_worst_slack: float
    l1_worst_slack: float
    wasserstein_pairs: int
    l1_pairs: int

    @property
    def all_hold(self) -> bool:
        return self.wasserstein_worst_slack >= 0.0 and self.l1_worst_slack >= 0.0


def time_continuity_moduli(trajectory: Trajectory, model: VelocityModel,
                           delta: float) -> TimeContinuityReport:
    """Check both time-continuity moduli on all sample pairs.

    The transport metric between the cell reconstructions is Lipschitz with
    rate 2L*max(|v_max|, |v(R)|, v_max - v(R)) for all times; the mass-space
    L1 distance between Lagrangian densities is Lipschitz with rate
    R^2*(C_delta + v_max - v(R)) for times >= delta.  R and the support span
    are taken from the initial state.
    """
    states = trajectory.states
    if len(states) < 2:
        raise ValueError("need at least two samples")
    init = states[0]
    r = init.max_density()
    span = float(init.positions[-1] - init.positions[0])
    total = init.total_mass
    v_r = model.value(r)
    w_rate = 2.0 * total * max(abs(model.v_max), abs(v_r), model.v_max - v_r)
    l1_rate = r * r * (bv_constant(model, r, span, delta) + model.v_max - v_r)

    hats = [measures.hat_density(s) for s in states]
    checks = [measures.check_density(s) for s in states]
    w_slack = np.inf
    l1_slack = np.inf
    w_pairs = 0
    l1_pairs = 0
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            dt = states[j].time - states[i].time
            lhs = measures.wasserstein(hats[i], hats[j])
            w_slack = min(w_slack, w_rate * dt - lhs)
            w_pairs += 1
            if states[i].time >= delta and states[j].time >= delta:
                lhs = measures.lagrangian_l1(checks[i], checks[j])
                l1_slack = min(l1_slack, l1_rate * dt - lhs)
                l1_pairs += 1
    if l1_pairs == 0:
        l1_slack = 0.0
    return TimeContinuityReport(
        wasserstein_rate=w_rate, l1_rate=l1_rate, delta=delta,
        wasserstein_worst_slack=float(w_slack), l1_worst_slack=float(l1_slack),
        wasserstein_pairs=w_pairs, l1_pairs=l1_pairs)


@dataclass
class Violation:
    time: float | None
    check: str
    value: float
    bound: float

    def to_dict(self):
        return {"time": self.time, "check": self.check,
                "value": self.value, "bound": self.bound}


@dataclass
class DiagnosticsReport:
    """Per-sample-time diagnostics plus the list of bound violations."""

    times: list = field(default_factory=list)
    min_gap_ratios: list = field(default_factory=list)
    oleinik_interior_max: list = field(default_factory=list)
    oleinik_leader: list = field(default_factory=list)
    tv_hat: list = field(default_factory=list)
    tv_velocity: list = field(default_factory=list)
    entropy_min: list = field(default_factory=list)
    c_delta: float = float("nan")
    delta: float = float("nan")
    tv_initial_datum: float = float("nan")
    wasserstein_worst_slack: float = float("nan")
    l1_worst_slack: float = float("nan")
    interleaving_max_rel_error: float = float("nan")
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "times": self.times,
            "min_gap_ratios": self.min_gap_ratios,
            "oleinik_interior_max": self.oleinik_interior_max,
            "oleinik_leader": self.oleinik_leader,
            "tv_hat": self.tv_hat,
            "tv_velocity": self.tv_velocity,
            "entropy_min": self.entropy_min,
            "c_delta": self.c_delta,
            "delta": self.delta,
            "tv_initial_datum": self.tv_initial_datum,
            "wasserstein_worst_slack": self.wasserstein_worst_slack,
            "l1_worst_slack": self.l1_worst_slack,
            "interleaving_max_rel_error": self.interleaving_max_rel_error,
            "violations": [v.to_dict() for v in self.violations],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_diagnostics(trajectory: Trajectory, model: VelocityModel,
                    datum: InitialDatum, delta: float,
                    k_grid=None) -> DiagnosticsReport:
    """Run every per-state check on a trajectory and collect violations.

    ``k_grid`` defaults to 50 levels on [0, 1.2 * sup_norm] so that the
    entropy terms are exercised above the densest state as well.
    """
    if k_grid is None:
        k_grid = np.linspace(0.0, 1.2 * datum.sup_norm, 50)
    report = DiagnosticsReport()
    report.delta = delta
    span = datum.support_max - datum.support_min
    report.c_delta = bv_constant(model, datum.sup_norm, span, delta)
    report.tv_initial_datum = total_variation(datum)

    oleinik_ok = check_assumptions(
        model, datum.sup_norm, samples=64).weighted_slope_non_increasing
    prev_tv = None
    interleave_err = 0.0
    for state in trajectory.states:
        t = state.time
        cell_mass = state.particle_mass
        report.times.append(t)

        ratio = min_gap_ratio(state, datum.sup_norm)
        report.min_gap_ratios.append(ratio)
        if ratio < 1.0 - GAP_RATIO_TOL:
            report.violations.append(Violation(t, "min_gap_ratio", ratio, 1.0 - GAP_RATIO_TOL))

        res = oleinik_residual(state, model, verify_assumptions=False)
        report.oleinik_interior_max.append(res.max_interior)
        report.oleinik_leader.append(res.leader)
        if oleinik_ok:
            bound = cell_mass * (1.0 + OLEINIK_REL_TOL)
            if res.max_interior > bound:
                report.violations.append(Violation(t, "oleinik_interior", res.max_interior, bound))
            if res.leader > bound:
                report.violations.append(Violation(t, "oleinik_leader", res.leader, bound))

        hat = measures.hat_density(state)
        tv = total_variation(hat)
        report.tv_hat.append(tv)
        if tv > report.tv_initial_datum + TV_CONTRACT_TOL:
            report.violations.append(Violation(t, "tv_contractivity", tv,
                                               report.tv_initial_datum + TV_CONTRACT_TOL))
        if prev_tv is not None and tv > prev_tv + TV_CONTRACT_TOL:
            report.violations.append(Violation(t, "tv_monotone", tv, prev_tv + TV_CONTRACT_TOL))
        prev_tv = tv

        tvv = velocity_total_variation(state, model)
        report.tv_velocity.append(tvv)
        if t >= delta and tvv > report.c_delta + VELOCITY_TV_TOL:
            report.violations.append(Violation(t, "tv_velocity", tvv,
                                               report.c_delta + VELOCITY_TV_TOL))

        k_min = min(float(np.min(entropy_K_terms(state, model, k))) for k in k_grid)
        report.entropy_min.append(k_min)
        if k_min < -ENTROPY_TOL:
            report.violations.append(Violation(t, "entropy_terms", k_min, -ENTROPY_TOL))

        ident = 0.5 * cell_mass * (state.positions[-1] - state.positions[0])
        dist = measures.wasserstein(hat, measures.empirical(state))
        interleave_err = max(interleave_err, abs(dist - ident) / ident)
    report.interleaving_max_rel_error = interleave_err
    if interleave_err > 1e-12:
        report.violations.append(Violation(None, "interleaving_identity",
                                           interleave_err, 1e-12))

    if len(trajectory.states) >= 2:
        cont = time_continuity_moduli(trajectory, model, delta)
        report.wasserstein_worst_slack = cont.wasserstein_worst_slack
        report.l1_worst_slack = cont.l1_worst_slack
        if cont.wasserstein_worst_slack < 0.0:
            report.violations.append(Violation(None, "wasserstein_time_continuity",
                                               cont.wasserstein_worst_slack, 0.0))
        if cont.l1_worst_slack < 0.0:
            report.violations.append(Violation(None, "l1_time_continuity",
                                               cont.l1_worst_slack, 0.0))
    return report
