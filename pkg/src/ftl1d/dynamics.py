"""Time integration of the follow-the-leader particle system.

Each particle moves with speed v(mass/gap-to-right-neighbour); the leader
moves at v_max, so its path is exactly linear in time.  The exact flow keeps
every gap above particle_mass/R (R = maximum initial cell density); the
integrators enforce a safety fraction of that floor by step rejection, which
for the smooth right-hand side only ever fires as a numerical safeguard.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .initial_data import ParticleConfiguration
from .velocity import VelocityModel

STEP_UNDERFLOW_FRACTION = 1e-12


class IntegrationError(RuntimeError):
    """Step-size underflow; carries the last valid state for diagnosis."""

    def __init__(self, message, time=None, positions=None):
        super().__init__(message)
        self.time = time
        self.positions = positions


@dataclass(frozen=True)
class IntegratorSettings:
    """Stepper selection and control parameters.

    ``dt`` of None picks the default step
    0.1 * m / (R * (v_max - v(R)) + eps), capped at t_end / 100.
    ``gap_floor_safety`` is the fraction of m/R below which a step is
    rejected and halved.
    """

    method: str = "rk4_fixed"
    dt: float | None = None
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    gap_floor_safety: float = 0.5

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt is not None and not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.gap_floor_safety <= 1.0:
            raise ValueError("gap_floor_safety must lie in (0, 1]")


@dataclass(frozen=True)
class Trajectory:
    """States recorded at the requested sample times."""

    sample_times: np.ndarray
    states: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def initial_state(self) -> ParticleConfiguration:
        return self.states[0]

    def state_at(self, t: float) -> ParticleConfiguration:
        """State at an exact sample time."""
        idx = int(np.searchsorted(self.sample_times, t))
        if idx >= self.sample_times.size or self.sample_times[idx] != t:
            raise KeyError(f"{t} is not a sample time")
        return self.states[idx]

    def interpolate(self, t: float) -> ParticleConfiguration:
        """Positions linearly interpolated in time between recorded samples.

        Interpolated states are not solutions of the particle system and may
        violate tight diagnostics; a warning is issued for non-sample times.
        """
        ts = self.sample_times
        if t < ts[0] or t > ts[-1]:
            raise ValueError("time outside the sampled range")
        idx = int(np.searchsorted(ts, t))
        if idx < ts.size and ts[idx] == t:
            return self.states[idx]
        warnings.warn("interpolated state: positions are not an ODE solution",
                      stacklevel=2)
        hi = idx
        lo = hi - 1
        w = (t - ts[lo]) / (ts[hi] - ts[lo])
        pos = (1.0 - w) * self.states[lo].positions + w * self.states[hi].positions
        return ParticleConfiguration(time=t, particle_mass=self.states[lo].particle_mass,
                                     positions=pos)


def ftl_rhs(config: ParticleConfiguration, model: VelocityModel) -> np.ndarray:
    """Particle velocities: v(mass/gap) for followers, v_max for the leader."""
    out = _velocities(config.positions, config.particle_mass, model)
    if out is None:
        raise ValueError("positions must be strictly increasing")
    return out


def lagrangian_rhs(y, model: VelocityModel, cell_mass: float) -> np.ndarray:
    """Rates of the cell densities y_i.

    Interior: -y_i^2/m * (v(y_{i+1}) - v(y_i)); the last cell sees the
    leader and uses v_max in place of v(y_{i+1}).
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
        raise ValueError("densities must be positive and finite")
    v = model.value(y)
    v_next = np.empty_like(v)
    v_next[:-1] = v[1:]
    v_next[-1] = model.v_max
    return -(y * y / cell_mass) * (v_next - v)


def _velocities(positions, cell_mass, model):
    gaps = np.diff(positions)
    if np.any(gaps <= 0.0):
        return None
    rho = cell_mass / gaps
    if not np.all(np.isfinite(rho)):
        return None
    out = np.empty(positions.size)
    out[:-1] = model._v(rho)
    out[-1] = model.v_max
    return out


def default_step(config: ParticleConfiguration, model: VelocityModel, t_end: float) -> float:
    """Default fixed step from the initial density scale."""
    r = config.max_density()
    spread = r * (model.v_max - model.value(r)) + 1e-30
    return min(0.1 * config.particle_mass / spread, t_end / 100.0)


def _rk4_step(x, dt, cell_mass, model):
    k1 = _velocities(x, cell_mass, model)
    if k1 is None:
        return None
    k2 = _velocities(x + 0.5 * dt * k1, cell_mass, model)
    if k2 is None:
        return None
    k3 = _velocities(x + 0.5 * dt * k2, cell_mass, model)
    if k3 is None:
        return None
    k4 = _velocities(x + dt * k3, cell_mass, model)
    if k4 is None:
        return None
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) coefficients.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def _dp45_step(x, dt, cell_mass, model):
    """One Dormand-Prince step; returns (x5, error_estimate) or None."""
    ks = []
    for stage in range(7):
        xi = x
        for a, k in zip(_DP_A[stage], ks):
            xi = xi + dt * a * k
        k = _velocities(xi, cell_mass, model)
        if k is None:
            return None
        ks.append(k)
    x5 = x + dt * sum(b * k for b, k in zip(_DP_B5, ks))
    x4 = x + dt * sum(b * k for b, k in zip(_DP_B4, ks))
    return x5, x5 - x4


def integrate(config0: ParticleConfiguration, model: VelocityModel, t_end: float,
              settings: IntegratorSettings | None = None,
              sample_times=None) -> Trajectory:
    """Advance the particle system to t_end, recording the requested samples.

    Args:
        config0: initial configuration (time stamp 0).
        model: velocity law.
        t_end: final time, >= 0.
        settings: stepper selection and control; defaults to fixed RK4.
        sample_times: times in [0, t_end] at which states are recorded;
            defaults to [0, t_end].

    Returns:
        Trajectory with one state per (deduplicated, sorted) sample time and
        integrator metadata (step size, step/rejection counts, gap floor).

    Any step whose end state drops a gap below
    gap_floor_safety * particle_mass / R (R from the initial configuration)
    is rejected and retried at half the step; rejection-driven underflow
    below 1e-12 * t_end raises IntegrationError carrying the last valid
    state.
    """
    if config0.time != 0.0:
        raise ValueError("initial configuration must be at time 0")
    if t_end < 0.0:
        raise ValueError("t_end must be nonnegative")
    settings = settings or IntegratorSettings()
    if sample_times is None:
        sample_times = [0.0, t_end] if t_end > 0.0 else [0.0]
    samples = np.unique(np.asarray([float(t) for t in sample_times]))
    if samples.size == 0:
        raise ValueError("need at least one sample time")
    if samples[0] < 0.0 or samples[-1] > t_end:
        raise ValueError("sample times must lie in [0, t_end]")

    cell_mass = config0.particle_mass
    r_init = config0.max_density()
    floor = settings.gap_floor_safety * cell_mass / r_init
    dt_base = settings.dt if settings.dt is not None else default_step(config0, model, max(t_end, 1e-300))
    if t_end == 0.0:
        dt_base = 1.0
    adaptive = settings.method == "rk45_adaptive"
    dt_min = STEP_UNDERFLOW_FRACTION * t_end if t_end > 0.0 else 0.0

    x = config0.positions.copy()
    t = 0.0
    steps = 0
    rejections = 0
    states = []

    def record(time, positions):
        states.append(ParticleConfiguration(
            time=time, particle_mass=cell_mass, positions=positions.copy()))

    sample_idx = 0
    while sample_idx < samples.size and samples[sample_idx] <= 0.0:
        record(0.0, x)
        sample_idx += 1

    dt_next = dt_base
    while sample_idx < samples.size:
        target = samples[sample_idx]
        while t < target:
            remaining = target - t
            dt = min(dt_next if adaptive else dt_base, remaining)
            hit_target = dt >= remaining

            def shrink(new_dt):
                nonlocal rejections
                rejections += 1
                if new_dt < dt_min:
                    raise IntegrationError(
                        f"step size underflow at t={t:.6g} (dt={new_dt:.3g})",
                        time=t, positions=x.copy())
                return new_dt

            while True:
                if adaptive:
                    result = _dp45_step(x, dt, cell_mass, model)
                    if result is not None:
                        x_new, err = result
                        scale = settings.abs_tol + settings.rel_tol * np.maximum(
                            np.abs(x), np.abs(x_new))
                        err_norm = float(np.max(np.abs(err) / scale))
                        if err_norm > 1.0:
                            dt = shrink(max(0.9 * dt * err_norm ** -0.2, 0.1 * dt))
                            hit_target = False
                            continue
                    else:
                        x_new = None
                else:
                    x_new = _rk4_step(x, dt, cell_mass, model)
                if x_new is None or np.min(np.diff(x_new)) < floor:
                    dt = shrink(0.5 * dt)
                    hit_target = False
                    continue
                break
            t = target if hit_target else t + dt
            x = x_new
            steps += 1
            if adaptive:
                factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
                dt_next = min(dt * factor, dt_base * 100.0)
        record(target, x)
        sample_idx += 1

    metadata = {
        "method": settings.method,
        "dt": dt_base,
        "abs_tol": settings.abs_tol,
        "rel_tol": settings.rel_tol,
        "gap_floor_safety": settings.gap_floor_safety,
        "gap_floor": floor,
        "initial_max_density": r_init,
        "steps": steps,
        "rejections": rejections,
    }
    return Trajectory(sample_times=samples, states=tuple(states), metadata=metadata)
