import numpy as np
import pytest

from ftl1d import (
    Greenshields,
    IntegrationError,
    IntegratorSettings,
    ParticleConfiguration,
    PipesMunjal,
    Underwood,
    atomize,
    ftl_rhs,
    integrate,
    lagrangian_rhs,
    scenario,
)


def two_particle_config():
    return ParticleConfiguration(0.0, 0.5, np.array([0.0, 1.0]))


def closed_form_follower(t):
    """Follower path for the two-particle linear-law case: leader - sqrt(1+t)."""
    return 1.0 + t - np.sqrt(1.0 + t)


def test_ftl_rhs_pair():
    v = ftl_rhs(two_particle_config(), Greenshields(1.0))
    np.testing.assert_allclose(v, [0.5, 1.0], atol=0)


def test_ftl_rhs_three_particles():
    c = ParticleConfiguration(0.0, 0.5, np.array([0.0, 0.5, 2.0]))
    v = ftl_rhs(c, Greenshields(1.0))
    np.testing.assert_allclose(v, [0.0, 2.0 / 3.0, 1.0], atol=1e-15)


def test_leader_component_is_vacuum_speed():
    for model in (Greenshields(2.0), Underwood(1.5), PipesMunjal(1.0, 2.0)):
        c = atomize(scenario("box"), 8)
        assert ftl_rhs(c, model)[-1] == model.v_max


def test_lagrangian_rhs_examples():
    model = Greenshields(1.0)
    np.testing.assert_allclose(lagrangian_rhs([0.5], model, 0.5), [-0.25], atol=0)
    rates = lagrangian_rhs([0.5, 0.5], model, 0.123)
    assert rates[0] == 0.0
    rates = lagrangian_rhs([0.2, 0.8], model, 0.1)
    assert rates[0] == pytest.approx(0.24, abs=1e-15)


def test_lagrangian_rhs_rejects_nonpositive():
    with pytest.raises(ValueError):
        lagrangian_rhs([0.5, 0.0], Greenshields(1.0), 0.1)


def test_two_particle_closed_form_rk4():
    tr = integrate(two_particle_config(), Greenshields(1.0), 3.0,
                   IntegratorSettings(), [0.0, 3.0])
    final = tr.states[-1]
    assert final.positions[0] == pytest.approx(2.0, abs=1e-6)
    assert final.positions[1] == pytest.approx(4.0, abs=1e-9)


def test_two_particle_closed_form_rk45():
    tr = integrate(two_particle_config(), Greenshields(1.0), 3.0,
                   IntegratorSettings(method="rk45_adaptive",
                                      abs_tol=1e-10, rel_tol=1e-10), [0.0, 3.0])
    assert tr.states[-1].positions[0] == pytest.approx(closed_form_follower(3.0), abs=1e-8)
    assert tr.metadata["steps"] > 0


def test_gap_never_below_floor_single_pair():
    # start exactly at the floor: gap = mass / max-density
    c0 = ParticleConfiguration(0.0, 0.5, np.array([0.0, 0.5]))
    tr = integrate(c0, Greenshields(1.0), 2.0, None, [0.0, 1.0, 2.0])
    floor = c0.particle_mass / c0.max_density()
    for s in tr.states:
        assert np.min(s.gaps()) >= floor - 1e-9


def test_t_end_zero_returns_initial_state():
    c0 = two_particle_config()
    tr = integrate(c0, Greenshields(1.0), 0.0)
    assert len(tr.states) == 1
    np.testing.assert_array_equal(tr.states[0].positions, c0.positions)


def test_sample_time_validation():
    c0 = two_particle_config()
    with pytest.raises(ValueError):
        integrate(c0, Greenshields(1.0), 1.0, None, [0.0, 2.0])
    with pytest.raises(ValueError):
        integrate(c0, Greenshields(1.0), 1.0, None, [-0.5])
    with pytest.raises(ValueError):
        integrate(c0, Greenshields(1.0), 1.0, None, [])


def test_initial_configuration_must_start_at_zero():
    c = ParticleConfiguration(1.0, 0.5, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        integrate(c, Greenshields(1.0), 1.0)


@pytest.mark.parametrize("name", ["box", "double_hump", "riemann_like", "sawtooth_bv"])
@pytest.mark.parametrize("model", [Greenshields(1.0), PipesMunjal(1.0, 2.0), Underwood(1.0)])
def test_ordering_and_bounds_preserved(name, model):
    datum = scenario(name)
    c0 = atomize(datum, 64)
    r = c0.max_density()
    span0 = c0.positions[-1] - c0.positions[0]
    v_r = model.value(r)
    tr = integrate(c0, model, 1.0, None, [0.0, 0.5, 1.0])
    for s in tr.states:
        gaps = s.gaps()
        assert np.all(gaps > 0.0)
        # discrete maximum principle
        assert np.min(gaps) >= (c0.particle_mass / r) * (1.0 - 1e-6)
        # per-gap upper bound
        assert np.max(gaps) <= span0 + (model.v_max - v_r) * s.time + 1e-8
        # left front moves at least at the jammed speed
        assert s.positions[0] >= c0.positions[0] + v_r * s.time - 1e-8
        # leader is exactly ballistic
        expected = c0.positions[-1] + model.v_max * s.time
        assert abs(s.positions[-1] - expected) <= 1e-10
        # mass bookkeeping is structural
        assert s.total_mass == c0.total_mass


def test_position_and_density_formulations_agree():
    model = Greenshields(1.0)
    c0 = two_particle_config()
    tr = integrate(c0, model, 3.0, IntegratorSettings(dt=0.003), [0.0, 3.0])
    y_from_positions = tr.states[-1].densities()

    y = c0.densities()
    dt = 0.003
    n = int(round(3.0 / dt))
    for _ in range(n):
        k1 = lagrangian_rhs(y, model, c0.particle_mass)
        k2 = lagrangian_rhs(y + 0.5 * dt * k1, model, c0.particle_mass)
        k3 = lagrangian_rhs(y + 0.5 * dt * k2, model, c0.particle_mass)
        k4 = lagrangian_rhs(y + dt * k3, model, c0.particle_mass)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    np.testing.assert_allclose(y_from_positions, y, atol=1e-7)


def test_interpolated_state_warns():
    tr = integrate(two_particle_config(), Greenshields(1.0), 1.0, None, [0.0, 1.0])
    with pytest.warns(UserWarning):
        mid = tr.interpolate(0.5)
    assert mid.time == 0.5
    assert tr.interpolate(1.0).time == 1.0  # exact sample, no warning
    with pytest.raises(KeyError):
        tr.state_at(0.25)


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(method="euler")
    with pytest.raises(ValueError):
        IntegratorSettings(dt=-0.1)
    with pytest.raises(ValueError):
        IntegratorSettings(gap_floor_safety=0.0)
    with pytest.raises(ValueError):
        IntegratorSettings(abs_tol=0.0)


def test_step_underflow_raises_with_diagnostic_state():
    # a gap floor of exactly 1 makes every step reject: the initial state is
    # at the floor and any motion of the follower relative to the leader
    # that dips below it by rounding cannot recover at smaller dt.
    c0 = ParticleConfiguration(0.0, 0.5, np.array([0.0, 0.25, 0.5]))

    class Squeeze(Greenshields):
        # follower faster than leader: gap must shrink below the floor
        def _v(self, rho):
            return np.full_like(rho, 2.0)

    model = Squeeze(v_max=1.0)
    with pytest.raises(IntegrationError) as err:
        integrate(c0, model, 1.0, IntegratorSettings(gap_floor_safety=1.0), [1.0])
    assert err.value.positions is not None
    assert err.value.time is not None
