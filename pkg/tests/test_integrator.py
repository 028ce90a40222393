import math

import numpy as np
import pytest

from _oracles import damped_oscillator
from nlwave.errors import BlowUpError
from nlwave.integrator import (
    IntegratorConfig,
    damping_flow,
    damping_radius,
    integrate,
    linear_flow,
    step,
    step_count,
)
from nlwave.model import ModelSpec, energy
from nlwave.spectral import Grid, SpectralField, State, energy_norm, l2_norm


def rand_state(grid, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return State(
        SpectralField(grid, scale * rng.standard_normal(grid.shape)),
        SpectralField(grid, scale * rng.standard_normal(grid.shape)),
    )


def mode_state(grid, a, adot, index=1):
    return State(SpectralField.single_mode(grid, index, a), SpectralField.single_mode(grid, index, adot))


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(0.1, scheme="rk4")
    with pytest.raises(ValueError):
        IntegratorConfig(0.1, record_every=0)


def test_step_count_is_roundoff_safe():
    assert step_count(1.0, 0.1) == 10
    assert step_count(0.5, 1e-3) == 500
    assert step_count(1.05, 0.1) == 11
    assert step_count(0.0, 0.1) == 0


def test_linear_flow_identity_and_quarter_turn():
    grid = Grid(1, 4)
    xi = rand_state(grid, 0)
    same = linear_flow(xi, 0.0)
    np.testing.assert_array_equal(same.u.coeff, xi.u.coeff)
    np.testing.assert_array_equal(same.ut.coeff, xi.ut.coeff)
    out = linear_flow(mode_state(grid, 1.0, 0.0), math.pi / 2)
    assert out.u.coeff[0] == pytest.approx(0.0, abs=1e-15)
    assert out.ut.coeff[0] == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ValueError):
        linear_flow(xi, -1.0)


def test_linear_flow_conserves_energy_and_reverses():
    grid = Grid(2, 8)
    xi = rand_state(grid, 1)
    out = linear_flow(xi, 0.37)
    assert energy_norm(out) ** 2 == pytest.approx(energy_norm(xi) ** 2, rel=1e-13)
    back = linear_flow(out, -0.37, allow_negative=True)
    np.testing.assert_allclose(back.u.coeff, xi.u.coeff, atol=1e-13)
    np.testing.assert_allclose(back.ut.coeff, xi.ut.coeff, atol=1e-13)


def test_damping_flow_closed_forms():
    grid = Grid(1, 4)
    spec = ModelSpec.create(grid, k=1.0, p=2.0)
    assert not np.any(damping_flow(SpectralField.zeros(grid), spec, 1.0).coeff)
    v = SpectralField.single_mode(grid, 2, 1.0)
    assert l2_norm(damping_flow(v, spec, 1.0)) == pytest.approx(3 ** -0.5, rel=1e-15)
    assert damping_radius(2.0, 1.0, 1.0, 0.5) == 1.0
    w = rand_state(grid, 3).u
    out = damping_flow(w, spec, 0.3)
    # direction unchanged
    np.testing.assert_allclose(out.coeff / l2_norm(out), w.coeff / l2_norm(w), rtol=1e-14)


def test_damping_radius_matches_ode():
    from scipy.integrate import solve_ivp

    sol = solve_ivp(lambda t, r: -1.3 * r**2.5, (0, 2.0), [1.7], rtol=1e-12, atol=1e-14)
    assert damping_radius(1.7, 1.3, 1.5, 2.0) == pytest.approx(sol.y[0, -1], rel=1e-9)


def test_free_step_is_exact():
    grid = Grid(2, 6)
    spec = ModelSpec.create(grid, k=0.0, b=0.0)
    xi = rand_state(grid, 4)
    new, rep = step(xi, spec, IntegratorConfig(0.01))
    ref = linear_flow(xi, 0.01)
    np.testing.assert_allclose(new.u.coeff, ref.u.coeff, atol=1e-14)
    assert abs(rep.residual) <= 1e-12 * (1 + abs(rep.energy_before))
    assert rep.t == pytest.approx(0.01)


def test_single_mode_local_error_is_third_order():
    # scalar damped oscillator x'' + x + |x'|^2 x' = 0 for 1-D mode 1
    grid = Grid(1, 1)
    spec = ModelSpec.create(grid, b=0.0, k=1.0, p=2.0)
    xi = mode_state(grid, 1.0, 0.5)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        new, _ = step(xi, spec, IntegratorConfig(dt))
        x, v = damped_oscillator(2.0, 1.0, 1.0, 1.0, 0.5, np.array([0.0, dt]))
        errs.append(math.hypot(new.u.coeff[0] - x[-1], new.ut.coeff[0] - v[-1]))
    for e0, e1 in zip(errs, errs[1:]):
        assert 6.0 < e0 / e1 < 10.0


def _cubic_setup():
    grid = Grid(1, 16)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=1.0, p=2.0)
    u = np.zeros(16)
    u[:3] = [1.0, 0.5, 0.25]
    ut = np.zeros(16)
    ut[1] = 0.5
    return spec, State(SpectralField(grid, u), SpectralField(grid, ut))


@pytest.mark.parametrize("scheme, lo, hi", [("strang", 3.5, 4.5), ("lie", 1.7, 2.3)])
def test_global_self_convergence(scheme, lo, hi):
    spec, xi = _cubic_setup()
    finals = []
    for dt in (4e-3, 2e-3, 1e-3):
        rec = integrate(xi, spec, IntegratorConfig(dt, scheme, record_every=10**6), 1.0, snapshots=True)
        finals.append(np.concatenate([rec.u_snap[-1], rec.ut_snap[-1]]))
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    assert lo <= e1 / e2 <= hi


def test_integrate_zero_horizon():
    spec, xi = _cubic_setup()
    rec = integrate(xi, spec, IntegratorConfig(0.01), 0.0)
    assert len(rec) == 1 and rec.times[0] == 0.0
    assert rec.E_total[0] == pytest.approx(energy(xi, spec).total, rel=1e-14)


def test_zero_state_is_fixed_point():
    grid = Grid(2, 4)
    spec = ModelSpec.create(grid, b=1.0)
    rec = integrate(State.zeros(grid), spec, IntegratorConfig(0.05), 2.0)
    for name, col in rec.columns().items():
        if name != "t":
            assert not np.any(col), name


def test_recording_schedule_and_observers():
    spec, xi = _cubic_setup()
    seen = []
    rec = integrate(
        xi, spec, IntegratorConfig(0.01, record_every=7), 0.5, observers=[lambda t, s: seen.append(t)]
    )
    expected = [0.0] + [0.01 * n for n in range(7, 51, 7)] + [0.5]
    np.testing.assert_allclose(rec.times, expected, atol=1e-12)
    np.testing.assert_allclose(seen, expected, atol=1e-12)
    assert np.all(np.diff(rec.times) > 0)


def test_discrete_energy_decay_without_source():
    spec, xi = _cubic_setup()
    rec = integrate(xi, spec, IntegratorConfig(1e-3), 3.0)
    dE = np.diff(rec.E_total)
    assert np.all(dE <= 1e-9 * (1 + np.abs(rec.E_total[:-1])))
    assert np.all(np.diff(rec.dissipation_cum) >= 0)


def test_pure_damping_energy_matches_ode():
    grid = Grid(1, 1)
    spec = ModelSpec.create(grid, b=0.0, k=1.0, p=2.0)
    rec = integrate(mode_state(grid, 1.0, 0.0), spec, IntegratorConfig(0.01, record_every=100), 100.0)
    x, v = damped_oscillator(2.0, 1.0, 1.0, 1.0, 0.0, rec.times)
    assert rec.E_total[-1] == pytest.approx(0.5 * (x[-1] ** 2 + v[-1] ** 2), rel=1e-4)


def test_blow_up_reports_time():
    grid = Grid(1, 4)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=4.9, k=0.0)
    xi = mode_state(grid, 0.0, 1e30)
    with pytest.raises(BlowUpError) as info:
        integrate(xi, spec, IntegratorConfig(0.5), 50.0)
    assert info.value.time is not None and info.value.time >= 0.0
