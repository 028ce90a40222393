"""Acceptance gate: one test group per criterion, each tagged with its number."""

import json
import math
import time

import numpy as np
import pytest

from _oracles import damped_oscillator, dense_grid_infimum
from nlwave.attractor import Ensemble, absorbing_experiment, pairwise_decay, rate_envelope
from nlwave.cli import main
from nlwave.diagnostics import (
    bootstrap_check,
    fit_bootstrap_constants,
    gronwall_envelope,
    split_vw,
    strichartz_series,
    time_holder_slack,
)
from nlwave.inequalities import estimate_constant, interpolation_batch
from nlwave.integrator import IntegratorConfig, integrate
from nlwave.model import ModelSpec
from nlwave.spectral import Grid, SpectralField, State, to_physical, to_spectral


def criterion(n):
    return pytest.mark.criterion(n)


def cubic_start(grid):
    u = np.zeros(grid.shape)
    u[:3] = [1.0, 0.5, 0.25]
    ut = np.zeros(grid.shape)
    ut[1] = 0.5
    return State(SpectralField(grid, u), SpectralField(grid, ut))


# 1 -------------------------------------------------------------------------


@criterion(1)
def test_transform_round_trip():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    cases = [(1, 4), (1, 8), (1, 16), (2, 4), (2, 8), (2, 16), (3, 8)]
    for dim, n in cases:
        grid = Grid(dim, n)
        u = SpectralField(grid, rng.standard_normal(grid.shape))
        back = to_spectral(to_physical(u))
        assert np.max(np.abs(back.coeff - u.coeff)) <= 1e-12, (dim, n)
    assert time.perf_counter() - start < 10.0


# 2 -------------------------------------------------------------------------


@criterion(2)
def test_energy_identity_second_order():
    start = time.perf_counter()
    grid = Grid(1, 32)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=1.0, p=2.0)
    xi = cubic_start(grid)
    res = {}
    for dt in (2e-3, 1e-3):
        rec = integrate(xi, spec, IntegratorConfig(dt, record_every=1000), 10.0)
        res[dt] = abs(rec.residual[-1])
        e0 = rec.E_total[0]
    assert e0 == pytest.approx(1.6802638326865345, rel=1e-12)
    assert res[1e-3] <= 1e-5 * e0
    assert 3.5 <= res[2e-3] / res[1e-3] <= 4.5
    assert time.perf_counter() - start < 60.0


# 3 -------------------------------------------------------------------------


def _max_drift(spec, xi, T=100.0, dt=1e-3):
    rec = integrate(xi, spec, IntegratorConfig(dt, record_every=100), T)
    return np.max(np.abs(rec.E_total - rec.E_total[0])) / abs(rec.E_total[0])


@criterion(3)
def test_conservative_linear_drift():
    grid = Grid(1, 32)
    spec = ModelSpec.create(grid, a=0.0, b=0.0, k=0.0)
    assert _max_drift(spec, cubic_start(grid)) <= 1e-12


@criterion(3)
def test_conservative_cubic_drift():
    grid = Grid(1, 32)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=0.0)
    assert _max_drift(spec, cubic_start(grid)) <= 1e-6


# 4 -------------------------------------------------------------------------


@criterion(4)
def test_monotonicity_oracle():
    start = time.perf_counter()
    reports = {
        (d, e): estimate_constant(d, e, 100_000, seed=2024) for d in (1, 8, 64) for e in (2.0, 2.5, 3.0, 4.0)
    }
    for rep in reports.values():
        assert rep.violations == 0
        assert rep.min_ratio >= 0.0
    for d in (1, 8, 64):
        assert reports[(d, 2.0)].min_ratio == 1.0
    oracle = dense_grid_infimum(4.0)
    assert reports[(1, 4.0)].min_ratio == pytest.approx(oracle, rel=0.05)
    assert time.perf_counter() - start < 30.0


# 5 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def decay_runs():
    grid = Grid(1, 1)
    runs = {}
    start = time.perf_counter()
    for p in (1.0, 2.0, 3.0):
        spec = ModelSpec.create(grid, a=0.0, b=0.0, k=1.0, p=p)
        cfg = IntegratorConfig(0.05, record_every=20)
        members = [State(SpectralField.single_mode(grid, 1, 1.0), SpectralField.zeros(grid)), State.zeros(grid)]
        ens = Ensemble(spec, cfg, members, seed=0, R=1.0)
        runs[p] = pairwise_decay(ens, 1e4, (1e2, 1e4)), ens
    return runs, time.perf_counter() - start


@criterion(5)
def test_decay_exponent(decay_runs):
    runs, elapsed = decay_runs
    for p, (rep, _) in runs.items():
        slope = rep.fitted_exponents[(0, 1)]
        assert slope == pytest.approx(-2.0 / p, rel=0.10)
        x, v = damped_oscillator(p, 1.0, 1.0, 1.0, 0.0, rep.times)
        e_ref = 0.5 * (x**2 + v**2)
        win = rep.times >= 1e2
        ref_slope = np.polyfit(np.log(rep.times[win]), np.log(e_ref[win]), 1)[0]
        assert slope == pytest.approx(ref_slope, rel=0.01)
        assert np.max(np.abs(rep.pairwise[(0, 1)] / e_ref - 1.0)) <= 1e-3
    assert elapsed < 120.0


# 6 -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def gronwall_pairs():
    grid = Grid(1, 16)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=1.0, p=2.0)
    xi = cubic_start(grid)
    # ||xi_w(0)||_E = 1e-3 along mode 1 (lambda_1 = 1)
    pert = State(xi.u + SpectralField.single_mode(grid, 1, 1e-3), xi.ut)
    pairs = {}
    for dt in (1e-3, 5e-4):
        cfg = IntegratorConfig(dt, record_every=round(0.01 / dt))
        pairs[dt] = (
            integrate(xi, spec, cfg, 5.0, snapshots=True),
            integrate(pert, spec, cfg, 5.0, snapshots=True),
        )
    return pairs


@criterion(6)
def test_gronwall_envelope(gronwall_pairs):
    fits = {dt: gronwall_envelope(*pair) for dt, pair in gronwall_pairs.items()}
    for res in fits.values():
        assert math.isfinite(res.C_fit) and not res.degenerate
        assert np.all(res.margin >= 0.0)
    assert fits[5e-4].C_fit == pytest.approx(fits[1e-3].C_fit, rel=0.10)
    # archived value
    assert fits[1e-3].C_fit == pytest.approx(0.27922, rel=1e-3)


# 7 -------------------------------------------------------------------------


@criterion(7)
def test_interpolation_inequality():
    for dim in (1, 2, 3):
        slacks = interpolation_batch(Grid(dim, 8), 1000, seed=dim)
        assert slacks.min() >= -1e-8


# 8 -------------------------------------------------------------------------


@criterion(8)
def test_time_hoelder_on_decay_pairs(decay_runs):
    runs, _ = decay_runs
    for p, (_, ens) in runs.items():
        recs = [integrate(xi, ens.spec, ens.cfg, 1e4, snapshots=True) for xi in ens.initial_states]
        assert time_holder_slack(*recs) >= -1e-6


@criterion(8)
def test_time_hoelder_on_gronwall_pairs(gronwall_pairs):
    for pair in gronwall_pairs.values():
        assert time_holder_slack(*pair) >= -1e-6


# 9 -------------------------------------------------------------------------


@criterion(9)
def test_strichartz_bootstrap_shape():
    grid = Grid(1, 16)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=1.0, p=2.0)
    rec = integrate(cubic_start(grid), spec, IntegratorConfig(1e-3, record_every=5), 0.5, snapshots=True)
    _, w = split_vw(rec)
    Y = strichartz_series(w)
    assert Y.Y[0] == 0.0
    assert np.all(np.diff(Y.Y) >= 0.0)
    eps, c0 = fit_bootstrap_constants(Y)
    assert eps < 0.5 * (1.0 / (2.0 * c0)) ** (1.0 / 3.0)
    assert bootstrap_check(Y, eps, c0).holds


# 10 ------------------------------------------------------------------------


@criterion(10)
def test_dissipativity():
    start = time.perf_counter()
    grid = Grid(1, 16)
    g = SpectralField.single_mode(grid, 1, 1.0)
    spec = ModelSpec.create(grid, a=0.0, b=1.0, q=3.0, k=1.0, p=2.0, g=g)
    cfg = IntegratorConfig(5e-3, record_every=20)
    rho = 2.0
    sups = []
    for R in (1.0, 4.0, 16.0):
        ens = Ensemble.sample(spec, cfg, R, 8, seed=7, mode_cutoff=4)
        rep = absorbing_experiment(ens, rho, 50.0)
        assert all(math.isfinite(t) for t in rep.absorbing_time), (R, rep.absorbing_time)
        assert rep.sup_norm_series[-1] <= rho
        sups.append(rep.sup_norm)
    assert sups == sorted(sups)
    assert time.perf_counter() - start < 300.0


# 11 ------------------------------------------------------------------------


@criterion(11)
@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_rate_envelope_algebra(p):
    k, alpha0, t0, t_B = 1.0, 1.5, 2.0, 3.0
    # C_p from the archived empirical infimum at the lemma exponent p + 2
    C_p = estimate_constant(1, p + 2.0, 10_000, seed=0).min_ratio
    onset = t0 + t_B + 1.0
    t = np.linspace(onset, onset + 1e3, 1000)
    env = rate_envelope(t, p, k, C_p, alpha0, t0, t_B)
    slope = p * k * C_p / 2.0 ** (p + 2.0)
    affine = alpha0 ** (-p) + slope * (t - onset)
    np.testing.assert_allclose(env ** (-p), affine, rtol=1e-12, atol=0)
    assert env[0] == alpha0
    assert rate_envelope(onset, p, k, C_p, alpha0, t0, t_B) == alpha0
    assert np.all(np.diff(env) < 0)


# 12 ------------------------------------------------------------------------

CONFIGS = {
    "ensemble": "experiment = ensemble\ninit = ball(4.0, 4, 3, 4)\nmodel.g = single_mode(1, 1.0)\n"
    "time.dt = 0.005\ntime.t_end = 2\ntime.record_every = 20\nensemble.rho = 4\n",
    "decay_fit": "experiment = decay_fit\ninit = ball(1.0, 3, 5)\nmodel.f.b = 0\n"
    "time.dt = 0.01\ntime.t_end = 5\ntime.record_every = 10\n",
    "simulate": "experiment = simulate\ninit = ball(2.0, 3, 8)\noutput.snapshots = all\n"
    "time.dt = 0.005\ntime.t_end = 0.5\ntime.record_every = 25\n",
    "strichartz": "experiment = strichartz\ninit = single_mode(1, 1.0, 0.5)\ntime.t_end = 0.3\n",
    "check_inequalities": "experiment = check_inequalities\ncheck.n_samples = 5000\n",
}


@criterion(12)
@pytest.mark.parametrize("name", sorted(CONFIGS))
def test_determinism_across_runs_and_workers(tmp_path, name):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("domain.dim = 1\ndomain.n_modes = 8\n" + CONFIGS[name])
    sums = []
    for i, workers in enumerate((1, 1, 3)):
        out = tmp_path / f"out{i}"
        assert main([str(cfg), "--output", str(out), "--workers", str(workers)]) == 0
        man = json.loads((out / "manifest.json").read_text())
        sums.append({f["path"]: f["sha256"] for f in man["files"]})
    assert sums[0] == sums[1] == sums[2]
    assert sums[0]
