"""Solution-theoretic quantities evaluated on recorded trajectories.

All time integrals use the trapezoid rule on the recording grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import DegenerateError, InsufficientResolution
from .inequalities import LemmaVerdict, small_data_lemma
from .integrator import IntegratorConfig, Propagator, TrajectoryRecord, _Recorder, step_count
from .model import ModelSpec, nonlinear_coeff
from .spectral import lq_norm_values, synthesize

__all__ = [
    "TrajectoryRecord",
    "StrichartzSeries",
    "GronwallResult",
    "PsiResult",
    "strichartz_norm",
    "strichartz_series",
    "split_vw",
    "bootstrap_check",
    "fit_bootstrap_constants",
    "gronwall_envelope",
    "psi_T",
    "f_difference_bound",
    "time_holder_slack",
    "dissipation_pairing",
    "trapezoid",
    "cumulative_trapezoid",
]


def trapezoid(y: np.ndarray, t: np.ndarray) -> float:
    y = np.asarray(y, dtype=float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def cumulative_trapezoid(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros(len(y))
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _window(times: np.ndarray, t0: float, t1: float) -> np.ndarray:
    tol = 1e-9 * max(1.0, abs(t1))
    return (times >= t0 - tol) & (times <= t1 + tol)


@dataclass(frozen=True, eq=False)
class StrichartzSeries:
    """Y(t) = ||w||_{L^4(0,t; L^12)} sampled on ``times``."""

    times: np.ndarray
    Y: np.ndarray

    def is_monotone(self) -> bool:
        return bool(self.Y[0] == 0.0 and np.all(np.diff(self.Y) >= 0.0))


def strichartz_norm(rec: TrajectoryRecord, t0: float = 0.0, t1: float | None = None) -> float:
    """(int_{t0}^{t1} ||u||_{L^12}^4 dt)^(1/4) from the recorded L^12 series."""
    if t1 is None:
        t1 = float(rec.times[-1])
    if not 0.0 <= t0 <= t1:
        raise ValueError(f"need 0 <= t0 <= t1, got t0={t0}, t1={t1}")
    sel = _window(rec.times, t0, t1)
    if sel.sum() < 2:
        raise InsufficientResolution(f"fewer than 2 samples in [{t0}, {t1}]")
    return trapezoid(rec.l12[sel] ** 4, rec.times[sel]) ** 0.25


def strichartz_series(rec: TrajectoryRecord) -> StrichartzSeries:
    return StrichartzSeries(rec.times.copy(), cumulative_trapezoid(rec.l12**4, rec.times) ** 0.25)


def _pl_integral(tk: np.ndarray, ck: np.ndarray, t: np.ndarray) -> np.ndarray:
    """int_{tk[0]}^t of the piecewise-linear interpolant of (tk, ck)."""
    cum = cumulative_trapezoid(ck, tk)
    idx = np.clip(np.searchsorted(tk, t, side="right") - 1, 0, len(tk) - 2)
    h = tk[idx + 1] - tk[idx]
    slope = (ck[idx + 1] - ck[idx]) / h
    tau = t - tk[idx]
    return cum[idx] + ck[idx] * tau + 0.5 * slope * tau * tau


def _record_from_arrays(times, us, uts, spec, cfg, rate) -> TrajectoryRecord:
    rec = _Recorder(spec, snapshots=True)
    for t, u, ut in zip(times, us, uts):
        rec(float(t), u, ut, 0.0)
    out = rec.build(cfg)
    out.dissipation_cum = cumulative_trapezoid(rate, times)
    return out


def split_vw(
    rec: TrajectoryRecord, spec: ModelSpec | None = None, cfg: IntegratorConfig | None = None
) -> tuple[TrajectoryRecord, TrajectoryRecord]:
    """Split a recorded solution u = v + w.

    v solves v_tt - Lap v + c(t) v_t = g with xi_v(0) = xi_u(0), where
    c(t) = k ||u_t(t)||^p is interpolated linearly between recorded samples
    and its exact exponential is used as the damping sub-flow.  w = u - v at
    the recorded times, so xi_w(0) = 0.

    The v record carries energy 1/2||xi_v||^2 - (g, v) and the w record
    1/2||xi_w||^2; both store int c(t)||.t||^2 as ``dissipation_cum``.
    """
    if not rec.has_snapshots:
        raise ValueError("split_vw needs a record with snapshots")
    spec = spec or rec.spec
    cfg = cfg or rec.cfg
    dm = spec.damping
    times = rec.times
    coef = dm.k * rec.norm_ut**dm.p
    n_steps = step_count(float(times[-1]), cfg.dt)
    step_times = np.minimum(np.arange(n_steps + 1) * cfg.dt, times[-1])
    factors = np.exp(-np.diff(_pl_integral(times, coef, step_times)))

    g = spec.g.coeff
    prop = Propagator(spec, cfg, force=lambda u: g, damp=lambda ut, n: ut * factors[n])
    rec_steps = np.array([step_count(float(t), cfg.dt) for t in times])

    u, ut = rec.u_snap[0].copy(), rec.ut_snap[0].copy()
    v_us, v_uts = [u.copy()], [ut.copy()]
    j = 1
    for n in range(1, n_steps + 1):
        u, ut = prop.advance(u, ut, n - 1)
        while j < len(rec_steps) and rec_steps[j] == n:
            v_us.append(u.copy())
            v_uts.append(ut.copy())
            j += 1
    v_us, v_uts = np.array(v_us), np.array(v_uts)
    w_us, w_uts = rec.u_snap - v_us, rec.ut_snap - v_uts

    def sq_norm(a):
        return np.sum(a.reshape(len(a), -1) ** 2, axis=1)

    v_spec = spec.replace(a=0.0, b=0.0)
    w_spec = v_spec.replace(g=spec.g * 0.0)
    v_rec = _record_from_arrays(times, v_us, v_uts, v_spec, cfg, coef * sq_norm(v_uts))
    w_rec = _record_from_arrays(times, w_us, w_uts, w_spec, cfg, coef * sq_norm(w_uts))
    return v_rec, w_rec


def fit_bootstrap_constants(Y: StrichartzSeries, sigma: float = 4.0) -> tuple[float, float]:
    """Fit (eps, C0) with Y <= C0 Y^sigma + eps and the smallness clause.

    C0 comes from a nonnegative least-squares fit of Y ~ C0 Y^sigma + eps
    (1.0 when the fit gives 0); eps is then raised to the tightest value
    meeting the hypothesis on every sample.  While the smallness clause
    eps < 1/2 (1/(2 C0))^(1/(sigma-1)) fails, C0 is halved: the bound grows
    without limit while eps stays below max Y.
    """
    y = np.asarray(Y.Y, dtype=float)
    A = np.column_stack([y**sigma, np.ones_like(y)])
    (c0, _), _ = nnls(A, y)
    c0 = float(c0) if c0 > 0 else 1.0

    def eps_for(c):
        e = float(np.max(y - c * y**sigma))
        e = max(e, 0.0) * (1.0 + 1e-12)
        return e if e > 0 else np.finfo(float).tiny

    eps = eps_for(c0)
    for _ in range(2000):
        if eps < 0.5 * (1.0 / (2.0 * c0)) ** (1.0 / (sigma - 1.0)):
            break
        c0 *= 0.5
        eps = eps_for(c0)
    return eps, c0


def bootstrap_check(
    Y: StrichartzSeries, eps: float | None = None, C0: float | None = None
) -> LemmaVerdict:
    """Check the bootstrap clauses with sigma = 4 on a Strichartz series.

    Hypothesis Y <= C0 Y^4 + eps, smallness of eps, conclusion Y <= 2 eps.
    Missing constants are fitted by :func:`fit_bootstrap_constants`.
    """
    if eps is None or C0 is None:
        fit_eps, fit_c0 = fit_bootstrap_constants(Y)
        eps = fit_eps if eps is None else eps
        C0 = fit_c0 if C0 is None else C0
    return small_data_lemma(Y.times, Y.Y, 4.0, C0, eps, zero_start=False)


def _check_pair(recA: TrajectoryRecord, recB: TrajectoryRecord) -> None:
    if not (recA.has_snapshots and recB.has_snapshots):
        raise ValueError("both records need snapshots")
    if recA.spec.grid != recB.spec.grid:
        raise ValueError("records live on different grids")
    if len(recA.times) != len(recB.times) or not np.allclose(recA.times, recB.times, rtol=0, atol=1e-12):
        raise ValueError("records are sampled at different times")


def _energy_sq(rec: TrajectoryRecord, du: np.ndarray, dut: np.ndarray) -> np.ndarray:
    lam = rec.spec.grid.eigenvalues.ravel()
    n = len(du)
    du = du.reshape(n, -1)
    dut = dut.reshape(n, -1)
    return np.sum(lam * du * du, axis=1) + np.sum(dut * dut, axis=1)


@dataclass(frozen=True, eq=False)
class GronwallResult:
    C_fit: float
    margin: np.ndarray  # C_fit * I(t) - log(D(t)/D(0)) >= 0
    D: np.ndarray
    I: np.ndarray
    degenerate: bool = False


def gronwall_envelope(recA: TrajectoryRecord, recB: TrajectoryRecord) -> GronwallResult:
    """Minimal C with D(t) <= D(0) exp(C I(t)) on every sample.

    D(t) = ||xi_A - xi_B||_E^2 and I(t) = int_0^t (1 + ||u_A||_12^4 + ||u_B||_12^4).
    A pair with D(0) = 0 returns ``degenerate=True`` and C_fit = nan.
    """
    _check_pair(recA, recB)
    D = _energy_sq(recA, recA.u_snap - recB.u_snap, recA.ut_snap - recB.ut_snap)
    I = cumulative_trapezoid(1.0 + recA.l12**4 + recB.l12**4, recA.times)
    if D[0] == 0.0:
        return GronwallResult(math.nan, np.full(len(D), math.nan), D, I, degenerate=True)
    with np.errstate(divide="ignore"):
        x = np.log(D[1:] / D[0])
    C = float(np.max(x / I[1:]))
    # rounding guard: C * I must dominate x bit-for-bit
    while np.any(C * I[1:] < x):
        C = float(np.nextafter(C, math.inf))
    margin = np.concatenate([[0.0], C * I[1:] - x])
    return GronwallResult(C, margin, D, I)


@dataclass(frozen=True)
class PsiResult:
    psi: float
    terms: tuple[float, float, float, float]


def psi_T(recA: TrajectoryRecord, recB: TrajectoryRecord, T: float | None = None) -> PsiResult:
    """The four-term contractive functional of a trajectory pair on [0, T].

    terms = (T sup||u-v||, |int (f(u)-f(v), u-v)|, |int (f(u)-f(v), u_t-v_t)|,
    |int_0^T int_t^T (f(u)-f(v), u_t-v_t) dtau dt|).
    """
    _check_pair(recA, recB)
    if T is None:
        T = float(recA.times[-1])
    sel = _window(recA.times, 0.0, T)
    if sel.sum() < 2:
        raise InsufficientResolution(f"fewer than 2 snapshots in [0, {T}]")
    t = recA.times[sel]
    spec = recA.spec
    uA, uB = recA.u_snap[sel], recB.u_snap[sel]
    n = len(t)
    z = (uA - uB).reshape(n, -1)
    zt = (recA.ut_snap[sel] - recB.ut_snap[sel]).reshape(n, -1)
    df = np.array([(nonlinear_coeff(a, spec) - nonlinear_coeff(b, spec)).ravel() for a, b in zip(uA, uB)])
    h1 = np.sum(df * z, axis=1)
    h2 = np.sum(df * zt, axis=1)
    H = cumulative_trapezoid(h2, t)
    terms = (
        T * float(np.sqrt(np.max(np.sum(z * z, axis=1)))),
        abs(trapezoid(h1, t)),
        abs(trapezoid(h2, t)),
        abs(trapezoid(H[-1] - H, t)),
    )
    return PsiResult(float(sum(terms)), terms)


def f_difference_bound(recA: TrajectoryRecord, recB: TrajectoryRecord, T: float | None = None) -> float:
    """Ratio int ||f(u)-f(v)|| dt / ((T + Y_u + Y_v) sup||u-v||_r), r = 12/(kappa+2).

    Y_u, Y_v are the L^4(0,T;L^12) norms of the recorded solutions.

    Raises
    ------
    DegenerateError
        If sup ||u - v||_r = 0.
    """
    _check_pair(recA, recB)
    if T is None:
        T = float(recA.times[-1])
    sel = _window(recA.times, 0.0, T)
    if sel.sum() < 2:
        raise InsufficientResolution(f"fewer than 2 snapshots in [0, {T}]")
    spec = recA.spec
    grid = spec.grid
    nl = spec.nonlinearity
    r = 12.0 / (nl.kappa + 2.0)
    lhs, sup_z = [], 0.0
    for a, b in zip(recA.u_snap[sel], recB.u_snap[sel]):
        va, vb = synthesize(a, grid.n_quad), synthesize(b, grid.n_quad)
        lhs.append(lq_norm_values(nl.f(va) - nl.f(vb), grid, 2.0))
        sup_z = max(sup_z, lq_norm_values(va - vb, grid, r))
    if sup_z == 0.0:
        raise DegenerateError("trajectories coincide on [0, T]")
    t = recA.times[sel]
    factor = T + strichartz_norm(recA, 0.0, T) + strichartz_norm(recB, 0.0, T)
    return trapezoid(np.array(lhs), t) / (factor * sup_z)


def time_holder_slack(recA: TrajectoryRecord, recB: TrajectoryRecord, p: float | None = None) -> float:
    """Relative slack of int ||z_t||^2 <= T^(p/(p+2)) (int ||z_t||^(p+2))^(2/(p+2)).

    z_t = u_t - v_t; both sides by the trapezoid rule.  Nonnegative up to
    roundoff because trapezoid weights are positive and sum to T.
    """
    _check_pair(recA, recB)
    if p is None:
        p = recA.spec.damping.p
    t = recA.times
    n = len(t)
    zt = (recA.ut_snap - recB.ut_snap).reshape(n, -1)
    r = np.sqrt(np.sum(zt * zt, axis=1))
    lhs = trapezoid(r**2, t)
    T = float(t[-1] - t[0])
    rhs = T ** (p / (p + 2.0)) * trapezoid(r ** (p + 2.0), t) ** (2.0 / (p + 2.0))
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else -math.inf
    return (rhs - lhs) / rhs


def dissipation_pairing(recA: TrajectoryRecord, recB: TrajectoryRecord) -> float:
    """Trapezoid of (k||a||^p a - k||b||^p b, a - b) with a, b the velocities."""
    _check_pair(recA, recB)
    dm = recA.spec.damping
    n = len(recA.times)
    a = recA.ut_snap.reshape(n, -1)
    b = recB.ut_snap.reshape(n, -1)
    ra = np.sqrt(np.sum(a * a, axis=1))
    rb = np.sqrt(np.sum(b * b, axis=1))
    da = dm.k * ra[:, None] ** dm.p * a
    db = dm.k * rb[:, None] ** dm.p * b
    return trapezoid(np.sum((da - db) * (a - b), axis=1), recA.times)
