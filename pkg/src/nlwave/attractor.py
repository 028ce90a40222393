"""Ensemble experiments: absorbing balls, pairwise contraction and rate envelopes."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError
from .integrator import IntegratorConfig, TrajectoryRecord, integrate
from .model import ModelSpec
from .spectral import Grid, SpectralField, State, energy_norm

__all__ = [
    "Ensemble",
    "EnsembleReport",
    "sample_ball",
    "integrate_members",
    "absorbing_time",
    "absorbing_experiment",
    "pairwise_decay",
    "rate_envelope",
    "rate_envelope_finite_T",
    "fit_envelope_onset",
    "semidistance_series",
    "late_bundle",
]


def sample_ball(
    grid: Grid, R: float, count: int, seed: int, mode_cutoff: int | None = None
) -> list[State]:
    """Random states in the energy ball of radius R.

    Gaussian coefficients on modes with every index <= ``mode_cutoff`` are
    rescaled to an energy norm drawn uniformly from [0, R).
    """
    if R < 0:
        raise ValueError(f"R must be >= 0, got {R}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    cutoff = grid.n_modes if mode_cutoff is None else int(mode_cutoff)
    if not 1 <= cutoff <= grid.n_modes:
        raise ValueError(f"mode_cutoff must lie in [1, {grid.n_modes}], got {mode_cutoff}")
    keep = (slice(0, cutoff),) * grid.dim
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        u = np.zeros(grid.shape)
        ut = np.zeros(grid.shape)
        u[keep] = rng.standard_normal((cutoff,) * grid.dim)
        ut[keep] = rng.standard_normal((cutoff,) * grid.dim)
        radius = R * rng.random()
        xi = State(SpectralField(grid, u), SpectralField(grid, ut))
        norm = energy_norm(xi)
        scale = radius / norm if norm > 0 else 0.0
        xi = State(xi.u * scale, xi.ut * scale)
        # guard the last ulp so the ball contract holds literally
        while energy_norm(xi) > R:
            xi = State(xi.u * (1 - 1e-15), xi.ut * (1 - 1e-15))
        states.append(xi)
    return states


@dataclass(frozen=True, eq=False)
class Ensemble:
    spec: ModelSpec
    cfg: IntegratorConfig
    initial_states: list[State]
    seed: int
    R: float

    @classmethod
    def sample(
        cls,
        spec: ModelSpec,
        cfg: IntegratorConfig,
        R: float,
        count: int,
        seed: int,
        mode_cutoff: int | None = None,
    ) -> Ensemble:
        return cls(spec, cfg, sample_ball(spec.grid, R, count, seed, mode_cutoff), seed, R)

    def __len__(self):
        return len(self.initial_states)


@dataclass(eq=False)
class EnsembleReport:
    times: np.ndarray
    absorbing_time: list[float] = field(default_factory=list)
    sup_norm_series: np.ndarray | None = None
    pairwise: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    fitted_exponents: dict[tuple[int, int], float] = field(default_factory=dict)
    excluded: dict[tuple[int, int], str] = field(default_factory=dict)
    rho: float | None = None
    fit_window: tuple[float, float] | None = None

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.sup_norm_series))

    def as_dict(self) -> dict:
        """JSON-ready summary; infinite absorbing times become None."""

        def key(pair):
            return f"{pair[0]}-{pair[1]}"

        out = {
            "rho": self.rho,
            "absorbing_time": [t if math.isfinite(t) else None for t in self.absorbing_time],
            "sup_norm": None if self.sup_norm_series is None else self.sup_norm,
            "fitted_exponents": {key(k): v for k, v in self.fitted_exponents.items()},
            "distance_exponents": {key(k): 0.5 * v for k, v in self.fitted_exponents.items()},
            "excluded": {key(k): v for k, v in self.excluded.items()},
        }
        if self.fit_window is not None:
            out["fit_window"] = list(self.fit_window)
        return out


def _run_member(args) -> TrajectoryRecord:
    i, xi, spec, cfg, T, snapshots = args
    try:
        return integrate(xi, spec, cfg, T, snapshots=snapshots)
    except BlowUpError as exc:
        raise BlowUpError(exc.args[0], time=exc.time, member=i) from None


def integrate_members(
    ens: Ensemble, T: float, *, snapshots: bool = False, workers: int = 1
) -> list[TrajectoryRecord]:
    """Integrate every member; results keep the member order for any ``workers``."""
    jobs = [(i, xi, ens.spec, ens.cfg, T, snapshots) for i, xi in enumerate(ens.initial_states)]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_member(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_run_member, jobs))


def absorbing_time(times: np.ndarray, norms: np.ndarray, rho: float) -> float:
    """First recorded t after which every recorded norm is <= rho (inf if none)."""
    outside = np.flatnonzero(norms > rho)
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last == len(times) - 1:
        return math.inf
    return float(times[last + 1])


def absorbing_experiment(
    ens: Ensemble,
    rho: float,
    T: float,
    *,
    workers: int = 1,
    records: list[TrajectoryRecord] | None = None,
) -> EnsembleReport:
    """Absorbing times into the rho-ball and the ensemble sup of ||xi(t)||_E.

    Precomputed member ``records`` may be passed in.
    """
    if not rho > 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    recs = records if records is not None else integrate_members(ens, T, workers=workers)
    norms = np.array([r.energy_norm for r in recs])
    times = recs[0].times
    return EnsembleReport(
        times=times,
        absorbing_time=[absorbing_time(times, n, rho) for n in norms],
        sup_norm_series=norms.max(axis=0),
        rho=rho,
    )


def _pair_energy(spec: ModelSpec, a: TrajectoryRecord, b: TrajectoryRecord) -> np.ndarray:
    n = len(a.times)
    lam = spec.grid.eigenvalues.ravel()
    du = (a.u_snap - b.u_snap).reshape(n, -1)
    dut = (a.ut_snap - b.ut_snap).reshape(n, -1)
    return 0.5 * (np.sum(lam * du * du, axis=1) + np.sum(dut * dut, axis=1))


def pairwise_decay(
    ens: Ensemble,
    T: float,
    fit_window: tuple[float, float],
    *,
    workers: int = 1,
    floor: float = 1e-12,
    records: list[TrajectoryRecord] | None = None,
) -> EnsembleReport:
    """E_z(t) = 1/2 ||xi_i - xi_j||_E^2 for every pair and its log-log tail slope.

    Pairs with E_z(0) = 0 are excluded as ``"degenerate"``; pairs whose E_z
    drops below ``floor`` on [0, fit_window[1]] are excluded as ``"underflow"``.
    Precomputed ``records`` (with snapshots) may be passed in.
    """
    if len(ens) < 2:
        raise ValueError("pairwise_decay needs at least 2 members")
    w0, w1 = fit_window
    if not 0 < w0 < w1 <= T * (1 + 1e-12):
        raise ValueError(f"fit_window must satisfy 0 < start < end <= T, got {fit_window}")
    if records is None:
        records = integrate_members(ens, T, snapshots=True, workers=workers)
    times = records[0].times
    in_win = (times >= w0) & (times <= w1 * (1 + 1e-12))
    if in_win.sum() < 10:
        raise ValueError(f"fit window {fit_window} holds {in_win.sum()} samples, need >= 10")
    upto = times <= w1 * (1 + 1e-12)
    report = EnsembleReport(times=times, fit_window=(float(w0), float(w1)))
    for i, j in itertools.combinations(range(len(records)), 2):
        ez = _pair_energy(ens.spec, records[i], records[j])
        report.pairwise[(i, j)] = ez
        if ez[0] == 0.0:
            report.excluded[(i, j)] = "degenerate"
        elif np.min(ez[upto]) < floor:
            report.excluded[(i, j)] = "underflow"
        else:
            slope, _ = np.polyfit(np.log(times[in_win]), np.log(ez[in_win]), 1)
            report.fitted_exponents[(i, j)] = float(slope)
    return report


def _envelope(t, p, slope, alpha0, onset):
    t = np.asarray(t, dtype=float)
    shift = t - onset
    brace = alpha0 ** (-p) + slope * shift
    if np.any(brace <= 0):
        raise DomainError("envelope brace is <= 0 (t before the envelope's domain)")
    out = np.where(shift == 0.0, alpha0, brace ** (-1.0 / p))
    return float(out) if out.ndim == 0 else out


def rate_envelope(t, p: float, k: float, C_p: float, alpha0: float, t0: float, t_B: float):
    """{alpha0^-p + (p k C_p / 2^(p+2)) (t - t0 - t_B - 1)}^(-1/p).

    Scalar in, scalar out; arrays are evaluated elementwise.  At the onset
    t = t0 + t_B + 1 the value is alpha0 exactly.

    Raises
    ------
    DomainError
        Where the brace is not positive.
    """
    slope = p * k * C_p / 2.0 ** (p + 2.0)
    return _envelope(t, p, slope, alpha0, t0 + t_B + 1.0)


def rate_envelope_finite_T(
    t, p: float, k: float, C_p: float, alpha0: float, t0: float, t_B: float, T: float
):
    """Envelope for a finite contraction horizon T.

    The slope is p / (2 (T^(2/(p+2)) + 2^((2p+2)/(p+2)) (k C_p)^(-2/(p+2)))^((p+2)/2))
    and the onset is t0 + 2T + t_B + 1.  T = 0 recovers :func:`rate_envelope`.
    """
    e = 2.0 / (p + 2.0)
    inner = T**e + 2.0 ** ((2 * p + 2) / (p + 2)) * (k * C_p) ** (-e)
    slope = p / (2.0 * inner ** ((p + 2.0) / 2.0))
    return _envelope(t, p, slope, alpha0, t0 + 2.0 * T + t_B + 1.0)


def fit_envelope_onset(
    times: np.ndarray, distances: np.ndarray, p: float, k: float, C_p: float, alpha0: float
) -> float:
    """Smallest onset shift s = t0 + t_B with distance <= envelope on every sample.

    Samples before the onset are not constrained.  Returns the shift on a
    grid of the recorded times (the envelope is decreasing in t, so a later
    onset only loosens the bound).
    """
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    slope = p * k * C_p / 2.0 ** (p + 2.0)
    for s in np.concatenate([[times[0] - 1.0], times - 1.0]):
        after = times >= s + 1.0
        env = (alpha0 ** (-p) + slope * (times[after] - s - 1.0)) ** (-1.0 / p)
        if np.all(distances[after] <= env):
            return float(s)
    return math.inf


def _embed(u: np.ndarray, ut: np.ndarray, grid: Grid) -> np.ndarray:
    """Map states to vectors whose Euclidean norm is the energy norm."""
    n = len(u)
    w = np.sqrt(grid.eigenvalues.ravel())
    return np.concatenate([u.reshape(n, -1) * w, ut.reshape(n, -1)], axis=1)


def late_bundle(rec: TrajectoryRecord, count: int) -> list[State]:
    """The last ``count`` snapshots of a pilot run as a reference bundle."""
    if not rec.has_snapshots:
        raise ValueError("pilot record needs snapshots")
    return [rec.state(i) for i in range(max(0, len(rec) - count), len(rec))]


def semidistance_series(records: list[TrajectoryRecord], bundle: list[State]) -> np.ndarray:
    """sup over members of inf over the bundle of ||xi(t) - eta||_E at each recorded t."""
    if not bundle:
        raise ValueError("reference bundle is empty")
    grid = records[0].spec.grid
    B = _embed(np.array([b.u.coeff for b in bundle]), np.array([b.ut.coeff for b in bundle]), grid)
    X = np.stack([_embed(r.u_snap, r.ut_snap, grid) for r in records], axis=1)  # (n_t, M, F)
    out = np.empty(X.shape[0])
    for i, members in enumerate(X):
        d = members[:, None, :] - B[None, :, :]
        out[i] = np.sqrt(np.einsum("mbf,mbf->mb", d, d).min(axis=1).max())
    return out
