"""Finite-dimensional checks of the functional inequalities used in the analysis.

None of these touch the time integrator.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import LemmaDomainError
from .spectral import Grid, SpectralField, lq_norm_values, synthesize

__all__ = [
    "MonotonicityReport",
    "Verdict",
    "LemmaVerdict",
    "monotone_pair",
    "monotone_batch",
    "estimate_constant",
    "small_data_lemma",
    "interpolation_check",
    "interpolation_batch",
]

_CHUNK = 1 << 14


def monotone_pair(x, y, exponent: float) -> tuple[float, float]:
    """Monotonicity defect of z -> ||z||^(p-2) z for one pair.

    Returns ``(lhs, ratio)`` with lhs = <||x||^(p-2) x - ||y||^(p-2) y, x - y>
    and ratio = lhs / denom, where denom = ||x-y||^p for p >= 2 and
    ||x-y||^2 / (||x|| + ||y||)^(2-p) for 1 < p < 2.  x = y gives (0, 0).

    Raises
    ------
    ValueError
        If exponent <= 1.
    LemmaDomainError
        If 1 < exponent < 2 and x or y is zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lhs, ratio = monotone_batch(x[None, :], y[None, :], exponent)
    return float(lhs[0]), float(ratio[0])


def _row_norms(X: np.ndarray) -> np.ndarray:
    # scaled by the row maximum so tiny or huge entries do not under/overflow
    peak = np.max(np.abs(X), axis=1)
    safe = np.where(peak > 0, peak, 1.0)
    Z = X / safe[:, None]
    return peak * np.sqrt(np.einsum("ij,ij->i", Z, Z))


def _power_map(x: np.ndarray, nx: np.ndarray, p: float) -> np.ndarray:
    if p == 2.0:
        return x
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(nx > 0, nx ** (p - 2.0), 0.0)
    return scale[:, None] * x


def monotone_batch(X: np.ndarray, Y: np.ndarray, exponent: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`monotone_pair` on arrays of shape (n, dim)."""
    p = float(exponent)
    if not p > 1.0:
        raise ValueError(f"exponent must be > 1, got {exponent}")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx = _row_norms(X)
    ny = _row_norms(Y)
    if p < 2.0 and np.any((nx == 0.0) | (ny == 0.0)):
        raise LemmaDomainError(f"||x|| ||y|| = 0 is outside the lemma for exponent {p} < 2")
    D = X - Y
    dd = np.einsum("ij,ij->i", D, D)
    lhs = np.einsum("ij,ij->i", _power_map(X, nx, p) - _power_map(Y, ny, p), D)
    if p >= 2.0:
        denom = dd ** (p / 2.0)
    else:
        denom = dd / (nx + ny) ** (2.0 - p)
    same = dd == 0.0
    lhs = np.where(same, 0.0, lhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(same, 0.0, lhs / np.where(same, 1.0, denom))
    return lhs, ratio


@dataclass(frozen=True)
class MonotonicityReport:
    exponent: float
    dim: int
    n_samples: int
    min_ratio: float
    violations: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "dim": self.dim,
            "n_samples": self.n_samples,
            "min_ratio": self.min_ratio,
            "violations": self.violations,
            "seed": self.seed,
        }


def estimate_constant(dim: int, exponent: float, n_samples: int, seed: int) -> MonotonicityReport:
    """Empirical infimum of the monotonicity ratio over standard-normal pairs.

    Samples are drawn in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, so the report depends only on the arguments.
    Coincident pairs (probability zero) are left out of the minimum.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    n_chunks = -(-n_samples // _CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    min_ratio = math.inf
    violations = 0
    remaining = n_samples
    for child in children:
        m = min(_CHUNK, remaining)
        remaining -= m
        rng = np.random.default_rng(child)
        X = rng.standard_normal((m, dim))
        Y = rng.standard_normal((m, dim))
        lhs, ratio = monotone_batch(X, Y, exponent)
        keep = np.any(X != Y, axis=1)
        violations += int(np.count_nonzero(lhs < 0.0))
        if keep.any():
            min_ratio = min(min_ratio, float(ratio[keep].min()))
    return MonotonicityReport(float(exponent), int(dim), int(n_samples), min_ratio, violations, int(seed))


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    HYPOTHESIS_VIOLATED = "hypothesis_violated"
    SMALLNESS_VIOLATED = "smallness_violated"
    CONCLUSION_VIOLATED = "conclusion_violated"


@dataclass(frozen=True)
class LemmaVerdict:
    """Outcome of a samplewise lemma check.

    ``at`` is the first offending sample position and ``violations`` holds
    the positions of every failing sample of the reported clause.
    """

    verdict: Verdict
    at: float | None = None
    violations: tuple[float, ...] = ()

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS


def _first(s: np.ndarray, bad: np.ndarray, verdict: Verdict) -> LemmaVerdict:
    pos = tuple(float(v) for v in s[bad])
    return LemmaVerdict(verdict, pos[0], pos)


def small_data_lemma(
    s, y, sigma: float, C0: float, eps: float, *, zero_start: bool = True
) -> LemmaVerdict:
    """Samplewise check of the continuity bootstrap.

    Clauses, in order: y(s_0) = 0 (skipped when ``zero_start`` is False) and
    0 <= y <= C0 y^sigma + eps on every sample; eps < 1/2 (1/(2 C0))^(1/(sigma-1));
    then the conclusion y <= 2 eps.  The first failing clause is reported.
    """
    if not sigma > 1.0:
        raise ValueError(f"sigma must be > 1, got {sigma}")
    if not C0 > 0.0:
        raise ValueError(f"C0 must be > 0, got {C0}")
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.shape != y.shape or s.ndim != 1 or len(s) == 0:
        raise ValueError("s and y must be matching nonempty 1-D arrays")

    bad = (y < 0.0) | (y > C0 * y**sigma + eps)
    if zero_start:
        bad[0] |= y[0] != 0.0
    if bad.any():
        return _first(s, bad, Verdict.HYPOTHESIS_VIOLATED)
    if not eps < 0.5 * (1.0 / (2.0 * C0)) ** (1.0 / (sigma - 1.0)):
        return LemmaVerdict(Verdict.SMALLNESS_VIOLATED)
    bad = y > 2.0 * eps
    if bad.any():
        return _first(s, bad, Verdict.CONCLUSION_VIOLATED)
    return LemmaVerdict(Verdict.HOLDS)


def _interp_slack(values: np.ndarray, grid: Grid) -> float:
    n12 = lq_norm_values(values, grid, 12.0)
    n6 = lq_norm_values(values, grid, 6.0)
    n10 = lq_norm_values(values, grid, 10.0)
    return n12**0.8 * n6**0.2 - n10


def interpolation_check(u: SpectralField) -> float:
    """Slack of ||u||_10 <= ||u||_12^(4/5) ||u||_6^(1/5) under grid quadrature.

    Hoelder holds exactly for the weighted node sums, so only roundoff can
    make the slack negative.
    """
    return _interp_slack(synthesize(u.coeff, u.grid.n_quad), u.grid)


def interpolation_batch(grid: Grid, count: int, seed: int) -> np.ndarray:
    """Slacks for ``count`` fields with standard-normal coefficients."""
    rng = np.random.default_rng(seed)
    out = np.empty(count)
    for i in range(count):
        c = rng.standard_normal(grid.shape)
        out[i] = _interp_slack(synthesize(c, grid.n_quad), grid)
    return out
