"""Ingredients of u_tt - Lap u + k||u_t||^p u_t + f(u) = g.

The nonlinearity is the family f(s) = a*s + b*|s|^(q-1)*s with primitive
F(s) = a*s^2/2 + b*|s|^(q+1)/(q+1).  Growth exponent 4 - kappa of f' is
q - 1, i.e. kappa = 5 - q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BlowUpError, DissipationViolated
from .spectral import (
    Grid,
    SpectralField,
    State,
    analyze,
    grad_norm,
    l2_norm,
    lq_norm_values,
    synthesize,
)

__all__ = [
    "Nonlinearity",
    "Damping",
    "ModelSpec",
    "EnergyReport",
    "Coercivity",
    "nonlinear_term",
    "damping_term",
    "energy",
    "coercivity_constants",
    "difference_bound_constant",
    "difference_bound_ratio",
]


@dataclass(frozen=True)
class Nonlinearity:
    a: float = 0.0
    b: float = 0.0
    q: float = 3.0

    def __post_init__(self):
        if self.b < 0:
            raise ValueError(f"power coefficient b must be >= 0, got {self.b}")
        if not 1.0 <= self.q < 5.0:
            raise ValueError(f"exponent q must lie in [1, 5), got {self.q}")

    @property
    def kappa(self) -> float:
        return 5.0 - self.q

    @property
    def is_linear(self) -> bool:
        return self.b == 0.0 or self.q == 1.0

    @property
    def linear_coefficient(self) -> float:
        """Slope of f when :attr:`is_linear`."""
        return self.a + self.b if self.q == 1.0 else self.a

    @property
    def is_zero(self) -> bool:
        return self.is_linear and self.linear_coefficient == 0.0

    @property
    def growth_constant(self) -> float:
        """C with |f'(s)| <= C (1 + |s|^(4-kappa)) for all s."""
        return abs(self.a) + self.b * self.q

    @property
    def liminf_derivative(self) -> float:
        if self.is_linear:
            return self.linear_coefficient
        return math.inf

    def f(self, s: np.ndarray) -> np.ndarray:
        if self.is_linear:
            return self.linear_coefficient * s
        if self.q == 3.0:
            return self.a * s + self.b * (s * s * s)
        return self.a * s + self.b * np.abs(s) ** (self.q - 1.0) * s

    def F(self, s: np.ndarray) -> np.ndarray:
        if self.is_linear:
            return 0.5 * self.linear_coefficient * s * s
        return 0.5 * self.a * s * s + self.b * np.abs(s) ** (self.q + 1.0) / (self.q + 1.0)


@dataclass(frozen=True)
class Damping:
    k: float = 1.0
    p: float = 2.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"damping strength k must be >= 0, got {self.k}")
        if self.p <= 0:
            raise ValueError(f"damping exponent p must be > 0, got {self.p}")


@dataclass(frozen=True, eq=False)
class ModelSpec:
    nonlinearity: Nonlinearity
    damping: Damping
    g: SpectralField
    grid: Grid

    def __post_init__(self):
        if self.g.grid != self.grid:
            raise ValueError("source g must live on the model grid")

    @classmethod
    def create(cls, grid: Grid, *, a=0.0, b=0.0, q=3.0, k=1.0, p=2.0, g=None) -> ModelSpec:
        if g is None:
            g = SpectralField.zeros(grid)
        return cls(Nonlinearity(a, b, q), Damping(k, p), g, grid)

    def replace(self, **changes) -> ModelSpec:
        """Copy with some of a, b, q, k, p, g swapped out."""
        nl, dm = self.nonlinearity, self.damping
        return ModelSpec(
            Nonlinearity(changes.get("a", nl.a), changes.get("b", nl.b), changes.get("q", nl.q)),
            Damping(changes.get("k", dm.k), changes.get("p", dm.p)),
            changes.get("g", self.g),
            self.grid,
        )


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential_grad: float
    potential_f: float
    source: float

    @property
    def total(self) -> float:
        return self.kinetic + self.potential_grad + self.potential_f + self.source


class Coercivity(NamedTuple):
    c_low: float
    C_off: float


def nonlinear_coeff(coeff: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Coefficient-array form of :func:`nonlinear_term` (no wrapping)."""
    nl = spec.nonlinearity
    if nl.is_linear:
        return nl.linear_coefficient * coeff
    vals = synthesize(coeff, spec.grid.n_quad)
    with np.errstate(over="ignore", invalid="ignore"):
        fv = nl.f(vals)
    if not np.all(np.isfinite(fv)):
        raise BlowUpError("non-finite value of f(u) on the physical grid")
    return analyze(fv, spec.grid.n_modes)


def nonlinear_term(u: SpectralField, spec: ModelSpec) -> SpectralField:
    """P_N f(u): pointwise f on the dealiased grid, then truncated analysis.

    Raises
    ------
    BlowUpError
        If any physical value of f(u) is non-finite.
    """
    return SpectralField(u.grid, nonlinear_coeff(u.coeff, spec))


def damping_term(v: SpectralField, spec: ModelSpec) -> SpectralField:
    """k ||v||^p v, with the zero field mapped to zero for every p > 0."""
    dm = spec.damping
    r = l2_norm(v)
    if r == 0.0 or dm.k == 0.0:
        return SpectralField.zeros(v.grid)
    return v * (dm.k * r**dm.p)


def potential_f(coeff: np.ndarray, spec: ModelSpec, values: np.ndarray | None = None) -> float:
    nl = spec.nonlinearity
    if nl.is_linear:
        c = coeff.ravel()
        return 0.5 * nl.linear_coefficient * float(np.dot(c, c))
    if values is None:
        values = synthesize(coeff, spec.grid.n_quad)
    # overflow surfaces as a non-finite energy, reported by the caller
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sum(nl.F(values))) * spec.grid.cell_volume


def energy(xi: State, spec: ModelSpec) -> EnergyReport:
    """E = 1/2 ||u_t||^2 + 1/2 ||grad u||^2 + int F(u) - (g, u)."""
    return EnergyReport(
        kinetic=0.5 * l2_norm(xi.ut) ** 2,
        potential_grad=0.5 * grad_norm(xi.u) ** 2,
        potential_f=potential_f(xi.u.coeff, spec),
        source=-spec.g.inner(xi.u),
    )


def coercivity_constants(spec: ModelSpec) -> Coercivity:
    """Constants with E(xi) >= c_low ||xi||_E^2 - C_off for every state.

    Chain used (lambda_1 = d on the box, |Omega| = pi^d):

    * F(s) >= -(m/2) s^2 - C_F.  For linear f with slope a < 0, m = -a and
      C_F = 0.  For b > 0 and a < 0 the midpoint choice m = min(-a, lambda_1)/2
      gives C_F = c*s*^2*(q-1)/(q+1) with c = (-a-m)/2 and s*^(q-1) = 2c/b.
      For a >= 0, m = C_F = 0.
    * Poincare turns the quadratic part into gamma/2 ||grad u||^2 with
      gamma = 1 - m/lambda_1.
    * If g != 0, Young gives |(g,u)| <= gamma/4 ||grad u||^2 + ||g||^2/(gamma lambda_1).

    Raises
    ------
    DissipationViolated
        If liminf f'(s) <= -lambda_1.
    """
    nl = spec.nonlinearity
    lam1 = spec.grid.lambda1
    if nl.liminf_derivative <= -lam1:
        raise DissipationViolated(
            f"liminf f'(s) = {nl.liminf_derivative} <= -lambda_1 = {-lam1}"
        )
    if nl.is_linear:
        m = max(0.0, -nl.linear_coefficient)
        c_F = 0.0
    elif nl.a < 0:
        m = min(-nl.a, lam1) / 2.0
        c = (-nl.a - m) / 2.0
        s_star_sq = (2.0 * c / nl.b) ** (2.0 / (nl.q - 1.0))
        c_F = c * s_star_sq * (nl.q - 1.0) / (nl.q + 1.0)
    else:
        m = 0.0
        c_F = 0.0
    gamma = 1.0 - m / lam1
    g_sq = l2_norm(spec.g) ** 2
    if g_sq == 0.0:
        c_grad = gamma / 2.0
        c_off = c_F * spec.grid.volume
    else:
        c_grad = gamma / 4.0
        c_off = c_F * spec.grid.volume + g_sq / (gamma * lam1)
    return Coercivity(min(0.5, c_grad), c_off)


def difference_bound_constant(spec: ModelSpec) -> float:
    """A provable C for ||f(u)-f(v)|| <= C (1 + ||u||_12^(4-k) + ||v||_12^(4-k)) ||u-v||_r.

    Here r = 12/(kappa+2).  The mean value theorem bounds |f(u)-f(v)| by
    growth_constant * (1 + |u|^(q-1) + |v|^(q-1)) |u-v| pointwise, and Hoelder
    with exponents 12/(q-1) and r costs at most |Omega|^((q-1)/12) on the
    constant term.
    """
    nl = spec.nonlinearity
    return nl.growth_constant * max(1.0, spec.grid.volume ** ((nl.q - 1.0) / 12.0))


def difference_bound_ratio(u: SpectralField, v: SpectralField, spec: ModelSpec) -> float:
    """Smallest C for which the difference bound holds on the pair (u, v)."""
    nl = spec.nonlinearity
    grid = spec.grid
    uv = synthesize(u.coeff, grid.n_quad)
    vv = synthesize(v.coeff, grid.n_quad)
    lhs = lq_norm_values(nl.f(uv) - nl.f(vv), grid, 2.0)
    r = 12.0 / (nl.kappa + 2.0)
    e = 4.0 - nl.kappa
    weight = 1.0 + lq_norm_values(uv, grid, 12.0) ** e + lq_norm_values(vv, grid, 12.0) ** e
    rhs = weight * lq_norm_values(uv - vv, grid, r)
    if rhs == 0.0:
        return 0.0
    return lhs / rhs
