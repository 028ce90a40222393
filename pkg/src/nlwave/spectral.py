"""Dirichlet sine eigenbasis on the box (0, pi)^d.

Coefficients are taken against the L2-orthonormal eigenfunctions

    e_k(x) = (2/pi)^(d/2) * prod_i sin(k_i x_i),    k in {1..N}^d,

of -Laplace with eigenvalue |k|^2.  Physical values live on the interior
grid x_j = j*pi/(M+1), j = 1..M, on which the type-I discrete sine
transform is an exact change of basis.  The grid rule integrates cos(m x)
exactly for m < 2(M+1), so M >= 3N/2 resolves triple products of modes up
to N and the default M = 2N resolves quadruple ones (cubic f against a
test function, quartic F).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "PhysicalField",
    "State",
    "min_quad",
    "to_physical",
    "to_spectral",
    "synthesize",
    "analyze",
    "l2_norm",
    "grad_norm",
    "energy_norm",
    "lq_norm",
    "lq_norm_values",
]


def min_quad(n_modes: int) -> int:
    """Smallest admissible quadrature size for ``n_modes`` modes per axis."""
    return -(-3 * n_modes // 2)


@dataclass(frozen=True)
class Grid:
    """Mode and quadrature layout of the box (0, pi)^dim.

    ``n_quad`` defaults to ``2 * n_modes``.
    """

    dim: int
    n_modes: int
    n_quad: int | None = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.n_quad is None:
            object.__setattr__(self, "n_quad", 2 * self.n_modes)
        if self.n_quad < min_quad(self.n_modes):
            raise ValueError(
                f"n_quad={self.n_quad} below dealiasing minimum "
                f"{min_quad(self.n_modes)} for n_modes={self.n_modes}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_modes,) * self.dim

    @property
    def quad_shape(self) -> tuple[int, ...]:
        return (self.n_quad,) * self.dim

    @property
    def lambda1(self) -> float:
        return float(self.dim)

    @property
    def spacing(self) -> float:
        return math.pi / (self.n_quad + 1)

    @property
    def cell_volume(self) -> float:
        """Uniform quadrature weight (pi/(M+1))^d."""
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return math.pi**self.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n_quad + 1) * self.spacing

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k2 = np.arange(1, self.n_modes + 1, dtype=float) ** 2
        lam = np.zeros(self.shape)
        for axis in range(self.dim):
            idx = [None] * self.dim
            idx[axis] = slice(None)
            lam = lam + k2[tuple(idx)]
        return lam

    @cached_property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    @property
    def max_stable_dt(self) -> float:
        """Guidance dt <= 0.5/sqrt(lambda_max) for the fixed-step integrator."""
        return 0.5 / math.sqrt(self.dim * self.n_modes**2)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a field in the orthonormal Dirichlet sine basis."""

    grid: Grid
    coeff: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=float)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "coeff", c)

    @classmethod
    def zeros(cls, grid: Grid) -> SpectralField:
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def single_mode(cls, grid: Grid, index, amplitude: float = 1.0) -> SpectralField:
        """Field ``amplitude * e_index``; ``index`` is 1-based (int or tuple)."""
        if isinstance(index, (int, np.integer)):
            index = (int(index),) + (1,) * (grid.dim - 1)
        index = tuple(index)
        if len(index) != grid.dim or not all(1 <= i <= grid.n_modes for i in index):
            raise ValueError(f"mode index {index} outside {{1..{grid.n_modes}}}^{grid.dim}")
        c = np.zeros(grid.shape)
        c[tuple(i - 1 for i in index)] = amplitude
        return cls(grid, c)

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.coeff + other.coeff)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.coeff - other.coeff)

    def __neg__(self) -> SpectralField:
        return SpectralField(self.grid, -self.coeff)

    def __mul__(self, scalar: float) -> SpectralField:
        return SpectralField(self.grid, self.coeff * scalar)

    __rmul__ = __mul__

    def inner(self, other: SpectralField) -> float:
        """L2 inner product, exact in coefficients."""
        return float(np.dot(self.coeff.ravel(), other.coeff.ravel()))


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Values on the interior collocation grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.quad_shape:
            raise ValueError(f"value shape {v.shape} != quadrature shape {self.grid.quad_shape}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class State:
    """Phase-space point (u, u_t) of H^1_0 x L^2."""

    u: SpectralField
    ut: SpectralField

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid) -> State:
        return cls(SpectralField.zeros(grid), SpectralField.zeros(grid))

    def __sub__(self, other: State) -> State:
        return State(self.u - other.u, self.ut - other.ut)

    def __add__(self, other: State) -> State:
        return State(self.u + other.u, self.ut + other.ut)


# Per-axis scale making synthesis/analysis exact inverses; see module docstring.
_SYNTH_SCALE = math.sqrt(2.0 / math.pi) / 2.0


def synthesize(coeff: np.ndarray, n_quad: int) -> np.ndarray:
    """Raw sine synthesis: coefficient array -> values on an n_quad^d grid."""
    d = coeff.ndim
    padded = np.zeros((n_quad,) * d)
    padded[tuple(slice(0, n) for n in coeff.shape)] = coeff
    return sfft.dstn(padded, type=1) * _SYNTH_SCALE**d


def analyze(values: np.ndarray, n_modes: int) -> np.ndarray:
    """Raw sine analysis with truncation to the first ``n_modes`` per axis."""
    d = values.ndim
    m = values.shape[0]
    scale = (_SYNTH_SCALE * math.pi / (m + 1)) ** d
    full = sfft.dstn(values, type=1) * scale
    return np.ascontiguousarray(full[(slice(0, n_modes),) * d])


def to_physical(u: SpectralField) -> PhysicalField:
    """Evaluate ``u`` at the interior quadrature nodes."""
    return PhysicalField(u.grid, synthesize(u.coeff, u.grid.n_quad))


def to_spectral(v: PhysicalField, n_modes: int | None = None) -> SpectralField:
    """Discrete sine analysis of ``v`` truncated to ``n_modes`` per axis.

    This is the orthoprojector onto the Galerkin span evaluated with the
    grid's quadrature, and inverts :func:`to_physical` exactly.
    """
    grid = v.grid
    if n_modes is None or n_modes == grid.n_modes:
        target = grid
    else:
        target = Grid(grid.dim, n_modes, grid.n_quad)
    return SpectralField(target, analyze(v.values, target.n_modes))


def l2_norm(u: SpectralField) -> float:
    c = u.coeff.ravel()
    return math.sqrt(float(np.dot(c, c)))


def grad_norm(u: SpectralField) -> float:
    c = u.coeff.ravel()
    return math.sqrt(float(np.dot(u.grid.eigenvalues.ravel() * c, c)))


def energy_norm(xi: State) -> float:
    """sqrt(||grad u||^2 + ||u_t||^2)."""
    return math.sqrt(grad_norm(xi.u) ** 2 + l2_norm(xi.ut) ** 2)


def lq_norm_values(values: np.ndarray, grid: Grid, q: float) -> float:
    """Composite-rule L^q norm of physical values with weight (pi/(M+1))^d."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    a = np.abs(values)
    peak = float(a.max()) if a.size else 0.0
    if peak == 0.0:
        return 0.0
    # scaled by the peak so large q cannot overflow
    s = float(np.sum((a / peak) ** q)) * grid.cell_volume
    return peak * s ** (1.0 / q)


def lq_norm(u: SpectralField | PhysicalField, q: float) -> float:
    if isinstance(u, SpectralField):
        u = to_physical(u)
    return lq_norm_values(u.values, u.grid, q)
