"""Discrete configuration space: uniform 1D site grids, time-step parameters,
and normalized probability distributions over grid sites."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.constants

PLANCK = scipy.constants.h          # J s
SPEED_OF_LIGHT = scipy.constants.c  # m / s

# Normalized weights below this floor are snapped to exact zero so that the
# transport sweep never emits spurious micro-transitions.
WEIGHT_FLOOR = 1e-15

# Absolute tolerance on the total mass of a distribution.
MASS_TOL = 1e-12


@dataclass(frozen=True)
class Grid1D:
    """Uniformly spaced lattice sites along one spatial axis (meters).

    Site i sits at ``x_min + i * dx`` with ``dx = (x_max - x_min) / (n_sites - 1)``,
    so every position is exactly reproducible from ``(x_min, dx, i)``.
    """

    x_min: float
    x_max: float
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ValueError(
                f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]"
            )

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_sites - 1)

    def position(self, i) -> float:
        """Position of site ``i`` (vectorized over integer arrays)."""
        return self.x_min + np.asarray(i) * self.dx

    @cached_property
    def positions(self) -> np.ndarray:
        x = self.x_min + np.arange(self.n_sites) * self.dx
        x.setflags(write=False)
        return x

    def nearest_site(self, x) -> np.ndarray:
        """Index of the site closest to position ``x``, clipped to the grid."""
        i = np.rint((np.asarray(x) - self.x_min) / self.dx).astype(np.int64)
        return np.clip(i, 0, self.n_sites - 1)


def make_grid(x_min: float, x_max: float, n_sites: int) -> Grid1D:
    """Build a uniform grid with ``position(0) = x_min`` and
    ``position(n_sites - 1) = x_max`` (up to one rounding ulp)."""
    return Grid1D(float(x_min), float(x_max), int(n_sites))


@dataclass(frozen=True)
class TimeParameters:
    """Time step and kinematics of the propagation along the y axis.

    The wave advances ``dy = v_y * tau`` per step, and the de Broglie relation
    ``wavelength * mass * v_y = h`` ties the spatial wavelength to the mass.
    """

    tau: float   # seconds per step
    v_y: float   # m / s, constant speed along y
    mass: float  # kg

    def __post_init__(self):
        for name in ("tau", "v_y", "mass"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def dy(self) -> float:
        return self.v_y * self.tau

    @property
    def wavelength(self) -> float:
        return PLANCK / (self.mass * self.v_y)

    @classmethod
    def from_mass(cls, mass: float, v_y: float, tau: float) -> "TimeParameters":
        return cls(tau=tau, v_y=v_y, mass=mass)

    @classmethod
    def from_wavelength(
        cls, wavelength: float, v_y: float, tau: float
    ) -> "TimeParameters":
        if not (np.isfinite(wavelength) and wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {wavelength}")
        return cls(tau=tau, v_y=v_y, mass=PLANCK / (wavelength * v_y))


@dataclass(frozen=True)
class ProbabilityDistribution:
    """Normalized nonnegative weights over the sites of a grid.

    Distributions are only comparable when their grids are equal; a site index
    must always mean one physical position.
    """

    grid: Grid1D
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.grid.n_sites,):
            raise ValueError(
                f"weight count {w.shape} does not match grid with "
                f"{self.grid.n_sites} sites"
            )
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_sites(self) -> int:
        return self.grid.n_sites

    def support(self) -> np.ndarray:
        """Indices of sites carrying nonzero probability."""
        return np.nonzero(self.weights)[0]


def normalize(raw_weights, grid: Grid1D) -> ProbabilityDistribution:
    """Scale nonnegative weights to a probability distribution on ``grid``.

    Ratios between surviving nonzero weights are preserved; weights that fall
    below ``WEIGHT_FLOOR`` after scaling are snapped to exact zero.  The
    scale/clamp pipeline is iterated to a fixed point, which makes the
    operation exactly idempotent.
    """
    w = np.asarray(raw_weights, dtype=np.float64).copy()
    if w.shape != (grid.n_sites,):
        raise ValueError(
            f"weight count {w.shape} does not match grid with {grid.n_sites} sites"
        )
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if not np.any(w > 0):
        raise ValueError("cannot normalize: no probability mass")

    for _ in range(8):
        s = w.sum()
        nxt = w / s
        nxt[nxt < WEIGHT_FLOOR] = 0.0
        if np.array_equal(nxt, w):
            break
        w = nxt
    return ProbabilityDistribution(grid=grid, weights=w)
