"""Closed-form wavefield behind a single or double slit, evaluated through
Fresnel integrals, and its conversion to lattice probability distributions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special

from .lattice import Grid1D, ProbabilityDistribution, normalize


@dataclass(frozen=True)
class SlitGeometry:
    """Aperture geometry of the diaphragm.

    ``width`` is the opening of each slit; ``separation`` is the
    center-to-center distance (0 means a single slit centered at x = 0).
    """

    width: float       # meters
    separation: float = 0.0  # meters, center to center

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValueError(f"slit width must be positive, got {self.width}")
        if self.separation != 0.0 and self.separation < self.width:
            raise ValueError(
                "slits overlap: separation must be 0 (single slit) or >= width"
            )

    @property
    def centers(self) -> tuple[float, ...]:
        if self.separation == 0.0:
            return (0.0,)
        return (-self.separation / 2.0, self.separation / 2.0)


def _check_finite(u):
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise ValueError("Fresnel integral argument must be finite")
    return u


def fresnel_c(u):
    """Fresnel cosine integral of cos(pi t^2 / 2) from 0 to u (odd in u)."""
    return scipy.special.fresnel(_check_finite(u))[1]


def fresnel_s(u):
    """Fresnel sine integral of sin(pi t^2 / 2) from 0 to u (odd in u)."""
    return scipy.special.fresnel(_check_finite(u))[0]


def single_slit_amplitude(x, y: float, geom: SlitGeometry, wavelength: float):
    """Unnormalized field at (x, y) behind one slit centered at x = 0.

    The field is the Fresnel-integral difference evaluated between the slit
    edges at the reduced coordinates ``sqrt(2 / (wavelength y)) (x +- width/2)``.
    Only magnitude ratios carry physical meaning; the overall constant is 1.
    Requires y > 0 (the free propagator is singular on the aperture plane).
    """
    if not (np.isfinite(y) and y > 0):
        raise ValueError(f"y must be positive, got {y}")
    if not (np.isfinite(wavelength) and wavelength > 0):
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    x = np.asarray(x, dtype=np.float64)
    scale = np.sqrt(2.0 / (wavelength * y))
    u1 = scale * (x + geom.width / 2.0)
    u2 = scale * (x - geom.width / 2.0)
    s1, c1 = scipy.special.fresnel(u1)
    s2, c2 = scipy.special.fresnel(u2)
    return (c2 - c1) + 1j * (s2 - s1)


def double_slit_amplitude(x, y: float, geom: SlitGeometry, wavelength: float):
    """Superposition of two translated single-slit fields centered at
    ``+- separation/2``.  Equal slits make the field even in x."""
    x = np.asarray(x, dtype=np.float64)
    d = geom.separation
    return single_slit_amplitude(x - d / 2.0, y, geom, wavelength) + \
        single_slit_amplitude(x + d / 2.0, y, geom, wavelength)


def amplitude(x, y: float, geom: SlitGeometry, wavelength: float):
    """Field for the configured aperture (single slit when separation is 0)."""
    if geom.separation == 0.0:
        return single_slit_amplitude(x, y, geom, wavelength)
    return double_slit_amplitude(x, y, geom, wavelength)


def aperture_mask(grid: Grid1D, geom: SlitGeometry) -> np.ndarray:
    """Boolean mask of grid sites lying inside the slit openings."""
    x = grid.positions
    mask = np.zeros(grid.n_sites, dtype=bool)
    for c in geom.centers:
        mask |= np.abs(x - c) <= geom.width / 2.0
    return mask


def line_distribution(
    grid: Grid1D, y: float, geom: SlitGeometry, wavelength: float
) -> ProbabilityDistribution:
    """Probability distribution over grid sites on the line at height y.

    For y > 0 this is the normalized squared field magnitude sampled at the
    sites.  On the aperture plane (y = 0) the propagator is singular, so the
    distribution is uniform over the sites covered by the slit openings.
    """
    if y == 0.0:
        w = aperture_mask(grid, geom).astype(np.float64)
        if not np.any(w):
            raise ValueError("no grid site falls inside a slit opening")
        return normalize(w, grid)
    psi = amplitude(grid.positions, y, geom, wavelength)
    return normalize(np.abs(psi) ** 2, grid)


def boundary_weight_ratio(dist: ProbabilityDistribution) -> float:
    """Largest boundary-site weight relative to the peak weight.

    A large ratio means the grid truncates the field tails, which distorts
    the transported marginals near the edges.
    """
    w = dist.weights
    return float(max(w[0], w[-1]) / w.max())
