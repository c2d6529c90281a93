"""Tabulated marginal distributions for fast CDF evaluation.

The analytic marginal densities are expensive pointwise, so empirical
comparisons evaluate them once on a grid and interpolate.  Grids are
built on the compressed axis u = y/(1+y), which covers the whole SINR
half-line with uniform resolution; the CDF is accumulated by the
trapezoid rule on u and renormalised by the captured mass (recorded so
callers can verify it is close to 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic_obf import ObfParams, obf_marginal_pdf_grid
from .analytic_olbf import OlbfParams, olbf_marginal_pdf_t_grid

__all__ = ["DistributionGrid", "obf_sinr_grid", "olbf_sinr_grid"]


@dataclass(frozen=True)
class DistributionGrid:
    """Marginal pdf/cdf of a nonnegative variable tabulated on a grid.

    ``x`` is strictly increasing; ``cdf`` is nondecreasing from 0 to 1
    (renormalised); ``mass`` is the raw integral captured by the grid
    before renormalisation.
    """

    x: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray
    mass: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "pdf", np.asarray(self.pdf, dtype=float))
        object.__setattr__(self, "cdf", np.asarray(self.cdf, dtype=float))

    @classmethod
    def from_pdf(cls, x: np.ndarray, pdf: np.ndarray) -> "DistributionGrid":
        x = np.asarray(x, dtype=float)
        pdf = np.asarray(pdf, dtype=float)
        inc = np.concatenate(
            [[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(x))]
        )
        mass = float(inc[-1])
        if mass <= 0:
            raise ValueError("pdf grid carries no mass")
        return cls(x=x, pdf=pdf, cdf=inc / mass, mass=mass)

    def cdf_at(self, values) -> np.ndarray:
        """Interpolated CDF; 0 below the grid, 1 above it."""
        return np.interp(np.asarray(values, dtype=float), self.x, self.cdf,
                         left=0.0, right=1.0)


def _compressed_axis(points: int, u_max: float) -> tuple[np.ndarray, np.ndarray]:
    u = np.linspace(0.0, u_max, points)
    return u, u / (1.0 - u)


def obf_sinr_grid(
    n: int, params: ObfParams, points: int = 800, u_max: float = 0.9995
) -> DistributionGrid:
    """Grid of the n-th scheduled SINR distribution under adaptive OBF."""
    u, y = _compressed_axis(points, u_max)
    pdf = obf_marginal_pdf_grid(n, y, params)
    return DistributionGrid.from_pdf(y, pdf)


def olbf_sinr_grid(
    n: int, params: OlbfParams, points: int = 800, u_max: float = 0.9995
) -> DistributionGrid:
    """Grid of the n-th scheduled SINR distribution under OLBF."""
    u, y = _compressed_axis(points, u_max)
    pdf = olbf_marginal_pdf_t_grid(n, u, params) * (1.0 - u) ** 2
    return DistributionGrid.from_pdf(y, pdf)
