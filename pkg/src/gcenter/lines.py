"""Emission-line containers shared by the quartet and localized-site models."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .units import wavelength_energy

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
DEFAULT_RESOLUTION_MEV = 0.15


@dataclass(frozen=True)
class Line:
    """One emission line, stored as an offset from the spectrum center.

    Keeping the offset separate from the (large) absolute center keeps
    micro-eV splittings exact in floating point.
    """

    offset: float
    weight: float
    sites: tuple[int, ...]
    label: str = ""
    site_weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("line weight must be non-negative")
        if self.site_weights and len(self.site_weights) != len(self.sites):
            raise ValueError("site_weights must match sites")

    def per_site(self) -> dict[int, float]:
        """Weight carried by each contributing site (equal split by default)."""
        if self.site_weights:
            return dict(zip(self.sites, self.site_weights))
        return {s: self.weight / len(self.sites) for s in self.sites}


@dataclass(frozen=True)
class LineSpectrum:
    center: float
    lines: tuple[Line, ...]
    resolution: float = DEFAULT_RESOLUTION_MEV
    mode: str = "localized"
    geometry: Optional[object] = field(default=None, compare=False)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([ln.offset for ln in self.lines])

    @property
    def energies(self) -> np.ndarray:
        return self.center + self.offsets

    @property
    def weights(self) -> np.ndarray:
        return np.array([ln.weight for ln in self.lines])

    @property
    def wavelengths(self) -> np.ndarray:
        return wavelength_energy(self.energies, "meV_to_nm")

    def splittings(self) -> np.ndarray:
        """Gaps between consecutive lines, highest energy first."""
        off = np.sort(self.offsets)[::-1]
        return -np.diff(off)

    def with_resolution(self, fwhm: float) -> "LineSpectrum":
        return replace(self, resolution=fwhm)

    def to_records(self) -> list[dict]:
        out = []
        for ln, e in zip(self.lines, self.energies):
            out.append(
                {
                    "label": ln.label,
                    "offset_meV": ln.offset,
                    "energy_meV": float(e),
                    "wavelength_nm": float(wavelength_energy(e, "meV_to_nm")),
                    "weight": ln.weight,
                    "sites": list(ln.sites),
                }
            )
        return out


def gaussian(x, center, fwhm):
    """Area-normalized Gaussian profile."""
    sigma = fwhm * FWHM_TO_SIGMA
    return np.exp(-0.5 * ((x - center) / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))


def broaden(centers: Sequence[float], weights: Sequence[float], grid: np.ndarray, fwhm: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    out = np.zeros_like(grid)
    for c, w in zip(centers, weights):
        if w:
            out += w * gaussian(grid, c, fwhm)
    return out


def energy_grid(centers: Sequence[float], fwhm: float, margin: float = 6.0, step: Optional[float] = None) -> np.ndarray:
    centers = np.asarray(centers, dtype=float)
    step = fwhm / 20.0 if step is None else step
    lo = centers.min() - margin * fwhm
    hi = centers.max() + margin * fwhm
    n = int(np.ceil((hi - lo) / step)) + 1
    return lo + step * np.arange(n)
