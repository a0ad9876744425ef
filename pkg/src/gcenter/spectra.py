"""Zero-phonon-line fine structure for a center-of-mass frozen on its sites.

In the localized regime each site ``n`` emits at ``zpl_center + es[n] - gs[n]``
through the dipole of its inversion pair.  Sites whose line energies agree
within a tolerance merge into one line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dipoles import CollectionModel, DipoleGeometry, dipoles_for_axis
from .errors import InvalidModelError
from .lines import DEFAULT_RESOLUTION_MEV, Line, LineSpectrum, broaden, energy_grid
from .rotor import N_SITES
from .units import wavelength_energy  # noqa: F401  (re-exported)

DEFAULT_GROUPING_TOL = 0.05
BULK_ZPL_NM = 1278.6


@dataclass(frozen=True)
class SiteEnergies:
    gs: tuple[float, ...]
    es: tuple[float, ...]
    zpl_center: float = 0.0

    def __post_init__(self):
        if len(self.gs) != N_SITES or len(self.es) != N_SITES:
            raise InvalidModelError("site energies need 6 ground and 6 excited values")
        object.__setattr__(self, "gs", tuple(float(x) for x in self.gs))
        object.__setattr__(self, "es", tuple(float(x) for x in self.es))

    @property
    def transition_offsets(self) -> np.ndarray:
        return np.asarray(self.es) - np.asarray(self.gs)

    @property
    def line_energies(self) -> np.ndarray:
        return self.zpl_center + self.transition_offsets

    @classmethod
    def from_offsets(cls, offsets: Sequence[float], zpl_center: float = 0.0) -> "SiteEnergies":
        """Excited-state offsets over a flat ground state."""
        return cls((0.0,) * N_SITES, tuple(offsets), zpl_center)

    def to_dict(self) -> dict:
        return {"gs_meV": list(self.gs), "es_meV": list(self.es), "zpl_center_meV": self.zpl_center}


def bulk_zpl_meV() -> float:
    return float(wavelength_energy(BULK_ZPL_NM, "nm_to_meV"))


def g0_site_energies(split: float = 0.70, zpl_center: float = 0.0) -> SiteEnergies:
    """Doublet: sites {0,3} raised by ``split`` over {1,2,4,5}."""
    off = np.zeros(N_SITES)
    off[[0, 3]] = split
    return SiteEnergies.from_offsets(off, zpl_center)


def g1_site_energies(
    split01: float = 1.00,
    split12: float = 0.86,
    lower_pairs: tuple[tuple[int, int], tuple[int, int]] = ((1, 2), (4, 5)),
    zpl_center: float = 0.0,
) -> SiteEnergies:
    """Triplet: {0,3} on top, then the two unpolarized classes in ``lower_pairs``."""
    off = np.zeros(N_SITES)
    off[[0, 3]] = split01 + split12
    off[list(lower_pairs[0])] = split12
    off[list(lower_pairs[1])] = 0.0
    return SiteEnergies.from_offsets(off, zpl_center)


def _group(offsets: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(-offsets, kind="stable")
    groups: list[list[int]] = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if offsets[prev] - offsets[cur] <= tol:
            groups[-1].append(int(cur))
        else:
            groups.append([int(cur)])
    return groups


def zpl_lines(
    site_energies: SiteEnergies,
    grouping_tolerance: float = DEFAULT_GROUPING_TOL,
    geometry: Optional[DipoleGeometry] = None,
    occupation: Optional[Sequence[float]] = None,
    resolution: float = DEFAULT_RESOLUTION_MEV,
) -> LineSpectrum:
    """Localized-site lines, labelled L0, L1, ... from the highest energy down.

    Merged lines sit at the occupation-weighted mean offset of their sites.
    """
    if not grouping_tolerance > 0:
        raise ValueError("grouping_tolerance must be positive")
    occ = np.ones(N_SITES) if occupation is None else np.asarray(occupation, dtype=float)
    offsets = site_energies.transition_offsets
    occupied = np.flatnonzero(occ > 0)
    lines = []
    for k, grp in enumerate(_group(offsets[occupied], grouping_tolerance)):
        sites = tuple(sorted(int(occupied[i]) for i in grp))
        w = occ[list(sites)]
        off = float(np.average(offsets[list(sites)], weights=w))
        lines.append(Line(off, float(w.sum()), sites, f"L{k}", tuple(float(x) for x in w)))
    return LineSpectrum(
        center=site_energies.zpl_center,
        lines=tuple(lines),
        resolution=resolution,
        mode="localized",
        geometry=geometry or dipoles_for_axis((1, 1, 1)),
    )


def merge_lines(spectrum: LineSpectrum, tolerance: float) -> LineSpectrum:
    """Re-group an existing line list at a coarser tolerance."""
    offs = spectrum.offsets
    lines = []
    for k, grp in enumerate(_group(offs, tolerance)):
        members = [spectrum.lines[i] for i in grp]
        per: dict[int, float] = {}
        for ln in members:
            for s, w in ln.per_site().items():
                per[s] = per.get(s, 0.0) + w
        weight = sum(ln.weight for ln in members)
        off = sum(ln.offset * ln.weight for ln in members) / weight if weight else members[0].offset
        sites = tuple(sorted(per))
        lines.append(Line(off, weight, sites, f"L{k}", tuple(per[s] for s in sites)))
    return LineSpectrum(spectrum.center, tuple(lines), spectrum.resolution, spectrum.mode, spectrum.geometry)


def line_factors(
    spectrum: LineSpectrum,
    polarizer_angle: Optional[float],
    collection: CollectionModel,
) -> np.ndarray:
    """Detected weight of each line behind a polarizer (``None``: no polarizer).

    Each site contributes ``weight * g * cos^2(angle - dipole angle)`` with
    ``g = r`` for the in-plane pair; without a polarizer the two orthogonal
    polarizations add up to ``weight * g``.
    """
    geom = spectrum.geometry or dipoles_for_axis((1, 1, 1))
    g = collection.weights(geom.site_in_plane)
    ang = np.radians(geom.site_angles)
    out = np.zeros(len(spectrum.lines))
    for k, ln in enumerate(spectrum.lines):
        for s, w in ln.per_site().items():
            if polarizer_angle is None:
                out[k] += w * g[s]
            else:
                out[k] += w * g[s] * np.cos(np.radians(polarizer_angle) - ang[s]) ** 2
    return out


def polarized_spectrum(
    spectrum: LineSpectrum,
    polarizer_angle: Optional[float],
    collection: CollectionModel,
    grid: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Broadened intensity on an absolute energy grid (meV).

    Gaussian instrument profile with FWHM ``spectrum.resolution``; each line
    keeps unit area times its detected weight.
    """
    if not spectrum.lines:
        raise ValueError("empty line list")
    energies = spectrum.energies
    if grid is None:
        grid = energy_grid(energies, spectrum.resolution)
    weights = line_factors(spectrum, polarizer_angle, collection)
    return grid, broaden(energies, weights, grid, spectrum.resolution)


def line_intensity_vs_angle(
    spectrum: LineSpectrum,
    angles: Sequence[float],
    collection: CollectionModel,
) -> np.ndarray:
    """(n_angles, n_lines) detected line weights as the polarizer turns."""
    return np.array([line_factors(spectrum, a, collection) for a in angles])


def peak_heights(
    grid: np.ndarray, intensity: np.ndarray, centers: Sequence[float], window: float = 0.15
) -> np.ndarray:
    """Maximum of the curve within +-window of each center."""
    out = []
    for c in centers:
        sel = np.abs(grid - c) <= window
        out.append(float(intensity[sel].max()) if sel.any() else 0.0)
    return np.array(out)


def to_csv_rows(grid: np.ndarray, intensity: np.ndarray) -> list[tuple[float, float, float]]:
    wl = wavelength_energy(np.asarray(grid), "meV_to_nm") if np.all(np.asarray(grid) > 0) else np.full(len(grid), np.nan)
    return [(float(e), float(w), float(i)) for e, w, i in zip(grid, wl, intensity)]
