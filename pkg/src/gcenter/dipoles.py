"""Emission dipoles of the six Si(i) sites and their polarization diagrams.

Lab frame: cubic axes x=[100], y=[010], z=[001]; light is collected along
[001].  Polarizer angles are measured in the (001) plane from [110], so the
[1-10] direction sits at 90 degrees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .errors import (
    EmptyDiagramError,
    InsufficientSamplesError,
    InvalidOrientationError,
    OutOfRangeError,
)
from .rotor import N_SITES

SITE_PAIRS = ((0, 3), (1, 4), (2, 5))
PAIR_OF_SITE = (0, 1, 2, 0, 1, 2)

# [111] defect: one dipole per inversion pair
_REFERENCE_DIPOLES = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]])

AXES_111 = {
    "[111]": (1, 1, 1),
    "[-111]": (-1, 1, 1),
    "[1-11]": (1, -1, 1),
    "[11-1]": (1, 1, -1),
}


def canonical_axis(axis: Sequence[float]) -> np.ndarray:
    """Validate a <111> direction and return it as a +-1 integer vector."""
    a = np.asarray(axis, dtype=float)
    if a.shape != (3,) or not np.all(np.isfinite(a)) or np.linalg.norm(a) == 0:
        raise InvalidOrientationError(f"not a 3-vector: {axis!r}")
    mag = np.abs(a)
    if not np.allclose(mag, mag[0], rtol=1e-9, atol=1e-12) or mag[0] == 0:
        raise InvalidOrientationError(f"{axis!r} is not a <111> direction")
    return np.sign(a).astype(int)


def projected_angle(v: Sequence[float]) -> float:
    """Polarization angle (deg, mod 180) of a dipole projected on (001)."""
    x, y = float(v[0]), float(v[1])
    if abs(x) < 1e-12 and abs(y) < 1e-12:
        return float("nan")
    return float((np.degrees(np.arctan2(y, x)) - 45.0) % 180.0)


@dataclass(frozen=True)
class DipoleGeometry:
    """Defect axis plus one dipole per inversion pair {0,3}, {1,4}, {2,5}.

    ``displacements`` holds, for each pair, the in-ring direction of the
    back bond of the carbon at the +axis end lying in that pair's mirror
    plane; it fixes the sign convention used by the strain response.
    """

    axis: np.ndarray
    dipoles: np.ndarray
    displacements: np.ndarray

    @property
    def unit_axis(self) -> np.ndarray:
        return self.axis / np.linalg.norm(self.axis)

    @property
    def pair_angles(self) -> np.ndarray:
        return np.array([projected_angle(d) for d in self.dipoles])

    @property
    def pair_in_plane(self) -> np.ndarray:
        return np.abs(self.dipoles[:, 2]) < 1e-12

    @property
    def site_angles(self) -> np.ndarray:
        return self.pair_angles[list(PAIR_OF_SITE)]

    @property
    def site_in_plane(self) -> np.ndarray:
        return self.pair_in_plane[list(PAIR_OF_SITE)]

    @property
    def main_angle(self) -> float:
        """Projected angle of the in-plane dipole (diagram maximum for uniform hopping)."""
        return float(self.pair_angles[np.flatnonzero(self.pair_in_plane)[0]])


def dipoles_for_axis(axis: Sequence[float] = (1, 1, 1)) -> DipoleGeometry:
    """Site-pair dipoles for a <111>-oriented defect.

    Labels are carried over from the [111] reference by the diagonal sign
    flip ``S = diag(sign(axis))``, a symmetry of the cubic lattice.
    """
    s = canonical_axis(axis)
    flip = np.diag(s.astype(float))
    dip = _REFERENCE_DIPOLES @ flip
    dip /= np.linalg.norm(dip, axis=1, keepdims=True)
    a = s / np.sqrt(3.0)
    disp = []
    for u in dip:
        # back bonds of the +axis atom are the axis with one component flipped
        cands = [s * np.where(np.arange(3) == i, -1, 1) for i in range(3)]
        b = next(c for c in cands if abs(c @ u) < 1e-9)
        w = b - (b @ a) * a
        disp.append(w / np.linalg.norm(w))
    return DipoleGeometry(axis=s.astype(float), dipoles=dip, displacements=np.array(disp))


# --- collection radiometry -------------------------------------------------


@dataclass(frozen=True)
class CollectionModel:
    depth: Optional[float]
    purcell_in_plane: float
    purcell_out_of_plane: float
    ceff_in_plane: float
    ceff_out_of_plane: float

    @property
    def r(self) -> float:
        return (self.purcell_in_plane * self.ceff_in_plane) / (
            self.purcell_out_of_plane * self.ceff_out_of_plane
        )

    def weights(self, in_plane: np.ndarray) -> np.ndarray:
        """Relative collected intensity: r for in-plane dipoles, 1 otherwise."""
        return np.where(np.asarray(in_plane, dtype=bool), self.r, 1.0)

    @classmethod
    def with_ratio(cls, r: float) -> "CollectionModel":
        if not r > 0:
            raise OutOfRangeError("collection ratio must be positive")
        return cls(None, float(r), 1.0, 1.0, 1.0)


@lru_cache(maxsize=1)
def _collection_table() -> dict:
    with resources.files("gcenter").joinpath("data/collection_table.json").open() as fh:
        tab = json.load(fh)
    return {k: np.asarray(v) if isinstance(v, list) else v for k, v in tab.items()}


def collection_table() -> dict:
    return dict(_collection_table())


def collection_ratio(depth: float) -> CollectionModel:
    """Interpolated F and C_eff for both dipole classes at a given depth (nm)."""
    tab = _collection_table()
    d = tab["depth_nm"]
    if not (d[0] <= depth <= d[-1]):
        raise OutOfRangeError(f"depth {depth} nm outside the layer [{d[0]}, {d[-1]}] nm")

    def at(key):
        return float(np.interp(depth, d, tab[key]))

    return CollectionModel(
        float(depth),
        at("purcell_in_plane"),
        at("purcell_out_of_plane"),
        at("ceff_in_plane"),
        at("ceff_out_of_plane"),
    )


# --- polarization diagrams ---------------------------------------------------

DEFAULT_ANGLES = np.arange(0.0, 360.0, 5.0)


@dataclass(frozen=True)
class DiagramFit:
    visibility: float
    phi: float
    covariance: np.ndarray
    amplitude: float
    phi_defined: bool = True

    def __iter__(self) -> Iterator:
        return iter((self.visibility, self.phi, self.covariance))


@dataclass(frozen=True)
class PolarizationDiagram:
    angles: np.ndarray
    intensities: np.ndarray
    fit: Optional[DiagramFit] = None

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        i = np.asarray(self.intensities, dtype=float)
        if a.shape != i.shape:
            raise ValueError("angles and intensities differ in length")
        if np.any(i < 0):
            raise ValueError("diagram intensities must be non-negative")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "intensities", i)

    @property
    def visibility(self) -> float:
        """Raw (Imax - Imin) / Imax of the samples."""
        return float((self.intensities.max() - self.intensities.min()) / self.intensities.max())


def pair_weights(occupation: Sequence[float]) -> np.ndarray:
    occ = np.asarray(occupation, dtype=float)
    return np.array([occ[i] + occ[j] for i, j in SITE_PAIRS])


def diagram_intensity(
    geometry: DipoleGeometry,
    occupation: Sequence[float],
    collection: CollectionModel,
    angles: Sequence[float],
) -> np.ndarray:
    """Incoherent sum of cos^2 lobes, one per occupied site pair (unnormalized)."""
    th = np.radians(np.asarray(angles, dtype=float))[:, None]
    w = pair_weights(occupation) * collection.weights(geometry.pair_in_plane)
    lobes = np.cos(th - np.radians(geometry.pair_angles)[None, :]) ** 2
    return lobes @ w


def diagram_from_sites(
    geometry: DipoleGeometry,
    active_sites: Sequence[int],
    occupation: Optional[Sequence[float]] = None,
    collection: Optional[CollectionModel] = None,
    angles: Sequence[float] = DEFAULT_ANGLES,
) -> PolarizationDiagram:
    active = sorted(set(int(s) for s in active_sites))
    if not active:
        raise EmptyDiagramError("no active sites")
    if any(s < 0 or s >= N_SITES for s in active):
        raise ValueError(f"site index out of range in {active}")
    occ = np.zeros(N_SITES)
    if occupation is None:
        occ[active] = 1.0
    else:
        full = np.asarray(occupation, dtype=float)
        if full.shape != (N_SITES,) or np.any(full < 0):
            raise ValueError("occupation must be 6 non-negative weights")
        occ[active] = full[active]
        if np.any(np.delete(full, active) > 0):
            raise ValueError("occupation has weight outside the active sites")
    if occ.sum() == 0:
        raise EmptyDiagramError("active sites carry no occupation")
    collection = collection or CollectionModel.with_ratio(2.1)
    inten = diagram_intensity(geometry, occ, collection, angles)
    return PolarizationDiagram(np.asarray(angles, dtype=float), inten / inten.max())


def analytic_visibility(r: float) -> float:
    """Visibility of the uniform three-dipole diagram, r/(r+1)."""
    return r / (r + 1.0)


def _model(theta_deg, amplitude, visibility, phi_deg):
    return amplitude * (visibility * np.cos(np.radians(theta_deg - phi_deg)) ** 2 + 1.0 - visibility)


def fit_diagram(diagram: PolarizationDiagram, background: float = 0.0) -> DiagramFit:
    """Least-squares fit of ``A * (V cos^2(theta - phi) + 1 - V)``.

    The model is linear in ``(1, cos 2theta, sin 2theta)``; that solve gives
    the optimum directly and seeds a bounded nonlinear refinement that
    supplies the covariance of ``(A, V, phi)``.  ``background`` is a known
    unpolarized offset subtracted before fitting.
    """
    th = diagram.angles
    y = diagram.intensities - background
    if th.size < 8:
        raise InsufficientSamplesError(f"need >= 8 angular samples, got {th.size}")
    if th.max() - th.min() < 150.0:
        raise InsufficientSamplesError("angular samples must span >= 150 degrees")
    rad = np.radians(th)
    design = np.column_stack([np.ones_like(rad), np.cos(2 * rad), np.sin(2 * rad)])
    (c0, c1, s1), *_ = np.linalg.lstsq(design, y, rcond=None)
    rho = float(np.hypot(c1, s1))
    nan_cov = np.full((3, 3), np.nan)
    if c0 <= 0 or rho <= 1e-12 * max(abs(c0), 1e-300):
        return DiagramFit(0.0, float("nan"), nan_cov, float(max(c0, 0.0)), phi_defined=False)
    phi0 = float(np.degrees(0.5 * np.arctan2(s1, c1)) % 180.0)
    amp0 = c0 + rho
    vis0 = 2.0 * rho / amp0
    if vis0 <= 1.0 + 1e-9:
        vis0 = min(vis0, 1.0)
        cov = _covariance(th, y, (amp0, vis0, phi0))
        return DiagramFit(float(vis0), phi0, cov, float(amp0))
    # unconstrained optimum has a negative minimum: refit with V clipped to 1
    try:
        popt, pcov = curve_fit(
            _model, th, y, p0=(amp0, 1.0, phi0), bounds=([0.0, 0.0, phi0 - 90.0], [np.inf, 1.0, phi0 + 90.0])
        )
    except (RuntimeError, ValueError):
        return DiagramFit(1.0, phi0, nan_cov, float(amp0))
    amp, vis, phi = popt
    return DiagramFit(float(vis), float(phi % 180.0), pcov, float(amp))


def _covariance(th, y, params) -> np.ndarray:
    amp, vis, phi = params
    x = np.radians(th - phi)
    c2 = np.cos(x) ** 2
    jac = np.column_stack(
        [vis * c2 + 1.0 - vis, amp * (c2 - 1.0), amp * vis * np.sin(2 * x) * np.pi / 180.0]
    )
    resid = y - _model(th, amp, vis, phi)
    dof = max(th.size - 3, 1)
    try:
        return np.linalg.inv(jac.T @ jac) * (resid @ resid) / dof
    except np.linalg.LinAlgError:
        return np.full((3, 3), np.nan)


def angle_difference(a: float, b: float, period: float = 180.0) -> float:
    """Smallest signed difference between two axial angles."""
    return float((a - b + period / 2.0) % period - period / 2.0)
