"""Center-of-mass eigenstates on a perturbed six-well ring potential.

The rotation coordinate ``theta`` in [0, 2*pi) is discretized uniformly and
``H = -B d^2/dtheta^2 + V(theta)`` is built with second-order finite
differences and a periodic wrap.  Well ``n`` is centered at ``n*pi/3``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import CalibrationError, InvalidGridError, InvalidModelError, NumericalFailureError
from .rotor import N_SITES

DEFAULT_N_GRID = 600
WELL_SPACING = np.pi / 3.0
# ascending-energy assignment of cos(m*pi/3) for a band whose m = 0 state is lowest
_TB_PATTERN = np.array([1.0, 0.5, 0.5, -0.5, -0.5, -1.0])

LOCALIZED_MASS = 0.9
DELOCALIZED_BAND = 0.05


def well_windows(theta: np.ndarray) -> np.ndarray:
    """Cosine-squared windows, one per well, forming a partition of unity.

    Window ``n`` equals 1 at the center of well ``n`` and falls to 0 at the
    centers of the neighbouring wells; adjacent windows sum to exactly 1.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.zeros((N_SITES, theta.size))
    for n in range(N_SITES):
        d = np.angle(np.exp(1j * (theta - n * WELL_SPACING)))
        inside = np.abs(d) <= WELL_SPACING
        out[n, inside] = np.cos(1.5 * d[inside]) ** 2
    return out


@dataclass(frozen=True)
class RingPotential:
    barrier: float
    site_offsets: tuple[float, ...] = (0.0,) * N_SITES
    n_grid: int = DEFAULT_N_GRID

    def __post_init__(self):
        if self.n_grid % N_SITES or self.n_grid < 48:
            raise InvalidGridError(f"n_grid must be >= 48 and divisible by 6, got {self.n_grid}")
        if self.barrier < 0:
            raise InvalidModelError("barrier must be non-negative")
        if len(self.site_offsets) != N_SITES:
            raise InvalidModelError("need exactly 6 site offsets")

    @property
    def step(self) -> float:
        return 2.0 * np.pi / self.n_grid

    @property
    def theta(self) -> np.ndarray:
        return self.step * np.arange(self.n_grid)

    @property
    def values(self) -> np.ndarray:
        th = self.theta
        v = 0.5 * self.barrier * (1.0 - np.cos(6.0 * th))
        return v + np.asarray(self.site_offsets, dtype=float) @ well_windows(th)

    def rotated(self, wells: int = 1) -> "RingPotential":
        """Same potential with site offsets moved ``wells`` places along the ring."""
        return RingPotential(self.barrier, tuple(np.roll(self.site_offsets, wells)), self.n_grid)

    def to_dict(self) -> dict:
        return {
            "barrier_meV": self.barrier,
            "site_offsets_meV": list(self.site_offsets),
            "n_grid": self.n_grid,
            "theta_rad": self.theta.tolist(),
            "V_meV": self.values.tolist(),
        }


def build_potential(barrier: float, site_offsets: Sequence[float] = (0.0,) * N_SITES, n_grid: int = DEFAULT_N_GRID) -> RingPotential:
    return RingPotential(float(barrier), tuple(float(x) for x in site_offsets), int(n_grid))


def arc_weights(theta: np.ndarray) -> np.ndarray:
    """(6, n_grid) membership of each grid point in the six pi/3 well arcs.

    Grid points lying exactly on an arc boundary are shared half/half.
    """
    rel = np.asarray(theta, dtype=float) / WELL_SPACING
    nearest = np.rint(rel).astype(int)
    on_edge = np.isclose(np.abs(rel - nearest), 0.5, atol=1e-9)
    weights = np.zeros((N_SITES, rel.size))
    inner = np.flatnonzero(~on_edge)
    weights[nearest[inner] % N_SITES, inner] = 1.0
    for j in np.flatnonzero(on_edge):
        lo = int(np.floor(rel[j])) % N_SITES
        weights[lo, j] += 0.5
        weights[(lo + 1) % N_SITES, j] += 0.5
    return weights


def well_masses(theta: np.ndarray, psi: np.ndarray, step: float) -> np.ndarray:
    """Probability mass of each column of ``psi`` in each well; shape (n_states, 6)."""
    psi = np.asarray(psi)
    if psi.ndim == 1:
        psi = psi[:, None]
    return (arc_weights(theta) @ (np.abs(psi) ** 2 * step)).T


@dataclass(frozen=True)
class RotationalSpectrum:
    energies: np.ndarray
    wavefunctions: np.ndarray  # (n_grid, n_levels), real
    potential: RingPotential
    kinetic_scale: float
    masses: np.ndarray = field(repr=False)  # (n_levels, 6)

    @property
    def theta(self) -> np.ndarray:
        return self.potential.theta

    @property
    def ipr(self) -> np.ndarray:
        return np.sum(self.masses**2, axis=1)

    @property
    def levels(self) -> list[tuple[float, np.ndarray]]:
        return [(float(e), self.wavefunctions[:, i]) for i, e in enumerate(self.energies)]

    def norms(self) -> np.ndarray:
        return np.sum(self.wavefunctions**2, axis=0) * self.potential.step

    def to_dict(self) -> dict:
        return {
            "kinetic_scale_meV": self.kinetic_scale,
            "energies_meV": self.energies.tolist(),
            "ipr": self.ipr.tolist(),
            "well_masses": self.masses.tolist(),
            "psi": self.wavefunctions.T.tolist(),
        }


def _hamiltonian(potential: RingPotential, kinetic_scale: float) -> np.ndarray:
    n = potential.n_grid
    t = kinetic_scale / potential.step**2
    h = np.diag(potential.values + 2.0 * t)
    i = np.arange(n)
    h[i, (i + 1) % n] = -t
    h[(i + 1) % n, i] = -t
    return h


def solve_ring(potential: RingPotential, kinetic_scale: float, n_levels: int = N_SITES) -> RotationalSpectrum:
    if not kinetic_scale > 0:
        raise InvalidModelError(f"kinetic_scale must be positive, got {kinetic_scale}")
    h = _hamiltonian(potential, kinetic_scale)
    if not np.all(np.isfinite(h)):
        raise NumericalFailureError("non-finite Hamiltonian", {"kinetic_scale": kinetic_scale})
    try:
        e, v = scipy.linalg.eigh(h, subset_by_index=[0, n_levels - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailureError(
            f"eigensolve failed: {exc}",
            {"n_grid": potential.n_grid, "kinetic_scale": kinetic_scale, "barrier": potential.barrier},
        ) from exc
    psi = v / np.sqrt(potential.step)
    masses = well_masses(potential.theta, psi, potential.step)
    return RotationalSpectrum(e, psi, potential, float(kinetic_scale), masses)


def tight_binding_fit(energies: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares fit of six sorted levels to ``E0 - 2*delta0*cos(m*pi/3)``.

    Returns ``(E0, delta0, max_abs_residual)``; ``delta0 > 0`` when the
    nodeless m = 0 state is lowest.  A free rotor (levels ``B*m^2``) gives
    ``delta0 = 2B``.
    """
    e = np.sort(np.asarray(energies, dtype=float))[:N_SITES]
    e0 = float(e.mean())
    delta0 = float(-(_TB_PATTERN @ e) / (2.0 * np.sum(_TB_PATTERN**2)))
    resid = e - (e0 - 2.0 * delta0 * _TB_PATTERN)
    return e0, delta0, float(np.max(np.abs(resid)))


def fitted_delta0(spectrum: RotationalSpectrum) -> float:
    return tight_binding_fit(spectrum.energies)[1]


def calibrate_kinetic_scale(
    barrier: float,
    target_delta0: float,
    n_grid: int = DEFAULT_N_GRID,
    rtol: float = 1e-4,
    max_iter: int = 200,
) -> float:
    """Find ``B`` so the symmetric ring reproduces a tunneling splitting.

    Bisection in ``log B``.  The free rotor bounds the splitting from above
    (``delta0 <= 2B``), so ``target/2`` is a valid lower bracket.
    """
    if barrier < 0 or not target_delta0 > 0:
        raise InvalidModelError("need barrier >= 0 and target_delta0 > 0")
    pot = build_potential(barrier, n_grid=n_grid)

    def delta(b: float) -> float:
        return fitted_delta0(solve_ring(pot, b))

    lo = 0.5 * target_delta0
    hi = lo
    for _ in range(80):
        if delta(hi) >= target_delta0:
            break
        lo, hi = hi, hi * 4.0
    else:
        raise CalibrationError(f"no B up to {hi:.3g} meV reaches delta0 = {target_delta0:.3g} meV")
    if hi == lo:
        lo = hi / 4.0
        while delta(lo) >= target_delta0:
            if lo < 1e-12:
                raise CalibrationError("lower bracket collapsed")
            lo /= 4.0
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        d = delta(mid)
        if abs(d / target_delta0 - 1.0) < rtol:
            return mid
        if d < target_delta0:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not converge (bracket {lo:.6g}..{hi:.6g})")


class Localization(enum.Enum):
    LOCALIZED = "LOCALIZED"
    DELOCALIZED = "DELOCALIZED"
    PARTIAL = "PARTIAL"


@dataclass(frozen=True)
class LevelReport:
    index: int
    energy: float
    cluster: int
    masses: np.ndarray
    flag: Localization

    @property
    def dominant_well(self) -> int:
        return int(np.argmax(self.masses))


@dataclass(frozen=True)
class LocalizationReport:
    levels: list[LevelReport]
    clusters: list[list[int]]
    tolerance: float

    def subsets(self) -> list[dict]:
        """One entry per quasi-degenerate cluster, ascending in energy."""
        out = []
        for c, members in enumerate(self.clusters):
            lv = [self.levels[i] for i in members]
            out.append(
                {
                    "cluster": c,
                    "size": len(members),
                    "mean_energy": float(np.mean([x.energy for x in lv])),
                    "wells": sorted({x.dominant_well for x in lv}) if all(x.flag is Localization.LOCALIZED for x in lv) else [],
                    "flags": [x.flag.value for x in lv],
                }
            )
        return out

    def to_table(self) -> list[dict]:
        return [
            {
                "level": x.index,
                "energy_meV": x.energy,
                "cluster": x.cluster,
                "flag": x.flag.value,
                **{f"well_{n}": float(x.masses[n]) for n in range(N_SITES)},
            }
            for x in self.levels
        ]


def _classify(masses: np.ndarray) -> Localization:
    if masses.max() > LOCALIZED_MASS:
        return Localization.LOCALIZED
    if np.all(np.abs(masses - 1.0 / N_SITES) <= DELOCALIZED_BAND):
        return Localization.DELOCALIZED
    return Localization.PARTIAL


def _clusters(energies: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(energies)
    groups: list[list[int]] = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if energies[cur] - energies[prev] <= tol:
            groups[-1].append(int(cur))
        else:
            groups.append([int(cur)])
    return groups


def symmetric_reference_delta0(spectrum: RotationalSpectrum) -> float:
    pot = spectrum.potential
    ref = solve_ring(build_potential(pot.barrier, n_grid=pot.n_grid), spectrum.kinetic_scale)
    return abs(fitted_delta0(ref))


def localization_report(spectrum: RotationalSpectrum, tolerance: Optional[float] = None) -> LocalizationReport:
    """Per-level well occupations with quasi-degenerate levels resolved.

    Levels closer than ``tolerance`` (default: 10x the tunneling splitting of
    the unperturbed ring with the same barrier and kinetic scale) form a
    cluster whose eigenbasis is not fixed by the energies.  A cluster whose
    mean occupation is uniform over the six wells is an intact tunneling band
    and is reported with that uniform occupation per level (the Bloch basis).
    Any other cluster is rotated into the basis diagonalizing the well-index
    operator restricted to it, i.e. its maximally localized representatives.
    """
    if tolerance is None:
        tolerance = 10.0 * symmetric_reference_delta0(spectrum)
    tolerance = max(float(tolerance), 1e-12 * max(1.0, float(np.max(np.abs(spectrum.energies)))))
    pot = spectrum.potential
    clusters = _clusters(spectrum.energies, tolerance)
    reports: dict[int, LevelReport] = {}
    labels = np.arange(N_SITES, dtype=float)
    for c, members in enumerate(clusters):
        raw = spectrum.masses[members]
        mean_occ = raw.mean(axis=0)
        if np.all(np.abs(mean_occ - 1.0 / N_SITES) <= DELOCALIZED_BAND):
            per_level = np.repeat(mean_occ[None, :], len(members), axis=0)
        elif len(members) == 1:
            per_level = raw
        else:
            w = spectrum.wavefunctions[:, members]
            arcs = arc_weights(pot.theta)
            proj = [(w * arcs[n][:, None]).T @ w * pot.step for n in range(N_SITES)]
            x_op = sum(labels[n] * proj[n] for n in range(N_SITES))
            _, rot = np.linalg.eigh(x_op)
            per_level = np.array([[rot[:, k] @ a_n @ rot[:, k] for a_n in proj] for k in range(len(members))])
        # energies within a cluster are kept in eigenvalue order
        for k, i in enumerate(sorted(members, key=lambda j: spectrum.energies[j])):
            m = per_level[k]
            reports[i] = LevelReport(i, float(spectrum.energies[i]), c, m, _classify(m))
    levels = [reports[i] for i in range(len(spectrum.energies))]
    return LocalizationReport(levels, clusters, tolerance)

