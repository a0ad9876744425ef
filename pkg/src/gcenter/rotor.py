"""Tight-binding rotor for the interstitial Si hopping over six coupled sites.

Sites ``n = 0..5`` sit on a ring with spacing ``period``.  With on-site
energy ``E0`` and nearest-neighbour coupling ``delta0`` the Hamiltonian is a
symmetric circulant matrix, diagonalized exactly by Bloch states with
wavevector ``k_m = m*pi/(3*period)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleBasisError, InvalidModelError
from .lines import DEFAULT_RESOLUTION_MEV, Line, LineSpectrum

N_SITES = 6

# cos(m*pi/3) for m = 0..5, written out so splittings stay exact
COS_M = (1.0, 0.5, -0.5, -1.0, -0.5, 0.5)

# m values grouped into the four quartet levels
QUARTET_GROUPS = ((0,), (1, 5), (2, 4), (3,))


class Level(enum.Enum):
    GROUND = "GroundState"
    EXCITED = "ExcitedState"


@dataclass(frozen=True)
class RotorModel:
    e0: float = 0.0
    delta0: float = 0.0
    period: float = 1.0
    level: Level = Level.GROUND

    def __post_init__(self):
        if not self.period > 0:
            raise InvalidModelError(f"period must be positive, got {self.period}")

    def hamiltonian(self) -> np.ndarray:
        h = np.diag(np.full(N_SITES, float(self.e0)))
        for n in range(N_SITES):
            h[n, (n + 1) % N_SITES] = h[(n + 1) % N_SITES, n] = self.delta0
        return h


@dataclass(frozen=True)
class BlochState:
    m: int
    wavevector: float
    amplitudes: np.ndarray
    period: float = 1.0

    def inner(self, other: "BlochState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class QuartetLevels:
    """Energies of the m = 0, +-1, +-2, 3 groups with degeneracies 1:2:2:1."""

    energies: tuple[float, float, float, float]
    degeneracies: tuple[int, int, int, int] = (1, 2, 2, 1)

    def splittings(self) -> np.ndarray:
        return np.abs(np.diff(self.energies))

    def distinct(self, tol: float = 0.0) -> list[tuple[float, int]]:
        """Merge coincident levels: list of (energy, total degeneracy)."""
        out: list[tuple[float, int]] = []
        for e, g in sorted(zip(self.energies, self.degeneracies)):
            if out and abs(e - out[-1][0]) <= tol:
                out[-1] = (out[-1][0], out[-1][1] + g)
            else:
                out.append((e, g))
        return out

    def all_levels(self) -> np.ndarray:
        return np.repeat(self.energies, self.degeneracies)


def bloch_states(model: RotorModel) -> list[BlochState]:
    a = model.period
    n = np.arange(N_SITES)
    states = []
    for m in range(N_SITES):
        k = m * np.pi / (3.0 * a)
        amps = np.exp(1j * k * n * a) / np.sqrt(N_SITES)
        states.append(BlochState(m=m, wavevector=k, amplitudes=amps, period=a))
    return states


def level_energies(model: RotorModel) -> np.ndarray:
    """E^(m) for m = 0..5."""
    return model.e0 + 2.0 * model.delta0 * np.array(COS_M)


def eigen_energies(model: RotorModel) -> QuartetLevels:
    e = level_energies(model)
    return QuartetLevels(energies=tuple(float(e[g[0]]) for g in QUARTET_GROUPS))


def transition_overlap(gs_state: BlochState, es_state: BlochState) -> complex:
    if not np.isclose(gs_state.period, es_state.period, rtol=1e-12, atol=0.0):
        raise IncompatibleBasisError(
            f"states built over different periods ({gs_state.period} vs {es_state.period})"
        )
    return gs_state.inner(es_state)


def overlap_matrix(gs: RotorModel, es: RotorModel) -> np.ndarray:
    g, e = bloch_states(gs), bloch_states(es)
    return np.array([[transition_overlap(a, b) for b in e] for a in g])


def quartet_spectrum(
    gs: RotorModel,
    es: RotorModel,
    zpl_center: float,
    resolution: float = DEFAULT_RESOLUTION_MEV,
) -> LineSpectrum:
    """Delocalized-regime ZPL: m-preserving transitions ES(m) -> GS(m).

    Intensities follow the level degeneracies and sum to one; coincident
    lines (e.g. equal couplings) are merged.
    """
    if gs.level is not Level.GROUND or es.level is not Level.EXCITED:
        raise InvalidModelError("quartet_spectrum expects (ground, excited) models")
    dd = es.delta0 - gs.delta0
    merged: dict[float, list[int]] = {}
    for g in QUARTET_GROUPS:
        off = 2.0 * dd * COS_M[g[0]] + 0.0
        merged.setdefault(off, []).extend(g)
    lines = [
        Line(off, len(ms) / N_SITES, tuple(range(N_SITES)), "m=" + "/".join(map(str, ms)))
        for off, ms in merged.items()
    ]
    lines.sort(key=lambda ln: -ln.offset)
    return LineSpectrum(center=zpl_center, lines=tuple(lines), resolution=resolution, mode="quartet")
