"""Monte Carlo of the Si(i) hopping like a ball on a six-slot roulette wheel.

Each emitter cycles ground -> excited -> ground.  The wait for excitation
and the radiative wait are exponential; the site is redrawn from the hop
distribution at every excitation and the photon carries that site's line
energy and dipole angle.  Times are in ns, energies in meV.

Every emitter gets its own child of a ``SeedSequence``, so streams do not
depend on the order in which emitters are simulated.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy import stats

from .dipoles import (
    DEFAULT_ANGLES,
    CollectionModel,
    DipoleGeometry,
    PolarizationDiagram,
    diagram_from_sites,
    dipoles_for_axis,
)
from .errors import EmptyStreamError, InvalidModelError
from .lines import DEFAULT_RESOLUTION_MEV, FWHM_TO_SIGMA, broaden, energy_grid
from .rotor import N_SITES
from .spectra import SiteEnergies
from .units import thermal_energy

UNIFORM = (1.0 / N_SITES,) * N_SITES


@dataclass(frozen=True)
class EmitterConfig:
    excitation_rate: float = 0.05  # 1/ns
    radiative_rate: float = 1.0 / 6.0  # 1/ns
    site_energies: SiteEnergies = field(default_factory=lambda: SiteEnergies.from_offsets([0.0] * N_SITES))
    hop_distribution: tuple[float, ...] = UNIFORM
    seed: int = 0
    n_emitters: int = 1
    axis: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        p = np.asarray(self.hop_distribution, dtype=float)
        if p.shape != (N_SITES,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidModelError("hop_distribution needs 6 non-negative probabilities summing to 1")
        if not (self.excitation_rate > 0 and self.radiative_rate > 0):
            raise InvalidModelError("rates must be positive")
        if int(self.n_emitters) < 1:
            raise InvalidModelError("n_emitters must be >= 1")
        object.__setattr__(self, "hop_distribution", tuple(float(x) for x in p))

    @property
    def photon_rate(self) -> float:
        """Steady-state photon rate of one emitter."""
        return self.excitation_rate * self.radiative_rate / (self.excitation_rate + self.radiative_rate)

    @property
    def geometry(self) -> DipoleGeometry:
        return dipoles_for_axis(self.axis)

    def to_dict(self) -> dict:
        return {
            "excitation_rate_per_ns": self.excitation_rate,
            "radiative_rate_per_ns": self.radiative_rate,
            "site_energies": self.site_energies.to_dict(),
            "hop_distribution": list(self.hop_distribution),
            "seed": self.seed,
            "n_emitters": self.n_emitters,
            "axis": list(self.axis),
        }


@dataclass(frozen=True)
class PhotonRecord:
    timestamp: float
    site: int
    energy: float
    angle: float
    emitter_id: int


@dataclass(frozen=True)
class PhotonStream:
    """Column-oriented photon list, sorted by (timestamp, emitter)."""

    timestamp: np.ndarray
    site: np.ndarray
    energy: np.ndarray
    angle: np.ndarray
    emitter_id: np.ndarray
    duration: float

    def __len__(self) -> int:
        return len(self.timestamp)

    def __iter__(self) -> Iterator[PhotonRecord]:
        for t, s, e, a, i in zip(self.timestamp, self.site, self.energy, self.angle, self.emitter_id):
            yield PhotonRecord(float(t), int(s), float(e), float(a), int(i))

    def occupation(self) -> np.ndarray:
        """Fraction of photons from each site."""
        if len(self) == 0:
            raise EmptyStreamError("no photons")
        return np.bincount(self.site, minlength=N_SITES) / len(self)

    def select(self, mask: np.ndarray) -> "PhotonStream":
        return PhotonStream(
            self.timestamp[mask], self.site[mask], self.energy[mask], self.angle[mask], self.emitter_id[mask], self.duration
        )

    def head(self, n: int) -> "PhotonStream":
        n = min(n, len(self))
        dur = float(self.timestamp[n - 1]) if n else 0.0
        s = slice(0, n)
        return PhotonStream(self.timestamp[s], self.site[s], self.energy[s], self.angle[s], self.emitter_id[s], dur)


def _one_emitter(config: EmitterConfig, seq: np.random.SeedSequence, duration: float) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seq))
    mean_cycle = 1.0 / config.photon_rate
    chunk = int(duration / mean_cycle * 1.05 + 6 * np.sqrt(duration / mean_cycle) + 16)
    times, sites, t0 = [], [], 0.0
    while t0 <= duration:
        wait = rng.exponential(1.0 / config.excitation_rate, chunk) + rng.exponential(1.0 / config.radiative_rate, chunk)
        t = t0 + np.cumsum(wait)
        s = rng.choice(N_SITES, size=chunk, p=config.hop_distribution)
        times.append(t)
        sites.append(s)
        t0 = float(t[-1])
    t, s = np.concatenate(times), np.concatenate(sites)
    keep = t <= duration
    return t[keep], s[keep]


def simulate_stream(
    config: EmitterConfig,
    duration: Optional[float] = None,
    n_photons: Optional[int] = None,
    workers: int = 1,
) -> PhotonStream:
    """Photon stream over ``duration`` ns, or the first ``n_photons`` photons.

    With ``n_photons`` the duration is chosen generously and the merged
    stream is truncated, which stays deterministic for a given seed.
    """
    if duration is None and n_photons is None:
        raise ValueError("give duration or n_photons")
    if n_photons is not None:
        if n_photons <= 0:
            raise ValueError("n_photons must be positive")
        per = n_photons / config.n_emitters
        run = (per + 8 * np.sqrt(per) + 16) / config.photon_rate
    else:
        if not duration > 0:
            raise ValueError("duration must be positive")
        run = float(duration)

    children = np.random.SeedSequence(config.seed).spawn(config.n_emitters)
    if workers > 1 and config.n_emitters > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _one_emitter(config, c, run), children))
    else:
        parts = [_one_emitter(config, c, run) for c in children]

    t = np.concatenate([p[0] for p in parts])
    s = np.concatenate([p[1] for p in parts]).astype(np.int64)
    ids = np.concatenate([np.full(len(p[0]), k, dtype=np.int64) for k, p in enumerate(parts)])
    order = np.lexsort((ids, t))
    t, s, ids = t[order], s[order], ids[order]

    energy = config.site_energies.line_energies[s]
    angle = config.geometry.site_angles[s]
    stream = PhotonStream(t, s, energy, angle, ids, run)
    if n_photons is not None:
        stream = stream.head(n_photons)
    return stream


def poisson_surrogate(stream: PhotonStream, seed: int = 0) -> PhotonStream:
    """Same photons with timestamps redrawn uniformly over the stream duration."""
    if len(stream) == 0:
        raise EmptyStreamError("no photons")
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.0, stream.duration, len(stream)))
    return PhotonStream(t, stream.site, stream.energy, stream.angle, stream.emitter_id, stream.duration)


# --- photon statistics ---------------------------------------------------------


@dataclass(frozen=True)
class G2Curve:
    tau: np.ndarray
    g2: np.ndarray
    counts: np.ndarray
    bin_width: float

    def at_zero(self) -> float:
        return float(self.g2[np.argmin(np.abs(self.tau))])

    def tail(self, fraction: float = 0.25) -> float:
        """Mean g2 over the outer ``fraction`` of delays on both sides."""
        sel = np.abs(self.tau) >= (1.0 - fraction) * np.abs(self.tau).max()
        return float(self.g2[sel].mean())


def g2_histogram(stream: PhotonStream, bin_width: float, max_delay: float) -> G2Curve:
    """Start-stop histogram over all photon pairs, normalized to Poisson level.

    A pair at delay ``tau`` is expected ``N^2 * bin_width * (T - |tau|) / T^2``
    times for uncorrelated photons.
    """
    if len(stream) < 2:
        raise EmptyStreamError("need at least two photons")
    if not (bin_width > 0 and max_delay > 0):
        raise ValueError("bin_width and max_delay must be positive")
    t = stream.timestamp
    n = int(np.ceil(max_delay / bin_width - 0.5))
    edges = (np.arange(-n, n + 2) - 0.5) * bin_width
    counts = np.zeros(len(edges) - 1)
    k = 1
    while k < len(t):
        dt = t[k:] - t[:-k]
        dt = dt[dt <= edges[-1]]
        if len(dt) == 0:
            break
        counts += np.histogram(dt, edges)[0] + np.histogram(-dt, edges)[0]
        k += 1
    tau = 0.5 * (edges[:-1] + edges[1:])
    T, N = stream.duration, len(t)
    expected = N * N * bin_width * (T - np.abs(tau)) / T**2
    return G2Curve(tau, counts / expected, counts, bin_width)


# --- polarizer-filtered accumulation ---------------------------------------------


def accumulate_spectrum(
    stream: PhotonStream,
    polarizer_angle: Optional[float],
    collection: CollectionModel,
    resolution: float = DEFAULT_RESOLUTION_MEV,
    grid: Optional[np.ndarray] = None,
    seed: int = 0,
    axis: Sequence[int] = (1, 1, 1),
    sampling: str = "convolve",
) -> tuple[np.ndarray, np.ndarray]:
    """Detected photons histogrammed in energy and broadened by the instrument.

    Photons survive with probability ``g_site * cos^2(angle - dipole) / g_max``
    (``g_site / g_max`` without a polarizer).  The curve has area equal to
    the number of detected photons.  ``sampling="convolve"`` broadens the
    per-line counts analytically; ``"jitter"`` smears each photon by the
    instrument profile and bins it, which keeps the shot noise.
    """
    if len(stream) == 0:
        raise EmptyStreamError("no photons")
    g = collection.weights(dipoles_for_axis(axis).site_in_plane)
    p = g[stream.site] / g.max()
    if polarizer_angle is not None:
        p = p * np.cos(np.radians(polarizer_angle - stream.angle)) ** 2
    rng = np.random.default_rng(seed)
    kept = stream.energy[rng.random(len(stream)) < p]
    levels = np.unique(stream.energy)
    if grid is None:
        grid = energy_grid(levels, resolution)
    if sampling == "jitter":
        e = kept + rng.normal(0.0, resolution * FWHM_TO_SIGMA, len(kept))
        mid = 0.5 * (grid[1:] + grid[:-1])
        edges = np.concatenate([[grid[0] - (mid[0] - grid[0])], mid, [grid[-1] + (grid[-1] - mid[-1])]])
        return grid, np.histogram(e, edges)[0] / np.diff(edges)
    if sampling != "convolve":
        raise ValueError(f"unknown sampling {sampling!r}")
    counts = np.bincount(np.searchsorted(levels, kept), minlength=len(levels)).astype(float)
    return grid, broaden(levels, counts, grid, resolution)


def stream_diagram(
    stream: PhotonStream,
    collection: Optional[CollectionModel] = None,
    angles: Sequence[float] = DEFAULT_ANGLES,
    axis: Sequence[int] = (1, 1, 1),
) -> PolarizationDiagram:
    """Polarization diagram built from the empirical site occupation."""
    return diagram_from_sites(dipoles_for_axis(axis), range(N_SITES), stream.occupation(), collection, angles)


def occupation_chi_square(
    stream: PhotonStream, hop_distribution: Sequence[float] = UNIFORM
) -> tuple[float, float]:
    """Chi-square statistic and p-value of the site counts against ``hop_distribution``."""
    p = np.asarray(hop_distribution, dtype=float)
    counts = np.bincount(stream.site, minlength=N_SITES)
    sel = p > 0
    if np.any(counts[~sel]):
        return float("inf"), 0.0
    res = stats.chisquare(counts[sel], p[sel] / p[sel].sum() * counts.sum())
    return float(res.statistic), float(res.pvalue)


# --- thermal regime --------------------------------------------------------------


class Regime(enum.Enum):
    FROZEN = "THERMALLY_FROZEN"
    ACTIVATED = "THERMALLY_ACTIVATED"


@dataclass(frozen=True)
class RegimeCheck:
    regime: Regime
    kT: float
    threshold: float


def hopping_regime_check(temperature: float, barrier_gs: float, barrier_es: float, factor: float = 0.1) -> RegimeCheck:
    """Frozen when k_B T is below ``factor`` times the smaller barrier."""
    kT = thermal_energy(temperature)
    thr = factor * min(barrier_gs, barrier_es)
    return RegimeCheck(Regime.FROZEN if kT < thr else Regime.ACTIVATED, kT, thr)
