"""Unit conversions. Energies are carried in meV throughout the package."""

from __future__ import annotations

import numpy as np

from .errors import OutOfRangeError

# hc in eV*nm
HC_EV_NM = 1239.841984
HC_MEV_NM = HC_EV_NM * 1e3
GHZ_PER_MEV = 241.799
BOLTZMANN_MEV_PER_K = 8.617333262e-2


def ueV_to_meV(x):
    return np.asarray(x, dtype=float) * 1e-3 if np.ndim(x) else float(x) * 1e-3


def meV_to_ueV(x):
    return np.asarray(x, dtype=float) * 1e3 if np.ndim(x) else float(x) * 1e3


def meV_to_GHz(x):
    return np.asarray(x, dtype=float) * GHZ_PER_MEV if np.ndim(x) else float(x) * GHZ_PER_MEV


def GHz_to_meV(x):
    return np.asarray(x, dtype=float) / GHZ_PER_MEV if np.ndim(x) else float(x) / GHZ_PER_MEV


def wavelength_energy(x, direction: str = "nm_to_meV"):
    """Convert between vacuum wavelength (nm) and photon energy (meV).

    ``direction`` is ``"nm_to_meV"`` or ``"meV_to_nm"``; the map is its own
    inverse, ``E = hc / lambda``.
    """
    if direction not in ("nm_to_meV", "meV_to_nm"):
        raise ValueError(f"unknown direction {direction!r}")
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise OutOfRangeError("wavelength/energy must be positive and finite")
    out = HC_MEV_NM / arr
    return out if arr.ndim else float(out)


def thermal_energy(temperature_k: float) -> float:
    """k_B T in meV."""
    return BOLTZMANN_MEV_PER_K * temperature_k
