"""Center-of-mass rotation of the interstitial silicon in the G center.

Tight-binding and ring-potential rotor models, three-dipole polarization
optics, localized fine-structure spectra, a strain response model, a
roulette-wheel photon Monte Carlo and the inverse fitting that ties them
back to measured spectra.
"""

__version__ = "0.1.0"

from .dipoles import CollectionModel, diagram_from_sites, dipoles_for_axis, fit_diagram
from .fitting import classify_defect, enumerate_assignments, fit_peaks
from .pes import build_potential, calibrate_kinetic_scale, localization_report, solve_ring
from .rotor import Level, RotorModel, eigen_energies, quartet_spectrum, transition_overlap
from .roulette import EmitterConfig, accumulate_spectrum, g2_histogram, hopping_regime_check, simulate_stream
from .spectra import SiteEnergies, polarized_spectrum, zpl_lines
from .strain import StrainSpec, ensemble_lines, frame_transform, site_offsets_for_strain
from .units import wavelength_energy

__all__ = [
    "CollectionModel",
    "EmitterConfig",
    "Level",
    "RotorModel",
    "SiteEnergies",
    "StrainSpec",
    "accumulate_spectrum",
    "build_potential",
    "calibrate_kinetic_scale",
    "classify_defect",
    "diagram_from_sites",
    "dipoles_for_axis",
    "eigen_energies",
    "ensemble_lines",
    "enumerate_assignments",
    "fit_diagram",
    "fit_peaks",
    "frame_transform",
    "g2_histogram",
    "hopping_regime_check",
    "localization_report",
    "polarized_spectrum",
    "quartet_spectrum",
    "simulate_stream",
    "site_offsets_for_strain",
    "solve_ring",
    "transition_overlap",
    "wavelength_energy",
    "zpl_lines",
]
