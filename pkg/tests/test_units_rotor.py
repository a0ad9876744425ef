import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import circulant

from gcenter.errors import IncompatibleBasisError, InvalidModelError, OutOfRangeError
from gcenter.rotor import (
    Level,
    RotorModel,
    bloch_states,
    eigen_energies,
    overlap_matrix,
    quartet_spectrum,
    transition_overlap,
)
from gcenter.units import GHz_to_meV, meV_to_GHz, thermal_energy, ueV_to_meV, wavelength_energy


# --- units -----------------------------------------------------------------


def test_wavelength_definition():
    assert wavelength_energy(1239.841984, "nm_to_meV") == pytest.approx(1000.0, rel=1e-15)


def test_bulk_zpl_energy():
    # 1239841.984 / 1278.6, evaluated by hand to 8 digits
    assert wavelength_energy(1278.6, "nm_to_meV") == pytest.approx(969.6871, abs=1e-4)


@given(st.floats(min_value=100.0, max_value=5000.0))
def test_wavelength_round_trip(nm):
    back = wavelength_energy(wavelength_energy(nm, "nm_to_meV"), "meV_to_nm")
    assert back == pytest.approx(nm, rel=1e-10)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_wavelength_rejects_nonpositive(bad):
    with pytest.raises(OutOfRangeError):
        wavelength_energy(bad)


def test_ghz_and_thermal():
    assert meV_to_GHz(ueV_to_meV(2.5)) == pytest.approx(0.6045, abs=1e-4)
    assert GHz_to_meV(241.799) == pytest.approx(1.0)
    assert thermal_energy(30.0) == pytest.approx(2.585, abs=1e-3)


# --- Bloch states ------------------------------------------------------------


def test_bloch_m0_and_m3():
    states = bloch_states(RotorModel())
    assert np.allclose(states[0].amplitudes, 1 / np.sqrt(6))
    assert states[0].wavevector == 0.0
    assert np.allclose(states[3].amplitudes, np.array([1, -1, 1, -1, 1, -1]) / np.sqrt(6))
    assert states[3].wavevector == pytest.approx(np.pi)


@given(st.floats(min_value=0.1, max_value=10.0))
def test_bloch_equal_weight_and_orthonormal(period):
    states = bloch_states(RotorModel(period=period))
    amps = np.array([s.amplitudes for s in states])
    assert np.allclose(np.abs(amps), 1 / np.sqrt(6), atol=1e-15)
    # brute-force 6-term sums
    gram = np.array([[sum(np.conj(a[n]) * b[n] for n in range(6)) for b in amps] for a in amps])
    assert np.allclose(gram, np.eye(6), atol=1e-12)
    for s in states:
        assert s.wavevector == pytest.approx(s.m * np.pi / (3 * period))


def test_bloch_states_are_hamiltonian_eigenvectors():
    model = RotorModel(e0=0.3, delta0=0.7)
    h = model.hamiltonian()
    for s, e in zip(bloch_states(model), 0.3 + 2 * 0.7 * np.cos(np.arange(6) * np.pi / 3)):
        assert np.allclose(h @ s.amplitudes, e * s.amplitudes, atol=1e-12)


@pytest.mark.parametrize("period", [0.0, -1.0])
def test_invalid_period(period):
    with pytest.raises(InvalidModelError):
        RotorModel(period=period)


# --- energies ----------------------------------------------------------------


def test_eigen_energies_unit_coupling():
    q = eigen_energies(RotorModel(0.0, 1.0))
    assert q.energies == (2.0, 1.0, -1.0, -2.0)
    assert q.degeneracies == (1, 2, 2, 1)


def test_eigen_energies_uncoupled():
    q = eigen_energies(RotorModel(0.0, 0.0))
    assert q.distinct() == [(0.0, 6)]


def test_eigen_energies_small_coupling_against_circulant():
    q = eigen_energies(RotorModel(5.0, 0.00125))
    assert np.allclose(q.splittings(), [0.00125, 0.0025, 0.00125], rtol=1e-9)
    brute = np.sort(np.linalg.eigvalsh(circulant([5.0, 0.00125, 0, 0, 0, 0.00125])))
    assert np.allclose(np.sort(q.all_levels()), brute, rtol=1e-12)


@settings(max_examples=100)
@given(st.floats(-1e3, 1e3), st.floats(-10.0, 10.0))
def test_eigen_energies_match_circulant(e0, d0):
    brute = np.sort(np.linalg.eigvalsh(circulant([e0, d0, 0, 0, 0, d0])))
    ours = np.sort(eigen_energies(RotorModel(e0, d0)).all_levels())
    scale = max(abs(e0), abs(d0), 1.0)
    assert np.allclose(ours, brute, rtol=0, atol=1e-10 * scale)


# --- selection rules -----------------------------------------------------------


def test_transition_overlap_selection_rule():
    g = bloch_states(RotorModel(level=Level.GROUND))
    e = bloch_states(RotorModel(delta0=1.0, level=Level.EXCITED))
    assert transition_overlap(g[2], e[2]) == pytest.approx(1.0)
    assert abs(transition_overlap(g[1], e[4])) < 1e-12
    assert np.allclose(overlap_matrix(RotorModel(), RotorModel(delta0=1.0)), np.eye(6), atol=1e-12)


def test_transition_overlap_period_mismatch():
    g = bloch_states(RotorModel(period=1.0))
    e = bloch_states(RotorModel(period=2.0))
    with pytest.raises(IncompatibleBasisError):
        transition_overlap(g[0], e[0])


# --- quartet ---------------------------------------------------------------------


def _quartet(gs, es, center=0.0):
    return quartet_spectrum(RotorModel(0.0, gs, level=Level.GROUND), RotorModel(0.0, es, level=Level.EXCITED), center)


def test_quartet_measured_splitting():
    spec = _quartet(0.0, ueV_to_meV(2.5), center=969.69)
    assert len(spec.lines) == 4
    assert np.allclose(spec.splittings(), ueV_to_meV(np.array([2.5, 5.0, 2.5])), rtol=1e-12)
    assert spec.offsets.max() - spec.offsets.min() == pytest.approx(0.010, rel=1e-12)
    assert np.allclose(spec.weights * 6, [1, 2, 2, 1])


def test_quartet_equal_couplings_single_line():
    spec = _quartet(0.3, 0.3, center=1.0)
    assert len(spec.lines) == 1
    assert spec.energies[0] == 1.0
    assert spec.weights[0] == 1.0


def test_quartet_both_couplings():
    # line-by-line difference of eigen_energies at fixed m: 2*(0.6-0.1)*cos(m pi/3)
    spec = _quartet(0.1, 0.6)
    assert np.allclose(spec.splittings(), [0.5, 1.0, 0.5], rtol=1e-12)


def test_quartet_wrong_levels():
    with pytest.raises(InvalidModelError):
        quartet_spectrum(RotorModel(level=Level.EXCITED), RotorModel(level=Level.GROUND), 0.0)


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_quartet_normalized_and_symmetric(gs, es):
    spec = _quartet(gs, es)
    assert spec.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.dot(spec.weights, spec.offsets) == pytest.approx(0.0, abs=1e-12)
