import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcenter.dipoles import (
    DEFAULT_ANGLES,
    CollectionModel,
    PolarizationDiagram,
    analytic_visibility,
    angle_difference,
    collection_ratio,
    collection_table,
    diagram_from_sites,
    dipoles_for_axis,
    fit_diagram,
)
from gcenter.errors import (
    EmptyDiagramError,
    InsufficientSamplesError,
    InvalidOrientationError,
    OutOfRangeError,
)

AXES = [(1, 1, 1), (-1, -1, 1), (-1, 1, 1), (1, -1, 1)]


@pytest.mark.parametrize("axis", AXES + [(-1, -1, -1), (1, 1, -1)])
def test_dipoles_perpendicular_and_at_60(axis):
    geom = dipoles_for_axis(axis)
    a = np.asarray(axis, float) / np.sqrt(3)
    assert np.all(np.abs(geom.dipoles @ a) < 1e-12)
    assert np.allclose(np.linalg.norm(geom.dipoles, axis=1), 1.0)
    for i, j in itertools.combinations(range(3), 2):
        ang = np.degrees(np.arccos(np.clip(geom.dipoles[i] @ geom.dipoles[j], -1, 1)))
        assert min(abs(ang - 60), abs(ang - 120)) < 1e-9


def test_reference_dipoles_111():
    geom = dipoles_for_axis((1, 1, 1))
    expected = np.array([[-1, 1, 0], [0, -1, 1], [-1, 0, 1]]) / np.sqrt(2)
    for d, e in zip(geom.dipoles, expected):
        assert abs(abs(d @ e) - 1.0) < 1e-12
    assert np.allclose(geom.pair_angles, [90.0, 45.0, 135.0])
    assert list(geom.pair_in_plane) == [True, False, False]
    assert geom.main_angle == 90.0


def test_axis_families():
    assert np.allclose(dipoles_for_axis((-1, -1, 1)).pair_angles % 180, [90, 45, 135])
    rotated = dipoles_for_axis((-1, 1, 1))
    assert abs(angle_difference(rotated.main_angle, 90.0 + 90.0)) < 1e-9


@pytest.mark.parametrize("axis", [(1, 0, 0), (1, 1, 0), (2, 2, 2.1), (0, 0, 0)])
def test_bad_axis(axis):
    with pytest.raises(InvalidOrientationError):
        dipoles_for_axis(axis)


# --- collection -------------------------------------------------------------------


def test_collection_table_ranges():
    tab = collection_table()
    depth = tab["depth_nm"]
    assert depth[0] == 0.0 and depth[-1] == 58.0
    for d in np.linspace(0, 58, 117):
        cm = collection_ratio(d)
        assert 2.0 <= cm.r <= 2.2
        assert cm.purcell_out_of_plane == pytest.approx(cm.purcell_in_plane / 2, rel=0.15)
    rs = [collection_ratio(d).r for d in depth]
    assert min(rs) == pytest.approx(2.03, abs=1e-5)
    assert max(rs) == pytest.approx(2.17, abs=1e-5)
    assert collection_ratio(0.0).ceff_in_plane == pytest.approx(0.025, abs=0.003)
    assert collection_ratio(58.0).ceff_in_plane == pytest.approx(0.045, abs=0.003)


@pytest.mark.parametrize("depth", [-0.1, 58.5])
def test_collection_out_of_layer(depth):
    with pytest.raises(OutOfRangeError):
        collection_ratio(depth)


def test_with_ratio():
    assert CollectionModel.with_ratio(2.1).r == 2.1
    with pytest.raises(OutOfRangeError):
        CollectionModel.with_ratio(0.0)


# --- diagrams ---------------------------------------------------------------------


def _oracle(r, angles, pairs=(0, 1, 2)):
    # I = sum over pairs of g cos^2(theta - theta_pair) with [111] pair angles
    th = np.radians(angles)
    ang = {0: 90.0, 1: 45.0, 2: 135.0}
    g = {0: r, 1: 1.0, 2: 1.0}
    out = sum(g[p] * np.cos(th - np.radians(ang[p])) ** 2 for p in pairs)
    return out / out.max()


def test_sum_rule():
    th = np.radians(np.linspace(0, 360, 1001))
    assert np.allclose(np.cos(th - np.pi / 4) ** 2 + np.cos(th - 3 * np.pi / 4) ** 2, 1.0, atol=1e-12)


@pytest.mark.parametrize("r", [2.03, 2.1, 2.17])
def test_full_diagram(r):
    geom = dipoles_for_axis()
    d = diagram_from_sites(geom, range(6), collection=CollectionModel.with_ratio(r))
    assert np.allclose(d.intensities, _oracle(r, DEFAULT_ANGLES), atol=1e-12)
    assert d.visibility == pytest.approx(r / (r + 1), abs=1e-10)
    fit = fit_diagram(d)
    assert fit.visibility == pytest.approx(analytic_visibility(r), abs=1e-10)
    assert fit.phi == pytest.approx(90.0, abs=1e-8)


def test_reported_visibility_range():
    assert analytic_visibility(2.03) == pytest.approx(0.670, abs=5e-4)
    assert analytic_visibility(2.17) == pytest.approx(0.685, abs=5e-4)


@pytest.mark.parametrize("sites,phi", [((0, 3), 90.0), ((1, 4), 45.0), ((2, 5), 135.0)])
def test_single_dipole(sites, phi):
    d = diagram_from_sites(dipoles_for_axis(), sites)
    fit = fit_diagram(d)
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)
    assert abs(angle_difference(fit.phi, phi)) < 1e-6


def test_single_dipole_at_zero():
    th = np.arange(0, 360, 10.0)
    fit = fit_diagram(PolarizationDiagram(th, np.cos(np.radians(th)) ** 2))
    assert fit.visibility == pytest.approx(1.0, abs=1e-12)
    assert abs(angle_difference(fit.phi, 0.0)) < 1e-9


def test_empty_and_bad_occupation():
    geom = dipoles_for_axis()
    with pytest.raises(EmptyDiagramError):
        diagram_from_sites(geom, [])
    with pytest.raises(ValueError):
        diagram_from_sites(geom, [0], occupation=[1, 1, 0, 0, 0, 0])
    with pytest.raises(EmptyDiagramError):
        diagram_from_sites(geom, [0], occupation=[0, 0, 0, 0, 0, 0])


def test_fit_constant_flags_phi():
    fit = fit_diagram(PolarizationDiagram(np.arange(0, 360, 20.0), np.ones(18)))
    assert fit.visibility == 0.0
    assert not fit.phi_defined


def test_fit_preconditions():
    with pytest.raises(InsufficientSamplesError):
        fit_diagram(PolarizationDiagram(np.arange(7.0) * 30, np.ones(7)))
    with pytest.raises(InsufficientSamplesError):
        fit_diagram(PolarizationDiagram(np.arange(10.0) * 10, np.ones(10)))


def test_fit_with_background():
    th = np.arange(0, 360, 15.0)
    y = 0.58 * np.cos(np.radians(th - 30)) ** 2 + 0.42 + 0.3
    fit = fit_diagram(PolarizationDiagram(th, y), background=0.3)
    assert fit.visibility == pytest.approx(0.58, abs=1e-9)
    assert fit.phi == pytest.approx(30.0, abs=1e-8)


@pytest.mark.parametrize("stop", [340.0, 360.0])
def test_fit_noisy_recovery(stop):
    # 5% multiplicative noise, 200 independent realizations
    th = np.arange(0.0, stop + 1e-9, 20.0)
    rng = np.random.default_rng(12345)
    clean = 0.58 * np.cos(np.radians(th - 90.0)) ** 2 + 0.42
    misses = 0
    for _ in range(200):
        y = clean * (1 + 0.05 * rng.standard_normal(th.size))
        fit = fit_diagram(PolarizationDiagram(th, np.clip(y, 0, None)))
        if abs(fit.visibility - 0.58) > 0.05 or abs(angle_difference(fit.phi, 90.0)) > 5.0:
            misses += 1
    assert misses <= 2


@settings(max_examples=60)
@given(st.floats(0.02, 1.0), st.floats(0.0, 179.9), st.floats(0.1, 10.0))
def test_fit_noiseless_property(vis, phi, amp):
    th = np.arange(0, 360, 20.0)
    y = amp * (vis * np.cos(np.radians(th - phi)) ** 2 + 1 - vis)
    fit = fit_diagram(PolarizationDiagram(th, y))
    assert fit.visibility == pytest.approx(vis, abs=1e-8)
    assert abs(angle_difference(fit.phi, phi)) < 1e-5
    assert fit.amplitude == pytest.approx(amp, rel=1e-8)


@settings(max_examples=40)
@given(st.lists(st.floats(0.0, 5.0), min_size=6, max_size=6).filter(lambda o: sum(o) > 0.1))
def test_diagram_period_180(occ):
    geom = dipoles_for_axis()
    active = [i for i in range(6) if occ[i] > 0]
    d = diagram_from_sites(geom, active, occupation=occ, angles=np.arange(0, 360, 5.0))
    assert np.allclose(d.intensities[:36], d.intensities[36:], atol=1e-12)
    assert d.intensities.max() == pytest.approx(1.0)
    assert np.all(d.intensities >= -1e-15)


@pytest.mark.parametrize("axis", AXES)
def test_uniform_phi_bimodal(axis):
    fit = fit_diagram(diagram_from_sites(dipoles_for_axis(axis), range(6)))
    assert min(abs(angle_difference(fit.phi, 0.0)), abs(angle_difference(fit.phi, 90.0))) < 1e-8
