import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcenter.dipoles import AXES_111
from gcenter.errors import NonlinearRegimeError
from gcenter.strain import (
    DIRECTION_CLASSES,
    StrainSpec,
    default_calibration,
    ensemble_lines,
    frame_transform,
    load_calibration,
    miller,
    site_offsets_for_strain,
    site_relabel_invariant,
    strain_response,
)

directions = st.lists(st.integers(-3, 3), min_size=3, max_size=3).filter(any)


def test_miller_parsing():
    assert np.allclose(miller("1-10"), np.array([1, -1, 0]) / np.sqrt(2))
    assert np.allclose(miller("[-1-11]"), np.array([-1, -1, 1]) / np.sqrt(3))
    assert np.allclose(miller((0, 0, 2)), [0, 0, 1])
    with pytest.raises(ValueError):
        miller((0, 0, 0))


def test_anchor_calibration_by_hand():
    # [-110] strain on a [111] defect: u.eps.u = m for the in-plane pair and m/4
    # for the inclined pairs, the cross term vanishes, so 0.75 k_u m = 1.9 meV.
    cal = default_calibration()
    assert cal.axial == pytest.approx(1.9 / (0.75 * 1e-3), rel=1e-12)
    assert cal.cross == pytest.approx(-0.5 * cal.axial)


def test_anchor_gap():
    off = site_offsets_for_strain(StrainSpec("-110", 1e-3), (1, 1, 1))
    assert off[0] == pytest.approx(off[3])
    assert np.allclose(off[[1, 2, 4, 5]], off[1])
    assert off[0] - off[1] == pytest.approx(1.9, rel=1e-12)


def test_111_strain_no_split():
    for m in (1e-4, 1e-3, -3e-3):
        off = site_offsets_for_strain(StrainSpec("111", m), (1, 1, 1))
        assert np.ptp(off) < 1e-12


def test_zero_strain():
    for d in DIRECTION_CLASSES.values():
        assert np.all(site_offsets_for_strain(StrainSpec(d, 0.0)) == 0.0)
    rep = ensemble_lines(StrainSpec("110", 0.0))
    assert len(rep.distinct_lines) == 1
    assert len(rep.families) == 1


@pytest.mark.parametrize("direction,count", [("001", 2), ("111", 3), ("110", 4)])
def test_ensemble_line_counts(direction, count):
    rep = ensemble_lines(StrainSpec(direction, 1e-3))
    assert len(rep.distinct_lines) == count


def test_001_all_orientations_equivalent():
    rep = ensemble_lines(StrainSpec("001", 1e-3))
    assert len(rep.families) == 1
    assert len(rep.families[0].orientations) == 4


def test_guard():
    with pytest.raises(NonlinearRegimeError):
        site_offsets_for_strain(StrainSpec("110", 0.01))
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        site_offsets_for_strain(StrainSpec("110", 0.01), strict=False)
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)


def test_response_coefficients():
    resp = strain_response()
    assert abs(resp.split_coefficient["[111]"]) < 1e-9
    assert resp.split_coefficient["[-110]"] == pytest.approx(1900.0, rel=1e-12)
    # [110] is the largest response of the three measured classes
    big = abs(resp.split_coefficient["[110]"])
    assert big > abs(resp.split_coefficient["[-110]"]) > abs(resp.split_coefficient["[001]"])
    assert all(np.isfinite(v) for v in resp.shift_coefficient.values())


def test_frame_transform_examples():
    ft = frame_transform(StrainSpec("110", 1e-3), (-1, 1, 1))
    assert ft.direction_class == "[-110]"
    assert ft.overlap == pytest.approx(1.0)
    same = frame_transform(StrainSpec("1-10", 1e-3), (1, 1, 1))
    assert np.allclose(same.tensor, StrainSpec("1-10", 1e-3).tensor)
    assert same.direction_class == "[-110]"


def test_frame_reciprocity():
    a = frame_transform(StrainSpec("-1-11", 1e-3), (1, 1, 1))
    b = frame_transform(StrainSpec("111", 1e-3), (-1, -1, 1))
    assert a.direction_class == b.direction_class
    assert np.allclose(a.tensor, b.tensor)


def test_frame_transform_matches_offsets():
    # offsets of the [-111] defect under [110] strain equal those of [111] under [-110]
    a = site_offsets_for_strain(StrainSpec("110", 1e-3), (-1, 1, 1))
    b = site_offsets_for_strain(StrainSpec("-110", 1e-3), (1, 1, 1))
    assert np.allclose(np.sort(a), np.sort(b), atol=1e-12)


@settings(max_examples=80)
@given(directions, st.floats(-0.0025, 0.0025), st.sampled_from(list(AXES_111.values())))
def test_linearity_and_inversion(d, m, axis):
    s = StrainSpec(d, m)
    one = site_offsets_for_strain(s, axis)
    two = site_offsets_for_strain(s.scaled(2.0), axis)
    assert np.allclose(two, 2 * one, rtol=0, atol=1e-12 * max(1.0, np.abs(two).max()))
    assert site_relabel_invariant(one)


@settings(max_examples=40)
@given(directions)
def test_sign_of_direction_irrelevant(d):
    a = site_offsets_for_strain(StrainSpec(d, 1e-3))
    b = site_offsets_for_strain(StrainSpec([-x for x in d], 1e-3))
    assert np.allclose(a, b, atol=1e-12)


def test_calibration_round_trip(tmp_path):
    cal = default_calibration()
    path = tmp_path / "cal.json"
    path.write_text(json.dumps(cal.to_dict()))
    again = load_calibration(path)
    assert again == cal


def test_custom_anchor_scales(tmp_path):
    cfg = default_calibration().to_dict()
    cfg["anchor"] = dict(cfg["anchor"], split_meV=3.8)
    path = tmp_path / "cal.json"
    path.write_text(json.dumps(cfg))
    off = site_offsets_for_strain(StrainSpec("-110", 1e-3), calibration=load_calibration(path))
    assert off[0] - off[1] == pytest.approx(3.8)


def test_rows_cover_all_orientations():
    rep = ensemble_lines(StrainSpec("110", 1e-3))
    names = {name for name, _ in rep.rows()}
    assert names == set(AXES_111)
