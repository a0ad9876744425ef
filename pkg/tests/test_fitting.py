import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcenter.dipoles import CollectionModel, diagram_from_sites, dipoles_for_axis
from gcenter.errors import InsufficientSamplesError
from gcenter.fitting import (
    _set_partitions,
    classify_defect,
    enumerate_assignments,
    fit_peaks,
    inversion_invariant,
    line_areas,
)
from gcenter.lines import broaden
from gcenter.roulette import EmitterConfig, accumulate_spectrum, simulate_stream
from gcenter.spectra import SiteEnergies, g0_site_energies, g1_site_energies

X = np.linspace(-1.5, 1.0, 400)
G1_LABELS = {"{0,3} | {1,2} | {4,5}", "{0,3} | {1,5} | {2,4}"}


def _curve(centers, areas, x=X, fwhm=0.15):
    return broaden(centers, areas, x, fwhm)


# --- peak fitting -------------------------------------------------------------------


@pytest.mark.parametrize(
    "centers,areas",
    [([0.0], [1.0]), ([0.35, -0.35], [2.0, 4.0]), ([0.93, -0.07, -0.93], [4.2, 1.0, 1.0]), ([0.6, 0.2, -0.2, -0.6], [1, 2, 2, 1])],
)
def test_noiseless_recovery(centers, areas):
    fit = fit_peaks(X, _curve(centers, areas))
    assert len(fit.peaks) == len(centers)
    assert np.allclose(fit.centers, sorted(centers, reverse=True), atol=1e-6)
    assert np.allclose(fit.areas, [a for _, a in sorted(zip(centers, areas), reverse=True)], rtol=1e-5)
    assert all(p.fwhm == pytest.approx(0.15, rel=1e-5) for p in fit.peaks)


def _noisy_rate(centers, areas, n=100, seed=0):
    rng = np.random.default_rng(seed)
    clean = _curve(centers, areas)
    hits = 0
    split_ok = 0
    for _ in range(n):
        y = clean + rng.normal(0, clean.max() / 20, X.size)
        fit = fit_peaks(X, y)
        if len(fit.peaks) == len(centers):
            hits += 1
            split_ok += np.all(np.abs(fit.splittings() - -np.diff(sorted(centers, reverse=True))) <= 0.02)
    return hits, split_ok


def test_noisy_doublet():
    hits, ok = _noisy_rate([0.35, -0.35], [2.0, 4.0])
    assert hits >= 97 and ok >= 97


def test_noisy_triplet():
    hits, ok = _noisy_rate([0.93, -0.07, -0.93], [4.2, 1.0, 1.0])
    assert hits >= 97 and ok >= 95


def test_singlet_selected():
    rng = np.random.default_rng(2)
    clean = _curve([0.0], [1.0])
    picks = [len(fit_peaks(X, clean + rng.normal(0, clean.max() / 20, X.size)).peaks) for _ in range(50)]
    assert picks.count(1) >= 48


def test_fit_preconditions():
    with pytest.raises(InsufficientSamplesError):
        fit_peaks(np.arange(10.0), np.ones(10))
    with pytest.raises(ValueError):
        fit_peaks(X, _curve([0.0], [1.0]), max_peaks=5)


def test_line_areas_linear():
    fit = fit_peaks(X, _curve([0.35, -0.35], [2.0, 4.0]))
    y = _curve([0.35, -0.35], [5.0, 0.5])
    assert np.allclose(line_areas(X, y, fit.peaks), [5.0, 0.5], rtol=1e-5)


# --- partitions ------------------------------------------------------------------------


@pytest.mark.parametrize("k,stirling", [(1, 1), (2, 31), (3, 90), (4, 65)])
def test_set_partition_counts(k, stirling):
    parts = list(_set_partitions(list(range(6)), k))
    assert len(parts) == stirling
    assert len({frozenset(frozenset(b) for b in p) for p in parts}) == stirling


def _brute_invariant(k):
    # label vectors with k distinct labels whose induced partition maps to itself under n -> n+3
    out = set()
    for labels in itertools.product(range(k), repeat=6):
        if len(set(labels)) != k:
            continue
        blocks = frozenset(frozenset(i for i in range(6) if labels[i] == c) for c in range(k))
        shifted = frozenset(frozenset((i + 3) % 6 for i in b) for b in blocks)
        if blocks == shifted:
            out.add(blocks)
    return out


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_inversion_filter_against_brute_force(k):
    ours = {frozenset(frozenset(b) for b in p) for p in _set_partitions(list(range(6)), k) if inversion_invariant([frozenset(b) for b in p])}
    assert ours == _brute_invariant(k)


# --- assignments ---------------------------------------------------------------------


def test_doublet_unique():
    res = enumerate_assignments(2, [True, False], [2.1, 1.0])
    assert res.labels() == ["{0,3} | {1,2,4,5}"]
    assert res[0].predictions[0].polarized and res[0].predictions[0].angle == pytest.approx(90.0)
    assert not res[0].predictions[1].polarized


def test_doublet_ratio_two():
    assert enumerate_assignments(2, [True, False], [2.0, 1.0]).labels() == ["{0,3} | {1,2,4,5}"]


@pytest.mark.parametrize("ratios", [[4.2, 1.0, 1.0], [4.0, 1.0, 1.0]])
def test_triplet_two_tied(ratios):
    res = enumerate_assignments(3, [True, False, False], ratios)
    assert set(res.labels()) == G1_LABELS
    assert len(res) == 2
    assert res[0].score == pytest.approx(res[1].score, abs=1e-12)


def test_singlet_all_sites():
    res = enumerate_assignments(1, [False], [1.0])
    assert res.labels() == ["{0,1,2,3,4,5}"]
    assert res[0].predictions[0].visibility == pytest.approx(2.1 / 3.1)


def test_inconsistent_flags_explained():
    res = enumerate_assignments(2, [True, True], [1.0, 1.0])
    assert len(res) == 0
    assert res.explanation


def test_pair_splitting_option_widens():
    strict = enumerate_assignments(3, [True, False, False], [4.2, 1.0, 1.0])
    loose = enumerate_assignments(3, [True, False, False], [4.2, 1.0, 1.0], allow_pair_splitting=True)
    assert set(strict.labels()) <= set(loose.labels())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.data())
def test_hypotheses_are_partitions(k, data):
    flags = data.draw(st.lists(st.booleans(), min_size=k, max_size=k))
    ratios = data.draw(st.lists(st.floats(0.1, 5.0), min_size=k, max_size=k))
    res = enumerate_assignments(k, flags, ratios)
    for h in res:
        sites = sorted(s for c in h.partition for s in c)
        assert sites == list(range(6))
        assert inversion_invariant(h.partition)
        assert [p.polarized for p in h.predictions] == flags
    if len(res):
        best = min(h.score for h in res)
        assert all(h.score <= best + 0.05 + 1e-12 for h in res)


# --- end to end ------------------------------------------------------------------------


def _simulated(se: SiteEnergies, seed=0, angles=(0.0, 45.0, 90.0, 135.0)):
    s = simulate_stream(EmitterConfig(site_energies=se, seed=seed), n_photons=1_000_000)
    cm = CollectionModel.with_ratio(2.1)
    return {a: accumulate_spectrum(s, a, cm, seed=i + 1, sampling="jitter") for i, a in enumerate(angles)}


def test_classify_g0():
    rep = classify_defect(_simulated(g0_site_energies()))
    assert rep.pattern == "doublet"
    assert rep.splittings == pytest.approx([0.70], abs=0.02)
    assert rep.assignments.labels() == ["{0,3} | {1,2,4,5}"]


def test_classify_g1():
    rep = classify_defect(_simulated(g1_site_energies()))
    assert rep.pattern == "triplet"
    assert rep.splittings == pytest.approx([1.00, 0.86], abs=0.02)
    assert set(rep.assignments.labels()) == G1_LABELS


def test_classify_unperturbed():
    d = diagram_from_sites(dipoles_for_axis(), range(6))
    rep = classify_defect(_simulated(SiteEnergies.from_offsets([0.0] * 6)), diagram=d)
    assert rep.pattern == "singlet"
    assert rep.diagram_fit.visibility == pytest.approx(0.68, abs=0.01)
    assert min(abs(rep.diagram_fit.phi - 90.0), rep.diagram_fit.phi % 180) < 1e-6
    assert rep.assignments.labels() == ["{0,1,2,3,4,5}"]
    assert rep.to_dict()["pattern"] == "singlet"


def test_classify_needs_two_angles():
    with pytest.raises(InsufficientSamplesError):
        classify_defect({0.0: (X, _curve([0.0], [1.0]))})


def test_assignments_invariant_under_inversion_relabel():
    from gcenter.fitting import _canonical, _shift3

    res = enumerate_assignments(3, [True, False, False], [4.2, 1.0, 1.0], allow_pair_splitting=True)
    canon = {h.partition for h in res}
    assert {_canonical(_shift3(p)) for p in canon} == canon


def test_bic_order_monotone_in_true_count():
    truth = [[0.0], [0.35, -0.35], [0.93, -0.07, -0.93], [0.6, 0.2, -0.2, -0.6]]
    picked = [len(fit_peaks(X, _curve(c, [1.0] * len(c))).peaks) for c in truth]
    assert picked == sorted(picked) == [1, 2, 3, 4]
