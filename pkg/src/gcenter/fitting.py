"""Inverse analysis: peak fitting and site-assignment inference.

``fit_peaks`` picks the number of Gaussian lines by BIC.  ``enumerate_assignments``
searches partitions of the six sites into line classes, predicts each
class's polarization and relative intensity behind a polarizer, and keeps
the hypotheses that match the observed flags and ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .dipoles import (
    CollectionModel,
    DiagramFit,
    DipoleGeometry,
    PolarizationDiagram,
    angle_difference,
    dipoles_for_axis,
    fit_diagram,
)
from .errors import FitFailureError, InsufficientSamplesError
from .lines import FWHM_TO_SIGMA
from .rotor import N_SITES

MIN_SAMPLES = 20
POLARIZED_THRESHOLD = 0.9
TIE_WINDOW = 0.05
MAX_SCORE = 0.3
PATTERNS = {1: "singlet", 2: "doublet", 3: "triplet", 4: "quartet"}


# --- peak fitting -----------------------------------------------------------------


@dataclass(frozen=True)
class Peak:
    center: float
    fwhm: float
    area: float


@dataclass(frozen=True)
class PeakFit:
    peaks: list[Peak]  # sorted by decreasing energy
    residual_rms: float  # relative to the curve maximum
    baseline: float = 0.0
    bic: dict[int, float] = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return np.array([p.center for p in self.peaks])

    @property
    def areas(self) -> np.ndarray:
        return np.array([p.area for p in self.peaks])

    def splittings(self) -> np.ndarray:
        return -np.diff(self.centers)

    def to_dict(self) -> dict:
        return {
            "peaks": [{"center_meV": p.center, "fwhm_meV": p.fwhm, "area": p.area} for p in self.peaks],
            "residual_rms": self.residual_rms,
            "baseline": self.baseline,
            "bic": {str(k): v for k, v in self.bic.items()},
        }


def _gauss_sum(x, baseline, *params):
    y = np.full_like(x, baseline, dtype=float)
    for c, w, a in zip(params[0::3], params[1::3], params[2::3]):
        s = w * FWHM_TO_SIGMA
        y = y + a / (s * np.sqrt(2 * np.pi)) * np.exp(-0.5 * ((x - c) / s) ** 2)
    return y


def _shared_sum(x, baseline, width, *params):
    full = [v for c, a in zip(params[0::2], params[1::2]) for v in (c, width, a)]
    return _gauss_sum(x, baseline, *full)


def _fit_order(x, y, seed_peaks: list[tuple[float, float, float]], k: int, shared: bool):
    """Fit ``k`` peaks; returns full (baseline, c, w, a, ...) params and area errors."""
    step = float(np.median(np.diff(x)))
    span = float(x[-1] - x[0])
    peaks = list(seed_peaks)
    resid = y - _gauss_sum(x, 0.0, *[v for p in peaks for v in p])
    while len(peaks) < k:
        i = int(np.argmax(resid))
        w = peaks[0][1] if peaks else max(4 * step, span / 20)
        h = max(float(resid[i]), 1e-12 * float(np.abs(y).max()))
        peaks.append((float(x[i]), w, h * w * FWHM_TO_SIGMA * np.sqrt(2 * np.pi)))
        resid = y - _gauss_sum(x, 0.0, *[v for p in peaks for v in p])
    if shared:
        w0 = float(np.mean([p[1] for p in peaks]))
        p0 = [0.0, w0] + [v for c, _, a in peaks for v in (c, a)]
        lo = [-np.inf, step / 4] + [v for _ in range(k) for v in (x[0], 0.0)]
        hi = [np.inf, span] + [v for _ in range(k) for v in (x[-1], np.inf)]
        func = _shared_sum
    else:
        p0 = [0.0] + [v for p in peaks for v in p]
        lo = [-np.inf] + [v for _ in range(k) for v in (x[0], step / 4, 0.0)]
        hi = [np.inf] + [v for _ in range(k) for v in (x[-1], span, np.inf)]
        func = _gauss_sum
    p0 = np.clip(p0, np.array(lo) + 1e-15, np.array(hi) - 1e-15)
    popt, pcov = curve_fit(func, x, y, p0=p0, bounds=(lo, hi), maxfev=20000)
    with np.errstate(invalid="ignore"):
        err = np.sqrt(np.abs(np.diag(pcov)))
    if shared:
        full = np.concatenate([[popt[0]], [v for c, a in zip(popt[2::2], popt[3::2]) for v in (c, popt[1], a)]])
        return full, err[3::2], len(popt)
    return popt, err[3::3], len(popt)


def fit_peaks(
    energy: Sequence[float],
    intensity: Sequence[float],
    max_peaks: int = 4,
    min_significance: float = 3.0,
    shared_width: bool = True,
) -> PeakFit:
    """Sum of Gaussians plus a constant; the number of peaks minimizes BIC.

    Lines are instrument-limited, so by default they share one FWHM.
    Orders are fitted in turn, each seeded with the previous solution plus
    a new line at the largest residual.  The residual sum of squares is
    floored at a tiny fraction of the signal so that noiseless curves do
    not reward spurious extra lines, and an order is only eligible when
    every fitted area exceeds ``min_significance`` standard errors.
    """
    x = np.asarray(energy, dtype=float)
    y = np.asarray(intensity, dtype=float)
    if not 1 <= max_peaks <= 4:
        raise ValueError("max_peaks must be in 1..4")
    if x.size < MIN_SAMPLES:
        raise InsufficientSamplesError(f"need >= {MIN_SAMPLES} samples, got {x.size}")
    order = np.argsort(x)
    x, y = x[order], y[order]
    n = x.size
    scale = float(np.abs(y).max()) or 1.0
    rss_floor = n * (1e-9 * scale) ** 2

    fits: dict[int, np.ndarray] = {}
    significant: dict[int, bool] = {}
    bic: dict[int, float] = {}
    errors: dict[int, str] = {}
    seed: list[tuple[float, float, float]] = []
    for k in range(1, max_peaks + 1):
        try:
            popt, area_err, n_par = _fit_order(x, y, seed, k, shared_width)
        except (RuntimeError, ValueError) as exc:
            errors[k] = str(exc)
            continue
        rss = float(np.sum((y - _gauss_sum(x, *popt)) ** 2))
        bic[k] = n * math.log(max(rss, rss_floor) / n) + n_par * math.log(n)
        fits[k] = popt
        significant[k] = bool(np.all(popt[3::3] >= min_significance * np.nan_to_num(area_err, nan=np.inf)))
        seed = [tuple(popt[1 + 3 * j : 4 + 3 * j]) for j in range(k)]
    if not fits:
        raise FitFailureError("no peak model converged", diagnostics={"errors": errors})
    eligible = [k for k in bic if significant[k]] or list(bic)
    best = min(eligible, key=lambda k: (bic[k], k))
    popt = fits[best]
    peaks = [Peak(float(c), float(w), float(a)) for c, w, a in zip(popt[1::3], popt[2::3], popt[3::3])]
    peaks.sort(key=lambda p: -p.center)
    rms = float(np.sqrt(np.mean((y - _gauss_sum(x, *popt)) ** 2)) / scale)
    return PeakFit(peaks, rms, float(popt[0]), bic)


def line_areas(energy: Sequence[float], intensity: Sequence[float], peaks: Sequence[Peak]) -> np.ndarray:
    """Areas of fixed-shape lines (plus constant) by linear least squares."""
    x = np.asarray(energy, dtype=float)
    cols = [np.ones_like(x)] + [_gauss_sum(x, 0.0, p.center, p.fwhm, 1.0) for p in peaks]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), np.asarray(intensity, dtype=float), rcond=None)
    return np.clip(coef[1:], 0.0, None)


# --- site assignments --------------------------------------------------------------


def _set_partitions(items: list[int], k: int) -> Iterator[list[list[int]]]:
    if k == 0:
        if not items:
            yield []
        return
    if len(items) < k:
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, k - 1):
        yield [[first]] + part
    for part in _set_partitions(rest, k):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _shift3(classes) -> tuple[frozenset, ...]:
    return tuple(frozenset((s + 3) % N_SITES for s in c) for c in classes)


def inversion_invariant(classes: Sequence[frozenset]) -> bool:
    """True when n -> n+3 maps the set of classes onto itself."""
    return set(_shift3(classes)) == set(frozenset(c) for c in classes)


def _canonical(classes: Sequence[frozenset]) -> tuple[frozenset, ...]:
    a = tuple(frozenset(c) for c in classes)
    b = _shift3(a)
    key = lambda h: [sorted(c) for c in h]  # noqa: E731
    return min(a, b, key=key)


@dataclass(frozen=True)
class LinePrediction:
    polarized: bool
    angle: float
    visibility: float
    relative_intensity: float


@dataclass(frozen=True)
class AssignmentHypothesis:
    partition: tuple[frozenset, ...]  # one class per line, L0 first
    predictions: tuple[LinePrediction, ...]
    score: float

    def label(self) -> str:
        return " | ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in self.partition)

    def to_dict(self) -> dict:
        return {
            "partition": [sorted(c) for c in self.partition],
            "label": self.label(),
            "score": self.score,
            "lines": [
                {
                    "polarized": p.polarized,
                    "angle_deg": p.angle,
                    "visibility": p.visibility,
                    "relative_intensity": p.relative_intensity,
                }
                for p in self.predictions
            ],
        }


@dataclass(frozen=True)
class AssignmentResult:
    hypotheses: list[AssignmentHypothesis]
    explanation: str = ""

    def __iter__(self):
        return iter(self.hypotheses)

    def __len__(self) -> int:
        return len(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]

    def labels(self) -> list[str]:
        return [h.label() for h in self.hypotheses]


def _class_response(sites, geom: DipoleGeometry, g: np.ndarray, angle: float) -> tuple[float, float, float, float]:
    """(intensity at angle, visibility, angle of maximum, max intensity) of one class."""
    sites = list(sites)
    phi = np.radians(geom.site_angles[sites])
    w = g[sites]
    # sum of w cos^2(t - phi) = c0 + rho cos(2t - psi)
    c0 = 0.5 * w.sum()
    c = 0.5 * np.sum(w * np.cos(2 * phi))
    s = 0.5 * np.sum(w * np.sin(2 * phi))
    rho = float(np.hypot(c, s))
    vis = 2 * rho / (c0 + rho) if c0 + rho > 0 else 0.0
    ang = float(np.degrees(0.5 * np.arctan2(s, c)) % 180.0)
    t = np.radians(angle)
    at = float(np.sum(w * np.cos(t - phi) ** 2))
    return at, vis, ang, c0 + rho


def enumerate_assignments(
    peak_count: int,
    polarized_flags: Sequence[bool],
    intensity_ratios: Sequence[float],
    r: float = 2.1,
    polarizer_angle: Optional[float] = None,
    polarized_angles: Optional[Sequence[Optional[float]]] = None,
    allow_pair_splitting: bool = False,
    axis: Sequence[int] = (1, 1, 1),
    angle_tolerance: float = 10.0,
    tie_window: float = TIE_WINDOW,
    max_score: float = MAX_SCORE,
) -> AssignmentResult:
    """Rank partitions of the six sites into ``peak_count`` line classes.

    Lines are ordered as observed (L0 first).  By default only partitions
    mapped onto themselves by the inversion n -> n+3 are considered, i.e.
    either a pair shares a class or the two halves sit in classes that swap
    under inversion.  A class is predicted polarized when its visibility is
    at least 0.9.  Flag mismatches rule a hypothesis out; the rest are
    scored by the mean relative error of the predicted intensity ratios at
    ``polarizer_angle`` (default: the in-plane dipole direction).  Every
    hypothesis within ``tie_window`` of the best is returned; hypotheses
    related by n -> n+3 are reported once.
    """
    if not 1 <= peak_count <= 4:
        raise ValueError("peak_count must be in 1..4")
    flags = [bool(f) for f in polarized_flags]
    ratios = np.asarray(intensity_ratios, dtype=float)
    if len(flags) != peak_count or ratios.size != peak_count:
        raise ValueError("flags and ratios need one entry per line")
    if np.any(ratios <= 0):
        raise ValueError("intensity ratios must be positive")
    ratios = ratios / ratios.max()
    geom = dipoles_for_axis(axis)
    angle = geom.main_angle if polarizer_angle is None else float(polarizer_angle)
    g = CollectionModel.with_ratio(r).weights(geom.site_in_plane)
    ref = int(np.argmax(ratios))

    seen: set = set()
    scored: list[AssignmentHypothesis] = []
    n_candidates = 0
    for part in _set_partitions(list(range(N_SITES)), peak_count):
        blocks = [frozenset(b) for b in part]
        if not allow_pair_splitting and not inversion_invariant(blocks):
            continue
        for ordered in permutations(blocks):
            canon = _canonical(ordered)
            if canon in seen:
                continue
            seen.add(canon)
            n_candidates += 1
            resp = [_class_response(c, geom, g, angle) for c in canon]
            pred_flags = [v >= POLARIZED_THRESHOLD for _, v, _, _ in resp]
            if pred_flags != flags:
                continue
            if polarized_angles is not None:
                ok = all(
                    a is None or not pf or abs(angle_difference(a, ra)) <= angle_tolerance
                    for a, pf, (_, _, ra, _) in zip(polarized_angles, pred_flags, resp)
                )
                if not ok:
                    continue
            at = np.array([x[0] for x in resp])
            if at[ref] <= 0:
                continue
            rel = at / at[ref]
            score = float(np.mean(np.abs(rel - ratios) / ratios))
            preds = tuple(
                LinePrediction(bool(pf), ra, float(v), float(x))
                for pf, (_, v, ra, _), x in zip(pred_flags, resp, rel)
            )
            scored.append(AssignmentHypothesis(canon, preds, score))

    if not scored:
        return AssignmentResult([], f"no partition of {n_candidates} candidates reproduces the polarization flags {flags}")
    best = min(h.score for h in scored)
    if best > max_score:
        return AssignmentResult(
            [], f"best intensity-ratio mismatch {best:.3f} exceeds {max_score} (r = {r})"
        )
    keep = sorted((h for h in scored if h.score <= best + tie_window), key=lambda h: (h.score, h.label()))
    return AssignmentResult(keep)


# --- end-to-end classification --------------------------------------------------------


@dataclass(frozen=True)
class DefectReport:
    pattern: str
    peak_fit: PeakFit
    line_visibility: np.ndarray
    line_angle: np.ndarray
    polarized_flags: list[bool]
    intensity_ratios: np.ndarray
    diagram_fit: Optional[DiagramFit]
    assignments: AssignmentResult
    reference_angle: float
    r: float

    @property
    def splittings(self) -> np.ndarray:
        return self.peak_fit.splittings()

    def to_dict(self) -> dict:
        fit = self.diagram_fit
        return {
            "pattern": self.pattern,
            "peaks": self.peak_fit.to_dict(),
            "splittings_meV": self.splittings.tolist(),
            "line_visibility": self.line_visibility.tolist(),
            "line_angle_deg": self.line_angle.tolist(),
            "polarized_flags": self.polarized_flags,
            "intensity_ratios": self.intensity_ratios.tolist(),
            "diagram": None if fit is None else {"visibility": fit.visibility, "phi_deg": fit.phi},
            "hypotheses": [h.to_dict() for h in self.assignments],
            "explanation": self.assignments.explanation,
            "thresholds": {
                "polarized_visibility": POLARIZED_THRESHOLD,
                "tie_window": TIE_WINDOW,
                "max_score": MAX_SCORE,
                "r": self.r,
                "reference_angle_deg": self.reference_angle,
            },
        }


def classify_defect(
    spectra: Mapping[float, tuple[Sequence[float], Sequence[float]]],
    diagram: Optional[PolarizationDiagram] = None,
    r: float = 2.1,
    max_peaks: int = 4,
    reference_angle: Optional[float] = None,
    axis: Sequence[int] = (1, 1, 1),
    allow_pair_splitting: bool = False,
) -> DefectReport:
    """Peak fit, per-line polarization and site-assignment search in one go.

    ``spectra`` maps polarizer angle (deg) to an (energy, intensity) curve;
    at least two angles are needed to judge polarization.  Lines are found
    on the spectrum closest to ``reference_angle`` (default: the in-plane
    dipole direction), and their areas at every angle give each line's
    visibility.
    """
    if len(spectra) < 2:
        raise InsufficientSamplesError("need spectra at two or more polarizer angles")
    geom = dipoles_for_axis(axis)
    ref = geom.main_angle if reference_angle is None else float(reference_angle)
    angles = sorted(spectra)
    ref_key = min(angles, key=lambda a: abs(angle_difference(a, ref)))
    x, y = spectra[ref_key]
    pf = fit_peaks(x, y, max_peaks)

    areas = np.array([line_areas(*spectra[a], pf.peaks) for a in angles])
    amax = areas.max(axis=0)
    vis = np.where(amax > 0, (amax - areas.min(axis=0)) / np.where(amax > 0, amax, 1), 0.0)
    ang = np.array([angles[i] % 180.0 for i in areas.argmax(axis=0)])
    flags = [bool(v >= POLARIZED_THRESHOLD) for v in vis]
    ref_areas = areas[angles.index(ref_key)]
    ratios = ref_areas / ref_areas.max()

    dfit = fit_diagram(diagram) if diagram is not None else None
    hyps = enumerate_assignments(
        len(pf.peaks),
        flags,
        np.clip(ratios, 1e-12, None),
        r=r,
        polarizer_angle=ref_key,
        polarized_angles=[a if f else None for a, f in zip(ang, flags)],
        allow_pair_splitting=allow_pair_splitting,
        axis=axis,
        angle_tolerance=max(10.0, 0.6 * _min_step(angles)),
    )
    return DefectReport(
        PATTERNS[len(pf.peaks)], pf, vis, ang, flags, ratios, dfit, hyps, float(ref_key), r
    )


def _min_step(angles: Sequence[float]) -> float:
    a = np.sort(np.asarray(angles, dtype=float) % 180.0)
    if a.size < 2:
        return 180.0
    return float(np.min(np.diff(np.concatenate([a, [a[0] + 180.0]]))))
