"""Site-energy offsets of the six Si(i) positions under uniaxial strain.

Strain is ``eps = magnitude * d (x) d`` in the cubic lab frame.  Each
inversion pair ``p`` responds linearly through a tensor built from its
dipole ``u_p``, its in-ring displacement ``w_p`` and the defect axis ``a``::

    E_p = k_u (u_p.eps.u_p) + 2 k_x (w_p.eps.a) + c_tr tr(eps) + c_ax (a.eps.a)

The last two terms shift all six sites together.  Sites ``n`` and ``n+3``
are related by inversion, so they always share an offset.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .dipoles import AXES_111, PAIR_OF_SITE, DipoleGeometry, canonical_axis, dipoles_for_axis
from .errors import NonlinearRegimeError

DIRECTION_CLASSES = {
    "[110]": (1, 1, 0),
    "[-110]": (-1, 1, 0),
    "[001]": (0, 0, 1),
    "[111]": (1, 1, 1),
    "[-1-11]": (-1, -1, 1),
}


def miller(direction: Sequence[float] | str) -> np.ndarray:
    """Unit vector from a 3-sequence or a compact Miller string like ``"1-10"``."""
    if isinstance(direction, str):
        s = direction.strip().strip("[]").replace(",", " ")
        if " " in s:
            vals = [float(x) for x in s.split()]
        else:
            vals, sign = [], 1
            for ch in s:
                if ch == "-":
                    sign = -1
                    continue
                vals.append(sign * float(ch))
                sign = 1
        direction = vals
    v = np.asarray(direction, dtype=float)
    if v.shape != (3,) or np.linalg.norm(v) == 0:
        raise ValueError(f"bad direction {direction!r}")
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class StrainSpec:
    direction: np.ndarray
    magnitude: float

    def __post_init__(self):
        object.__setattr__(self, "direction", miller(self.direction))
        object.__setattr__(self, "magnitude", float(self.magnitude))

    @property
    def tensor(self) -> np.ndarray:
        return self.magnitude * np.outer(self.direction, self.direction)

    def scaled(self, factor: float) -> "StrainSpec":
        return StrainSpec(self.direction, self.magnitude * factor)


@dataclass(frozen=True)
class StrainCalibration:
    axial: float  # k_u, meV per unit strain
    cross: float  # k_x
    shift_trace: float
    shift_axial: float
    sign: int = 1
    linear_guard: float = 0.005
    anchor: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, cfg: dict) -> "StrainCalibration":
        anchor = cfg["anchor"]
        ratio = float(cfg["cross_to_axial_ratio"])
        # split per unit k_u at the anchor, with k_x = ratio * k_u
        probe = cls(1.0, ratio, 0.0, 0.0)
        d = StrainSpec(anchor["direction"], 1.0)
        off = _pair_offsets(d, dipoles_for_axis((1, 1, 1)), probe)
        unit_split = off[0] - off[1]
        k_u = float(anchor["split_meV"]) / (float(anchor["magnitude"]) * unit_split)
        return cls(
            axial=k_u,
            cross=ratio * k_u,
            shift_trace=float(cfg["shift_trace_meV_per_strain"]),
            shift_axial=float(cfg["shift_axial_meV_per_strain"]),
            sign=int(cfg.get("sign", 1)),
            linear_guard=float(cfg.get("linear_guard", 0.005)),
            anchor=dict(anchor),
        )

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "cross_to_axial_ratio": self.cross / self.axial if self.axial else 0.0,
            "shift_trace_meV_per_strain": self.shift_trace,
            "shift_axial_meV_per_strain": self.shift_axial,
            "sign": self.sign,
            "linear_guard": self.linear_guard,
        }


@lru_cache(maxsize=1)
def _default_cfg() -> str:
    return resources.files("gcenter").joinpath("data/strain_calibration.json").read_text()


def default_calibration() -> StrainCalibration:
    return StrainCalibration.from_dict(json.loads(_default_cfg()))


def load_calibration(path) -> StrainCalibration:
    with open(path) as fh:
        return StrainCalibration.from_dict(json.load(fh))


def _pair_offsets(strain: StrainSpec, geom: DipoleGeometry, cal: StrainCalibration) -> np.ndarray:
    eps = strain.tensor
    a = geom.unit_axis
    common = cal.shift_trace * np.trace(eps) + cal.shift_axial * (a @ eps @ a)
    out = np.empty(3)
    for p in range(3):
        u, w = geom.dipoles[p], geom.displacements[p]
        out[p] = cal.sign * (cal.axial * (u @ eps @ u) + 2.0 * cal.cross * (w @ eps @ a)) + common
    return out


def _check_guard(strain: StrainSpec, cal: StrainCalibration, strict: bool) -> None:
    if abs(strain.magnitude) > cal.linear_guard:
        msg = f"|strain| = {abs(strain.magnitude):.4g} exceeds the linear-regime guard {cal.linear_guard}"
        if strict:
            raise NonlinearRegimeError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def site_offsets_for_strain(
    strain: StrainSpec,
    defect_axis: Sequence[float] = (1, 1, 1),
    calibration: Optional[StrainCalibration] = None,
    strict: bool = True,
) -> np.ndarray:
    """Six site-energy offsets (meV) of a defect with the given <111> axis."""
    cal = calibration or default_calibration()
    _check_guard(strain, cal, strict)
    pair = _pair_offsets(strain, dipoles_for_axis(defect_axis), cal)
    return pair[list(PAIR_OF_SITE)]


# --- frame transform and direction classes -----------------------------------


def _class_members() -> dict[str, list[np.ndarray]]:
    out = {}
    for name, v in DIRECTION_CLASSES.items():
        v = np.asarray(v, dtype=float)
        cyc = {tuple(np.roll(v, k)) for k in range(3)}
        out[name] = [np.asarray(c) / np.linalg.norm(c) for c in sorted(cyc)]
    return out


_CLASS_MEMBERS = _class_members()


@dataclass(frozen=True)
class DefectFrameStrain:
    tensor: np.ndarray
    direction: np.ndarray
    direction_class: str
    equivalent: np.ndarray
    overlap: float


def frame_transform(strain: StrainSpec, defect_axis: Sequence[float]) -> DefectFrameStrain:
    """Express strain in the frame where the defect axis is [111].

    The map is the cubic sign flip ``S = diag(sign(axis))``; the resulting
    direction is then matched (up to the defect's threefold rotation and
    sign) to the closest canonical direction class.
    """
    s = np.diag(canonical_axis(defect_axis).astype(float))
    eps = s @ strain.tensor @ s
    d = s @ strain.direction
    best = ("", np.zeros(3), -1.0)
    for name, members in _CLASS_MEMBERS.items():
        for m in members:
            ov = abs(float(d @ m))
            if ov > best[2] + 1e-12:
                best = (name, m, ov)
    return DefectFrameStrain(eps, d, best[0], best[1], best[2])


@dataclass(frozen=True)
class StrainResponse:
    split_coefficient: dict[str, float]
    shift_coefficient: dict[str, float]


def strain_response(calibration: Optional[StrainCalibration] = None) -> StrainResponse:
    """Per-class {0,3}-vs-rest splitting and mean shift per unit strain ([111] defect)."""
    cal = calibration or default_calibration()
    geom = dipoles_for_axis((1, 1, 1))
    split, shift = {}, {}
    for name, v in DIRECTION_CLASSES.items():
        off = _pair_offsets(StrainSpec(v, 1.0), geom, cal)
        split[name] = float(off[0] - 0.5 * (off[1] + off[2]))
        shift[name] = float(off[[0, 0, 1, 1, 2, 2]].mean())
    return StrainResponse(split, shift)


# --- ensembles ---------------------------------------------------------------


@dataclass(frozen=True)
class OrientationFamily:
    orientations: list[str]
    offsets: np.ndarray  # six site offsets shared by the family
    lines: list[tuple[float, tuple[int, ...]]]


@dataclass(frozen=True)
class EnsembleReport:
    strain: StrainSpec
    families: list[OrientationFamily]
    distinct_lines: np.ndarray

    def rows(self, zpl_center: float = 0.0) -> list[tuple[str, float]]:
        out = []
        for fam in self.families:
            for e, _ in fam.lines:
                for name in fam.orientations:
                    out.append((name, zpl_center + e))
        return out


def _lines_from_offsets(offsets: np.ndarray, tol: float) -> list[tuple[float, tuple[int, ...]]]:
    order = np.argsort(-offsets, kind="stable")
    groups: list[list[int]] = []
    for i in order:
        if groups and abs(offsets[groups[-1][-1]] - offsets[i]) <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return [(float(offsets[g].mean()), tuple(sorted(g))) for g in groups]


def ensemble_lines(
    strain: StrainSpec,
    calibration: Optional[StrainCalibration] = None,
    tolerance: float = 1e-6,
    strict: bool = True,
) -> EnsembleReport:
    """Line positions of an ensemble holding all four <111> orientations.

    Orientations with identical site offsets form one family; the distinct
    line energies pool all families.
    """
    families: list[OrientationFamily] = []
    for name, axis in AXES_111.items():
        off = site_offsets_for_strain(strain, axis, calibration, strict)
        for fam in families:
            if np.allclose(np.sort(fam.offsets), np.sort(off), atol=tolerance, rtol=0):
                fam.orientations.append(name)
                break
        else:
            families.append(OrientationFamily([name], off, _lines_from_offsets(off, tolerance)))
    energies = np.sort(np.array([e for fam in families for e, _ in fam.lines]))[::-1]
    distinct: list[float] = []
    for e in energies:
        if not distinct or abs(distinct[-1] - e) > tolerance:
            distinct.append(float(e))
    return EnsembleReport(strain, families, np.array(distinct))


def site_relabel_invariant(offsets: Sequence[float]) -> bool:
    off = np.asarray(offsets)
    return bool(np.allclose(off, np.roll(off, 3)))


__all__ = [
    "StrainSpec",
    "StrainCalibration",
    "StrainResponse",
    "DefectFrameStrain",
    "EnsembleReport",
    "default_calibration",
    "load_calibration",
    "site_offsets_for_strain",
    "frame_transform",
    "strain_response",
    "ensemble_lines",
    "miller",
]
