"""Measurement ingestion and artifact writers (CSV, JSON, photon streams)."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .dipoles import PolarizationDiagram
from .errors import GCenterError, SchemaError
from .roulette import PhotonStream
from .units import wavelength_energy

SPECTRUM_AXES = ("energy_meV", "wavelength_nm")
SPECTRUM_VALUES = ("counts", "intensity")
DIAGRAM_AXES = ("angle_deg",)
DIAGRAM_VALUES = ("intensity", "counts")


class MalformedInputError(GCenterError, ValueError):
    """File cannot be read as CSV or holds non-numeric cells."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class MeasuredSpectrum:
    energy: np.ndarray  # meV, ascending
    counts: np.ndarray
    source_axis: str
    path: Optional[str] = None


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Locale-independent CSV: floats written with ``repr`` round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (set, frozenset)):
        return sorted(_jsonable(v) for v in obj)
    return obj


def write_json(path: Union[str, Path], data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def sha256(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --- reading ---------------------------------------------------------------------


def _read_table(path: Union[str, Path]) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise MalformedInputError(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    return header, rows[1:]


def _column(header: list[str], rows: list[list[str]], name: str) -> np.ndarray:
    j = header.index(name)
    out = np.empty(len(rows))
    for i, r in enumerate(rows):
        # data rows are numbered from 1 after the header
        if j >= len(r):
            raise SchemaError(f"row {i + 1} has no '{name}' cell", row=i + 1, column=name)
        try:
            out[i] = float(r[j])
        except ValueError:
            raise MalformedInputError(f"row {i + 1}, column '{name}': not a number ({r[j]!r})", i + 1, name) from None
        if not math.isfinite(out[i]):
            raise MalformedInputError(f"row {i + 1}, column '{name}': non-finite value", i + 1, name)
    return out


def _pick(header: list[str], names: Sequence[str]) -> Optional[str]:
    return next((n for n in names if n in header), None)


def _check_monotone(x: np.ndarray, name: str) -> None:
    d = np.diff(x)
    if d.size and not (np.all(d > 0) or np.all(d < 0)):
        i = int(np.flatnonzero(d <= 0)[0] if d[0] > 0 else np.flatnonzero(d >= 0)[0])
        raise SchemaError(f"column '{name}' is not strictly monotone at row {i + 2}", row=i + 2, column=name)


def _check_nonnegative(y: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(y < 0)
    if bad.size:
        raise SchemaError(f"negative value in column '{name}' at row {bad[0] + 1}", row=int(bad[0]) + 1, column=name)


def load_measurement(path: Union[str, Path]) -> Union[MeasuredSpectrum, PolarizationDiagram]:
    """Read a spectrum (energy_meV|wavelength_nm, counts) or diagram (angle_deg, intensity).

    Wavelengths are converted to meV and the spectrum is returned sorted by
    energy.
    """
    header, rows = _read_table(path)
    if not rows:
        raise SchemaError(f"{path} has a header but no data rows", row=1)
    angle = _pick(header, DIAGRAM_AXES)
    if angle is not None:
        value = _pick(header, DIAGRAM_VALUES)
        if value is None:
            raise SchemaError(f"{path}: diagram needs one of {DIAGRAM_VALUES}", column=DIAGRAM_VALUES[0])
        a, y = _column(header, rows, angle), _column(header, rows, value)
        _check_monotone(a, angle)
        _check_nonnegative(y, value)
        return PolarizationDiagram(a, y)

    axis = _pick(header, SPECTRUM_AXES)
    if axis is None:
        raise SchemaError(f"{path}: need one of {SPECTRUM_AXES + DIAGRAM_AXES}", column=SPECTRUM_AXES[0])
    value = _pick(header, SPECTRUM_VALUES)
    if value is None:
        raise SchemaError(f"{path}: spectrum needs one of {SPECTRUM_VALUES}", column=SPECTRUM_VALUES[0])
    x, y = _column(header, rows, axis), _column(header, rows, value)
    _check_monotone(x, axis)
    _check_nonnegative(y, value)
    if axis == "wavelength_nm":
        if np.any(x <= 0):
            raise SchemaError("wavelengths must be positive", column=axis)
        x = wavelength_energy(x, "nm_to_meV")
    order = np.argsort(x)
    return MeasuredSpectrum(x[order], y[order], axis, str(path))


# --- photon streams ----------------------------------------------------------------

STREAM_HEADER = ("t_ns", "site", "energy_meV", "angle_deg", "emitter")


def write_stream(path: Union[str, Path], stream: PhotonStream) -> Path:
    rows = zip(stream.timestamp, stream.site, stream.energy, stream.angle, stream.emitter_id)
    return write_csv(path, STREAM_HEADER, rows)


def read_stream(path: Union[str, Path], duration: Optional[float] = None) -> PhotonStream:
    header, rows = _read_table(path)
    missing = [c for c in STREAM_HEADER if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}", column=missing[0])
    t, s, e, a, i = (_column(header, rows, c) for c in STREAM_HEADER)
    dur = float(t.max()) if duration is None and t.size else float(duration or 0.0)
    return PhotonStream(t, s.astype(np.int64), e, a, i.astype(np.int64), dur)


def write_diagram(path: Union[str, Path], diagram: PolarizationDiagram) -> Path:
    return write_csv(path, ("angle_deg", "intensity"), zip(diagram.angles, diagram.intensities))


def write_spectrum(path: Union[str, Path], energy: Sequence[float], intensity: Sequence[float]) -> Path:
    e = np.asarray(energy, dtype=float)
    wl = wavelength_energy(e, "meV_to_nm") if np.all(e > 0) else np.full(e.shape, np.nan)
    return write_csv(path, ("energy_meV", "wavelength_nm", "intensity"), zip(e, wl, intensity))
