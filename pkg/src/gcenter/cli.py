"""Command-line entry point: one subcommand per model, reproducible artifacts.

Every run writes its CSV/JSON (and optional SVG) files plus ``manifest.json``
holding the run configuration, library versions and SHA-256 checksums.
A manifest or an ``--emit-config`` dump can be fed back with ``--config``.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .dipoles import (
    AXES_111,
    CollectionModel,
    analytic_visibility,
    collection_ratio,
    collection_table,
    diagram_from_sites,
    dipoles_for_axis,
    fit_diagram,
)
from .errors import GCenterError, SchemaError
from .fitting import classify_defect
from .io import (
    MalformedInputError,
    MeasuredSpectrum,
    load_measurement,
    sha256,
    write_csv,
    write_diagram,
    write_json,
    write_spectrum,
    write_stream,
)
from .lines import energy_grid
from .pes import build_potential, calibrate_kinetic_scale, fitted_delta0, localization_report, solve_ring
from .roulette import (
    EmitterConfig,
    accumulate_spectrum,
    g2_histogram,
    occupation_chi_square,
    poisson_surrogate,
    simulate_stream,
    stream_diagram,
)
from .rotor import Level, RotorModel, eigen_energies, quartet_spectrum
from .spectra import (
    BULK_ZPL_NM,
    SiteEnergies,
    g0_site_energies,
    g1_site_energies,
    line_intensity_vs_angle,
    polarized_spectrum,
    zpl_lines,
)
from .strain import (
    DIRECTION_CLASSES,
    StrainSpec,
    default_calibration,
    ensemble_lines,
    load_calibration,
    site_offsets_for_strain,
    strain_response,
)
from .units import wavelength_energy

OUT_ENV = "GCENTER_OUT_DIR"
DEFAULT_OUT = "gcenter-out"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MALFORMED = 3
EXIT_SCHEMA = 4
EXIT_MODEL = 5

META_KEYS = {"command", "config", "emit_config", "out_dir"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- shared parsing helpers ----------------------------------------------------------


def _floats(text: str, n: Optional[int] = None) -> list[float]:
    vals = [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    if n is not None and len(vals) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _axis(text: str) -> tuple[int, int, int]:
    from .strain import miller

    v = miller(text) * np.sqrt(3.0)
    return tuple(int(round(x)) for x in v)


def _polarizer(text) -> Optional[float]:
    if text is None or str(text).lower() in ("none", "off", ""):
        return None
    return float(text)


def _collection(p: dict) -> CollectionModel:
    if p.get("depth_nm") is not None:
        return collection_ratio(float(p["depth_nm"]))
    return CollectionModel.with_ratio(float(p.get("r", 2.1)))


def _zpl_center(p: dict) -> float:
    return float(wavelength_energy(float(p["zpl_nm"]), "nm_to_meV"))


def _site_energies(p: dict) -> SiteEnergies:
    center = _zpl_center(p)
    pattern = p["pattern"]
    if pattern == "g0":
        return g0_site_energies(p["split_meV"], center)
    if pattern == "g1":
        a, b = p["lower_pairs"].split("-")
        pairs = (tuple(int(c) for c in a), tuple(int(c) for c in b))
        return g1_site_energies(p["split01_meV"], p["split12_meV"], pairs, center)
    if pattern == "uniform":
        return SiteEnergies.from_offsets([0.0] * 6, center)
    if pattern == "custom":
        if not p.get("offsets_meV"):
            raise UsageError("--pattern custom needs --offsets-meV")
        return SiteEnergies.from_offsets(_floats(p["offsets_meV"], 6), center)
    raise UsageError(f"unknown pattern {pattern!r}")


def _add_pattern(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--pattern", choices=["g0", "g1", "uniform", "custom"], default="g0")
    sp.add_argument("--split-meV", type=float, default=0.70, help="G-0 doublet splitting")
    sp.add_argument("--split01-meV", type=float, default=1.00)
    sp.add_argument("--split12-meV", type=float, default=0.86)
    sp.add_argument("--lower-pairs", default="12-45", help="G-1 lower classes, e.g. 12-45 or 15-24")
    sp.add_argument("--offsets-meV", default=None, help="six comma-separated site offsets (custom)")
    sp.add_argument("--zpl-nm", type=float, default=BULK_ZPL_NM)


def _svg(out: Path, name: str, draw: Callable) -> Path:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise GCenterError("--svg needs matplotlib (pip install artifact[plot])") from exc
    matplotlib.rcParams["svg.hashsalt"] = "gcenter"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    draw(ax)
    fig.tight_layout()
    path = out / name
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


# --- subcommands -------------------------------------------------------------------


def cmd_quartet(p: dict, out: Path) -> tuple[list[Path], dict]:
    # work in ueV so the splittings come out exact
    gs = RotorModel(0.0, p["delta_gs_ueV"], level=Level.GROUND)
    es = RotorModel(0.0, p["delta_es_ueV"], level=Level.EXCITED)
    spec = quartet_spectrum(gs, es, 0.0, p["resolution_meV"] * 1e3)
    center = _zpl_center(p)
    rows = []
    for ln in spec.lines:
        e = center + ln.offset * 1e-3
        rows.append((ln.label, ln.offset, e, float(wavelength_energy(e, "meV_to_nm")), ln.weight))
    files = [write_csv(out / "quartet_lines.csv", ("label", "offset_ueV", "energy_meV", "wavelength_nm", "intensity"), rows)]
    lv = []
    for name, model in (("GroundState", gs), ("ExcitedState", es)):
        q = eigen_energies(model)
        for m, e, g in zip(("0", "+-1", "+-2", "3"), q.energies, q.degeneracies):
            lv.append((name, m, e, g))
    files.append(write_csv(out / "quartet_levels.csv", ("level", "m", "energy_ueV", "degeneracy"), lv))
    if p["svg"]:
        files.append(
            _svg(out, "quartet.svg", lambda ax: (ax.stem(spec.offsets, spec.weights), ax.set_xlabel("offset (ueV)"), ax.set_ylabel("intensity")))
        )
    return files, {"n_lines": len(spec.lines), "splittings_ueV": spec.splittings().tolist(), "intensities": spec.weights.tolist()}


def _pes_offsets(p: dict) -> list[float]:
    if p.get("offsets_meV"):
        return _floats(p["offsets_meV"], 6)
    d = p["pair03_offset_meV"]
    return [d, 0.0, 0.0, d, 0.0, 0.0]


def cmd_calibrate(p: dict, out: Path) -> tuple[list[Path], dict]:
    b = calibrate_kinetic_scale(p["barrier_meV"], p["delta0_ueV"] * 1e-3, p["n_grid"])
    achieved = fitted_delta0(solve_ring(build_potential(p["barrier_meV"], n_grid=p["n_grid"]), b))
    res = {"kinetic_scale_meV": b, "delta0_target_ueV": p["delta0_ueV"], "delta0_achieved_ueV": achieved * 1e3}
    return [write_json(out / "calibration.json", res)], res


def cmd_pes(p: dict, out: Path) -> tuple[list[Path], dict]:
    b = p.get("kinetic_scale_meV")
    if b is None:
        b = calibrate_kinetic_scale(p["barrier_meV"], p["delta0_ueV"] * 1e-3, p["n_grid"])
    pot = build_potential(p["barrier_meV"], _pes_offsets(p), p["n_grid"])
    sol = solve_ring(pot, b, p["n_levels"])
    rep = localization_report(sol)
    th = np.degrees(pot.theta)
    e0 = float(sol.energies[0])
    files = [
        write_csv(out / "pes_potential.csv", ("theta_deg", "V_meV"), zip(th, pot.values)),
        write_csv(
            out / "pes_levels.csv",
            ("index", "energy_meV", "relative_ueV", "cluster", "localization", "dominant_well", "ipr"),
            [
                (lv.index, lv.energy, (lv.energy - e0) * 1e3, lv.cluster, lv.flag.value, lv.dominant_well, float(np.sum(lv.masses**2)))
                for lv in rep.levels
            ],
        ),
        write_csv(
            out / "pes_wavefunctions.csv",
            ("theta_deg",) + tuple(f"psi_{i}" for i in range(sol.energies.size)),
            (tuple([t]) + tuple(row) for t, row in zip(th, sol.wavefunctions)),
        ),
    ]
    summary = {"kinetic_scale_meV": b, "subsets": rep.subsets(), "energies_meV": sol.energies.tolist()}
    files.append(write_json(out / "pes_report.json", summary))
    if p["svg"]:

        def draw(ax):
            ax.plot(th, pot.values, color="0.5")
            for e in sol.energies:
                ax.axhline(e, lw=0.6)
            ax.set_xlabel("rotation angle (deg)")
            ax.set_ylabel("energy (meV)")

        files.append(_svg(out, "pes.svg", draw))
    return files, {"kinetic_scale_meV": b, "subsets": rep.subsets()}


def cmd_diagram(p: dict, out: Path) -> tuple[list[Path], dict]:
    geom = dipoles_for_axis(_axis(p["axis"]))
    sites = range(6) if p["sites"] == "all" else [int(s) for s in str(p["sites"]).replace(",", " ").split()]
    occ = _floats(p["occupation"], 6) if p.get("occupation") else None
    coll = _collection(p)
    angles = np.arange(0.0, 360.0, p["step_deg"])
    dg = diagram_from_sites(geom, sites, occ, coll, angles)
    fit = fit_diagram(dg)
    res = {"visibility": fit.visibility, "phi_deg": fit.phi, "r": coll.r, "analytic_visibility_uniform": analytic_visibility(coll.r)}
    files = [write_diagram(out / "diagram.csv", dg), write_json(out / "diagram_fit.json", res)]
    if p["sweep_depth"]:
        tab = collection_table()
        depths = np.arange(tab["depth_nm"][0], tab["depth_nm"][-1] + 1e-9, 1.0)
        rows = []
        for d in depths:
            c = collection_ratio(float(d))
            rows.append((d, c.purcell_in_plane, c.purcell_out_of_plane, c.ceff_in_plane, c.ceff_out_of_plane, c.r, analytic_visibility(c.r)))
        files.append(
            write_csv(out / "collection_vs_depth.csv", ("depth_nm", "F_in", "F_out", "Ceff_in", "Ceff_out", "r", "visibility"), rows)
        )
    if p["svg"]:

        def draw(ax):
            fig = ax.figure
            ax.remove()
            pax = fig.add_subplot(projection="polar")
            pax.plot(np.radians(dg.angles), dg.intensities, "o", ms=3)

        files.append(_svg(out, "diagram.svg", draw))
    return files, res


def cmd_spectrum(p: dict, out: Path) -> tuple[list[Path], dict]:
    se = _site_energies(p)
    spec = zpl_lines(se, p["grouping_tol_meV"], dipoles_for_axis(_axis(p["axis"])), resolution=p["resolution_meV"])
    coll = _collection(p)
    pol = _polarizer(p["polarizer_deg"])
    grid, inten = polarized_spectrum(spec, pol, coll)
    files = [
        write_spectrum(out / "spectrum.csv", grid, inten),
        write_csv(
            out / "lines.csv",
            ("label", "energy_meV", "wavelength_nm", "sites", "weight"),
            [(r["label"], r["energy_meV"], r["wavelength_nm"], " ".join(map(str, r["sites"])), r["weight"]) for r in spec.to_records()],
        ),
    ]
    if p["angle_sweep"]:
        angles = np.arange(0.0, 361.0, 10.0)
        tab = line_intensity_vs_angle(spec, angles, coll)
        files.append(
            write_csv(out / "lines_vs_angle.csv", ("angle_deg",) + tuple(ln.label for ln in spec.lines), (tuple([a]) + tuple(r) for a, r in zip(angles, tab)))
        )
    if p["svg"]:
        files.append(_svg(out, "spectrum.svg", lambda ax: (ax.plot(grid, inten), ax.set_xlabel("energy (meV)"))))
    return files, {"n_lines": len(spec.lines), "splittings_meV": spec.splittings().tolist()}


def cmd_ensemble(p: dict, out: Path) -> tuple[list[Path], dict]:
    cal = load_calibration(p["calibration"]) if p.get("calibration") else default_calibration()
    strict = not p["allow_nonlinear"]
    strain = StrainSpec(p["strain_dir"], p["strain"])
    rep = ensemble_lines(strain, cal, strict=strict)
    center = _zpl_center(p)
    files = [write_csv(out / "ensemble.csv", ("orientation", "line_energy_meV"), rep.rows(center))]
    summary = {
        "strain_dir": p["strain_dir"],
        "strain": p["strain"],
        "n_distinct_lines": int(rep.distinct_lines.size),
        "distinct_offsets_meV": rep.distinct_lines.tolist(),
        "families": [
            {"orientations": f.orientations, "site_offsets_meV": f.offsets.tolist(), "lines_meV": [e for e, _ in f.lines]}
            for f in rep.families
        ],
    }
    files.append(write_json(out / "ensemble.json", summary))
    if p["sweep"]:
        mags = np.linspace(-p["sweep_max"], p["sweep_max"], p["sweep_steps"])
        rows = []
        for name, v in DIRECTION_CLASSES.items():
            for m in mags:
                off = site_offsets_for_strain(StrainSpec(v, m), (1, 1, 1), cal, strict)
                rows.append((name, m, off[0] - off[1], off.mean()))
        files.append(write_csv(out / "strain_sweep.csv", ("direction", "strain", "split_meV", "mean_shift_meV"), rows))
        resp = strain_response(cal)
        files.append(write_json(out / "strain_response.json", {"split": resp.split_coefficient, "shift": resp.shift_coefficient}))
    return files, {"n_distinct_lines": summary["n_distinct_lines"]}


def _emitter(p: dict) -> EmitterConfig:
    return EmitterConfig(
        excitation_rate=p["excitation_rate"],
        radiative_rate=p["radiative_rate"],
        site_energies=_site_energies(p),
        seed=p["seed"],
        n_emitters=p["n_emitters"],
        axis=_axis(p["axis"]),
    )


def cmd_roulette(p: dict, out: Path) -> tuple[list[Path], dict]:
    cfg = _emitter(p)
    stream = simulate_stream(cfg, n_photons=p["n_photons"], workers=p["workers"])
    chi2, pval = occupation_chi_square(stream, cfg.hop_distribution)
    coll = _collection(p)
    grid, inten = accumulate_spectrum(
        stream, _polarizer(p["polarizer_deg"]), coll, p["resolution_meV"], seed=p["seed"] + 1, axis=cfg.axis, sampling=p["sampling"]
    )
    fit = fit_diagram(stream_diagram(stream, coll, axis=cfg.axis))
    res = {
        "n_photons": len(stream),
        "duration_ns": stream.duration,
        "occupation": stream.occupation().tolist(),
        "chi2": chi2,
        "chi2_pvalue": pval,
        "visibility": fit.visibility,
        "phi_deg": fit.phi,
    }
    files = [write_json(out / "roulette.json", res), write_spectrum(out / "roulette_spectrum.csv", grid, inten)]
    if p["write_stream"]:
        files.append(write_stream(out / "photons.csv", stream))
    if p["svg"]:
        files.append(_svg(out, "roulette_spectrum.svg", lambda ax: (ax.plot(grid, inten), ax.set_xlabel("energy (meV)"))))
    return files, {k: res[k] for k in ("n_photons", "chi2_pvalue", "visibility")}


def cmd_g2(p: dict, out: Path) -> tuple[list[Path], dict]:
    cfg = EmitterConfig(p["excitation_rate"], p["radiative_rate"], seed=p["seed"], n_emitters=p["n_emitters"])
    stream = simulate_stream(cfg, n_photons=p["n_photons"], workers=p["workers"])
    if p["surrogate"]:
        stream = poisson_surrogate(stream, p["seed"])
    curve = g2_histogram(stream, p["bin_ns"], p["max_delay_ns"])
    files = [write_csv(out / "g2.csv", ("tau_ns", "g2", "coincidences"), zip(curve.tau, curve.g2, curve.counts))]
    res = {"g2_zero": curve.at_zero(), "g2_tail": curve.tail(), "n_photons": len(stream)}
    files.append(write_json(out / "g2.json", res))
    if p["svg"]:
        files.append(_svg(out, "g2.svg", lambda ax: (ax.plot(curve.tau, curve.g2), ax.set_xlabel("delay (ns)"), ax.set_ylabel("g2"))))
    return files, res


def cmd_classify(p: dict, out: Path) -> tuple[list[Path], dict]:
    spectra, diagram = {}, None
    if p.get("simulate"):
        q = dict(p, pattern=p["simulate"])
        cfg = _emitter(q)
        stream = simulate_stream(cfg, n_photons=p["n_photons"])
        coll = _collection(p)
        lines = np.unique(stream.energy)
        grid = energy_grid(lines, p["resolution_meV"], step=0.01)
        for k, a in enumerate((0.0, 45.0, 90.0, 135.0)):
            spectra[a] = accumulate_spectrum(stream, a, coll, p["resolution_meV"], grid, p["seed"] + 1 + k, cfg.axis, "jitter")
        diagram = stream_diagram(stream, coll, axis=cfg.axis)
    for item in (p.get("spectrum") or "").split(","):
        if not item.strip():
            continue
        if ":" not in item:
            raise UsageError(f"--spectrum entries look like ANGLE:PATH, got {item!r}")
        ang, path = item.split(":", 1)
        m = load_measurement(path)
        if not isinstance(m, MeasuredSpectrum):
            raise SchemaError(f"{path} is a diagram, expected a spectrum")
        spectra[float(ang)] = (m.energy, m.counts)
    if p.get("diagram"):
        d = load_measurement(p["diagram"])
        if isinstance(d, MeasuredSpectrum):
            raise SchemaError(f"{p['diagram']} is a spectrum, expected a diagram")
        diagram = d
    if len(spectra) < 2:
        raise UsageError("classify needs --simulate or at least two --spectrum ANGLE:PATH entries")
    rep = classify_defect(
        spectra, diagram, r=_collection(p).r, max_peaks=p["max_peaks"], axis=_axis(p["axis"]), allow_pair_splitting=p["allow_pair_splitting"]
    )
    res = rep.to_dict()
    return [write_json(out / "classification.json", res)], {
        "pattern": rep.pattern,
        "hypotheses": rep.assignments.labels(),
        "splittings_meV": rep.splittings.tolist(),
    }


COMMANDS = {
    "quartet": cmd_quartet,
    "pes": cmd_pes,
    "calibrate": cmd_calibrate,
    "diagram": cmd_diagram,
    "spectrum": cmd_spectrum,
    "ensemble": cmd_ensemble,
    "roulette": cmd_roulette,
    "g2": cmd_g2,
    "classify": cmd_classify,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--config", default=None, help="JSON run config or manifest to start from")
    common.add_argument("--emit-config", action="store_true", help="print the resolved run config and exit")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot")

    parser = _Parser(prog="gcenter", description="G-center rotation and fine-structure models")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    sp = subs["quartet"] = sub.add_parser("quartet", parents=[common], help="delocalized quartet fine structure")
    sp.add_argument("--delta-es-ueV", type=float, default=2.5)
    sp.add_argument("--delta-gs-ueV", type=float, default=0.0)
    sp.add_argument("--zpl-nm", type=float, default=BULK_ZPL_NM)
    sp.add_argument("--resolution-meV", type=float, default=0.15)

    for name in ("pes", "calibrate"):
        sp = subs[name] = sub.add_parser(name, parents=[common], help="ring Schroedinger solve" if name == "pes" else "fit kinetic scale")
        sp.add_argument("--barrier-meV", type=float, default=33.0)
        sp.add_argument("--delta0-ueV", type=float, default=2.5)
        sp.add_argument("--n-grid", type=int, default=600)
    sp = subs["pes"]
    sp.add_argument("--kinetic-scale-meV", type=float, default=None, help="skip calibration")
    sp.add_argument("--pair03-offset-meV", type=float, default=0.0)
    sp.add_argument("--offsets-meV", default=None, help="six comma-separated well offsets")
    sp.add_argument("--n-levels", type=int, default=6)

    sp = subs["diagram"] = sub.add_parser("diagram", parents=[common], help="polarization emission diagram")
    sp.add_argument("--sites", default="all")
    sp.add_argument("--occupation", default=None)
    sp.add_argument("--r", type=float, default=2.1)
    sp.add_argument("--depth-nm", type=float, default=None, help="take r from the collection table")
    sp.add_argument("--axis", default="111")
    sp.add_argument("--step-deg", type=float, default=5.0)
    sp.add_argument("--sweep-depth", action="store_true")

    sp = subs["spectrum"] = sub.add_parser("spectrum", parents=[common], help="localized ZPL spectrum")
    _add_pattern(sp)
    sp.add_argument("--polarizer-deg", default="90")
    sp.add_argument("--r", type=float, default=2.1)
    sp.add_argument("--depth-nm", type=float, default=None)
    sp.add_argument("--axis", default="111")
    sp.add_argument("--resolution-meV", type=float, default=0.15)
    sp.add_argument("--grouping-tol-meV", type=float, default=0.05)
    sp.add_argument("--angle-sweep", action="store_true")

    sp = subs["ensemble"] = sub.add_parser("ensemble", parents=[common], help="strained ensemble line pattern")
    sp.add_argument("--strain-dir", default="110")
    sp.add_argument("--strain", type=float, default=0.001)
    sp.add_argument("--calibration", default=None)
    sp.add_argument("--zpl-nm", type=float, default=BULK_ZPL_NM)
    sp.add_argument("--allow-nonlinear", action="store_true")
    sp.add_argument("--sweep", action="store_true")
    sp.add_argument("--sweep-max", type=float, default=0.002)
    sp.add_argument("--sweep-steps", type=int, default=9)

    for name in ("roulette", "g2", "classify"):
        sp = subs[name] = sub.add_parser(name, parents=[common])
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--excitation-rate", type=float, default=0.05, help="1/ns")
        sp.add_argument("--radiative-rate", type=float, default=1.0 / 6.0, help="1/ns")
        sp.add_argument("--workers", type=int, default=1)
    for name in ("roulette", "classify"):
        sp = subs[name]
        _add_pattern(sp)
        sp.add_argument("--n-emitters", type=int, default=1)
        sp.add_argument("--r", type=float, default=2.1)
        sp.add_argument("--depth-nm", type=float, default=None)
        sp.add_argument("--axis", default="111")
        sp.add_argument("--resolution-meV", type=float, default=0.15)
        sp.add_argument("--n-photons", type=int, default=1_000_000)
    sp = subs["roulette"]
    sp.help = "roulette-wheel hopping Monte Carlo"
    sp.add_argument("--polarizer-deg", default="90")
    sp.add_argument("--sampling", choices=["convolve", "jitter"], default="convolve")
    sp.add_argument("--write-stream", action="store_true")
    sp = subs["g2"]
    sp.add_argument("--n-emitters", type=int, default=1)
    sp.add_argument("--n-photons", type=int, default=200_000)
    sp.add_argument("--bin-ns", type=float, default=0.5)
    sp.add_argument("--max-delay-ns", type=float, default=100.0)
    sp.add_argument("--surrogate", action="store_true", help="shuffle timestamps (Poisson reference)")
    sp = subs["classify"]
    sp.add_argument("--simulate", choices=["g0", "g1", "uniform", "custom"], default=None)
    sp.add_argument("--spectrum", default=None, help="comma-separated ANGLE:PATH entries")
    sp.add_argument("--diagram", default=None)
    sp.add_argument("--max-peaks", type=int, default=4)
    sp.add_argument("--allow-pair-splitting", action="store_true")
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise MalformedInputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"config {path} is not JSON: {exc}") from exc
    cfg = data.get("config", data) if isinstance(data, dict) else None
    if not isinstance(cfg, dict) or not isinstance(cfg.get("params", {}), dict):
        raise SchemaError(f"config {path} must be an object with 'command' and 'params'")
    return cfg


def resolve(argv: list[str]) -> tuple[str, dict, argparse.Namespace]:
    parser, subs = build_parser()
    ns = parser.parse_args(argv)
    if ns.config:
        cfg = _load_config(ns.config)
        if cfg.get("command", ns.command) != ns.command:
            raise SchemaError(f"config is for '{cfg['command']}', not '{ns.command}'")
        params = cfg.get("params", {})
        known = set(vars(ns)) - META_KEYS
        unknown = sorted(set(params) - known)
        if unknown:
            raise SchemaError(f"unknown config keys for {ns.command}: {unknown}", column=unknown[0])
        subs[ns.command].set_defaults(**params)
        if cfg.get("out_dir") is not None:
            subs[ns.command].set_defaults(out_dir=cfg["out_dir"])
        ns = parser.parse_args(argv)
    params = {k: v for k, v in sorted(vars(ns).items()) if k not in META_KEYS}
    return ns.command, params, ns


def _versions() -> dict:
    return {"gcenter": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _fail(exc: BaseException, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("row", "column"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        command, params, ns = resolve(argv)
        config = {"command": command, "params": params}
        if ns.emit_config:
            print(json.dumps(config, indent=2, sort_keys=True))
            return EXIT_OK
        out = Path(ns.out_dir or os.environ.get(OUT_ENV) or DEFAULT_OUT)
        out.mkdir(parents=True, exist_ok=True)
        files, summary = COMMANDS[command](params, out)
        manifest = {
            "config": config,
            "versions": _versions(),
            "artifacts": [{"path": f.name, "sha256": sha256(f), "bytes": f.stat().st_size} for f in files],
            "summary": summary,
        }
        write_json(out / "manifest.json", manifest)
        print(json.dumps({"command": command, "out_dir": str(out), **summary}, sort_keys=True, default=str))
        return EXIT_OK
    except UsageError as exc:
        return _fail(exc, EXIT_USAGE)
    except MalformedInputError as exc:
        return _fail(exc, EXIT_MALFORMED)
    except SchemaError as exc:
        return _fail(exc, EXIT_SCHEMA)
    except (GCenterError, ValueError) as exc:
        return _fail(exc, EXIT_MODEL)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc, EXIT_INTERNAL)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
