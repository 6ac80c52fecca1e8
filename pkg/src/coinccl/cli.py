"""``coinccl`` command line: physics-map, lad, simulate, analyze.

Exit codes: 0 success, 1 empty-analysis warnings under ``--strict``,
2 configuration or I/O error, 3 numerical failure.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .collection import ElectronEnergyFilter
from .config import example_config, example_names, load_config
from .constants import HBARC
from .errors import ConfigError, NoSignalError, NumericalError, ValidationError
from .eventgen import LossDistribution, PairDistribution, generate_stream
from .formats import read_events, write_events, write_json, write_matrix_binary, write_matrix_text, write_truth
from .lad import histogram_image, lad_image, most_probable_deflection, radial_profile
from .pipeline import analyze_stream
from .slab import convolve_map, gamma_tr, gamma_tr_q, loss_map, max_threads, ridge_position

log = logging.getLogger("coinccl")

EXIT_OK, EXIT_WARN, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class _Warn(Exception):
    """Analysis produced no signal and --strict was given."""


# ----------------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------------

def _load(args):
    src = args.config
    if src.startswith("example:"):
        return example_config(src.split(":", 1)[1])
    if not os.path.exists(src):
        raise FileNotFoundError(src)
    return load_config(src)


def _out_dir(args, rc):
    d = args.out or rc.doc.get("output_dir") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _header(rc, **kw):
    h = {"config_hash": rc.hash, "config_name": rc.doc.get("name", ""), "version": __version__}
    h.update(kw)
    return h


def _write_matrix(out, stem, matrix, header, formats=("text",)):
    if "text" in formats:
        write_matrix_text(os.path.join(out, stem + ".txt"), matrix, header)
    if "binary" in formats:
        write_matrix_binary(os.path.join(out, stem + ".bin"), {stem: matrix}, header)


def _grids(rc):
    m = rc.section("map")
    e = np.round(np.linspace(float(m.get("energy_min_eV", 0.5)), float(m.get("energy_max_eV", 5.0)),
                             int(m.get("n_energy", 451))), 10)
    q = np.linspace(0.0, float(m.get("q_max_eV", 15.0)) / HBARC, int(m.get("n_q", 600)))
    return e, q


def _ridge(cfg, lmap, energies):
    """Grid argmax and refined global argmax of rho at each energy."""
    out = []
    for ec in energies:
        i = int(np.argmin(np.abs(lmap.energy_axis - ec)))
        j = int(np.argmax(lmap.rho[i]))
        e = float(lmap.energy_axis[i])
        k = e / HBARC
        q_ref, r_ref = ridge_position(cfg, e, q_max=float(lmap.qperp_axis[-1]))
        out.append({"energy_eV": e, "light_line_nm_inv": k,
                    "q_peak_grid_nm_inv": float(lmap.qperp_axis[j]),
                    "q_peak_nm_inv": q_ref, "rho_peak": r_ref,
                    "relative_offset": q_ref / k - 1.0})
    return out


def _trapz(y, x):
    return float(np.sum(0.5 * (y[..., 1:] + y[..., :-1]) * np.diff(x)))


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def cmd_physics_map(args):
    rc = _load(args)
    out = _out_dir(args, rc)
    cfg = rc.slab()
    m = rc.section("map")
    eg, qg = _grids(rc)
    raw = loss_map(cfg, eg, qg, threads=max_threads())
    fe = float(m.get("energy_fwhm_eV", 0.0))
    fa = float(m.get("angle_fwhm_urad", 0.0))
    q_fwhm = cfg.kinematics.wavenumber_q * fa * 1e-6
    formats = tuple(m.get("formats", ["text"]))
    axes = {"energy_axis_eV": eg, "qperp_axis_nm_inv": qg}
    units = {"rho": "eV^-1 nm^2 (per 2 pi Q dQ dE)", "rho_tr": "eV^-1 nm^2 (per 2 pi Q dQ dE)"}
    for name, mat in (("rho", raw.rho), ("rho_tr", raw.rho_tr)):
        _write_matrix(out, name, mat, _header(rc, quantity=name, units=units[name], rows="energy",
                                              cols="qperp", **axes), formats)
    if fe > 0 or q_fwhm > 0:
        for name, mat in (("rho", raw.rho), ("rho_tr", raw.rho_tr)):
            blurred = convolve_map(eg, qg, mat, fe, q_fwhm)
            _write_matrix(out, name + "_blurred", blurred,
                          _header(rc, quantity=name, units=units[name], energy_fwhm_eV=fe,
                                  q_fwhm_nm_inv=q_fwhm, **axes), formats)
    w = 2.0 * np.pi * qg
    gamma = np.array([_trapz(raw.rho[i] * w, qg) for i in range(eg.size)])
    gamma_tr_grid = np.array([_trapz(raw.rho_tr[i] * w, qg) for i in range(eg.size)])
    peak = float(np.max(np.abs(raw.rho))) if raw.rho.size else 0.0
    vacuum = rc.section("slab").get("dielectric", "silicon") == "vacuum"
    summary = {
        "config_hash": rc.hash,
        "energy_axis_eV": eg,
        "gamma_eV_inv": gamma,
        "gamma_tr_eV_inv": gamma_tr_grid,
        "q_max_nm_inv": float(qg[-1]),
        "max_abs_rho": peak,
        "max_abs_rho_tr": float(np.max(np.abs(raw.rho_tr))) if raw.rho_tr.size else 0.0,
        "ridge": _ridge(cfg, raw, m.get("ridge_energies_eV", [2.0, 2.5, 3.0, 3.5])) if not vacuum else [],
    }
    if vacuum:
        summary["vacuum_null_passed"] = bool(peak == 0.0 and summary["max_abs_rho_tr"] == 0.0)
    checks = []
    for e in m.get("two_route_energies_eV", [1.0, 2.0, 3.0, 4.0, 5.0]):
        if not (cfg.dielectric.emin <= e <= cfg.dielectric.emax):
            continue
        gq, _ = gamma_tr_q(cfg, e, rtol=1e-10)
        gt, _ = gamma_tr(cfg, e, rtol=1e-10)
        rel = abs(gq - gt) / abs(gq) if gq != 0 else abs(gt)
        checks.append({"energy_eV": e, "gamma_tr_q": gq, "gamma_tr_theta": gt, "relative_difference": rel})
    summary["two_route_check"] = checks
    write_json(os.path.join(out, "physics_summary.json"), summary)
    log.info("wrote maps (%d x %d) to %s", eg.size, qg.size, out)
    return EXIT_OK


def _lad_overrides(args, rc):
    """Fold filter flags into the document so the config hash covers them."""
    ef = bp = None
    if args.energy_center is not None:
        hw = args.energy_halfwidth if args.energy_halfwidth is not None else 0.5
        ef = {"center_eV": args.energy_center, "halfwidth_eV": hw, "enabled": True}
    if args.photon_filter:
        try:
            c, f = (float(v) for v in args.photon_filter.split(":"))
        except ValueError:
            raise ConfigError("--photon-filter expects CENTER_NM:FWHM_NM") from None
        bp = {"center_nm": c, "fwhm_nm": f, "enabled": True}
    mode = "coincidence" if args.coincidence else args.mode
    return rc.with_overrides(collection__electron_filter=ef, collection__photon_bandpass=bp, lad__mode=mode)


def cmd_lad(args):
    rc = _lad_overrides(args, _load(args))
    out = _out_dir(args, rc)
    cfg = rc.slab()
    col = rc.collection()
    mode = rc.lad_mode()
    spec = rc.image_spec()
    img = lad_image(mode, cfg, col, spec)
    prof = radial_profile(img)
    hdr = _header(rc, mode=mode, axis_urad=img.axis_urad, units="expected counts per electron",
                  center_px=list(img.center))
    _write_matrix(out, f"lad_{mode}", img.counts, hdr)
    _write_matrix(out, f"profile_{mode}", np.column_stack([prof.theta_urad, prof.qperp_axis, prof.intensity]),
                  _header(rc, mode=mode, columns=["theta_urad", "qperp_nm_inv", "intensity"]))
    summary = {"config_hash": rc.hash, "mode": mode, "total": float(img.counts.sum()),
               "energy_window_eV": [img.meta.get("energy_min_eV"), img.meta.get("energy_max_eV")]}
    try:
        th, dth = most_probable_deflection(prof)
        summary["peak_deflection_urad"] = th
        summary["peak_deflection_uncertainty_urad"] = dth
    except NoSignalError:
        summary["peak_deflection_urad"] = None
        summary["warning"] = "empty image"
    bp = col.photon_bandpass
    if bp.enabled:
        e = 2.0 * np.pi * HBARC / bp.center
        summary["light_line_urad"] = e / HBARC / cfg.kinematics.wavenumber_q * 1e6
    elif col.electron_filter.enabled:
        e = col.electron_filter.center
        summary["light_line_urad"] = e / HBARC / cfg.kinematics.wavenumber_q * 1e6
    write_json(os.path.join(out, f"lad_{mode}.json"), summary)
    if summary["peak_deflection_urad"] is None and args.strict:
        raise _Warn("empty LAD image")
    return EXIT_OK


def _physics_for(rc, cfg, gen):
    col = rc.collection()
    physics = loss = None
    if gen.pair_detect_prob > 0:
        # the generator applies the electron filter itself, on the measured loss
        physics = PairDistribution.from_model(cfg, replace(col, electron_filter=ElectronEnergyFilter()))
    if gen.inelastic_prob > 0:
        eg, qg = _grids(rc)
        qg = qg[qg <= 5.0 / HBARC * 3]
        loss = LossDistribution.from_loss_map(loss_map(cfg, eg, qg))
    return physics, loss


def cmd_simulate(args):
    rc = _load(args).with_overrides(seed=args.seed, generator__duration_s=args.duration,
                                    generator__format=args.format)
    out = _out_dir(args, rc)
    cfg = rc.slab()
    gen = rc.generator()
    physics, loss = _physics_for(rc, cfg, gen)
    stream, truth = generate_stream(gen, physics, loss)
    fmt = rc.section("generator").get("format", "bin")
    write_events(os.path.join(out, "events"), stream, rc.hash, fmt,
                 extra={"n_pairs": truth.n_pairs, "n_electrons": truth.n_electrons,
                        "pair_detect_prob": gen.pair_detect_prob,
                        "electron_accept_prob": gen.electron_accept_prob})
    write_truth(os.path.join(out, "truth.jsonl"), truth, rc.hash)
    log.info("simulated %d electrons, %d hits, %d photons", truth.n_electrons, len(stream.hits),
             len(stream.photons))
    return EXIT_OK


def cmd_analyze(args):
    rc = _load(args)
    out = _out_dir(args, rc)
    ev_dir = args.events
    if not os.path.isdir(ev_dir):
        raise FileNotFoundError(ev_dir)
    stream, side = read_events(ev_dir)
    gen = rc.generator()
    cfg = rc.slab()
    spec = rc.image_spec()
    col = rc.collection()
    ll_px = None
    if col.electron_filter.enabled:
        ll_urad = col.electron_filter.center / HBARC / cfg.kinematics.wavenumber_q * 1e6
        ll_px = ll_urad / spec.pitch_urad
    acfg = rc.analysis(gen, ll_px)
    res = analyze_stream(stream, acfg)
    report = {"config_hash": rc.hash, "events_config_hash": side.get("config_hash"),
              "live_time_s": stream.duration}
    report.update(res.summary())
    if res.metrics is None:
        report["metrics"] = None
    write_json(os.path.join(out, "report.json"), report)
    if res.histogram is not None:
        h = res.histogram
        _write_matrix(out, "crosscorr", np.column_stack([h.centers, h.counts]),
                      _header(rc, columns=["dt_center_ns", "counts"], bin_width_ns=h.bin_width,
                              window_ns=h.window))
    for which in ("signal", "background"):
        x, y = res.coincident_positions(which)
        img = histogram_image(np.rint(x), np.rint(y), spec.n_pixels, spec.pitch_urad,
                              cfg.kinematics.wavenumber_q)
        _write_matrix(out, f"coincidence_lad_{which}", img.counts,
                      _header(rc, axis_urad=img.axis_urad, units="counts"))
    if res.status != "ok" and args.strict:
        raise _Warn("; ".join(res.warnings) or res.status)
    return EXIT_OK


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="coinccl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help=f"config file or example:NAME ({', '.join(example_names())})")
        sp.add_argument("--out", help="output directory (default: config output_dir or .)")
        sp.add_argument("--strict", action="store_true", help="exit 1 on empty-analysis warnings")
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("physics-map", help="rho and rho_TR maps with a summary")
    common(sp)
    sp.set_defaults(func=cmd_physics_map)

    sp = sub.add_parser("lad", help="plain or coincidence LAD image and profile")
    common(sp)
    sp.add_argument("--mode", choices=["plain", "coincidence"])
    sp.add_argument("--coincidence", action="store_true")
    sp.add_argument("--energy-center", type=float)
    sp.add_argument("--energy-halfwidth", type=float)
    sp.add_argument("--photon-filter", metavar="CENTER:FWHM")
    sp.set_defaults(func=cmd_lad)

    sp = sub.add_parser("simulate", help="synthetic hit and photon streams with truth")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--format", choices=["bin", "csv"])
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="coincidence analysis of an event directory")
    common(sp)
    sp.add_argument("events", help="directory written by simulate")
    sp.set_defaults(func=cmd_analyze)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _Warn as exc:
        print(f"coinccl: warning: {exc}", file=sys.stderr)
        return EXIT_WARN
    except FileNotFoundError as exc:
        print(f"coinccl: error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValidationError, OSError) as exc:
        print(f"coinccl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"coinccl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
