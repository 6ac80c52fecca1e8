"""Run configuration: JSON schema, validation, hashing and object builders.

A run config is one JSON document. Unknown keys are rejected at every
level. Relative file paths inside the document are resolved against the
directory of the config file.
"""

import copy
import hashlib
import json
import os
from importlib import resources

import jsonschema

from .collection import (
    CollectionModel,
    EfficiencyCurves,
    ElectronEnergyFilter,
    ParametricMirror,
    PhotonBandpass,
    default_curves,
    full_disk_mirror,
    load_curve,
    load_tabulated_mirror,
)
from .errors import ConfigError
from .eventgen import DetectorModel, GeneratorConfig, current_to_rate
from .lad import ImageSpec
from .optics import load_dielectric_table, load_silicon, vacuum_table
from .pipeline import AnalysisConfig
from .slab import SlabConfig, make_kinematics

__all__ = [
    "SCHEMA",
    "RunConfig",
    "load_config",
    "example_config",
    "example_names",
    "config_hash",
]

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_BOOL = {"type": "boolean"}
_INT = {"type": "integer"}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


SCHEMA = _obj({
    "name": {"type": "string"},
    "description": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    "output_dir": {"type": "string"},
    "slab": _obj({
        "dielectric": {"type": "string"},
        "thickness_nm": _POS,
        "beam_energy_eV": _POS,
    }),
    "map": _obj({
        "energy_min_eV": _POS,
        "energy_max_eV": _POS,
        "n_energy": {"type": "integer", "minimum": 2},
        "q_max_eV": _POS,
        "n_q": {"type": "integer", "minimum": 2},
        "energy_fwhm_eV": _NONNEG,
        "angle_fwhm_urad": _NONNEG,
        "ridge_energies_eV": {"type": "array", "items": _POS},
        "two_route_energies_eV": {"type": "array", "items": _POS},
        "formats": {"type": "array", "items": {"enum": ["text", "binary"]}, "minItems": 1},
    }),
    "collection": _obj({
        "mirror": {"oneOf": [
            _obj({"type": {"const": "parametric"}, "theta_min": _NONNEG, "theta_max": _POS,
                  "gap_center": _NUM, "gap_halfwidth": _NONNEG}, ["type"]),
            _obj({"type": {"const": "full_disk"}, "theta_max": _POS}, ["type"]),
            _obj({"type": {"const": "tabulated"}, "path": {"type": "string"}}, ["type", "path"]),
        ]},
        "fiber": {"type": "string"},
        "detector": {"type": "string"},
        "electron_filter": _obj({"center_eV": _NUM, "halfwidth_eV": _POS, "enabled": _BOOL}),
        "photon_bandpass": _obj({"center_nm": _POS, "fwhm_nm": _POS, "enabled": _BOOL}),
    }),
    "lad": _obj({
        "mode": {"enum": ["plain", "coincidence"]},
        "n_pixels": {"type": "integer", "minimum": 2},
        "half_range_urad": _POS,
        "energy_step_eV": _POS,
        "zero_loss_amplitude": _NONNEG,
        "zero_loss_width_urad": _POS,
    }),
    "generator": _obj({
        "duration_s": _NONNEG,
        "electron_rate": _NONNEG,
        "beam_current_A": _NONNEG,
        "pair_detect_prob": _PROB,
        "electron_accept_prob": _PROB,
        "delay_mean_ns": _NUM,
        "delay_fwhm_ns": _NONNEG,
        "toa_quantum_ns": _POS,
        "photon_quantum_ns": _POS,
        "tot_quantum_ns": _POS,
        "mean_cluster_size": {"type": "number", "minimum": 1},
        "hit_jitter_ns": _NONNEG,
        "tot_median_ns": _POS,
        "tot_sigma": _NONNEG,
        "background_photon_rate": _NONNEG,
        "dark_rate": _NONNEG,
        "column_offsets_ns": {"type": "object", "patternProperties": {"^[0-9]+$": _NUM},
                              "additionalProperties": False},
        "defective_pixels": {"type": "array", "items": {"type": "array", "items": _INT,
                                                        "minItems": 2, "maxItems": 2}},
        "drift_velocity_px_per_s": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "zero_loss_fwhm_eV": _NONNEG,
        "beam_divergence_urad": _NONNEG,
        "inelastic_prob": _PROB,
        "format": {"enum": ["bin", "csv"]},
    }),
    "analysis": _obj({
        "eps": _POS,
        "time_unit_ns": _POS,
        "tot_cut_ns": _NONNEG,
        "window_ns": _POS,
        "bin_width_ns": _POS,
        "guard_ns": _NONNEG,
        "interval_s": _POS,
        "tau_ns": _POS,
        "background_offset_ns": _NUM,
        "exclusive": _BOOL,
        "refine_delay": _BOOL,
        "expected_dt_ns": _NUM,
        "drift_window_s": _NONNEG,
        "use_generator_corrections": _BOOL,
        "alpha_e": _PROB,
        "p_coh_in_window": _PROB,
        "electron_rate": _NONNEG,
    }),
})

_EXAMPLES = ("fig3", "fig4", "fig5", "s2", "s3", "s4")


def canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(doc):
    """SHA-256 of the canonical JSON encoding of a config document."""
    return hashlib.sha256(canonical(doc).encode("utf-8")).hexdigest()


class RunConfig:
    """Validated run document plus builders for the model objects.

    Parameters
    ----------
    doc : dict
        Parsed JSON document.
    base_dir : str, optional
        Directory used to resolve relative paths in the document.
    """

    def __init__(self, doc, base_dir="."):
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config {where}: {exc.message}") from None
        self.doc = copy.deepcopy(doc)
        self.base_dir = base_dir

    # generic access -----------------------------------------------------

    def section(self, name):
        return self.doc.get(name, {})

    def with_overrides(self, **paths):
        """Copy with ``section__key=value`` overrides (``None`` values skipped)."""
        doc = copy.deepcopy(self.doc)
        for key, val in paths.items():
            if val is None:
                continue
            if "__" in key:
                sec, k = key.split("__", 1)
                doc.setdefault(sec, {})[k] = val
            else:
                doc[key] = val
        return RunConfig(doc, self.base_dir)

    @property
    def hash(self):
        return config_hash(self.doc)

    @property
    def seed(self):
        return int(self.doc.get("seed", 0))

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    # builders -------------------------------------------------------------

    def dielectric(self):
        src = self.section("slab").get("dielectric", "silicon")
        if src == "silicon":
            return load_silicon()
        if src == "vacuum":
            return vacuum_table()
        path = self.resolve(src)
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        return load_dielectric_table(path, name=os.path.basename(path))

    def slab(self):
        s = self.section("slab")
        return SlabConfig(thickness_d=float(s.get("thickness_nm", 100.0)), dielectric=self.dielectric(),
                          kinematics=make_kinematics(float(s.get("beam_energy_eV", 200e3))))

    def _curve(self, key):
        path = self.section("collection").get(key)
        if path is None:
            return None
        p = self.resolve(path)
        if not os.path.exists(p):
            raise FileNotFoundError(p)
        return load_curve(p, name=key)

    def mirror(self):
        m = self.section("collection").get("mirror", {"type": "parametric"})
        kind = m["type"]
        if kind == "parametric":
            args = {k: float(m[k]) for k in ("theta_min", "theta_max", "gap_center", "gap_halfwidth") if k in m}
            return ParametricMirror(**args)
        if kind == "full_disk":
            return full_disk_mirror(float(m.get("theta_max", 1.5707963267948966)))
        p = self.resolve(m["path"])
        if not os.path.exists(p):
            raise FileNotFoundError(p)
        return load_tabulated_mirror(p)

    def electron_filter(self):
        f = self.section("collection").get("electron_filter", {})
        return ElectronEnergyFilter(float(f.get("center_eV", 0.0)), float(f.get("halfwidth_eV", 1.0)),
                                    bool(f.get("enabled", False)))

    def photon_bandpass(self):
        b = self.section("collection").get("photon_bandpass", {})
        return PhotonBandpass(float(b.get("center_nm", 550.0)), float(b.get("fwhm_nm", 40.0)),
                              bool(b.get("enabled", False)))

    def collection(self):
        base = default_curves()
        fiber = self._curve("fiber") or base.fiber
        det = self._curve("detector") or base.detector
        return CollectionModel(self.mirror(), EfficiencyCurves(fiber, det), self.electron_filter(),
                               self.photon_bandpass())

    def image_spec(self):
        s = self.section("lad")
        return ImageSpec(n_pixels=int(s.get("n_pixels", 256)), half_range_urad=float(s.get("half_range_urad", 15.0)),
                         energy_step=float(s.get("energy_step_eV", 0.01)),
                         zero_loss_amplitude=float(s.get("zero_loss_amplitude", 0.0)),
                         zero_loss_width_urad=float(s.get("zero_loss_width_urad", 0.6)))

    def lad_mode(self):
        return self.section("lad").get("mode", "plain")

    def generator(self):
        g = self.section("generator")
        spec = self.image_spec()
        rate = g.get("electron_rate")
        if rate is None:
            rate = current_to_rate(g["beam_current_A"]) if "beam_current_A" in g else 1e6
        offsets = tuple(sorted((int(k), float(v)) for k, v in g.get("column_offsets_ns", {}).items()))
        return GeneratorConfig(
            duration=float(g.get("duration_s", 1.0)),
            electron_rate=float(rate),
            pair_detect_prob=float(g.get("pair_detect_prob", 1e-5)),
            electron_accept_prob=float(g.get("electron_accept_prob", 0.26)),
            delay_mean=float(g.get("delay_mean_ns", -80.0)),
            delay_fwhm=float(g.get("delay_fwhm_ns", 42.0)),
            toa_quantum=float(g.get("toa_quantum_ns", 1.5625)),
            photon_quantum=float(g.get("photon_quantum_ns", 0.001)),
            tot_quantum=float(g.get("tot_quantum_ns", 25.0)),
            mean_cluster_size=float(g.get("mean_cluster_size", 2.8)),
            hit_jitter=float(g.get("hit_jitter_ns", 2.0)),
            tot_median=float(g.get("tot_median_ns", 1000.0)),
            tot_sigma=float(g.get("tot_sigma", 0.3)),
            background_photon_rate=float(g.get("background_photon_rate", 0.0)),
            dark_rate=float(g.get("dark_rate", 0.0)),
            column_offsets=offsets,
            defective_pixels=tuple(tuple(int(v) for v in p) for p in g.get("defective_pixels", [])),
            drift_velocity=tuple(float(v) for v in g.get("drift_velocity_px_per_s", (0.0, 0.0))),
            zero_loss_fwhm=float(g.get("zero_loss_fwhm_eV", 0.9)),
            beam_divergence_urad=float(g.get("beam_divergence_urad", 0.3)),
            inelastic_prob=float(g.get("inelastic_prob", 0.0)),
            electron_filter=self.electron_filter(),
            detector=DetectorModel(spec.n_pixels, spec.half_range_urad),
            kinetic_energy=float(self.section("slab").get("beam_energy_eV", 200e3)),
            seed=self.seed,
        )

    def analysis(self, generator=None, light_line_radius_px=None):
        a = self.section("analysis")
        offsets, defects = None, ()
        if a.get("use_generator_corrections", True) and generator is not None:
            offsets = dict(generator.column_offsets)
            defects = generator.defective_pixels
        physics = None
        if "p_coh_in_window" in a:
            physics = {"p_coh_in_window": float(a["p_coh_in_window"]),
                       "alpha_e": float(a.get("alpha_e", 0.26)),
                       "electron_rate": float(a.get("electron_rate",
                                                    generator.electron_rate if generator else 0.0))}
        return AnalysisConfig(
            eps=float(a.get("eps", 3.0)),
            time_unit=float(a.get("time_unit_ns", 50.0)),
            tot_cut=float(a.get("tot_cut_ns", 750.0)),
            window=float(a.get("window_ns", 200.0)),
            bin_width=float(a.get("bin_width_ns", 1.5625)),
            guard=float(a.get("guard_ns", 200.0)),
            interval=float(a.get("interval_s", 10.0)),
            tau=float(a.get("tau_ns", 50.0)),
            background_offset=float(a.get("background_offset_ns", -100.0)),
            exclusive=bool(a.get("exclusive", False)),
            refine_delay=bool(a.get("refine_delay", True)),
            expected_dt=a.get("expected_dt_ns"),
            column_offsets=offsets,
            defective_pixels=defects,
            drift_window=float(a.get("drift_window_s", 50.0)),
            light_line_radius_px=light_line_radius_px,
            physics=physics,
        )


def load_config(path):
    """Read and validate a config file."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig(doc, os.path.dirname(os.path.abspath(path)))


def example_names():
    return _EXAMPLES


def example_config(name):
    """One of the bundled figure recipes (fig3, fig4, fig5, s2, s3, s4)."""
    if name not in _EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {', '.join(_EXAMPLES)}")
    raw = resources.files("coinccl").joinpath("configs", f"{name}.json").read_text(encoding="utf-8")
    return RunConfig(json.loads(raw), ".")
