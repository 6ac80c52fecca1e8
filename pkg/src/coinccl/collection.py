"""Photon and electron detection-efficiency factors.

The photon efficiency factorizes as ``alpha_gamma = A(khat_perp) f(E) d(E)``:
mirror acceptance times fiber transmission times detector efficiency.
Electron energy filtering and photon band-pass filters are rect windows
with inclusive edges.
"""

import io
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .constants import energy_to_wavelength
from .errors import DomainError, ParseError, RangeError, ValidationError

__all__ = [
    "ParametricMirror",
    "TabulatedMirror",
    "EfficiencyCurve",
    "EfficiencyCurves",
    "ElectronEnergyFilter",
    "PhotonBandpass",
    "CollectionModel",
    "mirror_acceptance",
    "photon_efficiency",
    "electron_filter_weight",
    "bandpass_weight",
    "load_curve",
    "load_tabulated_mirror",
    "default_curves",
    "full_disk_mirror",
]

_KHAT_TOL = 1e-12


def _wrap(phi):
    """Map angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - phi, 2.0 * np.pi)


def _in_polygon(px, py, poly):
    """Even-odd point-in-polygon test, vectorized over points."""
    poly = np.asarray(poly, dtype=float)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    px = np.asarray(px, dtype=float)[..., None]
    py = np.asarray(py, dtype=float)[..., None]
    crosses = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    return np.logical_xor.reduce(crosses & (px < xint), axis=-1)


@dataclass(frozen=True, eq=False)
class ParametricMirror:
    """Horseshoe acceptance in photon emission angles.

    Accepts ``theta_min <= theta <= theta_max`` outside the azimuthal gap
    ``|phi - gap_center| < gap_halfwidth`` and outside every shading
    polygon, given as vertex lists in the (theta, phi) plane.
    """

    theta_min: float = 0.35
    theta_max: float = 1.25
    gap_center: float = 0.0
    gap_halfwidth: float = 0.5
    shading_polygons: tuple = ()

    def __post_init__(self):
        if not (0.0 <= self.theta_min < self.theta_max <= 0.5 * np.pi):
            raise ValidationError("mirror needs 0 <= theta_min < theta_max <= pi/2")
        if self.gap_halfwidth < 0:
            raise ValidationError("gap_halfwidth must be >= 0")
        polys = tuple(np.asarray(p, dtype=float) for p in self.shading_polygons)
        for p in polys:
            if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
                raise ValidationError("shading polygons need >= 3 (theta, phi) vertices")
        object.__setattr__(self, "shading_polygons", polys)

    def contains(self, theta, phi):
        """Boolean acceptance at emission angles (theta, phi)."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        ok = (theta >= self.theta_min) & (theta <= self.theta_max)
        ok &= np.abs(_wrap(phi - self.gap_center)) >= self.gap_halfwidth
        for poly in self.shading_polygons:
            ok &= ~_in_polygon(theta, _wrap(phi), poly)
        return ok

    def acceptance(self, khat_perp):
        kx, ky = _split_khat(khat_perp)
        s = np.hypot(kx, ky)
        theta = np.arcsin(np.minimum(s, 1.0))
        phi = np.arctan2(ky, kx)
        return self.contains(theta, phi).astype(float)


def full_disk_mirror(theta_max=0.5 * np.pi):
    """Rotationally symmetric acceptance without hole or gap."""
    return ParametricMirror(0.0, theta_max, 0.0, 0.0)


@dataclass(frozen=True, eq=False)
class TabulatedMirror:
    """Acceptance tabulated on a rectangular (khat_x, khat_y) grid.

    Bilinear interpolation clamped to [0, 1]; zero outside the grid.
    """

    kx: np.ndarray
    ky: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        kx = np.asarray(self.kx, dtype=float)
        ky = np.asarray(self.ky, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (kx.size, ky.size):
            raise ValidationError("values must have shape (len(kx), len(ky))")
        if np.any(np.diff(kx) <= 0) or np.any(np.diff(ky) <= 0):
            raise ValidationError("mirror grid axes must be strictly increasing")
        if np.any(~((v >= 0) & (v <= 1))):
            raise ValidationError("mirror acceptance values must lie in [0, 1]")
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)
        object.__setattr__(self, "values", v)

    def acceptance(self, khat_perp):
        kx, ky = _split_khat(khat_perp)
        inside = (kx >= self.kx[0]) & (kx <= self.kx[-1]) & (ky >= self.ky[0]) & (ky <= self.ky[-1])
        i = np.clip(np.searchsorted(self.kx, kx, side="right") - 1, 0, self.kx.size - 2)
        j = np.clip(np.searchsorted(self.ky, ky, side="right") - 1, 0, self.ky.size - 2)
        tx = (kx - self.kx[i]) / (self.kx[i + 1] - self.kx[i])
        ty = (ky - self.ky[j]) / (self.ky[j + 1] - self.ky[j])
        v = self.values
        val = ((1 - tx) * (1 - ty) * v[i, j] + tx * (1 - ty) * v[i + 1, j]
               + (1 - tx) * ty * v[i, j + 1] + tx * ty * v[i + 1, j + 1])
        return np.where(inside, np.clip(val, 0.0, 1.0), 0.0)

    def contains(self, theta, phi):
        """Graded acceptance at emission angles, for solid-angle integrals."""
        s = np.sin(np.asarray(theta, dtype=float))
        phi = np.asarray(phi, dtype=float)
        return self.acceptance(np.stack([s * np.cos(phi), s * np.sin(phi)], axis=-1))


def _split_khat(khat_perp):
    k = np.asarray(khat_perp, dtype=float)
    if k.shape[-1] != 2:
        raise ValidationError("khat_perp must have a trailing axis of length 2")
    kx, ky = k[..., 0], k[..., 1]
    if np.any(np.hypot(kx, ky) > 1.0 + _KHAT_TOL):
        raise DomainError("|khat_perp| must not exceed 1")
    return kx, ky


def mirror_acceptance(model, khat_perp):
    """Fraction of photons emitted along ``khat_perp`` that the mirror collects.

    Parameters
    ----------
    model : ParametricMirror or TabulatedMirror
    khat_perp : array_like, shape (..., 2)
        Transverse part of the unit emission direction.

    Returns
    -------
    ndarray of float in [0, 1], shape (...)

    Raises
    ------
    DomainError
        If ``|khat_perp| > 1``.
    """
    out = model.acceptance(khat_perp)
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class EfficiencyCurve:
    """Piecewise-linear efficiency versus photon energy (no extrapolation)."""

    energy: np.ndarray
    value: np.ndarray
    name: str = ""

    def __post_init__(self):
        e = np.asarray(self.energy, dtype=float)
        v = np.asarray(self.value, dtype=float)
        if e.ndim != 1 or e.shape != v.shape or e.size < 2:
            raise ValidationError("efficiency curve needs >= 2 (energy, value) samples")
        if np.any(np.diff(e) <= 0):
            raise ValidationError("efficiency curve energies must be strictly increasing")
        if np.any(~((v >= 0) & (v <= 1))):
            raise ValidationError("efficiency values must lie in [0, 1]")
        object.__setattr__(self, "energy", e)
        object.__setattr__(self, "value", v)

    def __call__(self, energy):
        e = np.asarray(energy, dtype=float)
        if e.size and (np.any(~(e >= self.energy[0])) or np.any(~(e <= self.energy[-1]))):
            raise RangeError(
                f"energy outside {self.name or 'efficiency'} curve range "
                f"[{self.energy[0]}, {self.energy[-1]}] eV"
            )
        out = np.interp(e, self.energy, self.value)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class EfficiencyCurves:
    """Fiber transmission and detector quantum efficiency."""

    fiber: EfficiencyCurve
    detector: EfficiencyCurve


def load_curve(source, name=""):
    """Read CSV rows ``energy_eV,value``; ``#`` comments and a header are skipped."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    rows = []
    seen_data = False
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", lineno)
        try:
            rows.append((float(parts[0]), float(parts[1])))
            seen_data = True
        except ValueError:
            if seen_data:
                raise ParseError(f"non-numeric field in {line!r}", lineno) from None
    if len(rows) < 2:
        raise ValidationError("efficiency curve needs >= 2 samples")
    arr = np.asarray(rows)
    return EfficiencyCurve(arr[:, 0], arr[:, 1], name=name)


def load_tabulated_mirror(source):
    """Read CSV rows ``khat_x,khat_y,value`` describing a full rectangular grid."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    rows = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}", lineno)
        try:
            rows.append(tuple(float(p) for p in parts))
        except ValueError:
            if rows:
                raise ParseError(f"non-numeric field in {line!r}", lineno) from None
    arr = np.asarray(rows)
    kx = np.unique(arr[:, 0])
    ky = np.unique(arr[:, 1])
    if kx.size * ky.size != arr.shape[0]:
        raise ValidationError("tabulated mirror rows do not form a complete grid")
    vals = np.full((kx.size, ky.size), np.nan)
    vals[np.searchsorted(kx, arr[:, 0]), np.searchsorted(ky, arr[:, 1])] = arr[:, 2]
    if np.any(np.isnan(vals)):
        raise ValidationError("tabulated mirror grid has duplicate or missing nodes")
    return TabulatedMirror(kx, ky, vals)


def default_curves():
    """Bundled placeholder fiber and detector curves (not measured data)."""
    base = resources.files("coinccl").joinpath("data")
    fiber = load_curve(base.joinpath("fiber_transmission.csv").read_bytes(), name="fiber")
    det = load_curve(base.joinpath("detector_qe.csv").read_bytes(), name="detector")
    return EfficiencyCurves(fiber, det)


def photon_efficiency(model, curves, energy, khat_perp):
    """Overall photon detection efficiency ``A(khat) f(E) d(E)``.

    ``energy`` and ``khat_perp[..., 0]`` broadcast together.
    """
    a = mirror_acceptance(model, khat_perp)
    return a * curves.fiber(energy) * curves.detector(energy)


@dataclass(frozen=True)
class ElectronEnergyFilter:
    """Energy-selecting slit: pass ``|E - center| <= halfwidth`` (eV)."""

    center: float = 0.0
    halfwidth: float = 1.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not self.halfwidth > 0:
            raise ValidationError("energy filter halfwidth must be > 0 when enabled")


def electron_filter_weight(filt, energy):
    """1 inside the (inclusive) energy window, else 0; 1 when disabled."""
    e = np.asarray(energy, dtype=float)
    if not filt.enabled:
        out = np.ones_like(e)
    else:
        out = (np.abs(e - filt.center) <= filt.halfwidth).astype(float)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class PhotonBandpass:
    """Band-pass filter of full width ``fwhm`` (nm) about ``center`` (nm)."""

    center: float = 550.0
    fwhm: float = 40.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not self.fwhm > 0:
            raise ValidationError("band-pass fwhm must be > 0 when enabled")

    @property
    def energy_range(self):
        """Accepted photon-energy interval in eV (inclusive)."""
        if not self.enabled:
            return (0.0, np.inf)
        hi_lam = self.center + 0.5 * self.fwhm
        lo_lam = self.center - 0.5 * self.fwhm
        return (float(energy_to_wavelength(hi_lam)), float(energy_to_wavelength(lo_lam)) if lo_lam > 0 else np.inf)


def bandpass_weight(bp, energy):
    """1 iff the photon wavelength lies within ``center +- fwhm/2``; 1 when disabled."""
    e = np.asarray(energy, dtype=float)
    if np.any(~(e > 0)):
        raise ValidationError("photon energy must be positive")
    if not bp.enabled:
        out = np.ones_like(e)
    else:
        lam = energy_to_wavelength(e)
        out = (np.abs(lam - bp.center) <= 0.5 * bp.fwhm).astype(float)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CollectionModel:
    """Everything that decides whether a pair is detected in coincidence."""

    mirror: object = field(default_factory=ParametricMirror)
    curves: EfficiencyCurves = field(default_factory=default_curves)
    electron_filter: ElectronEnergyFilter = field(default_factory=ElectronEnergyFilter)
    photon_bandpass: PhotonBandpass = field(default_factory=PhotonBandpass)
