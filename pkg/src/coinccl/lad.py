"""Low-angle-diffraction images and radial profiles.

Images are square grids in electron deflection angle ``theta_e = p_perp/p_z``
(microradians); the small-angle relation ``Q = q theta_e`` links pixels to the
transverse wavenumber of :mod:`coinccl.slab`. Pixel values are expected
counts per incident electron (density times pixel area in Q space,
integrated over the accepted energy-loss window).
"""

from dataclasses import dataclass, field

import numpy as np

from .collection import (
    CollectionModel,
    bandpass_weight,
    electron_filter_weight,
    mirror_acceptance,
)
from .constants import HBARC
from .errors import NoSignalError, ValidationError
from .slab import loss_density, tr_density

__all__ = [
    "ImageSpec",
    "LADImage",
    "RadialProfile",
    "coincidence_density",
    "lad_image",
    "histogram_image",
    "radial_profile",
    "most_probable_deflection",
    "normalize_profile",
    "energy_window",
]


@dataclass(frozen=True)
class ImageSpec:
    """Image geometry and energy-integration controls.

    Attributes
    ----------
    n_pixels : int
        Pixels per side.
    half_range_urad : float
        Half width of the field of view in microradians.
    energy_step : float
        Energy-integration step in eV.
    zero_loss_amplitude : float
        Peak of the optional zero-loss spot relative to the image maximum
        (plain mode only; 0 disables).
    zero_loss_width_urad : float
        Gaussian sigma of the zero-loss spot.
    n_radial : int
        Radial samples used to tabulate isotropic densities.
    """

    n_pixels: int = 256
    half_range_urad: float = 15.0
    energy_step: float = 0.01
    zero_loss_amplitude: float = 0.0
    zero_loss_width_urad: float = 0.6
    n_radial: int = 2048

    def __post_init__(self):
        if self.n_pixels < 2 or not self.half_range_urad > 0 or not self.energy_step > 0:
            raise ValidationError("invalid image spec")

    @property
    def pitch_urad(self):
        return 2.0 * self.half_range_urad / self.n_pixels

    @property
    def axis_urad(self):
        return (np.arange(self.n_pixels) - 0.5 * (self.n_pixels - 1)) * self.pitch_urad


@dataclass(eq=False)
class LADImage:
    """Expected counts on a square deflection-angle grid.

    ``counts[iy, ix]`` is the pixel at ``theta_x = axis_urad[ix]``,
    ``theta_y = axis_urad[iy]``; the undeflected beam sits at ``center``
    in (x, y) pixel coordinates. ``q`` is the electron wavenumber (nm^-1)
    converting angles in rad to transverse wavenumbers.
    """

    counts: np.ndarray
    axis_urad: np.ndarray
    center: tuple
    q: float
    meta: dict = field(default_factory=dict)

    @property
    def pitch_urad(self):
        return float(self.axis_urad[1] - self.axis_urad[0])


@dataclass(eq=False)
class RadialProfile:
    """Azimuthally integrated intensity ``I(p_perp)``.

    ``qperp_axis`` in nm^-1 and ``theta_urad`` are two views of the same
    radii; ``intensity[0]`` is 0 because of the ``p_perp`` Jacobian.
    """

    qperp_axis: np.ndarray
    theta_urad: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def bin_width_urad(self):
        return float(self.theta_urad[1] - self.theta_urad[0]) if self.theta_urad.size > 1 else 0.0


def coincidence_density(cfg, collection, energy, pperp):
    """Detection-weighted pair density ``rho_TR alpha(E) f d A(-p_perp c / E)``.

    Parameters
    ----------
    cfg : SlabConfig
    collection : CollectionModel
    energy : float or array_like
        Electron energy loss = photon energy, eV.
    pperp : array_like, shape (..., 2)
        Electron transverse momentum in units of hbar nm^-1.

    Returns
    -------
    ndarray
        Zero outside the filters, the mirror support and the light cone.
    """
    p = np.asarray(pperp, dtype=float)
    e = np.asarray(energy, dtype=float)
    e, px, py = np.broadcast_arrays(e, p[..., 0], p[..., 1])
    qmag = np.hypot(px, py)
    k = e / HBARC
    inside = qmag < k
    w = electron_filter_weight(collection.electron_filter, e) * bandpass_weight(collection.photon_bandpass, e)
    out = np.zeros(e.shape)
    sel = inside & (w > 0)
    if np.any(sel):
        es = e[sel]
        # photon direction is opposite to the electron recoil
        khat = -np.stack([px[sel], py[sel]], axis=-1) / k[sel, None]
        eff = (mirror_acceptance(collection.mirror, khat)
               * collection.curves.fiber(es) * collection.curves.detector(es))
        nz = eff > 0
        vals = np.zeros(es.shape)
        if np.any(nz):
            vals[nz] = tr_density(cfg, es[nz], qmag[sel][nz]) * eff[nz] * w[sel][nz]
        out[sel] = vals
    return out[()] if out.ndim == 0 else out


def energy_window(cfg, collection, step):
    """Trapezoid energy nodes covering the accepted loss window.

    The window is the intersection of the dielectric table, the efficiency
    curves, the electron filter and the photon band-pass, with nodes placed
    exactly on its edges.
    """
    lo = max(cfg.dielectric.emin, collection.curves.fiber.energy[0], collection.curves.detector.energy[0])
    hi = min(cfg.dielectric.emax, collection.curves.fiber.energy[-1], collection.curves.detector.energy[-1])
    ef = collection.electron_filter
    if ef.enabled:
        lo = max(lo, ef.center - ef.halfwidth)
        hi = min(hi, ef.center + ef.halfwidth)
    bp = collection.photon_bandpass
    if bp.enabled:
        blo, bhi = bp.energy_range
        lo = max(lo, blo)
        hi = min(hi, bhi)
    if not hi > lo:
        return np.zeros(0), np.zeros(0)
    n = max(2, int(np.ceil((hi - lo) / step - 1e-9)) + 1)
    nodes = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[[0, -1]] *= 0.5
    return nodes, w


def _plain_radial(cfg, collection, nodes, weights, radii_q):
    """int dE rho(E, Q) alpha(E) on a radial Q grid."""
    if nodes.size == 0:
        return np.zeros_like(radii_q)
    alpha = electron_filter_weight(collection.electron_filter, nodes)
    acc = np.zeros_like(radii_q)
    for e, wgt, a in zip(nodes, weights, alpha):
        if a > 0:
            acc += wgt * a * loss_density(cfg, e, radii_q)
    return acc


def lad_image(mode, cfg, collection=None, spec=None):
    """Render a plain or coincidence LAD image.

    Parameters
    ----------
    mode : {"plain", "coincidence"}
        Plain images integrate ``rho alpha``; coincidence images integrate
        :func:`coincidence_density`.
    cfg : SlabConfig
    collection : CollectionModel, optional
    spec : ImageSpec, optional

    Returns
    -------
    LADImage
    """
    collection = collection or CollectionModel()
    spec = spec or ImageSpec()
    if mode not in ("plain", "coincidence"):
        raise ValidationError(f"unknown LAD mode {mode!r}")
    q = cfg.kinematics.wavenumber_q
    ax = spec.axis_urad
    tx, ty = np.meshgrid(ax, ax, indexing="xy")
    # pixel coordinates in Q space, nm^-1
    Qx = q * tx * 1e-6
    Qy = q * ty * 1e-6
    Qr = np.hypot(Qx, Qy)
    pix_area = (q * spec.pitch_urad * 1e-6) ** 2
    nodes, weights = energy_window(cfg, collection, spec.energy_step)
    rgrid = np.linspace(0.0, Qr.max() * (1 + 1e-9), spec.n_radial)

    if mode == "plain":
        prof = _plain_radial(cfg, collection, nodes, weights, rgrid)
        img = np.interp(Qr, rgrid, prof) * pix_area
        if spec.zero_loss_amplitude > 0:
            peak = img.max() if img.max() > 0 else 1.0
            r2 = tx * tx + ty * ty
            img = img + spec.zero_loss_amplitude * peak * np.exp(-0.5 * r2 / spec.zero_loss_width_urad ** 2)
    else:
        img = np.zeros(Qr.shape)
        fiber = collection.curves
        for e, wgt in zip(nodes, weights):
            k = e / HBARC
            w = (electron_filter_weight(collection.electron_filter, e)
                 * bandpass_weight(collection.photon_bandpass, e)
                 * fiber.fiber(e) * fiber.detector(e))
            if w <= 0:
                continue
            inside = Qr < k
            if not np.any(inside):
                continue
            r_in = np.linspace(0.0, k, spec.n_radial, endpoint=False)
            dens = tr_density(cfg, e, r_in)
            vals = np.interp(Qr[inside], r_in, dens)
            khat = -np.stack([Qx[inside], Qy[inside]], axis=-1) / k
            vals *= mirror_acceptance(collection.mirror, khat)
            img[inside] += wgt * w * vals
        img *= pix_area
    img = np.maximum(img, 0.0)
    c = 0.5 * (spec.n_pixels - 1)
    meta = {"mode": mode, "energy_min_eV": float(nodes[0]) if nodes.size else None,
            "energy_max_eV": float(nodes[-1]) if nodes.size else None}
    return LADImage(img, ax.copy(), (c, c), q, meta)


def histogram_image(x_pix, y_pix, n_pixels, pitch_urad, q, weights=None):
    """Image of detected events at integer pixel coordinates."""
    x = np.asarray(x_pix, dtype=np.int64)
    y = np.asarray(y_pix, dtype=np.int64)
    ok = (x >= 0) & (x < n_pixels) & (y >= 0) & (y < n_pixels)
    img = np.zeros((n_pixels, n_pixels))
    np.add.at(img, (y[ok], x[ok]), 1.0 if weights is None else np.asarray(weights)[ok])
    ax = (np.arange(n_pixels) - 0.5 * (n_pixels - 1)) * pitch_urad
    c = 0.5 * (n_pixels - 1)
    return LADImage(img, ax, (c, c), q, {"mode": "events"})


def _bilinear(img, x, y):
    """Sample ``img[y, x]`` bilinearly at fractional pixel coordinates; 0 outside."""
    ny, nx = img.shape
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    out = np.zeros(np.shape(x))
    for dx, dy, w in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                      (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        xi = x0 + dx
        yi = y0 + dy
        ok = (xi >= 0) & (xi < nx) & (yi >= 0) & (yi < ny)
        out += np.where(ok, w * img[np.clip(yi, 0, ny - 1), np.clip(xi, 0, nx - 1)], 0.0)
    return out


def radial_profile(img, n_phi=720):
    """Azimuthal integral ``I(p_perp) = p_perp int dphi I`` of an image.

    Radii step by one pixel pitch from 0 up to the largest circle that fits
    inside the image. Angular samples are bilinear interpolations on the
    circle, weighted ``2 pi / n_phi``.
    """
    counts = np.asarray(img.counts, dtype=float)
    cx, cy = img.center
    n = counts.shape[0]
    if not (0 <= cx <= n - 1 and 0 <= cy <= n - 1):
        raise ValidationError("image center lies outside the image")
    r_max = min(cx, cy, n - 1 - cx, n - 1 - cy)
    radii = np.arange(int(np.floor(r_max + 1e-9)) + 1, dtype=float)
    phi = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    xs = cx + radii[:, None] * np.cos(phi)[None, :]
    ys = cy + radii[:, None] * np.sin(phi)[None, :]
    ring = _bilinear(counts, xs, ys).sum(axis=1) * (2.0 * np.pi / n_phi)
    pitch = img.pitch_urad
    theta = radii * pitch
    qperp = img.q * theta * 1e-6
    intensity = qperp * ring
    return RadialProfile(qperp, theta, np.maximum(intensity, 0.0), {"n_phi": n_phi})


def normalize_profile(profile):
    """Scale a profile to unit peak (an output convention, not physics)."""
    peak = profile.intensity.max()
    if not peak > 0:
        raise NoSignalError("cannot normalize an all-zero profile")
    return RadialProfile(profile.qperp_axis, profile.theta_urad, profile.intensity / peak,
                         dict(profile.meta, normalized="unit_peak"))


def most_probable_deflection(profile):
    """Peak deflection angle with 3-point parabolic refinement.

    Returns
    -------
    theta_urad, uncertainty_urad : float
        The uncertainty is half a profile bin.

    Raises
    ------
    NoSignalError
        If the profile is all zero.
    """
    y = np.asarray(profile.intensity, dtype=float)
    th = np.asarray(profile.theta_urad, dtype=float)
    if y.size == 0 or not np.any(y > 0):
        raise NoSignalError("profile has no signal")
    i = int(np.argmax(y))
    dw = profile.bin_width_urad
    t = th[i]
    if 0 < i < y.size - 1:
        ym, y0, yp = y[i - 1], y[i], y[i + 1]
        den = ym - 2.0 * y0 + yp
        if den < 0:
            t = th[i] + 0.5 * dw * (ym - yp) / den
    return float(t), 0.5 * dw
