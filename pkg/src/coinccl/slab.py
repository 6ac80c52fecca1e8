"""Fast electron crossing a dielectric film at normal incidence.

Fields are solved in the transverse-momentum representation, normalized by
``e / (eps0 v)``. The boundary problem is rewritten with rescaled unknowns

    X1 = B1 exp(-alpha0 h) / alpha0,   X3 = A3 exp(-alpha0 h) / alpha0,
    S  = (A2 + B2) cosh(alpha h),      T  = (A2 - B2) cosh(alpha h) / alpha,

with ``h = d/2``, which removes the exponential overflow for large ``Q d``
and the removable singularities at ``Q = 0``, ``alpha0 = 0`` and
``alpha = 0``. The printed coefficients are recovered on request.

Unit conventions: energies eV, lengths nm, wavenumbers nm^-1. Densities
are per eV and per unit of the ``2 pi Q dQ`` measure (nm^2).
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import ALPHA_FS, HBARC, MEC2
from .errors import NumericalError, RangeError, ValidationError
from .optics import DielectricTable, permittivity
from .quadrature import integrate

__all__ = [
    "BeamKinematics",
    "SlabConfig",
    "FieldCoefficients",
    "LossMap",
    "make_kinematics",
    "transverse_wavenumbers",
    "field_coefficients",
    "bulk_loss_term",
    "loss_density",
    "tr_density",
    "tr_angular_density",
    "gamma_tr",
    "gamma_tr_q",
    "gamma_loss",
    "loss_map",
    "ridge_position",
    "default_energy_grid",
    "default_q_grid",
    "max_threads",
    "IM_EPS_FLOOR",
]

IM_EPS_FLOOR = 1e-6
"""Smallest Im(eps) used when the Cherenkov pole can be reached."""

_THC_SERIES = 1e-4


@dataclass(frozen=True)
class BeamKinematics:
    """Relativistic electron kinematics.

    Attributes
    ----------
    kinetic_energy : float
        eV.
    beta, gamma : float
        v/c and the Lorentz factor.
    wavenumber_q : float
        Electron wavenumber ``m gamma v / hbar`` in nm^-1.
    """

    kinetic_energy: float
    beta: float
    gamma: float
    wavenumber_q: float


def make_kinematics(kinetic_energy):
    """Kinematics for an electron of the given kinetic energy in eV."""
    t = float(kinetic_energy)
    if not t > 0:
        raise ValidationError("kinetic energy must be positive")
    gamma = 1.0 + t / MEC2
    # 1 - 1/gamma^2 written to stay accurate for t << mc^2
    beta = np.sqrt(t * (t + 2.0 * MEC2)) / (t + MEC2)
    q = gamma * beta * MEC2 / HBARC
    return BeamKinematics(t, float(beta), float(gamma), float(q))


@dataclass(frozen=True, eq=False)
class SlabConfig:
    """Film geometry, material and beam.

    Attributes
    ----------
    thickness_d : float
        Film thickness in nm.
    dielectric : DielectricTable
    kinematics : BeamKinematics
    """

    thickness_d: float
    dielectric: DielectricTable
    kinematics: BeamKinematics

    def __post_init__(self):
        if not self.thickness_d > 0:
            raise ValidationError("thickness_d must be positive")

    @property
    def beta(self):
        return self.kinematics.beta


@dataclass(frozen=True)
class FieldCoefficients:
    """Amplitudes of the homogeneous field solutions.

    ``B1`` (z > d/2), ``A2``/``B2`` (inside), ``A3`` (z < -d/2) are in
    units of ``e / (eps0 v)`` per nm^-1 of the transverse Fourier variable.
    ``residual`` is the relative backward error of the solved system.
    """

    B1: np.ndarray
    A2: np.ndarray
    B2: np.ndarray
    A3: np.ndarray
    alpha: np.ndarray
    alpha0: np.ndarray
    residual: np.ndarray


# ----------------------------------------------------------------------------
# elementary pieces
# ----------------------------------------------------------------------------

def _branch_sqrt(z):
    """Square root with Re >= 0 and, on the imaginary axis, Im <= 0."""
    r = np.sqrt(np.asarray(z, dtype=complex))
    return np.where((r.real == 0) & (r.imag > 0), -r, r)


def transverse_wavenumbers(eps, energy, Q):
    """Decay constants ``(alpha, alpha0)`` inside and outside the film.

    Parameters
    ----------
    eps : complex or array_like
    energy : float or array_like
        Photon energy in eV.
    Q : float or array_like
        Transverse wavenumber in nm^-1.

    Returns
    -------
    alpha, alpha0 : complex ndarray
        ``sqrt(Q^2 - eps k^2)`` and ``sqrt(Q^2 - k^2)`` with ``k = E/hbar c``,
        both with Re >= 0 and Im <= 0 when purely imaginary, so every
        homogeneous wave is outgoing or decaying away from the film.
    """
    k = np.asarray(energy, dtype=float) / HBARC
    Q = np.asarray(Q, dtype=float)
    alpha = _branch_sqrt(Q * Q - np.asarray(eps) * k * k)
    alpha0 = _branch_sqrt((Q - k) * (Q + k) + 0j)
    return alpha, alpha0


def _thc(x):
    """tanh(x)/x, entire near x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < _THC_SERIES
    xs = np.where(small, 1.0, x)
    x2 = x * x
    with np.errstate(over="ignore", invalid="ignore"):
        big = np.tanh(xs) / xs
    return np.where(small, 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0, big)


def _regularize(eps, beta):
    """Floor Im(eps) where the Cherenkov pole Re(eps) beta^2 > 1 is reachable.

    The floor is applied to eps itself, so every term of the loss formula
    sees the same medium; vacuum and media below threshold are untouched.
    """
    eps = np.asarray(eps, dtype=complex)
    pole = (eps.real * beta * beta > 1.0) & (eps.imag < IM_EPS_FLOOR)
    return np.where(pole, eps.real + 1j * IM_EPS_FLOOR, eps)


def _check_q(Q):
    Q = np.asarray(Q, dtype=float)
    if np.any(~(Q >= 0)):
        raise ValidationError("transverse wavenumber Q must be >= 0")
    return Q


def _check_energy(energy):
    e = np.asarray(energy, dtype=float)
    if np.any(~(e > 0)):
        raise ValidationError("photon energy must be positive")
    return e


def _solve(eps, energy, Q, d, beta, alpha0=None):
    """Batched solve of the rescaled boundary system.

    All array arguments broadcast together. ``alpha0`` may be given to
    avoid cancellation when Q is parametrized by an emission angle.
    Returns a dict of the intermediate quantities.
    """
    eps, energy, Q = np.broadcast_arrays(
        np.asarray(eps, dtype=complex), np.asarray(energy, dtype=float), np.asarray(Q, dtype=float)
    )
    k = energy / HBARC
    kap = k / beta
    h = 0.5 * d
    al, al0 = transverse_wavenumbers(eps, energy, Q)
    if alpha0 is not None:
        al0 = np.broadcast_to(np.asarray(alpha0, dtype=complex), al.shape)
    al2 = Q * Q - eps * k * k
    a = kap * kap + al2            # omega^2/v^2 + alpha^2, Cherenkov denominator
    a0 = kap * kap + Q * Q - k * k
    th_over = h * _thc(al * h)     # tanh(alpha h) / alpha
    al_th = al2 * th_over          # alpha tanh(alpha h)
    pp = np.exp(1j * kap * h)
    pm = np.conj(pp)

    vac = eps == 1.0
    den_eps = np.where(vac, 1.0, eps)
    rR = 1j * Q * (a0 - eps * a) / (den_eps * a * a0)
    rZ = k * beta * Q * (1.0 - eps) / (a * a0)

    shape = eps.shape
    M = np.zeros(shape + (4, 4), dtype=complex)
    M[..., 0, 0] = al0
    M[..., 0, 1] = -1.0
    M[..., 0, 2] = -al_th
    M[..., 1, 0] = 1.0
    M[..., 1, 1] = eps * th_over
    M[..., 1, 2] = eps
    M[..., 2, 1] = -1.0
    M[..., 2, 2] = al_th
    M[..., 2, 3] = al0
    M[..., 3, 1] = -eps * th_over
    M[..., 3, 2] = eps
    M[..., 3, 3] = -1.0
    r = np.stack([rR * pp, rZ * pp, rR * pm, rZ * pm], axis=-1)
    r = np.where(vac[..., None], 0.0, r)

    x = np.zeros(shape + (4,), dtype=complex)
    solve_mask = ~vac
    if np.any(solve_mask):
        Ms = M[solve_mask]
        rs = r[solve_mask]
        try:
            xs = np.linalg.solve(Ms, rs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            xs = _solve_each(Ms, rs, energy[solve_mask], Q[solve_mask])
        x[solve_mask] = xs
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.all(np.isfinite(x), axis=-1))[0]
        idx = tuple(bad)
        raise NumericalError(
            f"non-finite field solution at E = {energy[idx]} eV, Q = {Q[idx]} nm^-1"
        )
    res = np.abs(np.einsum("...ij,...j->...i", M, x) - r).max(axis=-1)
    scale = np.abs(M).sum(axis=-1).max(axis=-1) * np.abs(x).max(axis=-1) + np.abs(r).max(axis=-1)
    residual = np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), 0.0)
    return dict(
        eps=eps, energy=energy, Q=Q, k=k, kap=kap, h=h, alpha=al, alpha0=al0,
        al2=al2, a=a, a0=a0, th_over=th_over, pp=pp, pm=pm,
        X1=x[..., 0], S=x[..., 1], T=x[..., 2], X3=x[..., 3], residual=residual,
    )


def _solve_each(Ms, rs, energy, Q):
    out = np.empty(rs.shape, dtype=complex)
    for i in range(Ms.shape[0]):
        try:
            out[i] = np.linalg.solve(Ms[i], rs[i])
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"singular boundary system at E = {energy[i]} eV, Q = {Q[i]} nm^-1"
            ) from None
    return out


def _eps_at(cfg, energy):
    return _regularize(permittivity(cfg.dielectric, energy), cfg.beta)


# ----------------------------------------------------------------------------
# public physics
# ----------------------------------------------------------------------------

def field_coefficients(cfg, energy, Q):
    """Boundary-matched field amplitudes for the film.

    Parameters
    ----------
    cfg : SlabConfig
    energy : float or array_like
        Photon energy in eV.
    Q : float or array_like
        Transverse wavenumber in nm^-1.

    Returns
    -------
    FieldCoefficients
        ``B1, A2, B2, A3`` as defined by the outside field ``B1 exp(-alpha0 z)``
        (z > d/2), ``A3 exp(alpha0 z)`` (z < -d/2) and the inside field
        ``A2 exp(alpha z) + B2 exp(-alpha z)``. For very large ``Q d`` the
        printed amplitudes can over- or underflow even though the loss
        densities, which never form them, stay finite.

    Raises
    ------
    NumericalError
        Singular system, carrying the offending (energy, Q).
    """
    energy = _check_energy(energy)
    Q = _check_q(Q)
    eps = _eps_at(cfg, energy)
    s = _solve(eps, energy, Q, cfg.thickness_d, cfg.beta)
    h = s["h"]
    al, al0 = s["alpha"], s["alpha0"]
    with np.errstate(over="ignore", invalid="ignore"):
        e0 = np.exp(al0 * h)
        B1 = al0 * s["X1"] * e0
        A3 = al0 * s["X3"] * e0
        ch = np.cosh(al * h)
        sv = s["S"] / ch
        tv = s["T"] / ch
    A2 = 0.5 * (sv + al * tv)
    B2 = 0.5 * (sv - al * tv)
    return FieldCoefficients(B1, A2, B2, A3, al, al0, s["residual"])


def bulk_loss_term(eps, energy, Q, cfg):
    """Bulk (unbounded-medium) contribution to the loss density.

    Evaluates ``-(alpha_fs d / (pi^2 beta^2 hbar c)) Im{(1 - eps beta^2) /
    (eps (kappa^2 + alpha^2))}`` in eV^-1 nm^2, with ``kappa = omega/v``.
    """
    beta = cfg.beta
    eps = _regularize(eps, beta)
    energy = _check_energy(energy)
    Q = _check_q(Q)
    k = energy / HBARC
    kap = k / beta
    a = kap * kap + Q * Q - eps * k * k
    return -ALPHA_FS / (np.pi ** 2 * beta * beta) * (cfg.thickness_d / HBARC) * np.imag(
        (1.0 - eps * beta * beta) / (eps * a)
    )


def _loss_from_solution(s, beta, d):
    kap, h, a, al2 = s["kap"], s["h"], s["a"], s["al2"]
    al, al0 = s["alpha"], s["alpha0"]
    ckh = np.cos(kap * h)
    skh = np.sin(kap * h)
    thc_h = s["th_over"]
    # z-integrals of the in-slab homogeneous parts against exp(-i kappa z)
    js = -2j * (skh - kap * thc_h * ckh) / a
    jc = 2.0 * (al2 * thc_h * ckh + kap * skh) / a
    surf = (s["X3"] * s["pp"] / (al0 - 1j * kap)
            - s["X1"] * s["pm"] / (al0 + 1j * kap)
            + s["S"] * js + s["T"] * jc)
    eps = s["eps"]
    boundary = ALPHA_FS / (np.pi ** 2 * beta) * s["Q"] * surf.imag / s["energy"]
    bulk = -ALPHA_FS / (np.pi ** 2 * beta * beta) * (d / HBARC) * np.imag(
        (1.0 - eps * beta * beta) / (eps * a)
    )
    return boundary + bulk


def loss_density(cfg, energy, Q):
    """Electron energy-loss density rho(omega, Q).

    Returns
    -------
    float or ndarray
        eV^-1 nm^2, such that the loss probability per unit energy is
        ``Gamma(E) = int 2 pi Q rho dQ``.
    """
    energy = _check_energy(energy)
    Q = _check_q(Q)
    s = _solve(_eps_at(cfg, energy), energy, Q, cfg.thickness_d, cfg.beta)
    out = _loss_from_solution(s, cfg.beta, cfg.thickness_d)
    return out[()] if out.ndim == 0 else out


def _tr_from_solution(s, beta):
    k, Q = s["k"], s["Q"]
    radiative = Q < k
    qz = np.sqrt(np.where(radiative, (k - Q) * (k + Q), 1.0))
    # |B1|^2 = |alpha0|^2 |X1|^2 because |exp(alpha0 h)| = 1 above the light line
    b1sq = qz * qz * np.abs(s["X1"]) ** 2
    val = ALPHA_FS / (np.pi ** 2 * beta * beta) * b1sq / (HBARC * qz)
    return np.where(radiative, val, 0.0)


def tr_density(cfg, energy, Q):
    """Transition-radiation density rho_TR(omega, Q), forward half-space.

    ``rho_TR = alpha_fs |B1|^2 / (pi^2 beta^2 hbar c q_z)`` for ``Q < k``
    and exactly 0 otherwise; same units as :func:`loss_density`.
    """
    energy = _check_energy(energy)
    Q = _check_q(Q)
    s = _solve(_eps_at(cfg, energy), energy, Q, cfg.thickness_d, cfg.beta)
    out = _tr_from_solution(s, cfg.beta)
    return out[()] if out.ndim == 0 else out


def tr_angular_density(cfg, energy, theta):
    """Angular emission density rho'_TR with ``Gamma_TR = int sin(theta) rho' dtheta``.

    Equal to ``2 pi k^2 cos(theta) rho_TR(omega, k sin(theta))``, i.e. the
    Jacobian of ``2 pi Q dQ -> sin(theta) dtheta`` applied to rho_TR.
    Evaluated from the far-field amplitude with ``alpha0 = -i k cos(theta)``
    so it stays accurate at grazing angles.
    """
    energy = _check_energy(energy)
    theta = np.asarray(theta, dtype=float)
    if np.any(~((theta >= 0) & (theta <= 0.5 * np.pi))):
        raise ValidationError("theta must lie in [0, pi/2]")
    k = energy / HBARC
    ct = np.cos(theta)
    Q = k * np.sin(theta)
    s = _solve(_eps_at(cfg, energy), energy, Q, cfg.thickness_d, cfg.beta, alpha0=-1j * k * ct)
    beta = cfg.beta
    # |f1|^2 = k^2 |B1|^2 / (4 pi^2), |B1| = k cos(theta) |X1|
    out = 2.0 * ALPHA_FS / (np.pi * beta * beta) * k ** 3 * ct * ct * np.abs(s["X1"]) ** 2 / HBARC
    return out[()] if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# integrated quantities
# ----------------------------------------------------------------------------

def gamma_tr_q(cfg, energy, *, rtol=1e-6, max_eval=2 ** 14):
    """Forward transition-radiation probability per eV, integrated over Q.

    ``int_0^k 2 pi Q rho_TR dQ``; returns ``(value, abserr)``.
    """
    energy = float(energy)
    k = energy / HBARC

    def f(q):
        return 2.0 * np.pi * q * tr_density(cfg, energy, q)

    return integrate(f, 0.0, k, rtol=rtol, max_eval=max_eval)


def _azimuthal_coverage(mask, theta, n_phi=720, n_bisect=40):
    """Fraction of the azimuth accepted by ``mask`` at each polar angle."""
    theta = np.asarray(theta, dtype=float)
    shape = theta.shape
    theta = theta.ravel()
    phi = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    vals = np.asarray(mask(tt, pp))
    if vals.dtype != bool:
        # graded acceptance: periodic trapezoid rule
        return np.clip(vals.astype(float), 0.0, 1.0).mean(axis=1).reshape(shape)
    cov = vals.mean(axis=1).astype(float)
    # locate each in/out transition between neighbouring samples by bisection
    nxt = np.roll(vals, -1, axis=1)
    rows, cols = np.nonzero(vals != nxt)
    if rows.size:
        lo = phi[cols]
        hi = lo + 2.0 * np.pi / n_phi
        start_in = vals[rows, cols]
        th = theta[rows]
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            same = np.asarray(mask(th, np.mod(mid, 2.0 * np.pi))) == start_in
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        edge = 0.5 * (lo + hi)
        # each sample stands for the cell that follows it; replace its 0/1
        # vote by the accepted fraction of that cell
        frac = (edge - phi[cols]) / (2.0 * np.pi / n_phi)
        corr = np.where(start_in, frac - 1.0, 1.0 - frac) / n_phi
        np.add.at(cov, rows, corr)
    return cov.reshape(shape)


def _theta_breakpoints(mask, n_scan=1025, n_bisect=50):
    th = np.linspace(0.0, 0.5 * np.pi, n_scan)
    cov = _azimuthal_coverage(mask, th)
    jumps = np.nonzero(np.abs(np.diff(cov)) > 1e-9)[0]
    pts = []
    for j in jumps:
        lo, hi = th[j], th[j + 1]
        clo = cov[j]
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            if abs(float(_azimuthal_coverage(mask, mid)) - clo) <= 1e-9:
                lo = mid
            else:
                hi = mid
        pts.append(0.5 * (lo + hi))
    return pts


def gamma_tr(cfg, energy, solid_angle_mask=None, *, rtol=1e-6, max_eval=2 ** 14):
    """Transition-radiation probability per eV into a set of directions.

    Parameters
    ----------
    cfg : SlabConfig
    energy : float
        eV.
    solid_angle_mask : callable or None
        ``mask(theta, phi) -> bool array`` over the forward hemisphere, or
        an object with a ``contains`` method; graded float acceptance in
        [0, 1] is also accepted. ``None`` means the full hemisphere.
    rtol, max_eval : float, int
        Quadrature controls.

    Returns
    -------
    value, abserr : float

    Raises
    ------
    QuadratureError
        When the tolerance is not met within ``max_eval`` evaluations.
    """
    energy = float(energy)
    if solid_angle_mask is None:
        def cover(theta):
            return np.ones_like(theta)
        pts = []
    else:
        mask = getattr(solid_angle_mask, "contains", solid_angle_mask)
        pts = _theta_breakpoints(mask)
        if np.all(_azimuthal_coverage(mask, np.linspace(0.0, 0.5 * np.pi, 1025)) == 0) and not pts:
            return 0.0, 0.0

        def cover(theta):
            return _azimuthal_coverage(mask, theta)

    def f(theta):
        return np.sin(theta) * tr_angular_density(cfg, energy, theta) * cover(theta)

    return integrate(f, 0.0, 0.5 * np.pi, rtol=rtol, max_eval=max_eval, points=pts)


def gamma_loss(cfg, energy, q_max, *, rtol=1e-6, max_eval=2 ** 14):
    """Loss probability per eV, ``int_0^q_max 2 pi Q rho dQ``.

    The Q integral of rho grows logarithmically with ``q_max``; the value is
    meaningful only together with its cutoff. Returns ``(value, abserr)``.
    """
    energy = float(energy)
    k = energy / HBARC

    def f(q):
        return 2.0 * np.pi * q * loss_density(cfg, energy, q)

    pts = [p for p in (k, k / np.sqrt(2.0 * cfg.beta), k / cfg.beta) if p < q_max]
    return integrate(f, 0.0, float(q_max), rtol=rtol, max_eval=max_eval, points=pts, raise_on_fail=False)


# ----------------------------------------------------------------------------
# maps
# ----------------------------------------------------------------------------

def max_threads():
    """Worker cap from ``COINCCL_THREADS`` (default: CPU count)."""
    env = os.environ.get("COINCCL_THREADS", "").strip()
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise ValidationError(f"COINCCL_THREADS must be an integer, got {env!r}") from None
    return n


def default_energy_grid():
    """0.5 to 5.0 eV in 0.01 eV steps."""
    return np.round(np.linspace(0.5, 5.0, 451), 10)


def default_q_grid():
    """0 to 3 (5 eV / hbar c) in 600 points, nm^-1."""
    return np.linspace(0.0, 3.0 * 5.0 / HBARC, 600)


@dataclass(eq=False)
class LossMap:
    """Gridded rho and rho_TR.

    Attributes
    ----------
    energy_axis : ndarray
        eV, shape (n_e,).
    qperp_axis : ndarray
        nm^-1, shape (n_q,).
    rho, rho_tr : ndarray
        eV^-1 nm^2, shape (n_e, n_q).
    meta : dict
        Free metadata copied into file headers.
    """

    energy_axis: np.ndarray
    qperp_axis: np.ndarray
    rho: np.ndarray
    rho_tr: np.ndarray
    meta: dict = field(default_factory=dict)


def _check_grid(g, name):
    g = np.asarray(g, dtype=float).ravel()
    if g.size < 1:
        raise ValidationError(f"{name} grid is empty")
    if np.any(np.diff(g) <= 0):
        raise ValidationError(f"{name} grid must be strictly increasing")
    return g


def _gauss_kernel(axis, fwhm):
    sigma = fwhm / 2.3548200450309493
    dx = axis[:, None] - axis[None, :]
    w = np.exp(-0.5 * (dx / sigma) ** 2)
    # cell widths make the kernel a quadrature of the convolution integral
    if axis.size > 1:
        cw = np.gradient(axis)
    else:
        cw = np.ones(1)
    w = w * cw[None, :]
    return w / w.sum(axis=1, keepdims=True)


def convolve_map(axis_e, axis_q, values, energy_fwhm=0.0, q_fwhm=0.0):
    """Separable Gaussian blur along each axis, renormalized at the edges.

    A zero FWHM leaves that axis untouched.
    """
    out = np.asarray(values, dtype=float)
    if energy_fwhm and energy_fwhm > 0:
        out = _gauss_kernel(axis_e, energy_fwhm) @ out
    if q_fwhm and q_fwhm > 0:
        out = out @ _gauss_kernel(axis_q, q_fwhm).T
    return out


def loss_map(cfg, energy_grid=None, q_grid=None, resolution=None, *, threads=None, rows_per_task=16):
    """Evaluate rho and rho_TR on a grid.

    Parameters
    ----------
    cfg : SlabConfig
    energy_grid, q_grid : array_like, optional
        Strictly increasing axes; defaults from :func:`default_energy_grid`
        and :func:`default_q_grid`.
    resolution : dict, optional
        ``{"energy_fwhm": eV, "q_fwhm": nm^-1}`` Gaussian resolution.
    threads : int, optional
        Worker count, capped by ``COINCCL_THREADS``.

    Returns
    -------
    LossMap

    Raises
    ------
    RangeError
        Grid leaves the dielectric table range.
    """
    eg = _check_grid(default_energy_grid() if energy_grid is None else energy_grid, "energy")
    qg = _check_grid(default_q_grid() if q_grid is None else q_grid, "Q")
    if eg[0] < cfg.dielectric.emin or eg[-1] > cfg.dielectric.emax:
        raise RangeError(
            f"energy grid [{eg[0]}, {eg[-1]}] eV exceeds dielectric table "
            f"[{cfg.dielectric.emin}, {cfg.dielectric.emax}] eV"
        )
    _check_energy(eg)
    _check_q(qg)
    rho = np.empty((eg.size, qg.size))
    rho_tr = np.empty_like(rho)
    eps_all = _eps_at(cfg, eg)

    def work(i0):
        sl = slice(i0, min(i0 + rows_per_task, eg.size))
        s = _solve(eps_all[sl, None], eg[sl, None], qg[None, :], cfg.thickness_d, cfg.beta)
        rho[sl] = _loss_from_solution(s, cfg.beta, cfg.thickness_d)
        rho_tr[sl] = _tr_from_solution(s, cfg.beta)

    starts = range(0, eg.size, rows_per_task)
    n = min(max_threads(), threads or max_threads(), len(starts))
    if n <= 1:
        for i0 in starts:
            work(i0)
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            list(ex.map(work, starts))
    meta = {}
    if resolution:
        fe = float(resolution.get("energy_fwhm", 0.0) or 0.0)
        fq = float(resolution.get("q_fwhm", 0.0) or 0.0)
        rho = convolve_map(eg, qg, rho, fe, fq)
        rho_tr = convolve_map(eg, qg, rho_tr, fe, fq)
        meta.update(energy_fwhm_eV=fe, q_fwhm_nm_inv=fq)
    return LossMap(eg, qg, rho, rho_tr, meta)


def ridge_position(cfg, energy, q_max=None, n_scan=4001, n_refine=6):
    """Global maximum of ``rho(energy, Q)`` over ``0 <= Q <= q_max``.

    Resonances hugging the light line can be far narrower than any map grid
    (relative width ~1e-4 in thin high-index films), so the scan adds
    geometrically spaced points on both sides of ``Q = k`` and the best
    local maxima are refined by bounded scalar maximization.

    Returns
    -------
    q_peak : float
        nm^-1.
    rho_peak : float
    """
    k = float(energy) / HBARC
    q_max = 3.0 * k if q_max is None else float(q_max)
    off = k * np.geomspace(1e-9, 0.5, 400)
    q = np.concatenate([np.linspace(0.0, q_max, n_scan), k - off, k + off, [k]])
    q = np.unique(q[(q >= 0) & (q <= q_max)])
    r = loss_density(cfg, energy, q)
    cand = [i for i in range(q.size)
            if (i == 0 or r[i] >= r[i - 1]) and (i == q.size - 1 or r[i] >= r[i + 1])]
    cand = sorted(cand, key=lambda i: -r[i])[:n_refine]
    best_q, best_r = float(q[cand[0]]), float(r[cand[0]])
    for i in cand:
        lo, hi = q[max(i - 1, 0)], q[min(i + 1, q.size - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda x: -float(loss_density(cfg, energy, x)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12 * max(k, 1e-12)})
        if -res.fun > best_r:
            best_q, best_r = float(res.x), float(-res.fun)
    return best_q, best_r
