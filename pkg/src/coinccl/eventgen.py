"""Monte Carlo synthesis of electron pixel hits and photon time tags.

A single PCG64 stream drives the whole run, so a fixed seed and config give
byte-identical output. Electrons arrive as a Poisson process; a fraction
produce a detected photon whose energy and direction are drawn from a
detection-weighted pair density, with the electron recoil fixed by momentum
conservation. Uncorrelated photons and dark counts are independent Poisson
streams.
"""

from dataclasses import dataclass, field

import numpy as np

from .collection import ElectronEnergyFilter, bandpass_weight, electron_filter_weight, mirror_acceptance
from .constants import E_CHARGE, FWHM_PER_SIGMA, HBARC
from .errors import ConfigError
from .lad import energy_window
from .slab import make_kinematics, tr_density

__all__ = [
    "GeneratorConfig",
    "DetectorModel",
    "PairDistribution",
    "LossDistribution",
    "EventStream",
    "GroundTruth",
    "HIT_DTYPE",
    "PHOTON_DTYPE",
    "build_alias",
    "sample_alias",
    "sample_pair",
    "emit_clusters",
    "generate_stream",
    "current_to_rate",
    "experiment_like_config",
]

HIT_DTYPE = np.dtype([("x", "<u2"), ("y", "<u2"), ("toa", "<u8"), ("tot", "<u2")])
PHOTON_DTYPE = np.dtype([("t", "<u8"), ("channel", "u1")])

SOURCE_PAIR, SOURCE_BACKGROUND, SOURCE_DARK = 0, 1, 2


def current_to_rate(current_amp):
    """Electrons per second carried by a beam current in A."""
    return current_amp / E_CHARGE


@dataclass(frozen=True)
class DetectorModel:
    """Pixel detector in the diffraction plane.

    Pixel ``i`` sees deflection ``(i - (n - 1)/2) * pitch``; with the
    defaults this matches :class:`coinccl.lad.ImageSpec`.
    """

    n_pixels: int = 256
    half_range_urad: float = 15.0

    @property
    def pitch_urad(self):
        return 2.0 * self.half_range_urad / self.n_pixels

    @property
    def center(self):
        return 0.5 * (self.n_pixels - 1)


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of a synthetic acquisition.

    Times in ns unless the name says otherwise; rates in s^-1.
    ``delay_mean`` follows ``dt = t_e - t_gamma``.
    """

    duration: float = 1.0
    electron_rate: float = 1e6
    pair_detect_prob: float = 1e-5
    electron_accept_prob: float = 0.26
    delay_mean: float = -80.0
    delay_fwhm: float = 42.0
    toa_quantum: float = 1.5625
    photon_quantum: float = 0.001
    tot_quantum: float = 25.0
    mean_cluster_size: float = 2.8
    hit_jitter: float = 2.0
    tot_median: float = 1000.0
    tot_sigma: float = 0.3
    background_photon_rate: float = 0.0
    dark_rate: float = 0.0
    column_offsets: tuple = ()
    defective_pixels: tuple = ()
    drift_velocity: tuple = (0.0, 0.0)
    zero_loss_fwhm: float = 0.9
    beam_divergence_urad: float = 0.3
    inelastic_prob: float = 0.0
    electron_filter: ElectronEnergyFilter = field(default_factory=ElectronEnergyFilter)
    detector: DetectorModel = field(default_factory=DetectorModel)
    kinetic_energy: float = 200e3
    seed: int = 0

    def __post_init__(self):
        for name in ("duration", "electron_rate", "background_photon_rate", "dark_rate",
                     "delay_fwhm", "hit_jitter", "tot_sigma", "zero_loss_fwhm", "beam_divergence_urad"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("pair_detect_prob", "electron_accept_prob", "inelastic_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        for name in ("toa_quantum", "photon_quantum", "tot_quantum", "tot_median", "kinetic_energy"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not self.mean_cluster_size >= 1:
            raise ConfigError("mean_cluster_size must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        offs = tuple(sorted((int(c), float(v)) for c, v in dict(self.column_offsets).items()))
        object.__setattr__(self, "column_offsets", offs)
        object.__setattr__(self, "defective_pixels", tuple(tuple(int(a) for a in p) for p in self.defective_pixels))
        if len(self.drift_velocity) != 2:
            raise ConfigError("drift_velocity must be a 2-vector in pixels/s")
        object.__setattr__(self, "drift_velocity", tuple(float(v) for v in self.drift_velocity))

    def column_offset_table(self):
        tab = np.zeros(self.detector.n_pixels)
        for c, v in self.column_offsets:
            if 0 <= c < tab.size:
                tab[c] = v
        return tab


def experiment_like_config(**overrides):
    """Beam and detector settings of the described experiment (3.1 pA)."""
    base = dict(
        electron_rate=current_to_rate(3.1e-12),
        pair_detect_prob=1e-5,
        electron_accept_prob=0.26,
        delay_mean=-80.0,
        delay_fwhm=42.0,
        toa_quantum=1.5625,
        mean_cluster_size=2.8,
    )
    base.update(overrides)
    return GeneratorConfig(**base)


# ----------------------------------------------------------------------------
# alias sampling
# ----------------------------------------------------------------------------

def build_alias(weights):
    """Walker/Vose alias table over the positive entries of ``weights``.

    Returns ``(index, accept, alias)``: ``index`` maps table slots to the
    original cells; zero-weight cells are never sampled.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ConfigError("pair density must be finite and nonnegative")
    index = np.nonzero(w > 0)[0]
    if index.size == 0:
        raise ConfigError("pair density has zero total weight")
    p = w[index] * (index.size / w[index].sum())
    n = index.size
    accept = np.ones(n)
    alias = np.arange(n)
    small = np.nonzero(p < 1.0)[0]
    large = np.nonzero(p >= 1.0)[0]
    # pair smalls with larges in vectorized rounds; each large is used once per round
    while small.size and large.size:
        m = min(small.size, large.size)
        s, l = small[:m], large[:m]
        accept[s] = p[s]
        alias[s] = l
        p[l] -= 1.0 - p[s]
        now_small = p[l] < 1.0
        small = np.concatenate([small[m:], l[now_small]])
        large = np.concatenate([large[m:], l[~now_small]])
    accept[small] = 1.0
    accept[large] = 1.0
    return index, accept, alias


def sample_alias(rng, table, size):
    index, accept, alias = table
    slot = rng.integers(0, index.size, size=size)
    u = rng.random(size)
    slot = np.where(u < accept[slot], slot, alias[slot])
    return index[slot]


@dataclass(eq=False)
class PairDistribution:
    """Detection-weighted pair density on (E, s = sin theta_gamma, phi_gamma) cells.

    ``weights[i, j, l]`` is the probability mass of the cell
    ``[E_i, E_i+1) x [s_j, s_j+1) x [phi_l, phi_l+1)``; within a cell samples
    are uniform. The photon direction is ``khat_perp = s (cos phi, sin phi)``
    and the electron recoil ``p_perp = -k khat_perp`` (hbar nm^-1).
    """

    energy_edges: np.ndarray
    s_edges: np.ndarray
    phi_edges: np.ndarray
    weights: np.ndarray
    _table: tuple = None

    def __post_init__(self):
        self.energy_edges = np.asarray(self.energy_edges, dtype=float)
        self.s_edges = np.asarray(self.s_edges, dtype=float)
        self.phi_edges = np.asarray(self.phi_edges, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        shape = (self.energy_edges.size - 1, self.s_edges.size - 1, self.phi_edges.size - 1)
        if w.shape != shape:
            raise ConfigError(f"weights shape {w.shape} does not match edges {shape}")
        if self.s_edges[0] < 0 or self.s_edges[-1] > 1:
            raise ConfigError("s edges must lie in [0, 1]")
        self.weights = w
        self._table = build_alias(w)

    @property
    def total(self):
        return float(self.weights.sum())

    def energy_marginal(self):
        return self.weights.sum(axis=(1, 2))

    @classmethod
    def from_model(cls, cfg, collection, n_energy=None, n_s=128, n_phi=720, energy_step=0.01):
        """Tabulate the coincidence density times the ``k^2 s ds dphi dE`` measure.

        Cells cover the accepted energy window; the cell-centre value is used
        (midpoint rule). The density factorizes into ``rho_TR(E, k s)``, the
        energy-only efficiencies and the mirror acceptance ``A(s, phi)``,
        which is evaluated once.
        """
        nodes, _ = energy_window(cfg, collection, energy_step)
        if nodes.size < 2:
            raise ConfigError("no photon energies are accepted by the collection model")
        ne = n_energy or max(1, nodes.size - 1)
        e_edges = np.linspace(nodes[0], nodes[-1], ne + 1)
        s_edges = np.linspace(0.0, 1.0, n_s + 1)
        p_edges = np.linspace(-np.pi, np.pi, n_phi + 1)
        ec = 0.5 * (e_edges[:-1] + e_edges[1:])
        sc = 0.5 * (s_edges[:-1] + s_edges[1:])
        pc = 0.5 * (p_edges[:-1] + p_edges[1:])
        k = ec / HBARC
        khat = np.stack([sc[:, None] * np.cos(pc)[None, :], sc[:, None] * np.sin(pc)[None, :]], axis=-1)
        acc = mirror_acceptance(collection.mirror, khat)
        eff = (collection.curves.fiber(ec) * collection.curves.detector(ec)
               * electron_filter_weight(collection.electron_filter, ec)
               * bandpass_weight(collection.photon_bandpass, ec))
        radial = tr_density(cfg, ec[:, None], k[:, None] * sc[None, :])
        radial = radial * (eff * k ** 2 * np.diff(e_edges))[:, None] * (sc * np.diff(s_edges))[None, :]
        w = radial[:, :, None] * (acc * np.diff(p_edges)[None, :])[None, :, :]
        return cls(e_edges, s_edges, p_edges, w)


def sample_pair(rng, physics, size=None):
    """Draw photon energy, electron recoil and photon direction.

    Parameters
    ----------
    rng : numpy.random.Generator
    physics : PairDistribution
    size : int, optional

    Returns
    -------
    energy : ndarray (eV)
    pperp : ndarray (..., 2), hbar nm^-1
    khat_perp : ndarray (..., 2)
    """
    scalar = size is None
    n = 1 if scalar else int(size)
    ne, ns, nphi = physics.weights.shape
    cell = sample_alias(rng, physics._table, n)
    i, rem = np.divmod(cell, ns * nphi)
    j, l = np.divmod(rem, nphi)
    u = rng.random((3, n))
    ee, se, pe = physics.energy_edges, physics.s_edges, physics.phi_edges
    energy = ee[i] + u[0] * (ee[i + 1] - ee[i])
    s = np.minimum(se[j] + u[1] * (se[j + 1] - se[j]), np.nextafter(1.0, 0.0))
    phi = pe[l] + u[2] * (pe[l + 1] - pe[l])
    khat = np.stack([s * np.cos(phi), s * np.sin(phi)], axis=-1)
    pperp = -(energy / HBARC)[:, None] * khat
    if scalar:
        return float(energy[0]), pperp[0], khat[0]
    return energy, pperp, khat


@dataclass(eq=False)
class LossDistribution:
    """Isotropic energy-loss distribution for electrons without a detected photon.

    ``weights[i, j]`` is the mass of cell ``[E_i, E_i+1) x [Q_j, Q_j+1)``.
    """

    energy_edges: np.ndarray
    q_edges: np.ndarray
    weights: np.ndarray
    _table: tuple = None

    def __post_init__(self):
        self.weights = np.clip(np.asarray(self.weights, dtype=float), 0.0, None)
        self._table = build_alias(self.weights)

    @classmethod
    def from_loss_map(cls, lmap):
        """Cells centred on the map nodes, weight ``rho 2 pi Q dQ dE``."""
        e = lmap.energy_axis
        q = lmap.qperp_axis
        e_edges = np.concatenate([[e[0]], 0.5 * (e[:-1] + e[1:]), [e[-1]]])
        q_edges = np.concatenate([[q[0]], 0.5 * (q[:-1] + q[1:]), [q[-1]]])
        w = np.clip(lmap.rho, 0.0, None) * 2.0 * np.pi * q[None, :]
        w = w * np.diff(e_edges)[:, None] * np.diff(q_edges)[None, :]
        return cls(e_edges, q_edges, w)

    def sample(self, rng, size):
        ne, nq = self.weights.shape
        cell = sample_alias(rng, self._table, size)
        i, j = np.divmod(cell, nq)
        u = rng.random((3, size))
        energy = self.energy_edges[i] + u[0] * np.diff(self.energy_edges)[i]
        q = self.q_edges[j] + u[1] * np.diff(self.q_edges)[j]
        phi = 2.0 * np.pi * u[2]
        return energy, np.stack([q * np.cos(phi), q * np.sin(phi)], axis=-1)


# ----------------------------------------------------------------------------
# streams
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class EventStream:
    """Time-ordered detector output.

    ``hits`` is a structured array (``HIT_DTYPE``) with ToA in units of
    ``toa_quantum`` and ToT in units of ``tot_quantum``; ``photons``
    (``PHOTON_DTYPE``) has times in units of ``photon_quantum``.
    """

    hits: np.ndarray
    photons: np.ndarray
    toa_quantum: float = 1.5625
    tot_quantum: float = 25.0
    photon_quantum: float = 0.001
    duration: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def hit_toa_ns(self):
        return self.hits["toa"].astype(float) * self.toa_quantum

    @property
    def hit_tot_ns(self):
        return self.hits["tot"].astype(float) * self.tot_quantum

    @property
    def photon_t_ns(self):
        return self.photons["t"].astype(float) * self.photon_quantum


@dataclass(eq=False)
class GroundTruth:
    """Labels of a synthetic run.

    Pair arrays are indexed by pair; ``pair_photon_id`` is the photon's
    index in the output stream (-1 if it fell outside the acquisition) and
    ``pair_electron_id`` the electron's arrival index. ``photon_source``
    labels every output photon (0 pair, 1 background, 2 dark);
    ``hit_electron`` gives the electron of every output hit.
    """

    pair_electron_id: np.ndarray
    pair_photon_id: np.ndarray
    pair_energy: np.ndarray
    pair_pperp: np.ndarray
    pair_khat: np.ndarray
    pair_t_electron: np.ndarray
    pair_t_photon: np.ndarray
    pair_electron_detected: np.ndarray
    photon_source: np.ndarray
    hit_electron: np.ndarray
    n_electrons: int = 0
    n_electrons_detected: int = 0
    electron_detected: np.ndarray = None

    @property
    def n_pairs(self):
        return int(self.pair_electron_id.size)


def _neighbour_offsets():
    ring1 = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
    ring2 = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3) if max(abs(dx), abs(dy)) == 2]
    return np.array(ring1), np.array(ring2)


_RING1, _RING2 = _neighbour_offsets()


def emit_clusters(rng, cfg, t_e, x, y):
    """Pixel hits for detected electrons.

    Parameters
    ----------
    rng : numpy.random.Generator
    cfg : GeneratorConfig
    t_e : ndarray
        Arrival times in ns.
    x, y : ndarray
        Seed pixel coordinates (integers).

    Returns
    -------
    owner : ndarray of int
        Index into the inputs for every hit.
    hx, hy : ndarray of int
    toa_ns : ndarray
        ToA after jitter and column offset, before quantization.
    tot_ticks : ndarray of int
    """
    n = np.asarray(t_e).size
    if n == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, np.zeros(0), z
    extra_mean = cfg.mean_cluster_size - 1.0
    extra = rng.poisson(extra_mean, n) if extra_mean > 0 else np.zeros(n, dtype=np.int64)
    extra = np.minimum(extra, _RING1.shape[0] + _RING2.shape[0])
    size = 1 + extra
    owner = np.repeat(np.arange(n), size)
    start = np.concatenate([[0], np.cumsum(size)[:-1]])
    rank = np.arange(owner.size) - start[owner]          # 0 for the seed hit
    # random order of neighbour pixels, nearest ring first
    off = np.zeros((owner.size, 2), dtype=np.int64)
    sel = rank > 0
    if np.any(sel):
        n1 = _RING1.shape[0]
        # permutations only for electrons that use the ring
        slot1 = np.full(n, -1)
        use1 = np.nonzero(extra > 0)[0]
        slot1[use1] = np.arange(use1.size)
        perm1 = np.argsort(rng.random((use1.size, n1)), axis=1)
        slot2 = np.full(n, -1)
        use2 = np.nonzero(extra > n1)[0]
        slot2[use2] = np.arange(use2.size)
        perm2 = np.argsort(rng.random((use2.size, _RING2.shape[0])), axis=1)
        r = rank[sel] - 1
        o = owner[sel]
        in1 = r < n1
        pick = np.empty((r.size, 2), dtype=np.int64)
        pick[in1] = _RING1[perm1[slot1[o[in1]], r[in1]]]
        pick[~in1] = _RING2[perm2[slot2[o[~in1]], r[~in1] - n1]]
        off[sel] = pick
    hx = np.asarray(x, dtype=np.int64)[owner] + off[:, 0]
    hy = np.asarray(y, dtype=np.int64)[owner] + off[:, 1]
    jitter = np.abs(rng.normal(0.0, cfg.hit_jitter, owner.size)) if cfg.hit_jitter > 0 else np.zeros(owner.size)
    jitter[~sel] = 0.0
    toa = np.asarray(t_e, dtype=float)[owner] + jitter
    cols = cfg.column_offset_table()
    onchip = (hx >= 0) & (hx < cfg.detector.n_pixels)
    toa = toa + np.where(onchip, cols[np.clip(hx, 0, cols.size - 1)], 0.0)
    # total ToT per electron, shared among its hits
    total = cfg.tot_median * np.exp(cfg.tot_sigma * rng.standard_normal(n))
    g = rng.standard_exponential(owner.size)
    gsum = np.bincount(owner, weights=g, minlength=n)
    share = g / gsum[owner]
    tot_ticks = np.maximum(1, np.rint(total[owner] * share / cfg.tot_quantum)).astype(np.int64)
    return owner, hx, hy, toa, tot_ticks


def generate_stream(cfg, physics=None, loss=None):
    """Synthesize one acquisition.

    Parameters
    ----------
    cfg : GeneratorConfig
    physics : PairDistribution, optional
        Required when ``pair_detect_prob > 0``.
    loss : LossDistribution, optional
        Loss distribution for electrons that do not produce a detected
        photon; used with probability ``inelastic_prob``.

    Returns
    -------
    stream : EventStream
    truth : GroundTruth
    """
    if cfg.pair_detect_prob > 0 and physics is None:
        raise ConfigError("pair_detect_prob > 0 needs a pair distribution")
    if cfg.inelastic_prob > 0 and loss is None:
        raise ConfigError("inelastic_prob > 0 needs a loss distribution")
    rng = np.random.Generator(np.random.PCG64(int(cfg.seed)))
    T_ns = cfg.duration * 1e9
    det = cfg.detector
    q = make_kinematics(cfg.kinetic_energy).wavenumber_q

    n_e = int(rng.poisson(cfg.electron_rate * cfg.duration)) if T_ns > 0 else 0
    t_e = np.sort(rng.random(n_e) * T_ns)
    is_pair = rng.random(n_e) < cfg.pair_detect_prob
    pair_idx = np.nonzero(is_pair)[0]
    n_pair = pair_idx.size

    loss_e = np.zeros(n_e)
    recoil = np.zeros((n_e, 2))
    khat = np.zeros((n_pair, 2))
    e_pair = np.zeros(n_pair)
    if n_pair:
        e_pair, p_pair, khat = sample_pair(rng, physics, n_pair)
        loss_e[pair_idx] = e_pair
        recoil[pair_idx] = p_pair
    if cfg.inelastic_prob > 0:
        inel = (~is_pair) & (rng.random(n_e) < cfg.inelastic_prob)
        m = int(inel.sum())
        if m:
            e_in, p_in = loss.sample(rng, m)
            loss_e[inel] = e_in
            recoil[inel] = p_in
    # measured loss includes the source energy spread
    sigma_zl = cfg.zero_loss_fwhm / FWHM_PER_SIGMA
    measured = loss_e + (rng.normal(0.0, sigma_zl, n_e) if sigma_zl > 0 else 0.0)
    kept = rng.random(n_e) < cfg.electron_accept_prob
    kept &= electron_filter_weight(cfg.electron_filter, measured) > 0

    # photons of the pairs
    sigma_d = cfg.delay_fwhm / FWHM_PER_SIGMA
    delay = rng.normal(cfg.delay_mean, sigma_d, n_pair) if n_pair else np.zeros(0)
    t_pair_ph = t_e[pair_idx] - delay
    n_bg = int(rng.poisson(cfg.background_photon_rate * cfg.duration)) if T_ns > 0 else 0
    t_bg = rng.random(n_bg) * T_ns
    n_dk = int(rng.poisson(cfg.dark_rate * cfg.duration)) if T_ns > 0 else 0
    t_dk = rng.random(n_dk) * T_ns

    # deflection -> seed pixel
    theta = recoil / q * 1e6                                  # urad
    if cfg.beam_divergence_urad > 0:
        theta = theta + rng.normal(0.0, cfg.beam_divergence_urad, (n_e, 2))
    kidx = np.nonzero(kept)[0]
    pos = det.center + theta[kidx] / det.pitch_urad
    pos = pos + np.outer(t_e[kidx] * 1e-9, cfg.drift_velocity)
    seed_xy = np.rint(pos).astype(np.int64)
    owner, hx, hy, toa_ns, tot_ticks = emit_clusters(rng, cfg, t_e[kidx], seed_xy[:, 0], seed_xy[:, 1])

    # quantize and keep on-chip, in-range hits
    toa_ticks = np.floor(toa_ns / cfg.toa_quantum)
    ok = (hx >= 0) & (hx < det.n_pixels) & (hy >= 0) & (hy < det.n_pixels) & (toa_ticks >= 0)
    ok &= tot_ticks < 2 ** 16
    order = np.nonzero(ok)[0]
    order = order[np.argsort(toa_ticks[order], kind="stable")]
    hits = np.empty(order.size, dtype=HIT_DTYPE)
    hits["x"] = hx[order]
    hits["y"] = hy[order]
    hits["toa"] = toa_ticks[order].astype(np.uint64)
    hits["tot"] = tot_ticks[order]
    hit_electron = kidx[owner[order]]

    # merge photon sources, stable by time then source order
    src = np.concatenate([np.full(n_pair, SOURCE_PAIR), np.full(n_bg, SOURCE_BACKGROUND),
                          np.full(n_dk, SOURCE_DARK)]).astype(np.int8)
    t_all = np.concatenate([t_pair_ph, t_bg, t_dk])
    ticks = np.rint(t_all / cfg.photon_quantum)
    in_range = (ticks >= 0) & (t_all < T_ns)
    keep_idx = np.nonzero(in_range)[0]
    keep_idx = keep_idx[np.argsort(ticks[keep_idx], kind="stable")]
    photons = np.empty(keep_idx.size, dtype=PHOTON_DTYPE)
    photons["t"] = ticks[keep_idx].astype(np.uint64)
    photons["channel"] = 0
    photon_id = np.full(t_all.size, -1, dtype=np.int64)
    photon_id[keep_idx] = np.arange(keep_idx.size)

    truth = GroundTruth(
        pair_electron_id=pair_idx,
        pair_photon_id=photon_id[:n_pair],
        pair_energy=e_pair,
        pair_pperp=recoil[pair_idx],
        pair_khat=khat,
        pair_t_electron=t_e[pair_idx],
        pair_t_photon=t_pair_ph,
        pair_electron_detected=kept[pair_idx],
        photon_source=src[keep_idx],
        hit_electron=hit_electron,
        n_electrons=n_e,
        n_electrons_detected=int(kept.sum()),
        electron_detected=kept,
    )
    stream = EventStream(hits, photons, cfg.toa_quantum, cfg.tot_quantum, cfg.photon_quantum,
                         cfg.duration, {"electron_rate": cfg.electron_rate, "seed": int(cfg.seed)})
    return stream, truth
