"""Coincidence analysis of electron hits and photon tags.

Chain: per-column ToA correction and defective-pixel removal, space-time
clustering of hits into electron events, electron-photon cross-correlation,
delay estimation, nearest-delay matching, sideband background, drift
correction and summary metrics.

Times are handed around in ns but every binning or comparison is done on
integer ticks of ``TICK = 1.5625/4 ns``, which makes results exact and
independent of platform rounding.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components

from .constants import FWHM_PER_SIGMA
from .errors import NoSignalError, ValidationError

__all__ = [
    "TICK",
    "Hits",
    "ClusterEvents",
    "CrossCorrHistogram",
    "CoincidencePairs",
    "PeakFit",
    "MetricsReport",
    "to_ticks",
    "hits_from_stream",
    "sort_hits",
    "correct_hits",
    "cluster_hits",
    "guard_mask",
    "cross_correlate",
    "estimate_delay",
    "fit_peak",
    "refine_delay",
    "match_coincidences",
    "background_pairs",
    "drift_correct",
    "compute_metrics",
    "AnalysisConfig",
    "AnalysisResult",
    "analyze_stream",
]

TICK = 1.5625 / 4.0


def to_ticks(t_ns):
    """Nearest integer tick for times in ns."""
    return np.rint(np.asarray(t_ns, dtype=float) / TICK).astype(np.int64)


# ----------------------------------------------------------------------------
# hits and clusters
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class Hits:
    """Pixel hits as parallel arrays; ``index`` refers to the input stream."""

    x: np.ndarray
    y: np.ndarray
    toa: np.ndarray
    tot: np.ndarray
    index: np.ndarray = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.toa = np.asarray(self.toa, dtype=float)
        self.tot = np.asarray(self.tot, dtype=float)
        self.index = np.arange(self.x.size) if self.index is None else np.asarray(self.index, dtype=np.int64)
        n = self.x.size
        if not (self.y.size == self.toa.size == self.tot.size == self.index.size == n):
            raise ValidationError("hit arrays must have equal length")

    def __len__(self):
        return self.x.size

    def take(self, sel):
        return Hits(self.x[sel], self.y[sel], self.toa[sel], self.tot[sel], self.index[sel])


def hits_from_stream(stream):
    """Hits in ns from an :class:`coinccl.eventgen.EventStream`."""
    h = stream.hits
    return Hits(h["x"], h["y"], stream.hit_toa_ns, stream.hit_tot_ns)


def sort_hits(hits):
    """Stable time sort."""
    return hits.take(np.argsort(hits.toa, kind="stable"))


def correct_hits(hits, column_offsets=None, defective_pixels=()):
    """Remove hits on defective pixels and subtract per-column ToA offsets.

    Parameters
    ----------
    hits : Hits
    column_offsets : dict or array_like, optional
        ``{column: ns}`` or a per-column array; missing columns count as 0.
    defective_pixels : iterable of (x, y)
    """
    keep = np.ones(len(hits), dtype=bool)
    if len(defective_pixels):
        bad = np.asarray(list(defective_pixels), dtype=np.int64).reshape(-1, 2)
        code = hits.x * 1_000_003 + hits.y
        keep &= ~np.isin(code, bad[:, 0] * 1_000_003 + bad[:, 1])
    out = hits.take(keep)
    if column_offsets is not None and len(column_offsets):
        if isinstance(column_offsets, dict):
            cols = np.array(list(column_offsets.keys()), dtype=np.int64)
            vals = np.array(list(column_offsets.values()), dtype=float)
            offs = np.zeros(out.x.size)
            if cols.size:
                lookup = dict(zip(cols.tolist(), vals.tolist()))
                ux, inv = np.unique(out.x, return_inverse=True)
                offs = np.array([lookup.get(c, 0.0) for c in ux.tolist()])[inv] if ux.size else offs
        else:
            tab = np.asarray(column_offsets, dtype=float)
            inside = (out.x >= 0) & (out.x < tab.size)
            offs = np.where(inside, tab[np.clip(out.x, 0, max(tab.size - 1, 0))], 0.0)
        out = Hits(out.x, out.y, out.toa - offs, out.tot, out.index)
    return out


@dataclass(eq=False)
class ClusterEvents:
    """One entry per reconstructed electron.

    ``t`` is the earliest ToA (ns) and ``(x, y)`` the minimum pixel
    coordinates (bottom-left corner) of the cluster; ``first_hit`` is the
    input-stream index of the earliest hit.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    total_tot: np.ndarray
    n_hits: np.ndarray
    first_hit: np.ndarray

    def __len__(self):
        return self.t.size

    def take(self, sel):
        return ClusterEvents(self.t[sel], self.x[sel], self.y[sel], self.total_tot[sel],
                             self.n_hits[sel], self.first_hit[sel])


def linkage_labels(x, y, t, eps=3.0, time_unit=50.0):
    """Connected components of the graph linking hits at distance <= eps.

    Distance is Euclidean in ``(x, y, t/time_unit)``; this is DBSCAN with
    ``min_samples = 1``. Hits are visited in time order, so only neighbours
    closer than ``eps * time_unit`` in time are compared.
    """
    n = np.asarray(t).size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(t, kind="stable")
    fx = np.asarray(x, dtype=float)[order]
    fy = np.asarray(y, dtype=float)[order]
    ft = np.asarray(t, dtype=float)[order] / time_unit
    rows, cols = [], []
    e2 = eps * eps
    k = 1
    while k < n:
        dt = ft[k:] - ft[:-k]
        near_t = dt <= eps
        if not np.any(near_t):
            break
        i = np.nonzero(near_t)[0]
        dx = fx[i] - fx[i + k]
        dy = fy[i] - fy[i + k]
        dz = ft[i] - ft[i + k]
        hit = dx * dx + dy * dy + dz * dz <= e2
        rows.append(i[hit])
        cols.append(i[hit] + k)
        k += 1
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    g = sparse.coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n)).tocsr()
    _, lab_sorted = connected_components(g, directed=False)
    labels = np.empty(n, dtype=np.int64)
    labels[order] = lab_sorted
    return labels


def cluster_hits(hits, eps=3.0, time_unit=50.0, tot_cut=750.0, return_labels=False):
    """Group hits into electron events and apply the total-ToT cut.

    Parameters
    ----------
    hits : Hits
    eps : float
        Linkage radius in feature units (pixels; ``time_unit`` ns per unit).
    time_unit : float
        ns per unit of the time feature.
    tot_cut : float
        Clusters with summed ToT below this (ns) are discarded.
    return_labels : bool
        Also return the per-hit cluster label (before the ToT cut).

    Returns
    -------
    ClusterEvents, sorted by time (ties by first hit index).
    """
    n = len(hits)
    labels = linkage_labels(hits.x, hits.y, hits.toa, eps, time_unit)
    if n == 0:
        ev = ClusterEvents(*(np.zeros(0) for _ in range(3)), np.zeros(0), np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64))
        return (ev, labels) if return_labels else ev
    nc = int(labels.max()) + 1
    # earliest hit per cluster, ties to the lowest input index
    order = np.lexsort((hits.index, hits.toa, labels))
    first_pos = order[np.r_[True, labels[order][1:] != labels[order][:-1]]]
    t = hits.toa[first_pos]
    first = hits.index[first_pos]
    xmin = np.full(nc, np.iinfo(np.int64).max)
    ymin = np.full(nc, np.iinfo(np.int64).max)
    np.minimum.at(xmin, labels, hits.x)
    np.minimum.at(ymin, labels, hits.y)
    tot = np.bincount(labels, weights=hits.tot, minlength=nc)
    nh = np.bincount(labels, minlength=nc)
    ev = ClusterEvents(t, xmin, ymin, tot, nh, first)
    ev = ev.take(tot >= tot_cut)
    ev = ev.take(np.lexsort((ev.first_hit, ev.t)))
    return (ev, labels) if return_labels else ev


# ----------------------------------------------------------------------------
# time correlation
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class CrossCorrHistogram:
    """Counts of ``t_e - t_gamma`` in equal bins covering ``[-window, window]``.

    The closed upper edge of the range belongs to the last bin.
    """

    edges: np.ndarray
    counts: np.ndarray
    bin_width: float
    window: float
    n_photons_used: int = 0

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def guard_mask(t_ns, guard=200.0, interval=10.0, t_end=None):
    """Photons at least ``guard`` ns away from every interval boundary.

    Intervals of ``interval`` seconds start at t = 0; ``t_end`` (ns), when
    given, closes the last, possibly partial interval.
    """
    tk = to_ticks(t_ns)
    g = int(round(guard / TICK))
    iv = int(round(interval * 1e9 / TICK))
    ph = np.mod(tk, iv)
    ok = (ph >= g) & (ph < iv - g)
    if t_end is not None:
        ok &= tk <= to_ticks(t_end) - g
    return ok


def _window_pairs(te_k, tg_k, lo_off, hi_off):
    """Index pairs (electron, photon) with ``lo_off <= te - tg <= hi_off`` (ticks)."""
    lo = np.searchsorted(te_k, tg_k + lo_off, side="left")
    hi = np.searchsorted(te_k, tg_k + hi_off, side="right")
    cnt = hi - lo
    total = int(cnt.sum())
    if total == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z
    ph = np.repeat(np.arange(tg_k.size), cnt)
    start = np.cumsum(cnt) - cnt
    el = np.repeat(lo, cnt) + (np.arange(total) - np.repeat(start, cnt))
    return el, ph


def cross_correlate(electron_t, photon_t, window=200.0, bin_width=1.5625, guard=200.0,
                    interval=10.0, t_end=None):
    """Histogram of electron-photon time differences.

    Parameters
    ----------
    electron_t, photon_t : array_like
        Event times in ns (any order; sorted internally).
    window : float
        Half range in ns.
    bin_width : float
        ns; ``2 window / bin_width`` must be an integer number of ticks.
    guard, interval, t_end
        Photon boundary exclusion, see :func:`guard_mask`.

    Returns
    -------
    CrossCorrHistogram
    """
    w = int(round(window / TICK))
    b = int(round(bin_width / TICK))
    if b <= 0 or (2 * w) % b or abs(w * TICK - window) > 1e-9 or abs(b * TICK - bin_width) > 1e-9:
        raise ValidationError("window and bin width must be whole multiples of the internal tick")
    nb = 2 * w // b
    edges = (np.arange(nb + 1) * b - w) * TICK
    te = np.sort(to_ticks(electron_t))
    tg_ns = np.sort(np.asarray(photon_t, dtype=float))
    keep = guard_mask(tg_ns, guard, interval, t_end)
    tg = to_ticks(tg_ns[keep])
    counts = np.zeros(nb, dtype=np.int64)
    if te.size and tg.size:
        el, ph = _window_pairs(te, tg, -w, w)
        dt = te[el] - tg[ph]
        idx = np.minimum((dt + w) // b, nb - 1)
        counts = np.bincount(idx, minlength=nb).astype(np.int64)
    return CrossCorrHistogram(edges, counts, bin_width, window, int(tg.size))


def estimate_delay(hist, n_bins=11):
    """Centroid of the ``n_bins`` bins centred on the histogram maximum.

    The maximum is the first (most negative) bin among ties; the window is
    truncated at the histogram edges.

    Raises
    ------
    NoSignalError
        All-zero histogram.
    """
    c = np.asarray(hist.counts, dtype=float)
    if not np.any(c > 0):
        raise NoSignalError("cross-correlation histogram is empty")
    i = int(np.argmax(c))
    half = n_bins // 2
    lo, hi = max(0, i - half), min(c.size, i + half + 1)
    w = c[lo:hi]
    return float(np.sum(w * hist.centers[lo:hi]) / np.sum(w))


@dataclass
class PeakFit:
    """Gaussian-plus-constant fit to the cross-correlation peak (ns, counts)."""

    mean: float
    fwhm: float
    amplitude: float
    background: float
    mean_err: float
    fwhm_err: float


def _gauss_const(x, a, mu, sig, c):
    return a * np.exp(-0.5 * ((x - mu) / sig) ** 2) + c


def fit_peak(hist, guess_mean=None, guess_fwhm=42.0, n_iter=4):
    """Gaussian + flat background fit to the cross-correlation histogram.

    Weights are taken from the current model (Pearson chi-square) and the
    fit is iterated, which converges to the Poisson maximum-likelihood
    solution; data-derived weights bias low-count peaks narrow.
    """
    y = np.asarray(hist.counts, dtype=float)
    x = hist.centers
    if not np.any(y > 0):
        raise NoSignalError("cross-correlation histogram is empty")
    mu0 = estimate_delay(hist) if guess_mean is None else guess_mean
    c0 = max(float(np.median(y)), 0.1)
    a0 = max(float(y.max()) - c0, 1.0)
    p = np.array([a0, mu0, guess_fwhm / FWHM_PER_SIGMA, c0])
    lo = [0.0, x[0], hist.bin_width / 4, 1e-6]
    hi = [np.inf, x[-1], hist.window, np.inf]
    p = np.clip(p, np.add(lo, 1e-9), hi)
    for _ in range(n_iter):
        sigma = np.sqrt(np.maximum(_gauss_const(x, *p), 1e-3))
        p, pcov = curve_fit(_gauss_const, x, y, p0=p, sigma=sigma, absolute_sigma=True,
                            bounds=(lo, hi), maxfev=20000)
    err = np.sqrt(np.diag(pcov))
    return PeakFit(float(p[1]), float(abs(p[2]) * FWHM_PER_SIGMA), float(p[0]),
                   float(p[3]), float(err[1]), float(err[2] * FWHM_PER_SIGMA))


def refine_delay(hist, n_bins=11):
    """Delay from the peak fit, seeded by the centroid estimate.

    Falls back to the centroid when the fit fails. Returns
    ``(delay, centroid, fit_or_None)``.
    """
    centroid = estimate_delay(hist, n_bins)
    try:
        fit = fit_peak(hist)
    except (RuntimeError, ValueError):
        return centroid, centroid, None
    if not np.isfinite(fit.mean):
        return centroid, centroid, None
    return fit.mean, centroid, fit


# ----------------------------------------------------------------------------
# matching
# ----------------------------------------------------------------------------

@dataclass(eq=False)
class CoincidencePairs:
    """Nearest-delay electron for every photon.

    ``photon_index`` / ``electron_index`` index the sorted input streams;
    ``dt = t_e - t_gamma`` in ns; ``classified`` marks
    ``|dt - expected_dt| <= tau/2``.
    """

    photon_index: np.ndarray
    electron_index: np.ndarray
    dt: np.ndarray
    classified: np.ndarray
    expected_dt: float = 0.0
    tau: float = 50.0

    def __len__(self):
        return self.photon_index.size

    @property
    def n_classified(self):
        return int(np.count_nonzero(self.classified))


def _empty_pairs(expected_dt, tau):
    z = np.zeros(0, dtype=np.int64)
    return CoincidencePairs(z, z.copy(), np.zeros(0), np.zeros(0, dtype=bool), expected_dt, tau)


def match_coincidences(electron_t, photon_t, expected_dt, tau=50.0, exclusive=False):
    """Pair each photon with the electron whose delay is closest to ``expected_dt``.

    Parameters
    ----------
    electron_t, photon_t : array_like
        Sorted event times in ns.
    expected_dt : float
        Expected ``t_e - t_gamma`` in ns.
    tau : float
        Full coincidence window in ns (inclusive edges).
    exclusive : bool
        If True an electron keeps only its closest photon (earlier photon on
        ties); the other photons lose their match. The default lets several
        photons select the same electron.

    Returns
    -------
    CoincidencePairs
        Empty when either stream is empty. Equidistant electrons resolve to
        the earlier one.
    """
    if not np.isfinite(expected_dt):
        raise ValidationError("expected_dt must be finite")
    te_ns = np.asarray(electron_t, dtype=float)
    tg_ns = np.asarray(photon_t, dtype=float)
    if te_ns.size == 0 or tg_ns.size == 0:
        return _empty_pairs(expected_dt, tau)
    if np.any(np.diff(te_ns) < 0) or np.any(np.diff(tg_ns) < 0):
        raise ValidationError("streams must be time-sorted")
    te = to_ticks(te_ns)
    tg = to_ticks(tg_ns)
    target = tg * TICK + expected_dt             # ideal electron time, ns
    j = np.searchsorted(te * TICK, target, side="left")
    left = np.clip(j - 1, 0, te.size - 1)
    right = np.clip(j, 0, te.size - 1)
    dl = np.abs(te[left] * TICK - target)
    dr = np.abs(te[right] * TICK - target)
    pick = np.where(dr < dl, right, left)
    dt = (te[pick] - tg) * TICK
    dev = np.abs(dt - expected_dt)
    classified = dev <= 0.5 * tau
    ph = np.arange(tg.size)
    if exclusive:
        order = np.lexsort((ph, dev, pick))
        first = np.r_[True, pick[order][1:] != pick[order][:-1]]
        keep = np.zeros(tg.size, dtype=bool)
        keep[order[first]] = True
        ph, pick, dt, classified = ph[keep], pick[keep], dt[keep], classified[keep]
    return CoincidencePairs(ph, pick.astype(np.int64), dt, classified, float(expected_dt), float(tau))


def background_pairs(electron_t, photon_t, expected_dt, tau=50.0, offset=-100.0, exclusive=False):
    """Matching at a shifted delay, sampling uncorrelated coincidences."""
    return match_coincidences(electron_t, photon_t, expected_dt + offset, tau, exclusive)


# ----------------------------------------------------------------------------
# drift and metrics
# ----------------------------------------------------------------------------

def drift_correct(t_ns, x, y, window=50.0):
    """Remove slow beam drift by re-centring each time window.

    Parameters
    ----------
    t_ns : array_like
        Event times (ns).
    x, y : array_like
        Positions (pixels).
    window : float
        Window length in s; windows start at t = 0.

    Returns
    -------
    x_corr, y_corr : ndarray of float
    """
    t = np.asarray(t_ns, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0:
        return x.copy(), y.copy()
    w = np.floor(t / (window * 1e9)).astype(np.int64)
    _, inv = np.unique(w, return_inverse=True)
    cnt = np.bincount(inv)
    mx = np.bincount(inv, weights=x) / cnt
    my = np.bincount(inv, weights=y) / cnt
    return x - (mx[inv] - x.mean()), y - (my[inv] - y.mean())


@dataclass
class MetricsReport:
    """Coincidence quality figures (rates in s^-1) with Poisson uncertainties."""

    r_coin: float
    r_false: float
    r_true: float
    car: float
    p_photon_given_coincidence: float
    enhancement_A: float
    r_eftem: float
    p_photon_given_eftem: float = float("nan")
    car_err: float = float("nan")
    p_err: float = float("nan")
    A_err: float = float("nan")
    r_true_err: float = float("nan")
    car_infinite: bool = False
    r_true_clamped: bool = False
    flags: list = field(default_factory=list)

    def as_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, float) and not np.isfinite(v):
                v = None if np.isnan(v) else ("inf" if v > 0 else "-inf")
            out[k] = v
        return out


def compute_metrics(n_coin, n_false, n_eftem_above_lightline, live_time, physics=None):
    """CAR, P(photon-emitting | coincidence) and the enhancement factor A.

    Parameters
    ----------
    n_coin, n_false : int
        Classified pairs in the signal window and in the offset sideband.
    n_eftem_above_lightline : int or None
        Energy-filtered electrons detected inside the light-line disk.
    live_time : float
        s.
    physics : dict, optional
        ``electron_rate`` (s^-1), ``alpha_e`` and ``p_coh_in_window`` give
        the expected rate ``i alpha_e p_coh`` of photon-emitting filtered
        electrons. Without them A is not evaluated.

    Returns
    -------
    MetricsReport
    """
    if not live_time > 0:
        raise ValidationError("live_time must be > 0")
    n_coin = float(n_coin)
    n_false = float(n_false)
    flags = []
    r_coin = n_coin / live_time
    r_false = n_false / live_time
    r_true = r_coin - r_false
    clamped = r_true < 0
    if clamped:
        r_true = 0.0
        flags.append("r_true_clamped")
    r_true_err = np.sqrt(n_coin + n_false) / live_time
    if n_false > 0:
        car = r_true / r_false
        car_inf = False
        car_err = (n_coin / n_false) * np.sqrt(1.0 / n_false + (1.0 / n_coin if n_coin > 0 else 0.0))
    else:
        car = float("inf") if r_true > 0 else float("nan")
        car_inf = r_true > 0
        car_err = float("nan")
        if car_inf:
            flags.append("car_infinite")
    if car_inf:
        p = 1.0
        p_err = float("nan")
    elif np.isfinite(car):
        p = car / (car + 1.0)
        p_err = (n_false / n_coin) * np.sqrt(1.0 / n_false + 1.0 / n_coin) if n_coin > 0 and n_false > 0 else float("nan")
    else:
        p = float("nan")
        p_err = float("nan")
    r_eftem = float("nan")
    p_eftem = float("nan")
    a = float("nan")
    a_err = float("nan")
    if n_eftem_above_lightline is not None:
        r_eftem = float(n_eftem_above_lightline) / live_time
    phys = physics or {}
    if {"electron_rate", "alpha_e", "p_coh_in_window"} <= set(phys) and r_eftem > 0:
        p_eftem = phys["electron_rate"] * phys["alpha_e"] * phys["p_coh_in_window"] / r_eftem
        a = p / p_eftem
        if np.isfinite(p_err):
            a_err = a * np.sqrt((p_err / p) ** 2 + 1.0 / float(n_eftem_above_lightline))
    return MetricsReport(r_coin, r_false, r_true, car, p, a, r_eftem, p_eftem,
                         float(car_err), float(p_err), float(a_err), float(r_true_err),
                         bool(car_inf), bool(clamped), flags)


# ----------------------------------------------------------------------------
# full chain
# ----------------------------------------------------------------------------

@dataclass
class AnalysisConfig:
    """Parameters of :func:`analyze_stream` (times in ns unless noted)."""

    eps: float = 3.0
    time_unit: float = 50.0
    tot_cut: float = 750.0
    window: float = 200.0
    bin_width: float = 1.5625
    guard: float = 200.0
    interval: float = 10.0            # s
    tau: float = 50.0
    background_offset: float = -100.0
    exclusive: bool = False
    refine_delay: bool = True
    expected_dt: float = None         # skip estimation when given
    column_offsets: object = None
    defective_pixels: tuple = ()
    drift_window: float = 50.0        # s; 0 disables
    beam_center: tuple = None         # pixels; default is the median cluster position
    light_line_radius_px: float = None
    physics: dict = None


@dataclass(eq=False)
class AnalysisResult:
    status: str
    clusters: ClusterEvents
    x: np.ndarray
    y: np.ndarray
    histogram: CrossCorrHistogram = None
    delay: float = float("nan")
    delay_centroid: float = float("nan")
    fit: PeakFit = None
    pairs: CoincidencePairs = None
    background: CoincidencePairs = None
    metrics: MetricsReport = None
    beam_center: tuple = None
    n_eftem: int = None
    warnings: list = field(default_factory=list)

    def coincident_positions(self, which="signal"):
        """Drift-corrected positions of electrons in classified pairs."""
        p = self.pairs if which == "signal" else self.background
        if p is None:
            return np.zeros(0), np.zeros(0)
        e = p.electron_index[p.classified]
        return self.x[e], self.y[e]

    def summary(self):
        out = {
            "status": self.status,
            "n_clusters": int(len(self.clusters)),
            "delay_ns": self.delay,
            "delay_centroid_ns": self.delay_centroid,
            "n_coincidences": self.pairs.n_classified if self.pairs is not None else 0,
            "n_background": self.background.n_classified if self.background is not None else 0,
            "n_eftem_above_lightline": self.n_eftem,
            "beam_center_px": list(self.beam_center) if self.beam_center is not None else None,
            "warnings": list(self.warnings),
        }
        if self.fit is not None:
            out["peak_fit"] = dict(self.fit.__dict__)
        if self.metrics is not None:
            out["metrics"] = self.metrics.as_dict()
        return out


def analyze_stream(stream, cfg=None):
    """Run correction, clustering, correlation, matching and metrics.

    Parameters
    ----------
    stream : EventStream
    cfg : AnalysisConfig, optional

    Returns
    -------
    AnalysisResult
        ``status`` is ``"no_signal"`` when there are no electrons, no
        photons or an empty histogram; nothing is raised in that case.
    """
    cfg = cfg or AnalysisConfig()
    hits = correct_hits(hits_from_stream(stream), cfg.column_offsets, cfg.defective_pixels)
    ev = cluster_hits(sort_hits(hits), cfg.eps, cfg.time_unit, cfg.tot_cut)
    tg = np.sort(stream.photon_t_ns)
    T = stream.duration
    if cfg.drift_window and len(ev):
        x, y = drift_correct(ev.t, ev.x, ev.y, cfg.drift_window)
    else:
        x, y = ev.x.astype(float), ev.y.astype(float)
    res = AnalysisResult("ok", ev, x, y)
    if len(ev):
        res.beam_center = tuple(cfg.beam_center) if cfg.beam_center is not None else (
            float(np.median(x)), float(np.median(y)))
        if cfg.light_line_radius_px is not None:
            r = np.hypot(x - res.beam_center[0], y - res.beam_center[1])
            res.n_eftem = int(np.count_nonzero(r <= cfg.light_line_radius_px))
    if len(ev) == 0 or tg.size == 0:
        res.status = "no_signal"
        res.warnings.append("no electrons" if len(ev) == 0 else "no photons")
        return res
    res.histogram = cross_correlate(ev.t, tg, cfg.window, cfg.bin_width, cfg.guard, cfg.interval,
                                    t_end=T * 1e9)
    if cfg.expected_dt is not None:
        res.delay = res.delay_centroid = float(cfg.expected_dt)
    else:
        try:
            if cfg.refine_delay:
                res.delay, res.delay_centroid, res.fit = refine_delay(res.histogram)
                if res.fit is None:
                    res.warnings.append("peak fit failed; centroid used")
            else:
                res.delay = res.delay_centroid = estimate_delay(res.histogram)
        except NoSignalError:
            res.status = "no_signal"
            res.warnings.append("empty cross-correlation histogram")
            return res
    res.pairs = match_coincidences(ev.t, tg, res.delay, cfg.tau, cfg.exclusive)
    res.background = background_pairs(ev.t, tg, res.delay, cfg.tau, cfg.background_offset, cfg.exclusive)
    live = T if T > 0 else float("nan")
    if live > 0:
        res.metrics = compute_metrics(res.pairs.n_classified, res.background.n_classified,
                                      res.n_eftem, live, cfg.physics)
        res.warnings.extend(res.metrics.flags)
    return res
