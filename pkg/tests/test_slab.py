import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from oracles import literal_slab, to_complex

from coinccl.constants import HBARC
from coinccl.errors import RangeError, ValidationError
from coinccl.optics import DielectricTable, permittivity, vacuum_table
from coinccl.slab import (
    SlabConfig,
    _regularize,
    bulk_loss_term,
    convolve_map,
    default_energy_grid,
    default_q_grid,
    field_coefficients,
    gamma_loss,
    gamma_tr,
    gamma_tr_q,
    loss_density,
    loss_map,
    make_kinematics,
    ridge_position,
    tr_angular_density,
    tr_density,
    transverse_wavenumbers,
)

# 40-digit literal solve of the printed system (tests/oracles.py), frozen
ORACLE = {
    (3.0, 0.5): dict(rho=0.55966970361812133, bulk=0.0049788122895860914, rho_tr=0.20249797398877232,
                     B1=11.294709932635639 - 14.711842266792613j),
    (3.0, 2.0): dict(rho=0.072938103958308707, bulk=0.0069160098874828174, rho_tr=0.0,
                     B1=96.765794341710079 - 22.572456879480672j),
    (2.5, 0.3): dict(rho=0.71384243349241109, bulk=0.0029819473592072691, rho_tr=0.54893545306545773,
                     B1=11.196078748265049 - 27.03068658111381j),
}


# --- kinematics ---------------------------------------------------------------

def test_kinematics_200kev():
    b = make_kinematics(200e3)
    assert abs(b.beta - 0.695) < 1e-3
    assert abs(b.gamma - 1.3914) < 1e-4
    assert abs(b.wavenumber_q - 2505.0) < 1.0
    assert abs(b.gamma - 1.0 / np.sqrt(1 - b.beta ** 2)) < 1e-14


def test_kinematics_nonrelativistic_limit():
    b = make_kinematics(1e-3)
    assert b.beta < 1e-4 and abs(b.gamma - 1.0) < 1e-8


@pytest.mark.parametrize("e", [0.0, -5.0])
def test_kinematics_rejects_nonpositive(e):
    with pytest.raises(ValidationError):
        make_kinematics(e)


def test_thickness_must_be_positive(silicon):
    with pytest.raises(ValidationError):
        SlabConfig(0.0, silicon, make_kinematics(200e3))


# --- branch rule --------------------------------------------------------------

def test_wavenumbers_examples():
    E = 2.0
    k = E / HBARC
    _, a0 = transverse_wavenumbers(1.0, E, 2 * k)
    assert abs(a0 - np.sqrt(3.0) * k) < 1e-15 and a0.imag == 0
    _, a0 = transverse_wavenumbers(1.0, E, 0.0)
    assert abs(a0 - (-1j * k)) < 1e-15
    _, a0 = transverse_wavenumbers(1.0, E, k)
    assert a0 == 0


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.floats(0, 50), st.floats(0.1, 5), st.floats(0, 0.2))
def test_branch_rule_property(er, ei, e, q):
    a, a0 = transverse_wavenumbers(complex(er, ei), e, q)
    for z in (a, a0):
        assert z.real >= 0
        if z.real == 0:
            assert z.imag <= 0
    assert abs(a * a - (q * q - complex(er, ei) * (e / HBARC) ** 2)) <= 1e-9 * max(1.0, abs(a * a))


# --- boundary solve against the literal oracle -----------------------------------

@pytest.mark.parametrize("E,f", list(ORACLE))
def test_against_frozen_oracle(si_slab, E, f):
    Q = f * E / HBARC
    ref = ORACLE[(E, f)]
    assert abs(loss_density(si_slab, E, Q) - ref["rho"]) < 1e-10 * abs(ref["rho"])
    assert abs(tr_density(si_slab, E, Q) - ref["rho_tr"]) <= 1e-10 * abs(ref["rho_tr"])
    eps = permittivity(si_slab.dielectric, E)
    assert abs(bulk_loss_term(eps, E, Q, si_slab) - ref["bulk"]) < 1e-12 * abs(ref["bulk"])
    fc = field_coefficients(si_slab, E, Q)
    assert abs(fc.B1 - ref["B1"]) < 1e-10 * abs(ref["B1"])


@pytest.mark.parametrize("E", [0.6, 1.0, 2.0, 3.0, 4.5])
@pytest.mark.parametrize("f", [1e-3, 0.2, 0.99, 1.01, 3.0])
def test_coefficients_match_live_oracle(si_slab, E, f):
    Q = f * E / HBARC
    eps = _regularize(permittivity(si_slab.dielectric, E), si_slab.beta)
    ref = literal_slab(eps, E, Q, si_slab.thickness_d, si_slab.beta)
    fc = field_coefficients(si_slab, E, Q)
    for name in ("B1", "A2", "B2", "A3"):
        r = to_complex(ref[name])
        scale = max(abs(to_complex(ref[n])) for n in ("B1", "A2", "B2", "A3"))
        assert abs(getattr(fc, name) - r) <= 1e-9 * scale, name
    rho_ref = float(ref["rho"])
    # the boundary sum can cancel; compare against the size of its parts
    assert abs(loss_density(si_slab, E, Q) - rho_ref) <= 1e-7 * max(abs(rho_ref), float(abs(ref["bulk"])), 1e-6)


def test_residual_invariant_on_grid(si_slab):
    e = default_energy_grid()[::15]
    q = default_q_grid()[::20]
    fc = field_coefficients(si_slab, e[:, None], q[None, :])
    assert np.all(fc.residual < 1e-10)


def test_vacuum_coefficients_vanish(vacuum_slab):
    fc = field_coefficients(vacuum_slab, 2.0, np.linspace(0, 0.05, 11))
    for name in ("B1", "A2", "B2", "A3"):
        assert np.all(getattr(fc, name) == 0)


def test_thin_film_limit(silicon):
    """B1, A3 and rho vanish linearly in d; A2, B2 stay finite."""
    E = 3.0
    Q = 0.5 * E / HBARC
    vals = []
    for d in (1.0, 1e-2, 1e-4, 1e-6):
        cfg = SlabConfig(d, silicon, make_kinematics(200e3))
        fc = field_coefficients(cfg, E, Q)
        vals.append((abs(fc.B1), abs(fc.A3), abs(loss_density(cfg, E, Q)), abs(fc.A2)))
    vals = np.array(vals)
    assert np.all(np.diff(vals[:, 0]) < 0) and np.all(np.diff(vals[:, 1]) < 0)
    assert np.all(np.diff(vals[:, 2]) < 0)
    assert vals[-1, 0] < 1e-5 * vals[0, 0] and vals[-1, 1] < 1e-5 * vals[0, 1]
    assert vals[-1, 2] < 1e-5 * vals[0, 2]
    assert np.all(np.isfinite(vals[:, 3]))


def test_large_qd_is_finite(silicon):
    cfg = SlabConfig(5000.0, silicon, make_kinematics(200e3))
    for Q in (0.5, 2.0, 10.0):
        assert np.isfinite(loss_density(cfg, 3.0, Q))


# --- densities ------------------------------------------------------------------

def test_bulk_term_special_cases(si_slab):
    assert bulk_loss_term(1.0 + 0j, 2.0, 0.01, si_slab) == 0.0
    assert bulk_loss_term(2.0 + 0j, 2.0, 0.01, si_slab) == 0.0     # n beta < 1: no clamp


def test_bulk_term_positive_in_silicon(si_slab):
    E = 3.0
    eps = permittivity(si_slab.dielectric, E)
    assert bulk_loss_term(eps, E, 2 * E / HBARC, si_slab) > 0


def test_vacuum_densities_are_exactly_zero(vacuum_slab):
    e = np.linspace(0.5, 5.0, 19)[:, None]
    q = np.linspace(0.0, 0.08, 101)[None, :]
    assert np.all(loss_density(vacuum_slab, e, q) == 0)
    assert np.all(tr_density(vacuum_slab, e, q) == 0)
    assert gamma_tr(vacuum_slab, 2.5)[0] == 0


def test_tr_support_and_sign(si_slab):
    e = default_energy_grid()[::10][:, None]
    q = default_q_grid()[None, :]
    rt = tr_density(si_slab, e, q)
    assert np.all(rt[q.repeat(e.shape[0], 0) >= e.repeat(q.shape[1], 1) / HBARC] == 0)
    assert np.all(rt >= 0)


def test_rho_nonnegative_on_grid(si_slab):
    lm = loss_map(si_slab)
    assert lm.rho.min() > -1e-12 * lm.rho.max()


def test_isotropy_via_rotation(si_slab):
    from coinccl.collection import CollectionModel, full_disk_mirror
    from coinccl.lad import coincidence_density
    col = CollectionModel(full_disk_mirror())
    E = 2.5
    p = np.array([0.004, 0.003])
    vals = []
    for ang in np.linspace(0, 2 * np.pi, 9)[:-1]:
        c, s = np.cos(ang), np.sin(ang)
        vals.append(coincidence_density(si_slab, col, E, np.array([c * p[0] - s * p[1], s * p[0] + c * p[1]])))
    assert np.ptp(vals) <= 1e-12 * max(vals)


def test_radiated_not_more_than_total_inside_light_cone(si_slab):
    E = 3.0
    k = E / HBARC
    tr, _ = integrate_q(lambda q: tr_density(si_slab, E, q), k)
    tot, _ = integrate_q(lambda q: loss_density(si_slab, E, q), k)
    assert 0 < tr <= tot


def integrate_q(f, k):
    return sint.quad(lambda q: 2 * np.pi * q * float(f(q)), 0, k, limit=200, epsrel=1e-9)


# --- angular form and two-route Gamma_TR -----------------------------------------------

def test_angular_density_is_jacobian_of_q_density(si_slab):
    E = 2.5
    k = E / HBARC
    th = np.linspace(0.01, 1.5, 40)
    lhs = tr_angular_density(si_slab, E, th)
    rhs = 2 * np.pi * k ** 2 * np.cos(th) * tr_density(si_slab, E, k * np.sin(th))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9)


def test_angular_density_limits(si_slab):
    assert tr_angular_density(si_slab, 2.5, 0.0) == 0.0          # B1 vanishes on axis
    peak = tr_angular_density(si_slab, 2.5, np.linspace(0.1, 1.4, 14)).max()
    assert tr_angular_density(si_slab, 2.5, 0.5 * np.pi) < 1e-25 * peak
    with pytest.raises(ValidationError):
        tr_angular_density(si_slab, 2.5, 2.0)


@pytest.mark.parametrize("E", [0.6, 1.3, 2.5, 3.4, 4.9])
def test_two_routes_agree(si_slab, E):
    gq, _ = gamma_tr_q(si_slab, E, rtol=1e-10)
    gt, _ = gamma_tr(si_slab, E, rtol=1e-10)
    assert abs(gq - gt) <= 1e-6 * abs(gq)


def test_two_route_against_scipy_quad(si_slab):
    E = 2.5
    k = E / HBARC
    ref, _ = integrate_q(lambda q: tr_density(si_slab, E, q), k)
    assert abs(gamma_tr_q(si_slab, E, rtol=1e-10)[0] - ref) < 1e-7 * ref


def test_gamma_tr_masks(si_slab):
    full, _ = gamma_tr(si_slab, 2.5, rtol=1e-9)
    assert gamma_tr(si_slab, 2.5, lambda t, p: np.zeros_like(t, dtype=bool))[0] == 0
    half, _ = gamma_tr(si_slab, 2.5, lambda t, p: np.cos(p) > 0, rtol=1e-9)
    assert abs(half - 0.5 * full) < 1e-7 * full
    cone, _ = gamma_tr(si_slab, 2.5, lambda t, p: t < 0.6, rtol=1e-9)
    k = 2.5 / HBARC
    ref, _ = sint.quad(lambda q: 2 * np.pi * q * tr_density(si_slab, 2.5, q), 0, k * np.sin(0.6), epsrel=1e-11)
    assert abs(cone - ref) < 1e-7 * ref


def test_coverage_of_half_plane_and_gap():
    from coinccl.collection import ParametricMirror
    from coinccl.slab import _azimuthal_coverage
    th = np.array([[0.1, 0.5], [1.0, 1.2]])
    np.testing.assert_allclose(_azimuthal_coverage(lambda t, p: np.cos(p) > 0, th), 0.5, atol=1e-12)
    pm = ParametricMirror(gap_center=0.7, gap_halfwidth=0.4)
    cov = _azimuthal_coverage(pm.contains, np.array([0.2, 0.6, 1.0, 1.3]))
    np.testing.assert_allclose(cov, [0.0, 1 - 0.8 / (2 * np.pi), 1 - 0.8 / (2 * np.pi), 0.0], atol=1e-12)


def test_gamma_loss_positive_and_uses_table_range(si_slab):
    g, _ = gamma_loss(si_slab, 3.0, q_max=0.07)
    assert g > 0
    with pytest.raises(RangeError):
        loss_density(si_slab, 9.0, 0.01)


# --- ridge -------------------------------------------------------------------

@pytest.mark.parametrize("E", [2.0, 2.5, 3.0, 3.5])
def test_ridge_at_light_line(si_slab, E):
    q, _ = ridge_position(si_slab, E, q_max=default_q_grid()[-1])
    assert abs(q / (E / HBARC) - 1) < 0.10


def test_ridge_finds_narrow_resonance(si_slab):
    E = 2.0
    q, r = ridge_position(si_slab, E)
    # far above anything sampled on the default grid at this energy
    grid_best = loss_density(si_slab, E, default_q_grid()).max()
    assert r > 10 * grid_best
    assert loss_density(si_slab, E, q * (1 + 1e-3)) < r and loss_density(si_slab, E, q * (1 - 1e-3)) < r


# --- maps -----------------------------------------------------------------------

def test_single_cell_map(si_slab):
    lm = loss_map(si_slab, [2.0], [0.01])
    assert lm.rho.shape == (1, 1)
    assert abs(lm.rho[0, 0] - loss_density(si_slab, 2.0, 0.01)) < 1e-14 * abs(lm.rho[0, 0])


def test_map_matches_pointwise_and_thread_count(si_slab):
    e = np.linspace(1.0, 4.0, 37)
    q = np.linspace(0.0, 0.05, 41)
    a = loss_map(si_slab, e, q, threads=1)
    b = loss_map(si_slab, e, q, threads=4, rows_per_task=3)
    assert np.array_equal(a.rho, b.rho) and np.array_equal(a.rho_tr, b.rho_tr)
    np.testing.assert_array_equal(a.rho[5], loss_density(si_slab, e[5], q))


def test_map_rejects_out_of_table(si_slab):
    with pytest.raises(RangeError):
        loss_map(si_slab, [0.1, 1.0], [0.0, 0.01])
    with pytest.raises(ValidationError):
        loss_map(si_slab, [2.0, 1.0], [0.0, 0.01])


def test_threads_env_cap(monkeypatch, si_slab):
    from coinccl.slab import max_threads
    monkeypatch.setenv("COINCCL_THREADS", "2")
    assert max_threads() == 2
    monkeypatch.setenv("COINCCL_THREADS", "x")
    with pytest.raises(ValidationError):
        max_threads()


def test_convolution_zero_width_is_identity(rng):
    e = np.linspace(0.5, 5, 30)
    q = np.linspace(0, 0.07, 25)
    v = rng.random((30, 25))
    assert np.array_equal(convolve_map(e, q, v, 0.0, 0.0), v)
    tiny = convolve_map(e, q, v, 1e-9, 1e-12)
    assert np.max(np.abs(tiny - v)) < 1e-12


def test_convolution_preserves_constant(rng):
    e = np.linspace(0.5, 5, 30)
    q = np.linspace(0, 0.07, 25)
    out = convolve_map(e, q, np.full((30, 25), 3.0), 0.9, 0.004)
    np.testing.assert_allclose(out, 3.0, rtol=1e-13)


def test_map_ridge_tracks_light_line_above_2_5_ev(si_slab):
    lm = loss_map(si_slab)
    for E in (2.5, 3.0, 3.5, 4.0):
        i = np.argmin(np.abs(lm.energy_axis - E))
        qpk = lm.qperp_axis[np.argmax(lm.rho[i])]
        assert abs(qpk / (lm.energy_axis[i] / HBARC) - 1) < 0.1


def test_clamp_keeps_density_finite_in_transparent_region():
    # lossless medium with n beta > 1: the bulk pole is reachable on the real Q axis
    t = DielectricTable([0.5, 5.0], [12.0 + 0j, 12.0 + 0j])
    cfg = SlabConfig(100.0, t, make_kinematics(200e3))
    E = 1.0
    k = E / HBARC
    q_pole = k * np.sqrt(12.0 * cfg.beta ** 2 - 1) / cfg.beta
    v = loss_density(cfg, E, np.linspace(0.9, 1.1, 201) * q_pole)
    assert np.all(np.isfinite(v)) and v.min() > -1e-9 * v.max()


def test_vacuum_table_default_range():
    t = vacuum_table()
    assert t.emin <= 0.5 and t.emax >= 5.0
