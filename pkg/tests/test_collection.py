import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinccl.collection import (
    CollectionModel,
    EfficiencyCurve,
    ElectronEnergyFilter,
    ParametricMirror,
    PhotonBandpass,
    TabulatedMirror,
    bandpass_weight,
    default_curves,
    electron_filter_weight,
    full_disk_mirror,
    load_curve,
    load_tabulated_mirror,
    mirror_acceptance,
    photon_efficiency,
)
from coinccl.constants import wavelength_to_energy
from coinccl.errors import DomainError, ParseError, RangeError, ValidationError


def _khat(theta, phi):
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi)], axis=-1)


def test_parametric_mirror_gap_and_cutoffs():
    m = ParametricMirror(theta_min=0.35, theta_max=1.25, gap_center=0.0, gap_halfwidth=0.5)
    # inside the gap, outside the gap, below the hole, above the rim
    assert m.contains(0.8, 0.2) == False  # noqa: E712
    assert m.contains(0.8, np.pi) == True  # noqa: E712
    assert m.contains(0.2, np.pi) == False  # noqa: E712
    assert m.contains(1.3, np.pi) == False  # noqa: E712
    # gap boundary is rejected strictly inside only
    assert m.contains(0.8, 0.5) == True  # noqa: E712
    assert m.contains(0.8, 0.4999) == False  # noqa: E712


def test_gap_wraps_around_pi():
    m = ParametricMirror(gap_center=np.pi, gap_halfwidth=0.3)
    assert not m.contains(0.8, -np.pi + 0.1)
    assert not m.contains(0.8, np.pi - 0.1)
    assert m.contains(0.8, 0.0)


def test_acceptance_from_khat_matches_contains():
    m = ParametricMirror()
    th = np.array([0.2, 0.5, 0.8, 1.1, 1.3])
    ph = np.array([0.1, 2.0, -2.5, 0.7, 3.0])
    np.testing.assert_array_equal(mirror_acceptance(m, _khat(th, ph)), m.contains(th, ph).astype(float))


def test_shading_polygon_removes_region():
    poly = [(0.6, 1.0), (0.9, 1.0), (0.9, 1.5), (0.6, 1.5)]
    m = ParametricMirror(shading_polygons=(poly,))
    assert not m.contains(0.75, 1.2)
    assert m.contains(0.75, 2.0)
    assert m.contains(1.0, 1.2)


def test_mirror_validation():
    with pytest.raises(ValidationError):
        ParametricMirror(theta_min=1.0, theta_max=0.5)
    with pytest.raises(ValidationError):
        ParametricMirror(gap_halfwidth=-0.1)
    with pytest.raises(ValidationError):
        ParametricMirror(shading_polygons=([(0, 0), (1, 1)],))


def test_domain_error_outside_unit_disk():
    with pytest.raises(DomainError):
        mirror_acceptance(ParametricMirror(), np.array([0.8, 0.61]))
    with pytest.raises(ValidationError):
        mirror_acceptance(ParametricMirror(), np.array([0.1, 0.2, 0.3]))


def test_full_disk_accepts_everything():
    m = full_disk_mirror()
    rng = np.random.default_rng(3)
    th = rng.uniform(0, 0.5 * np.pi, 500)
    ph = rng.uniform(-np.pi, np.pi, 500)
    assert np.all(mirror_acceptance(m, _khat(th, ph)) == 1.0)


def test_tabulated_mirror_bilinear_and_outside():
    kx = np.array([-1.0, 0.0, 1.0])
    ky = np.array([-1.0, 0.0, 1.0])
    vals = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    tm = TabulatedMirror(kx, ky, vals)
    assert mirror_acceptance(tm, np.array([0.0, 0.0])) == 1.0
    assert mirror_acceptance(tm, np.array([0.5, 0.0])) == pytest.approx(0.5)
    assert mirror_acceptance(tm, np.array([0.5, 0.5])) == pytest.approx(0.25)
    small = TabulatedMirror(np.array([-0.1, 0.1]), np.array([-0.1, 0.1]), np.ones((2, 2)))
    assert mirror_acceptance(small, np.array([0.5, 0.0])) == 0.0


def test_tabulated_mirror_validation():
    with pytest.raises(ValidationError):
        TabulatedMirror([0, 1], [0, 1], np.ones((3, 2)))
    with pytest.raises(ValidationError):
        TabulatedMirror([1, 0], [0, 1], np.ones((2, 2)))
    with pytest.raises(ValidationError):
        TabulatedMirror([0, 1], [0, 1], np.full((2, 2), 1.5))


def test_load_tabulated_mirror(tmp_path):
    rows = ["# kx,ky,value", "khat_x,khat_y,value"]
    for a in (-1.0, 1.0):
        for b in (-1.0, 0.0, 1.0):
            rows.append(f"{a},{b},{0.5 if b == 0 else 1.0}")
    p = tmp_path / "m.csv"
    p.write_text("\n".join(rows))
    tm = load_tabulated_mirror(p)
    assert tm.values.shape == (2, 3)
    assert mirror_acceptance(tm, np.array([0.0, 0.0])) == pytest.approx(0.5)
    p.write_text("\n".join(rows[:-1]))
    with pytest.raises(ValidationError):
        load_tabulated_mirror(p)
    p.write_text("0,0\n")
    with pytest.raises(ParseError):
        load_tabulated_mirror(p)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-np.pi, np.pi))
def test_acceptance_in_unit_interval(s, phi):
    k = np.array([s * np.cos(phi), s * np.sin(phi)]) * (1 - 1e-15)
    tm = TabulatedMirror(np.linspace(-1, 1, 5), np.linspace(-1, 1, 4), np.random.default_rng(0).random((5, 4)))
    for m in (ParametricMirror(), tm):
        a = mirror_acceptance(m, k)
        assert 0.0 <= a <= 1.0


def test_curves_and_range_error():
    curves = default_curves()
    e = np.array([1.5, 2.0, 3.0])
    f = curves.fiber(e)
    assert np.all((f >= 0) & (f <= 1))
    with pytest.raises(RangeError):
        curves.fiber(100.0)
    with pytest.raises(RangeError):
        curves.detector(np.array([2.0, np.nan]))


def test_efficiency_curve_interpolation_and_validation():
    c = EfficiencyCurve(np.array([1.0, 3.0]), np.array([0.2, 0.6]))
    assert c(2.0) == pytest.approx(0.4)
    with pytest.raises(ValidationError):
        EfficiencyCurve(np.array([1.0, 1.0]), np.array([0.2, 0.6]))
    with pytest.raises(ValidationError):
        EfficiencyCurve(np.array([1.0, 2.0]), np.array([0.2, 1.6]))


def test_load_curve_formats(tmp_path):
    c = load_curve(b"# note\nenergy_eV,value\n1.0,0.5\n2.0,0.25\n")
    assert c(1.5) == pytest.approx(0.375)
    with pytest.raises(ParseError):
        load_curve(b"1.0,0.5\n2.0,x\n")
    with pytest.raises(ParseError):
        load_curve(b"1.0,0.5,3\n")
    with pytest.raises(ValidationError):
        load_curve(b"1.0,0.5\n")


def test_photon_efficiency_factorizes():
    col = CollectionModel()
    k = _khat(np.array([0.8, 0.8]), np.array([np.pi, 0.0]))
    e = np.array([2.0, 2.0])
    eff = photon_efficiency(col.mirror, col.curves, e, k)
    assert eff[1] == 0.0
    assert eff[0] == pytest.approx(col.curves.fiber(2.0) * col.curves.detector(2.0))


def test_electron_filter_inclusive_edges():
    f = ElectronEnergyFilter(center=2.5, halfwidth=0.5, enabled=True)
    np.testing.assert_array_equal(electron_filter_weight(f, [1.99, 2.0, 2.5, 3.0, 3.01]), [0, 1, 1, 1, 0])
    assert electron_filter_weight(ElectronEnergyFilter(), 17.0) == 1.0
    with pytest.raises(ValidationError):
        ElectronEnergyFilter(halfwidth=0.0, enabled=True)


def test_bandpass_edges_in_wavelength():
    bp = PhotonBandpass(center=550.0, fwhm=40.0, enabled=True)
    lo, hi = bp.energy_range
    assert lo == pytest.approx(wavelength_to_energy(570.0))
    assert hi == pytest.approx(wavelength_to_energy(530.0))
    e = wavelength_to_energy(np.array([525.0, 531.0, 550.0, 569.0, 575.0]))
    np.testing.assert_array_equal(bandpass_weight(bp, e), [0, 1, 1, 1, 0])
    assert bandpass_weight(PhotonBandpass(), 2.0) == 1.0
    with pytest.raises(ValidationError):
        bandpass_weight(bp, 0.0)
    with pytest.raises(ValidationError):
        PhotonBandpass(fwhm=0.0, enabled=True)
