import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hg_compton.core import DEFAULT_CONSTANTS as C, hermite_function
from hg_compton.cross_section import (
    SpectrumTable,
    angular_scan,
    count_nodes,
    dcs,
    default_energy_grid,
    energy_spectrum,
    klein_nishina_reference,
    spectral_window,
    support_width,
)
from hg_compton.errors import DomainError, InsufficientResolution, KinematicallyForbidden
from hg_compton.kinematics import BeamParams, ScatterPoint, compton_line_energy

K = 500.0


def beam(w0=25.0, nx=1, ny=0):
    return BeamParams(K, w0, nx, ny)


def point(theta_pi, phi_pi, dE=0.0):
    theta = theta_pi * math.pi
    return ScatterPoint(theta, phi_pi * math.pi, compton_line_energy(K, theta) + dE)


# --- Klein-Nishina reference -------------------------------------------------


def test_kn_reference_values():
    # closed form at theta = pi/2: ratio r = 1 / (1 + k/m)
    r = 1.0 / (1.0 + K / C.m_e)
    expected = C.alpha**2 / (2 * C.m_e**2) * r**2 * (r + 1 / r - 1)
    assert klein_nishina_reference(K, math.pi / 2) == pytest.approx(expected, rel=1e-14)


def test_kn_thomson_limit():
    k = 0.1
    total, _ = quad(
        lambda t: 2 * math.pi * math.sin(t) * klein_nishina_reference(k, t), 0, math.pi, epsrel=1e-12
    )
    thomson = 8 * math.pi / 3 * C.alpha**2 / C.m_e**2
    # leading correction is -2k/m
    assert total == pytest.approx(thomson * (1 - 2 * k / C.m_e), rel=1e-6)


# --- dcs ---------------------------------------------------------------------


def test_forbidden_energy():
    b = beam()
    with pytest.raises(KinematicallyForbidden):
        dcs(b, ScatterPoint(0.5 * math.pi, 0.0, K))


def test_kinematically_empty_is_zero():
    # below the backscatter Compton energy no |Q| = k momentum reaches E_q
    b = beam(25.0)
    E = 0.9 * compton_line_energy(K, math.pi)
    assert dcs(b, ScatterPoint(0.5 * math.pi, 0.3, E)).value == 0.0


def test_far_tail_negligible():
    b = beam(250.0)
    lo, hi = spectral_window(b, 0.5 * math.pi, tail=6.0)
    peak = dcs(b, point(0.5, 0.3)).value
    assert dcs(b, ScatterPoint(0.5 * math.pi, 0.3, lo - 5.0)).value < 1e-20 * peak


def test_exact_node_converges():
    # n_x = 1 vanishes on the zx-plane at the Compton line; the integrand is
    # rounding noise there and must not exhaust the subdivision budget
    v = dcs(beam(25.0, 1, 0), point(0.5, 0.0))
    ref = dcs(beam(25.0, 1, 0), point(0.5, 0.5)).value
    assert 0.0 <= v.value < 1e-12 * ref


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from([25.0, 75.0]),
    st.integers(0, 3),
    st.integers(0, 3),
    st.floats(0.05, 0.95),
    st.floats(0.0, 2.0),
    st.floats(-3.0, 3.0),
)
def test_mirror_symmetries(w0, nx, ny, theta_pi, phi_pi, dE):
    b = beam(w0, nx, ny)
    v = dcs(b, point(theta_pi, phi_pi, dE)).value
    v1 = dcs(b, point(theta_pi, (-phi_pi) % 2, dE)).value
    v2 = dcs(b, point(theta_pi, (1 - phi_pi) % 2, dE)).value
    scale = max(v, 1e-300)
    assert abs(v1 - v) <= 1e-6 * scale + 1e-30
    assert abs(v2 - v) <= 1e-6 * scale + 1e-30
    assert v >= 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.floats(0.05, 0.95), st.floats(0.0, 2.0), st.floats(-3, 3))
def test_xy_swap(nx, ny, theta_pi, phi_pi, dE):
    # exchanging the transverse axes maps phi_q -> pi/2 - phi_q
    a = dcs(beam(25.0, nx, ny), point(theta_pi, phi_pi, dE)).value
    b = dcs(beam(25.0, ny, nx), point(theta_pi, (0.5 - phi_pi) % 2, dE)).value
    assert b == pytest.approx(a, rel=1e-6, abs=1e-30)


def test_error_estimate_small():
    v = dcs(beam(75.0, 2, 1), point(0.3, 0.2, 0.7))
    assert v.value > 0
    assert v.quadrature_error_estimate < 1e-6 * v.value


# --- scans -------------------------------------------------------------------


def test_angular_scan_structure():
    b = beam(25.0, 1, 0)
    phis = np.linspace(0, 2 * math.pi, 16, endpoint=False)
    tab = angular_scan(b, [0.3 * math.pi], phis, [0.0])
    assert tab.values.shape == (1, 1, 16)
    v = tab.values[0, 0]
    assert set(tab.status.ravel()) == {"ok"}
    # period pi; for n_x = 1 the zx-plane (phi = 0, pi) is the minimum
    np.testing.assert_allclose(v[:8], v[8:], rtol=1e-6)
    assert np.argmin(v) in (0, 8)
    assert np.argmax(v) in (4, 12)


def test_angular_scan_empty_cells():
    b = beam(25.0, 0, 0)
    tab = angular_scan(b, [0.5 * math.pi], [0.0], [0.0, 400.0])
    assert tab.status[0, 0, 0] == "ok"
    assert tab.status[1, 0, 0] == "empty"
    assert math.isnan(tab.values[1, 0, 0])


def test_angular_scan_rejects_bad_theta():
    with pytest.raises(DomainError):
        angular_scan(beam(), [0.0], [0.0], [0.0])


def test_scan_threads_identical():
    b = beam(75.0, 1, 1)
    grid = default_energy_grid(b, 0.4 * math.pi, half_width=2.0, step=0.25)
    s1 = energy_spectrum(b, 0.4 * math.pi, 0.1, grid, threads=1)
    s4 = energy_spectrum(b, 0.4 * math.pi, 0.1, grid, threads=4)
    assert np.array_equal(s1.values, s4.values)
    assert np.array_equal(s1.errors, s4.errors)


def test_energy_spectrum_validation():
    b = beam()
    with pytest.raises(DomainError):
        energy_spectrum(b, 1.0, 0.0, [300.0, 299.0])
    with pytest.raises(DomainError):
        energy_spectrum(b, 1.0, 0.0, [100.0, K])


def test_default_grid():
    b = beam()
    g = default_energy_grid(b, 0.5 * math.pi)
    E0 = compton_line_energy(K, 0.5 * math.pi)
    assert g.size == 501
    assert g[250] == pytest.approx(E0, abs=1e-12)


def test_spectral_window_contains_line():
    for w0 in (25.0, 75.0, 250.0):
        for t in (0.1, 0.5, 0.9):
            lo, hi = spectral_window(beam(w0), t * math.pi)
            E0 = compton_line_energy(K, t * math.pi)
            assert lo < E0 < hi


# --- node counting -----------------------------------------------------------


def synthetic(values, E=None):
    values = np.asarray(values, dtype=float)
    E = np.arange(values.size, dtype=float) if E is None else E
    return SpectrumTable(None, 0.0, 0.0, E, values, np.zeros_like(values), ["ok"] * values.size, {"E0": 0.0})


def test_count_nodes_synthetic():
    x = np.linspace(-6, 6, 1201)
    for n in range(4):
        spec = synthetic(hermite_function(n, x) ** 2, x)
        assert count_nodes(spec) == n


def test_count_nodes_ignores_edges_and_shallow_dips():
    v = [0.0, 0.5, 1.0, 0.9, 1.0, 0.5, 0.0]
    assert count_nodes(synthetic(v)) == 0
    assert count_nodes(synthetic([0.0])) == 0


def test_count_nodes_resolution_guard():
    v = [1.0, 0.0, 1.0, 0.0, 1.0]
    with pytest.raises(InsufficientResolution):
        count_nodes(synthetic(v))


def test_support_width_triangle():
    E = np.linspace(-2, 2, 401)
    v = np.clip(1 - np.abs(E), 0, None)
    spec = synthetic(v, E)
    assert support_width(spec, 0.5) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InsufficientResolution):
        support_width(synthetic(np.ones(5)), 0.5)
