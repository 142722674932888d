import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad
from scipy.spatial.transform import Rotation

from hg_compton.amplitude import transverse_profile, w_if, w_if_components
from hg_compton.errors import DomainError
from hg_compton.kinematics import BeamParams, compton_line_energy

K = 500.0
vec = st.tuples(*[st.floats(-800, 800, allow_nan=False)] * 3)


def test_zero_electron_momentum():
    q = np.array([30.0, -40.0, 120.0])
    qa = np.linalg.norm(q)
    assert w_if(np.zeros(3), q, K) == pytest.approx(4 * (qa / K + K / qa), rel=1e-15)


def test_parallel_electron_momentum():
    q = np.array([30.0, -40.0, 120.0])
    qa = np.linalg.norm(q)
    assert w_if(2.7 * q, q, K) == pytest.approx(4 * (qa / K + K / qa), rel=1e-12)


def test_zero_photon_momentum_rejected():
    with pytest.raises(DomainError):
        w_if(np.ones(3), np.zeros(3), K)


@pytest.mark.parametrize("theta", np.linspace(0.05, math.pi - 0.05, 25))
def test_plane_wave_point_gives_klein_nishina_bracket(theta):
    E0 = compton_line_energy(K, theta)
    q = E0 * np.array([math.sin(theta), 0.0, math.cos(theta)])
    p_f = np.array([0.0, 0.0, K]) - q
    expected = 4 * (E0 / K + K / E0 - math.sin(theta) ** 2)
    assert w_if(p_f, q, K) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=200)
@given(vec, vec, st.integers(0, 2**32 - 1))
def test_rotation_invariance(p, q, seed):
    p = np.array(p)
    q = np.array(q)
    if np.linalg.norm(q) < 1e-3:
        return
    R = Rotation.random(random_state=seed).as_matrix()
    a = w_if(p, q, K)
    b = w_if(R @ p, R @ q, K)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9 * (1 + np.dot(p, p) / K**2))


@settings(max_examples=200)
@given(vec, vec)
def test_component_form_matches(p, q):
    p = np.array(p)
    q = np.array(q)
    if np.linalg.norm(q) < 1e-3:
        return
    a = w_if(p, q, K)
    b = w_if_components(*p, *q, K)
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9 * (1 + np.dot(p, p) / K**2))


def test_stacked_vectors_broadcast():
    p = np.random.default_rng(0).normal(size=(3, 5)) * 100
    q = np.random.default_rng(1).normal(size=(3, 5)) * 100
    out = w_if(p, q, K)
    assert out.shape == (5,)
    assert out[2] == pytest.approx(w_if(p[:, 2], q[:, 2], K))


def test_profile_examples():
    b = BeamParams(K, 25.0, 1, 0)
    assert transverse_profile(b, 0.0, 3.0) == 0.0
    b00 = BeamParams(K, 25.0, 0, 0)
    assert transverse_profile(b00, 0.0, 0.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    assert transverse_profile(b00, 0.0, 0.0) == pytest.approx(0.5642, abs=5e-5)


@given(
    st.integers(0, 6),
    st.integers(0, 6),
    st.floats(-60, 60, allow_nan=False),
    st.floats(-60, 60, allow_nan=False),
)
def test_profile_parity(nx, ny, qx, qy):
    b = BeamParams(K, 25.0, nx, ny)
    F = transverse_profile(b, qx, qy)
    assert transverse_profile(b, -qx, qy) == (-1) ** nx * F
    assert transverse_profile(b, qx, -qy) == (-1) ** ny * F
    assert transverse_profile(b, -qx, qy) ** 2 == F**2


@pytest.mark.parametrize("nx,ny,w0", [(0, 0, 25.0), (1, 0, 75.0), (2, 3, 25.0), (3, 1, 250.0)])
def test_profile_normalization(nx, ny, w0):
    b = BeamParams(K, w0, nx, ny)
    w = b.waist()
    lim = 14.0 / w
    val, _ = dblquad(
        lambda y, x: transverse_profile(b, x, y) ** 2,
        -lim,
        lim,
        -lim,
        lim,
        epsabs=0,
        epsrel=1e-11,
    )
    assert val == pytest.approx(2 / w**2, rel=1e-8)
