"""Brute-force cross section with both delta functions regularized.

The two deltas are replaced by unit-area Gaussians of widths eta_E and
eta_Q and the full three-dimensional electron-momentum integral is done
numerically.  Nothing here uses the analytic root reduction; agreement with
:func:`hg_compton.cross_section.dcs` certifies it.

The integration variable is Q = p_f + q (unit Jacobian).  Transverse
components are rotated so that ``a`` runs along q_T and ``b`` across it;
the energy constraint then cuts the (a, b) plane in a band that is narrow
in ``a`` and extended in ``b``:

* inner  Q_z: Gauss-Legendre over +-8 eta_Q around sqrt(k^2 - Q_T^2)
* middle a:   QUADPACK over the windows where the energy Gaussian is alive,
              found by sampling at eta / samples_per_width
* outer  b:   QUADPACK over the profile support
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad

from .amplitude import w_if_components
from .core import DEFAULT_CONSTANTS, hermite_function
from .cross_section import CrossSectionValue, prefactor, spectral_window
from .errors import DomainError, KinematicallyForbidden, OracleUnconverged

_WINDOW_SIGMAS = 8.0
_INNER_NODES = 64


@dataclass(frozen=True)
class RegularizationParams:
    eta_E: float = 0.05
    eta_Q: float = 0.05
    samples_per_width: int = 8
    epsrel: float = 1e-9
    convergence: float = 5e-3

    def __post_init__(self):
        if not (self.eta_E > 0 and self.eta_Q > 0):
            raise DomainError("regularization widths must be positive")
        if self.samples_per_width < 8:
            raise DomainError("need at least 8 samples per regularization width")

    @classmethod
    def scaled_for(cls, beam, theta_q, c=DEFAULT_CONSTANTS, eta_max=0.05, per_width=100.0):
        """Widths no larger than 1/per_width of the spectral extent at theta_q.

        Narrow-waist backscatter spectra can be a fraction of a keV wide, where
        a fixed 0.05 keV regularization would no longer be small.
        """
        lo, hi = spectral_window(beam, theta_q, c, tail=0.0)
        eta = min(eta_max, (hi - lo) / per_width)
        return cls(eta_E=eta, eta_Q=eta)

    def halved(self):
        return RegularizationParams(
            self.eta_E / 2, self.eta_Q / 2, self.samples_per_width, self.epsrel, self.convergence
        )


def _gauss(x, eta):
    return np.exp(-0.5 * (x / eta) ** 2) / (eta * math.sqrt(2.0 * math.pi))


def _profile_reach(n, waist, tail=7.0):
    """|Q| beyond which f_n(waist Q / sqrt 2)^2 is negligible."""
    return math.sqrt(2.0) * (math.sqrt(2 * n + 1) + tail) / waist


def _regularized(beam, pt, eta_E, eta_Q, reg, c):
    k = beam.k
    m = c.m_e
    E_target = m + k - pt.E_q
    q = pt.photon_momentum()
    cphi, sphi = math.cos(pt.phi_q), math.sin(pt.phi_q)
    waist = beam.waist(c)
    scale = waist / math.sqrt(2.0)
    reach = math.hypot(_profile_reach(beam.n_x, waist), _profile_reach(beam.n_y, waist))
    reach = min(reach, k)
    x_nodes, x_weights = np.polynomial.legendre.leggauss(_INNER_NODES)
    half = _WINDOW_SIGMAS * eta_Q
    p_max = 2.0 * k

    def transverse(a, b):
        return a * cphi - b * sphi, a * sphi + b * cphi

    def inner(a, b):
        """Integral over Q_z at fixed transverse (a, b); ``a`` may be an array."""
        a = np.atleast_1d(a)
        Qx, Qy = transverse(a, b)
        QT2 = Qx * Qx + Qy * Qy
        ok = QT2 < k * k
        zc = np.sqrt(np.where(ok, k * k - QT2, 0.0))
        Qz = zc[:, None] + half * x_nodes[None, :]
        pfx = (Qx - q[0])[:, None]
        pfy = (Qy - q[1])[:, None]
        pfz = Qz - q[2]
        p2 = pfx * pfx + pfy * pfy + pfz * pfz
        E_f = np.sqrt(p2 + m * m)
        g = _gauss(E_f - E_target, eta_E) * _gauss(Qz - zc[:, None], eta_Q)
        W = w_if_components(pfx, pfy, pfz, q[0], q[1], q[2], k)
        F = hermite_function(beam.n_x, scale * Qx) * hermite_function(beam.n_y, scale * Qy)
        val = np.where(p2 <= p_max * p_max, g * W / E_f, 0.0)
        out = half * (val @ x_weights) * F * F
        return np.where(ok, out, 0.0)

    def energy_mismatch(a, b):
        Qx, Qy = transverse(a, b)
        zc = np.sqrt(np.clip(k * k - Qx * Qx - Qy * Qy, 0.0, None))
        p2 = (Qx - q[0]) ** 2 + (Qy - q[1]) ** 2 + (zc - q[2]) ** 2
        return np.sqrt(p2 + m * m) - E_target

    spacing = min(eta_E, eta_Q) / reg.samples_per_width
    a_grid = np.arange(-reach, reach + spacing, spacing)
    live = _WINDOW_SIGMAS * (eta_E + eta_Q) + 2.0 * spacing

    def middle(b):
        e = energy_mismatch(a_grid, b)
        alive = np.abs(e) < live
        if not alive.any():
            return 0.0
        # contiguous runs of live samples, padded by one sample each side
        idx = np.flatnonzero(alive)
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[breaks + 1]])
        ends = np.concatenate([idx[breaks], [idx[-1]]])
        total = 0.0
        for s, t in zip(starts, ends):
            lo = a_grid[max(s - 1, 0)]
            hi = a_grid[min(t + 1, a_grid.size - 1)]
            val, _ = quad(
                lambda a: float(inner(a, b)[0]),
                lo,
                hi,
                epsabs=0.0,
                epsrel=reg.epsrel,
                limit=200,
            )
            total += val
        return total

    val, _ = quad(middle, -reach, reach, epsabs=0.0, epsrel=reg.epsrel, limit=400)
    return val * prefactor(beam, pt.E_q, c)


def dcs_regularized(beam, pt, reg=RegularizationParams(), c=DEFAULT_CONSTANTS):
    """Cross section from the regularized 3D integral, Richardson-extrapolated.

    Evaluated at (eta_E, eta_Q) and at half those widths; the leading error
    is O(eta^2), so the extrapolation is (4 I(eta/2) - I(eta)) / 3 with error
    estimate |I(eta/2) - I(eta)| / 3.

    Where the spectrum curves sharply the raw eta and eta/2 values can differ
    by more than ``reg.convergence``.  One more halving is then taken and the
    result is accepted only if the two successive extrapolations agree within
    ``reg.convergence``; their difference becomes the error estimate.
    """
    if pt.E_q >= beam.k:
        raise KinematicallyForbidden(f"E_q = {pt.E_q} keV must lie below k = {beam.k} keV")
    coarse = _regularized(beam, pt, reg.eta_E, reg.eta_Q, reg, c)
    half = reg.halved()
    fine = _regularized(beam, pt, half.eta_E, half.eta_Q, half, c)
    extrapolated = (4.0 * fine - coarse) / 3.0
    diff = abs(fine - coarse)
    if diff <= reg.convergence * abs(extrapolated):
        return CrossSectionValue(max(extrapolated, 0.0), diff / 3.0)

    quarter = half.halved()
    finer = _regularized(beam, pt, quarter.eta_E, quarter.eta_Q, quarter, c)
    refined = (4.0 * finer - fine) / 3.0
    shift = abs(refined - extrapolated)
    if shift > reg.convergence * abs(refined):
        raise OracleUnconverged(
            f"raw eta/eta/2 values differ by {diff / abs(extrapolated):.3g} relative and "
            f"successive extrapolations by {shift / abs(refined):.3g}"
        )
    return CrossSectionValue(max(refined, 0.0), shift)


def regularized_sequence(beam, pt, reg=RegularizationParams(), halvings=2, c=DEFAULT_CONSTANTS):
    """Raw regularized integrals at eta, eta/2, ... (no extrapolation)."""
    out = []
    for _ in range(halvings + 1):
        out.append(_regularized(beam, pt, reg.eta_E, reg.eta_Q, reg, c))
        reg = reg.halved()
    return out


VALIDATION_WAISTS = (25.0, 75.0, 250.0)
VALIDATION_THETAS = (0.1 * math.pi, 0.5 * math.pi, 0.9 * math.pi)


def validation_instances(n, seed=1, k=500.0, c=DEFAULT_CONSTANTS, min_fraction=0.05):
    """Randomized (beam, point) pairs for the oracle-vs-reduction comparison.

    Beams are drawn from w0 in {25, 75, 250} pm and n_x, n_y in 0..3;
    polar angles from {0.1, 0.5, 0.9} pi.  The photon energy is drawn over
    the spectral window and redrawn while the cross section falls below
    ``min_fraction`` of the spectrum's coarse maximum, which keeps relative
    comparisons away from spectral nodes.
    """
    from .cross_section import dcs
    from .kinematics import BeamParams, ScatterPoint

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        beam = BeamParams(
            k,
            float(rng.choice(VALIDATION_WAISTS)),
            int(rng.integers(0, 4)),
            int(rng.integers(0, 4)),
        )
        theta = float(rng.choice(VALIDATION_THETAS))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        lo, hi = spectral_window(beam, theta, c, tail=1.0)
        hi = min(hi, k * (1 - 1e-9))
        coarse = [dcs(beam, ScatterPoint(theta, phi, E), c=c).value for E in np.linspace(lo, hi, 41)[1:-1]]
        peak = max(coarse)
        for _ in range(50):
            pt = ScatterPoint(theta, phi, float(rng.uniform(lo, hi)))
            if dcs(beam, pt, c=c).value >= min_fraction * peak:
                out.append((beam, pt))
                break
    return out
