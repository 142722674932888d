"""Energy-momentum bookkeeping for Compton scattering off an electron at rest.

The cross-section integrand carries two delta functions.  The energy delta
fixes the electron momentum magnitude P.  The profile delta,
delta(Q_z - sqrt(k^2 - Q_T^2)) with Q = p_f + q, is reduced here to roots in
u = cos(theta_p) along a meridian of fixed electron azimuth phi_p.  On the
constraint surface |Q| = k, which is linear in (u, sqrt(1 - u^2)):

    A u + B sqrt(1 - u^2) = C
    A = cos(theta_q), B = sin(theta_q) cos(phi_p - phi_q),
    C = (k^2 - P^2 - E_q^2) / (2 P E_q)
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .core import DEFAULT_CONSTANTS, HermiteOrder, length_to_inverse_energy
from .errors import DegenerateRoot, DomainError, KinematicallyForbidden

EPS_JAC = 1e-8
POLE_TOL = 1e-10
# |A u + B sqrt(1-u^2) - C| accepted as a genuine (non-ghost) root
_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class BeamParams:
    """Incident Hermite-Gaussian photon: energy k [keV], waist w0 [pm], nodes."""

    k: float
    w0: float
    n_x: int = 0
    n_y: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise DomainError(f"k must be positive, got {self.k!r}")
        if not (math.isfinite(self.w0) and self.w0 > 0):
            raise DomainError(f"w0 must be positive, got {self.w0!r}")
        object.__setattr__(self, "n_x", HermiteOrder(self.n_x))
        object.__setattr__(self, "n_y", HermiteOrder(self.n_y))
        if self.k * self.waist() <= 5:
            warnings.warn(
                f"k*w0 = {self.k * self.waist():.3g} <= 5: far outside the paraxial regime",
                RuntimeWarning,
                stacklevel=2,
            )

    def waist(self, c=DEFAULT_CONSTANTS):
        """Waist radius in natural units (keV^-1)."""
        return length_to_inverse_energy(self.w0, c)

    def swapped(self):
        """The same beam with the x and y node numbers exchanged."""
        return BeamParams(self.k, self.w0, self.n_y, self.n_x)


@dataclass(frozen=True)
class ScatterPoint:
    """Observation point: polar angle, azimuth from the zx-plane, photon energy."""

    theta_q: float
    phi_q: float
    E_q: float

    def __post_init__(self):
        if not 0 < self.theta_q < math.pi:
            raise DomainError(f"theta_q must lie in (0, pi), got {self.theta_q!r}")
        if not math.isfinite(self.phi_q):
            raise DomainError("phi_q must be finite")
        object.__setattr__(self, "phi_q", float(self.phi_q) % (2 * math.pi))
        if not (math.isfinite(self.E_q) and self.E_q > 0):
            raise DomainError(f"E_q must be positive, got {self.E_q!r}")

    def photon_momentum(self):
        st = math.sin(self.theta_q)
        return self.E_q * np.array(
            [st * math.cos(self.phi_q), st * math.sin(self.phi_q), math.cos(self.theta_q)]
        )


@dataclass(frozen=True)
class ElectronState:
    """Recoil electron: momentum magnitude P and total energy E_f (keV)."""

    P: float
    E_f: float


@dataclass(frozen=True)
class KinematicRoot:
    u: float
    phi_p: float
    jacobian_weight: float
    Q: np.ndarray
    p_f: np.ndarray


def compton_line_energy(k, theta_q, c=DEFAULT_CONSTANTS):
    """Plane-wave Compton energy E_0 = k / (1 + (k/m)(1 - cos theta))."""
    if not k > 0:
        raise DomainError(f"k must be positive, got {k!r}")
    if np.any(np.asarray(theta_q) < 0) or np.any(np.asarray(theta_q) > math.pi):
        raise DomainError("theta_q must lie in [0, pi]")
    return k / (1.0 + (k / c.m_e) * (1.0 - np.cos(theta_q)))


def electron_momentum(k, E_q, c=DEFAULT_CONSTANTS):
    """Recoil electron state fixed by energy conservation m + k = E_f + E_q."""
    if not E_q > 0:
        raise DomainError(f"E_q must be positive, got {E_q!r}")
    if E_q > k:
        raise KinematicallyForbidden(f"E_q = {E_q} keV exceeds the incident energy {k} keV")
    E_f = c.m_e + (k - E_q)
    # (E_f - m)(E_f + m) avoids cancellation for small energy transfer
    P = math.sqrt((k - E_q) * (E_f + c.m_e))
    return ElectronState(P=P, E_f=E_f)


def root_arrays(P, E_q, theta_q, phi_q, phi_p, k):
    """Vectorized solution of the profile constraint for an array of phi_p.

    Returns a dict of arrays of shape ``(2, len(phi_p))``, one row per
    quadratic branch: ``u``, ``weight`` (1/|g'(u)|), ``g_prime``, momentum
    components ``Qx, Qy, Qz``, ``pfx, pfy, pfz`` and the boolean ``valid``.
    Invalid entries have weight 0 and finite placeholder kinematics.
    """
    phi_p = np.atleast_1d(np.asarray(phi_p, dtype=float))
    n = phi_p.size
    A = math.cos(theta_q)
    st = math.sin(theta_q)
    B = st * np.cos(phi_p - phi_q)
    C = (k * k - P * P - E_q * E_q) / (2.0 * P * E_q)

    R2 = A * A + B * B
    disc = R2 - C * C
    has = (disc >= 0) & (R2 > 0)
    R2s = np.where(R2 > 0, R2, 1.0)
    sq = np.abs(B) * np.sqrt(np.where(has, disc, 0.0))
    u = np.stack([(A * C + sq) / R2s, (A * C - sq) / R2s])
    u = np.clip(u, -1.0, 1.0)
    s = np.sqrt(1.0 - u * u)

    # reject ghosts introduced by squaring
    residual = A * u + B * s - C
    valid = has & (np.abs(residual) <= _RESIDUAL_TOL * (1.0 + abs(C)))
    # a double root is counted once
    valid[1] &= ~(valid[0] & (u[1] == u[0]))

    cp = np.cos(phi_p)
    sp = np.sin(phi_p)
    qx = E_q * st * math.cos(phi_q)
    qy = E_q * st * math.sin(phi_q)
    qz = E_q * A
    pfx = P * s * cp
    pfy = P * s * sp
    pfz = P * u
    Qx = pfx + qx
    Qy = pfy + qy
    Qz = pfz + qz
    valid &= Qz > 0

    at_pole = s < POLE_TOL
    s_safe = np.where(at_pole, 1.0, s)
    Qz_safe = np.where(Qz > 0, Qz, 1.0)
    g_prime = P - (P * u / s_safe) * (Qx * cp + Qy * sp) / Qz_safe
    # at u = +-1 the meridian derivative diverges unless the B-term is absent
    pole_finite = np.abs(B) * E_q <= POLE_TOL * k
    g_pole = P * (1.0 - u * P / Qz_safe)
    g_prime = np.where(at_pole, np.where(pole_finite, g_pole, np.inf), g_prime)

    abs_g = np.abs(g_prime)
    weight = np.where(valid & (abs_g > 0), 1.0 / np.where(abs_g > 0, abs_g, 1.0), 0.0)
    weight = np.where(np.isinf(abs_g), 0.0, weight)
    assert weight.shape == (2, n)
    return {
        "u": u,
        "weight": weight,
        "g_prime": g_prime,
        "valid": valid,
        "Qx": Qx,
        "Qy": Qy,
        "Qz": Qz,
        "pfx": pfx,
        "pfy": pfy,
        "pfz": pfz,
    }


def delta_roots(es, pt, phi_p, k):
    """Roots u = cos(theta_p) of the profile constraint at electron azimuth phi_p.

    Returns 0, 1 or 2 :class:`KinematicRoot` objects, sorted by ``u``.  Raises
    :class:`DegenerateRoot` when |g'(u)| < EPS_JAC * P at an accepted root.
    """
    if es.P <= 0:
        return []
    r = root_arrays(es.P, pt.E_q, pt.theta_q, pt.phi_q, [phi_p], k)
    roots = []
    for b in range(2):
        if not r["valid"][b, 0]:
            continue
        g = r["g_prime"][b, 0]
        u = float(r["u"][b, 0])
        if not np.isfinite(g):
            # on the pole the constraint curve carries no measure
            continue
        if abs(g) < EPS_JAC * es.P:
            raise DegenerateRoot(
                f"|g'(u)| = {abs(g):.3g} below threshold at phi_p = {phi_p!r}",
                phi_p=phi_p,
                u=u,
            )
        Q = np.array([r["Qx"][b, 0], r["Qy"][b, 0], r["Qz"][b, 0]])
        p_f = np.array([r["pfx"][b, 0], r["pfy"][b, 0], r["pfz"][b, 0]])
        roots.append(KinematicRoot(u=u, phi_p=float(phi_p), jacobian_weight=1.0 / abs(g), Q=Q, p_f=p_f))
    roots.sort(key=lambda root: root.u)
    return roots


def tangency_azimuths(es, pt, k):
    """Electron azimuths at which the two constraint roots merge.

    These are the inverse-square-root singular points of the reduced
    integrand.  Returned in [0, 2 pi), possibly empty.
    """
    if es.P <= 0:
        return []
    A = math.cos(pt.theta_q)
    st = math.sin(pt.theta_q)
    C = (k * k - es.P**2 - pt.E_q**2) / (2.0 * es.P * pt.E_q)
    excess = C * C - A * A
    if excess <= 0 or st == 0:
        return []
    # double root needs B = sign(C) sqrt(C^2 - A^2)
    cos_d = math.copysign(math.sqrt(excess), C) / st
    if abs(cos_d) > 1:
        return []
    d = math.acos(cos_d)
    out = {(pt.phi_q + d) % (2 * math.pi), (pt.phi_q - d) % (2 * math.pi)}
    return sorted(out)
