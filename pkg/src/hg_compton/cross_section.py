"""Triple-differential cross section d^3 sigma / (dOmega dE_q) and grid scans.

Both delta functions are removed analytically: the energy delta fixes the
electron momentum P (turning d^3p_f / E_f into P dOmega_p) and the profile
delta fixes cos(theta_p) for each electron azimuth phi_p.  What remains is
a one-dimensional integral over phi_p, done by adaptive Gauss-Legendre
panels.

Breakpoints for the phi_p integral are placed (a) geometrically around
phi_p = phi_q + pi, where p_T is anti-parallel to q_T and the profile
F(Q_x, Q_y) peaks, and (b) at the tangency azimuths where the two roots merge.
Panels ending on a tangency are integrated in a variable that removes the
inverse-square-root endpoint singularity.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from . import __version__
from .amplitude import w_if_components
from .core import DEFAULT_CONSTANTS, hermite_function
from .errors import (
    DomainError,
    HGComptonError,
    InsufficientResolution,
    KinematicallyForbidden,
)
from .kinematics import (
    ScatterPoint,
    compton_line_energy,
    electron_momentum,
    root_arrays,
    tangency_azimuths,
)
from .quadrature import QuadratureConfig, integrate

# Overall factor applied to the closed-form prefactor alpha^2 w0^2 E_q / (2 m k).
# With it, the n_x = n_y = 0 wide-waist limit integrated over E_q equals the
# unpolarized Klein-Nishina cross section; without it the result is 8x larger.
NORMALIZATION = 0.125

# geometric refinement levels around the profile peak azimuth
_GRADING_LEVELS = 14
_PROBE_SAMPLES = 256

_PLAIN, _LEFT, _RIGHT, _BOTH = 0, 1, 2, 3


@dataclass(frozen=True)
class CrossSectionValue:
    """Cross section [keV^-3 sr^-1] with its quadrature error estimate."""

    value: float
    quadrature_error_estimate: float = 0.0


@dataclass
class SpectrumTable:
    beam: object
    theta_q: float
    phi_q: float
    E_q: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    status: list
    metadata: dict = field(default_factory=dict)

    @property
    def delta_E(self):
        return self.E_q - self.metadata["E0"]


@dataclass
class AngularTable:
    beam: object
    theta_q: np.ndarray
    phi_q: np.ndarray
    delta_E: np.ndarray
    # shape (n_dE, n_theta, n_phi); NaN where the cell is empty or failed
    values: np.ndarray
    errors: np.ndarray
    E_q: np.ndarray
    status: np.ndarray
    metadata: dict = field(default_factory=dict)


def prefactor(beam, E_q, c=DEFAULT_CONSTANTS):
    w0 = beam.waist(c)
    return NORMALIZATION * c.alpha**2 * w0 * w0 * E_q / (2.0 * c.m_e * beam.k)


def _breakpoints(es, pt, k):
    """Panel edges in psi = phi_p - (phi_q + pi) and their singular-end flags."""
    center = pt.phi_q + math.pi
    edges = [-math.pi, 0.0, math.pi]
    for j in range(1, _GRADING_LEVELS + 1):
        h = math.pi * 2.0**-j
        edges += [-h, h]
    tangent = []
    for phi_t in tangency_azimuths(es, pt, k):
        psi = math.remainder(phi_t - center, 2 * math.pi)
        tangent.append(psi)
        edges.append(psi)
    edges = sorted(set(edges))

    def is_tangent(x):
        return any(abs(x - t) <= 1e-14 * math.pi for t in tangent)

    intervals = []
    for a, b in zip(edges[:-1], edges[1:]):
        kind = (_LEFT if is_tangent(a) else 0) | (_RIGHT if is_tangent(b) else 0)
        intervals.append((a, b, kind))
    return center, intervals


def _mapped(tau, kind):
    """Map [0,1] -> [0,1] with derivative vanishing at singular ends."""
    x = np.empty_like(tau)
    d = np.empty_like(tau)
    m = kind == _PLAIN
    x[m], d[m] = tau[m], 1.0
    m = kind == _LEFT
    x[m], d[m] = tau[m] ** 2, 2.0 * tau[m]
    m = kind == _RIGHT
    x[m], d[m] = 1.0 - (1.0 - tau[m]) ** 2, 2.0 * (1.0 - tau[m])
    m = kind == _BOTH
    x[m] = 0.5 * (1.0 - np.cos(math.pi * tau[m]))
    d[m] = 0.5 * math.pi * np.sin(math.pi * tau[m])
    return x, d


def azimuthal_integrand(beam, pt, es, phi_p, c=DEFAULT_CONSTANTS, profile=True):
    """Sum over constraint roots of W_if F^2 / |g'(u)| at each phi_p.

    With ``profile=False`` the transverse factor F^2 is replaced by 1.
    """
    k = beam.k
    r = root_arrays(es.P, pt.E_q, pt.theta_q, pt.phi_q, phi_p, k)
    valid = r["valid"]
    st = math.sin(pt.theta_q)
    qx = pt.E_q * st * math.cos(pt.phi_q)
    qy = pt.E_q * st * math.sin(pt.phi_q)
    qz = pt.E_q * math.cos(pt.theta_q)
    W = w_if_components(r["pfx"], r["pfy"], r["pfz"], qx, qy, qz, k)
    if np.any(W[valid] < 0):
        raise ArithmeticError("negative W_if at a reachable configuration")
    if not profile:
        return np.sum(np.where(valid, W * r["weight"], 0.0), axis=0)
    scale = beam.waist(c) / math.sqrt(2.0)
    F = hermite_function(beam.n_x, scale * r["Qx"]) * hermite_function(beam.n_y, scale * r["Qy"])
    return np.sum(np.where(valid, W * F * F * r["weight"], 0.0), axis=0)


def dcs(beam, pt, cfg=QuadratureConfig(), c=DEFAULT_CONSTANTS):
    """d^3 sigma / (dOmega dE_q) at one observation point, in keV^-3 sr^-1."""
    if pt.E_q >= beam.k:
        raise KinematicallyForbidden(
            f"E_q = {pt.E_q} keV must lie strictly below k = {beam.k} keV"
        )
    es = electron_momentum(beam.k, pt.E_q, c)
    center, intervals = _breakpoints(es, pt, beam.k)
    lo = np.array([iv[0] for iv in intervals])
    width = np.array([iv[1] - iv[0] for iv in intervals])
    kinds = np.array([iv[2] for iv in intervals])
    n = len(intervals)

    def f(t):
        idx = np.clip(np.floor(t).astype(int), 0, n - 1)
        x, d = _mapped(t - idx, kinds[idx])
        phi_p = center + lo[idx] + width[idx] * x
        return azimuthal_integrand(beam, pt, es, phi_p, c) * width[idx] * d

    # size of the integral with F^2 replaced by 1, which sets the absolute floor;
    # sampled off-grid so tangency points are not hit exactly
    probe = center + 2.0 * math.pi * (np.arange(_PROBE_SAMPLES) + 0.5 / math.e) / _PROBE_SAMPLES
    reference = 2.0 * math.pi * float(np.mean(azimuthal_integrand(beam, pt, es, probe, c, profile=False)))
    value, err = integrate(f, np.arange(n + 1, dtype=float), cfg, reference)
    pref = prefactor(beam, pt.E_q, c) * es.P
    return CrossSectionValue(max(value, 0.0) * pref, err * pref)


def klein_nishina_reference(k, theta_q, c=DEFAULT_CONSTANTS):
    """Unpolarized Klein-Nishina d sigma / d Omega in keV^-2 sr^-1."""
    ratio = compton_line_energy(k, theta_q, c) / k
    return (
        c.alpha**2
        / (2.0 * c.m_e**2)
        * ratio**2
        * (ratio + 1.0 / ratio - np.sin(theta_q) ** 2)
    )


def _metadata(beam, cfg, c, **extra):
    meta = {
        "k_keV": beam.k,
        "w0_pm": beam.w0,
        "nx": int(beam.n_x),
        "ny": int(beam.n_y),
        "m_e_keV": c.m_e,
        "alpha": c.alpha,
        "hbar_c_keV_pm": c.hbar_c,
        "tol": cfg.tol,
        "max_subdivisions": cfg.max_subdivisions,
        "panel_order": cfg.order,
        "version": __version__,
    }
    meta.update(extra)
    return meta


def _evaluate(beam, pt_args, cfg, c):
    theta, phi, E_q = pt_args
    try:
        if not 0 < E_q < beam.k:
            return math.nan, math.nan, "empty"
        v = dcs(beam, ScatterPoint(theta, phi, E_q), cfg, c)
        return v.value, v.quadrature_error_estimate, "ok"
    except HGComptonError as exc:
        return math.nan, math.nan, f"error:{type(exc).__name__}"


def _map_cells(beam, cells, cfg, c, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda a: _evaluate(beam, a, cfg, c), cells))
    return [_evaluate(beam, a, cfg, c) for a in cells]


def angular_scan(beam, theta_grid, phi_list, deltaE_list, cfg=QuadratureConfig(), c=DEFAULT_CONSTANTS, threads=1):
    """dcs on a (delta E, theta_q, phi_q) grid at E_q = E_0(theta_q) + delta E.

    Cells with E_q outside (0, k) are marked ``empty``; numerical failures
    are recorded per cell and do not abort the scan.
    """
    theta_grid = np.asarray(theta_grid, dtype=float)
    phi_list = np.asarray(phi_list, dtype=float)
    deltaE_list = np.asarray(deltaE_list, dtype=float)
    if theta_grid.size == 0 or phi_list.size == 0 or deltaE_list.size == 0:
        raise DomainError("angular_scan grids must be non-empty")
    if np.any(theta_grid <= 0) or np.any(theta_grid >= math.pi):
        raise DomainError("theta grid must lie inside (0, pi)")
    E0 = compton_line_energy(beam.k, theta_grid, c)
    shape = (deltaE_list.size, theta_grid.size, phi_list.size)
    E_q = np.broadcast_to(E0[None, :, None] + deltaE_list[:, None, None], shape)
    cells = [
        (theta_grid[i], phi_list[j], E_q[d, i, j])
        for d in range(shape[0])
        for i in range(shape[1])
        for j in range(shape[2])
    ]
    out = _map_cells(beam, cells, cfg, c, threads)
    values = np.array([o[0] for o in out]).reshape(shape)
    errors = np.array([o[1] for o in out]).reshape(shape)
    status = np.array([o[2] for o in out], dtype=object).reshape(shape)
    return AngularTable(
        beam=beam,
        theta_q=theta_grid,
        phi_q=phi_list,
        delta_E=deltaE_list,
        values=values,
        errors=errors,
        E_q=np.array(E_q),
        status=status,
        metadata=_metadata(beam, cfg, c),
    )


def default_energy_grid(beam, theta_q, c=DEFAULT_CONSTANTS, half_width=5.0, step=0.02):
    """E_0 +- half_width keV at ``step`` spacing, clipped to (0, k)."""
    E0 = compton_line_energy(beam.k, theta_q, c)
    n = int(round(half_width / step))
    grid = E0 + step * np.arange(-n, n + 1)
    return grid[(grid > 0) & (grid < beam.k)]


def spectral_window(beam, theta_q, c=DEFAULT_CONSTANTS, tail=4.0):
    """Energy interval containing the whole spectrum at polar angle theta_q.

    Each admissible profile momentum Q (|Q| = k) acts as a plane wave, so
    E_q = k / (1 + (k/m)(1 - Q.q/(k E_q))).  The profile is negligible beyond
    |Q_T| = sqrt(2) (sqrt(2n+1) + tail) / w0, which bounds the tilt of Q.
    """
    n_max = max(beam.n_x, beam.n_y)
    q_cut = math.sqrt(2.0) * (math.sqrt(2 * n_max + 1) + tail) / beam.waist(c)
    tilt = math.asin(min(1.0, q_cut / beam.k))
    lo = compton_line_energy(beam.k, min(math.pi, theta_q + tilt), c)
    hi = compton_line_energy(beam.k, max(0.0, theta_q - tilt), c)
    return lo, min(hi, beam.k)


def energy_spectrum(beam, theta_q, phi_q, E_grid=None, cfg=QuadratureConfig(), c=DEFAULT_CONSTANTS, threads=1):
    """Scattered-photon spectrum at fixed (theta_q, phi_q)."""
    if E_grid is None:
        E_grid = default_energy_grid(beam, theta_q, c)
    E_grid = np.asarray(E_grid, dtype=float)
    if E_grid.size == 0:
        raise DomainError("energy grid is empty")
    if np.any(np.diff(E_grid) <= 0):
        raise DomainError("energy grid must be strictly increasing")
    if E_grid[0] <= 0 or E_grid[-1] >= beam.k:
        raise DomainError("energy grid must lie inside (0, k)")
    cells = [(theta_q, phi_q, E) for E in E_grid]
    out = _map_cells(beam, cells, cfg, c, threads)
    E0 = float(compton_line_energy(beam.k, theta_q, c))
    return SpectrumTable(
        beam=beam,
        theta_q=theta_q,
        phi_q=phi_q,
        E_q=E_grid,
        values=np.array([o[0] for o in out]),
        errors=np.array([o[1] for o in out]),
        status=[o[2] for o in out],
        metadata=_metadata(beam, cfg, c, E0=E0),
    )


def count_nodes(spec, rel_floor=0.02):
    """Number of interior spectral minima that dip below rel_floor * max.

    A node is a run of samples below the floor bounded on both sides by
    samples above it, so consecutive nodes are always separated by at least
    one sample above the floor.
    """
    values = np.asarray(spec.values if hasattr(spec, "values") else spec, dtype=float)
    E = np.asarray(spec.E_q, dtype=float) if hasattr(spec, "E_q") else np.arange(values.size, dtype=float)
    if values.size == 0:
        raise DomainError("spectrum is empty")
    if not 0 < rel_floor < 0.5:
        raise DomainError("rel_floor must lie in (0, 0.5)")
    if not np.all(np.isfinite(values)):
        raise DomainError("spectrum contains non-finite values")
    peak = values.max()
    if peak <= 0:
        return 0
    above = values >= rel_floor * peak
    idx = np.flatnonzero(above)
    minima = []
    for a, b in zip(idx[:-1], idx[1:]):
        if b - a > 1:
            run = slice(a + 1, b)
            minima.append(E[a + 1 + int(np.argmin(values[run]))])
    if len(minima) >= 2:
        spacing = np.min(np.diff(minima))
        if np.max(np.diff(E)) > spacing / 10:
            raise InsufficientResolution(
                f"grid spacing {np.max(np.diff(E)):.3g} exceeds 1/10 of minimum separation {spacing:.3g}"
            )
    return len(minima)


def support_width(spec, level=0.01):
    """Full width of the energy range where the spectrum exceeds level * peak.

    Edges are located by linear interpolation between grid samples.
    """
    v = np.asarray(spec.values, dtype=float)
    E = np.asarray(spec.E_q, dtype=float)
    thr = level * np.nanmax(v)
    idx = np.flatnonzero(v >= thr)
    i0, i1 = idx[0], idx[-1]
    if i0 == 0 or i1 == v.size - 1:
        raise InsufficientResolution("spectral support touches the end of the energy grid")

    def cross(i, j):
        return E[i] + (thr - v[i]) * (E[j] - E[i]) / (v[j] - v[i])

    return cross(i1, i1 + 1) - cross(i0 - 1, i0)
