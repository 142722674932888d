"""Spin- and polarization-summed squared amplitude and the HG momentum profile."""

import numpy as np

from .core import DEFAULT_CONSTANTS, hermite_function
from .errors import DomainError


def w_if(p_f, q, k):
    """Squared amplitude 4|q|/k + 4k/|q| - (4/k^2)(|p_f|^2 - (p_f.q)^2/|q|^2).

    ``p_f`` and ``q`` are 3-vectors in keV; the leading axis holds the
    components, so stacked arrays of shape ``(3, ...)`` broadcast.
    """
    p_f = np.asarray(p_f, dtype=float)
    q = np.asarray(q, dtype=float)
    q_abs = np.sqrt(np.sum(q * q, axis=0))
    if np.any(q_abs == 0):
        raise DomainError("w_if requires |q| > 0")
    p2 = np.sum(p_f * p_f, axis=0)
    pq = np.sum(p_f * q, axis=0)
    perp2 = p2 - pq * pq / (q_abs * q_abs)
    return 4.0 * q_abs / k + 4.0 * k / q_abs - 4.0 * perp2 / (k * k)


def w_if_components(pfx, pfy, pfz, qx, qy, qz, k):
    """Same as :func:`w_if` with components passed separately (hot path)."""
    q2 = qx * qx + qy * qy + qz * qz
    q_abs = np.sqrt(q2)
    # |p x q|^2 / |q|^2, free of the cancellation in |p|^2 - (p.q)^2/|q|^2
    cx = pfy * qz - pfz * qy
    cy = pfz * qx - pfx * qz
    cz = pfx * qy - pfy * qx
    perp2 = (cx * cx + cy * cy + cz * cz) / q2
    return 4.0 * q_abs / k + 4.0 * k / q_abs - 4.0 * perp2 / (k * k)


def transverse_profile(beam, Q_x, Q_y, c=DEFAULT_CONSTANTS):
    """f_nx(w0 Q_x / sqrt 2) * f_ny(w0 Q_y / sqrt 2) with w0 in keV^-1.

    Only the bare product of Hermite functions; the overall normalization
    lives in the cross-section prefactor.
    """
    scale = beam.waist(c) / np.sqrt(2.0)
    return hermite_function(beam.n_x, scale * np.asarray(Q_x)) * hermite_function(
        beam.n_y, scale * np.asarray(Q_y)
    )
