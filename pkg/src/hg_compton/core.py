"""Physical constants, unit conversions and orthonormal Hermite functions.

Everything downstream works in natural units (hbar = c = 1) with keV as the
energy unit.  Lengths enter in picometres and are converted once through
``hbar_c``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DomainError

MAX_HERMITE_ORDER = 60

# pm^2 -> cm^2 -> barn
_PM2_TO_CM2 = 1e-20
_CM2_PER_BARN = 1e-24


@dataclass(frozen=True)
class PhysicalConstants:
    """Electron mass [keV], fine-structure constant, hbar*c [keV pm]."""

    m_e: float = 510.99895
    alpha: float = 1.0 / 137.035999
    hbar_c: float = 197.3269804

    def __post_init__(self):
        for name in ("m_e", "alpha", "hbar_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")


DEFAULT_CONSTANTS = PhysicalConstants()


class HermiteOrder(int):
    """Non-negative Hermite index, capped at ``MAX_HERMITE_ORDER``."""

    def __new__(cls, n):
        if isinstance(n, bool) or int(n) != n:
            raise DomainError(f"Hermite order must be an integer, got {n!r}")
        n = int(n)
        if n < 0 or n > MAX_HERMITE_ORDER:
            raise DomainError(f"Hermite order must lie in [0, {MAX_HERMITE_ORDER}], got {n}")
        return super().__new__(cls, n)


def hermite_function(n, x):
    """Orthonormal Hermite function f_n(x) = (2^n sqrt(pi) n!)^(-1/2) H_n(x) exp(-x^2/2).

    Evaluated with the normalized three-term recurrence so that neither
    H_n nor n! is ever formed.

    Parameters
    ----------
    n : int or HermiteOrder
        order, 0 <= n <= 60
    x : float or ndarray
        argument(s); must be finite

    Returns
    -------
    float or ndarray
        f_n(x), same shape as ``x``
    """
    n = HermiteOrder(n)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("hermite_function argument must be finite")

    f_prev = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n == 0:
        f = f_prev
    else:
        f = math.sqrt(2.0) * x * f_prev
        for j in range(1, n):
            f, f_prev = x * math.sqrt(2.0 / (j + 1)) * f - math.sqrt(j / (j + 1)) * f_prev, f
    return float(f) if scalar else f


def length_to_inverse_energy(w, c=DEFAULT_CONSTANTS):
    """Convert a length in pm to natural units (keV^-1)."""
    if not w > 0:
        raise DomainError(f"length must be positive, got {w!r}")
    return w / c.hbar_c


def natural_area_to_barn(x, c=DEFAULT_CONSTANTS):
    """Convert an area in keV^-2 to barn."""
    if np.any(np.asarray(x) < 0):
        raise DomainError("area must be non-negative")
    return x * c.hbar_c**2 * _PM2_TO_CM2 / _CM2_PER_BARN
