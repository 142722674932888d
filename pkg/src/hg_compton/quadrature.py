"""Globally adaptive Gauss-Legendre panel quadrature for vectorized integrands.

Each panel is integrated with an n-point rule on the whole panel and on its
two halves; the difference is the panel error estimate and the halves'
sum is the panel value.  The panel with the largest error is bisected until
the summed error meets the tolerance.
"""

from dataclasses import dataclass
from functools import lru_cache
import heapq

import numpy as np

from .errors import QuadratureFailure


@dataclass(frozen=True)
class QuadratureConfig:
    tol: float = 1e-6
    max_subdivisions: int = 4000
    order: int = 32
    # absolute error floor, relative to the largest |panel value| seen or to
    # the caller's reference magnitude, whichever is larger
    abs_floor: float = 1e-13


@lru_cache(maxsize=None)
def gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(f, a, b, order):
    x, w = gauss_legendre(order)
    m = 0.5 * (a + b)
    h = 0.5 * (b - a)
    hh = 0.5 * h
    # whole panel, left half, right half in one call
    nodes = np.concatenate([m + h * x, (a + hh) + hh * x, (m + hh) + hh * x])
    vals = f(nodes)
    n = len(x)
    whole = h * np.dot(w, vals[:n])
    left = hh * np.dot(w, vals[n : 2 * n])
    right = hh * np.dot(w, vals[2 * n :])
    return whole, left, right


def integrate(f, breakpoints, cfg=QuadratureConfig(), reference=0.0):
    """Integrate the vectorized ``f`` over consecutive ``breakpoints``.

    Returns ``(value, error_estimate)``.  Raises QuadratureFailure when the
    error cannot be brought below ``cfg.tol * |value|`` (or the absolute
    floor) within ``cfg.max_subdivisions`` bisections.  ``reference`` is a
    magnitude the integral is naturally compared against; it keeps integrals
    that vanish by cancellation or by a zero factor from chasing rounding
    noise.
    """
    heap = []
    total = 0.0
    err_total = 0.0
    scale = abs(reference)
    # counter keeps heap ordering deterministic on equal errors
    counter = 0
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b <= a:
            continue
        whole, left, right = _panel(f, a, b, cfg.order)
        value = left + right
        err = abs(value - whole)
        total += value
        err_total += err
        scale = max(scale, abs(whole), abs(left), abs(right))
        heapq.heappush(heap, (-err, counter, a, b, value))
        counter += 1

    splits = 0
    while err_total > max(cfg.tol * abs(total), cfg.abs_floor * scale):
        if splits >= cfg.max_subdivisions or not heap:
            raise QuadratureFailure(
                f"error estimate {err_total:.3g} above tolerance after {splits} subdivisions"
                f" (value {total:.6g})"
            )
        neg_err, _, a, b, value = heapq.heappop(heap)
        total -= value
        err_total += neg_err
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            whole, left, right = _panel(f, lo, hi, cfg.order)
            v = left + right
            e = abs(v - whole)
            total += v
            err_total += e
            scale = max(scale, abs(whole))
            heapq.heappush(heap, (-e, counter, lo, hi, v))
            counter += 1
        splits += 1

    # re-sum in interval order so the result is independent of heap history
    panels = sorted((a, b, v, -ne) for ne, _, a, b, v in heap)
    value = float(sum(p[2] for p in panels))
    error = float(sum(p[3] for p in panels))
    return value, error
