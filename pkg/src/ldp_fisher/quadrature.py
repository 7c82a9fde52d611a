"""Adaptive Gauss-Kronrod integration over panels split at known kinks."""

from __future__ import annotations

import math
import warnings
from typing import Callable, Iterable

from scipy import integrate

ABS_TOL = 1e-10
REL_TOL = 1e-12
PANEL_LIMIT = 500


class QuadratureError(RuntimeError):
    pass


def integrate_panels(f: Callable[[float], float], a: float, b: float,
                     breaks: Iterable[float] = (), abs_tol: float = ABS_TOL,
                     rel_tol: float = REL_TOL) -> float:
    """Integrate ``f`` over [a, b], splitting at every point of ``breaks`` inside.

    Infinite ends are handled by QUADPACK's rational tail map.
    """
    if b < a:
        return -integrate_panels(f, b, a, breaks, abs_tol, rel_tol)
    if a == b:
        return 0.0
    pts = sorted({float(x) for x in breaks if a < x < b and math.isfinite(x)})
    edges = [a, *pts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, lo, hi, epsabs=abs_tol / len(edges),
                                      epsrel=rel_tol, limit=PANEL_LIMIT, full_output=1)[:2]
        if not math.isfinite(val):
            raise QuadratureError(f"non-finite integral on [{lo}, {hi}]")
        if err > 10 * max(abs_tol, rel_tol * abs(val)):
            raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge (error estimate {err:.3g})")
        total += val
    return total
