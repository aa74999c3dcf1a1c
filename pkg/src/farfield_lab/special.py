"""Cylinder functions and the outgoing 2-D fundamental solution."""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sp

from .errors import DomainError


def bessel(kind: str, order: int, x):
    """Bessel function of the first (``"J"``) or second (``"Y"``) kind.

    Integer order only. ``x`` may be an array; ``Y`` requires ``x > 0``.
    """
    kind = kind.upper()
    if int(order) != order or order < 0:
        raise DomainError("order must be a non-negative integer")
    xa = np.asarray(x, dtype=float)
    if kind == "J":
        if np.any(xa < 0):
            raise DomainError("J is evaluated for x >= 0 only")
        out = sp.jv(order, xa)
    elif kind == "Y":
        if np.any(xa <= 0):
            raise DomainError("Y_n is singular at x <= 0")
        out = sp.yv(order, xa)
    else:
        raise ValueError(f"unknown Bessel kind {kind!r}")
    return float(out) if np.ndim(out) == 0 else out


def hankel1(order: int, x):
    """Hankel function of the first kind, ``J_n + i Y_n``."""
    return sp.hankel1(order, x)


def greens_function(k: float, r):
    """Outgoing fundamental solution ``(i/4) H_0^(1)(k r)`` of the 2-D Helmholtz operator."""
    ra = np.asarray(r, dtype=float)
    if np.any(ra <= 0):
        raise DomainError("fundamental solution is singular at r = 0")
    out = 0.25j * sp.hankel1(0, k * ra)
    return complex(out) if np.ndim(out) == 0 else out


def disc_integral_of_greens(k: float, a: float) -> complex:
    """Exact integral of ``(i/4) H_0^(1)(k|y|)`` over the disc ``|y| < a``.

    Uses ``int_0^a r H_0(kr) dr = a H_1(ka)/k + 2i/(pi k^2)``, the second
    term being the small-argument limit of ``r H_1(kr)/k``.
    """
    if a <= 0:
        raise DomainError("disc radius must be positive")
    return complex(0.5j * np.pi * a / k * sp.hankel1(1, k * a) - 1.0 / k**2)


def _log_integral_rectangle(a: float, b: float) -> float:
    """``int ln|y| dy`` over the rectangle ``[-a, a] x [-b, b]``."""
    quarter = a * b * (math.log(a * a + b * b) - 3.0) + a * a * math.atan(b / a) + b * b * math.atan(a / b)
    return 2.0 * quarter


def cell_integral_of_greens(k: float, hx: float, hy: float) -> complex:
    """Integral of ``(i/4) H_0^(1)(k|y|)`` over the cell ``[-hx/2, hx/2] x [-hy/2, hy/2]``.

    The equal-area disc integral is exact for the disc; the kernel's leading
    singularity ``-ln|y| / (2 pi)`` accounts for the shape difference between
    disc and rectangle, and that part is integrated in closed form on both.
    The remainder is ``O(h^4 log h)``.
    """
    area = hx * hy
    a = math.sqrt(area / math.pi)
    on_rect = _log_integral_rectangle(hx / 2, hy / 2)
    on_disc = area * (math.log(a) - 0.5)
    return disc_integral_of_greens(k, a) - (on_rect - on_disc) / (2.0 * math.pi)
