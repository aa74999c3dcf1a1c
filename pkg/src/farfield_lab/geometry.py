"""Two-chart stereographic atlas of the unit circle / sphere.

The plus chart projects from the north pole and covers ``x_d < 3/5``; the
minus chart projects from the south pole and covers ``x_d > -3/5``. Both map
their domain onto the open ball of radius 2 in ``R^{d-1}``, and the transition
map between them is the inversion ``y -> y / |y|^2``.

All functions act on the last axis, so batches of points can be passed as
arrays of shape ``(..., d)`` or ``(..., d - 1)``.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DomainError

CHART_BOUND = 3.0 / 5.0
CHART_RADIUS = 2.0
DOMAIN_SLACK = 1e-12
UNIT_TOL = 1e-12

# validity region V for the complexified chart inverses
V_IMAG_MAX = 0.5
V_REAL_MAX = 2.5


class ChartId(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> float:
        return 1.0 if self is ChartId.PLUS else -1.0


def as_chart(c: ChartId | str) -> ChartId:
    return c if isinstance(c, ChartId) else ChartId(str(c).lower())


def unit_direction(components) -> np.ndarray:
    """Validate and return a unit vector (or a stack of them)."""
    x = np.asarray(components, dtype=float)
    if x.ndim == 0 or x.shape[-1] not in (2, 3):
        raise DomainError(f"expected a 2- or 3-vector, got shape {x.shape}")
    norm = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise DomainError("direction is not a unit vector")
    return x


def angle_to_direction(alpha) -> np.ndarray:
    """Map angles to points on the unit circle, ``(cos a, sin a)``."""
    a = np.asarray(alpha, dtype=float)
    return np.stack([np.cos(a), np.sin(a)], axis=-1)


def direction_to_angle(x) -> np.ndarray | float:
    """Inverse of :func:`angle_to_direction` with values in ``[0, 2 pi)``."""
    x = np.asarray(x, dtype=float)
    a = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * np.pi)
    return float(a) if np.ndim(a) == 0 else a


def _coords(y, dtype) -> np.ndarray:
    y = np.asarray(y, dtype=dtype)
    if y.ndim == 0:
        y = y[None]
    if y.shape[-1] not in (1, 2):
        raise DomainError(f"chart coordinates must have 1 or 2 components, got {y.shape}")
    return y


def stereo_forward(x, c: ChartId | str) -> np.ndarray:
    """Chart map ``x -> x' / (1 -+ x_d)`` with ``x'`` the first d-1 components."""
    c = as_chart(c)
    x = unit_direction(x)
    xd = x[..., -1]
    if c is ChartId.PLUS:
        bad = xd >= CHART_BOUND + DOMAIN_SLACK
    else:
        bad = xd <= -CHART_BOUND - DOMAIN_SLACK
    if np.any(bad):
        raise DomainError(f"point outside the domain of the {c.value} chart")
    return x[..., :-1] / (1.0 - c.sign * xd)[..., None]


def stereo_inverse(y, c: ChartId | str) -> np.ndarray:
    """Inverse chart map from the open ball of radius 2 back to the sphere."""
    c = as_chart(c)
    y = _coords(y, float)
    s = np.sum(y * y, axis=-1)
    if np.any(s >= CHART_RADIUS**2):
        raise DomainError("chart coordinate outside the ball of radius 2")
    return _inverse_formula(y, s, c)


def _inverse_formula(y, s, c: ChartId):
    head = 2.0 * y / (1.0 + s)[..., None]
    last = c.sign * (s - 1.0) / (s + 1.0)
    return np.concatenate([head, last[..., None]], axis=-1)


def in_validity_region(z) -> np.ndarray | bool:
    z = np.asarray(z, dtype=complex)
    ok = (np.abs(z.imag) < V_IMAG_MAX) & (np.abs(z.real) < V_REAL_MAX)
    return np.all(ok, axis=-1) if ok.ndim else bool(ok)


def stereo_inverse_complex(z, c: ChartId | str) -> np.ndarray:
    """Holomorphic extension of :func:`stereo_inverse`.

    ``|y|^2`` is continued as the bilinear sum ``sum_j z_j**2`` (no complex
    conjugation), which keeps every component holomorphic in each ``z_j``.
    On V the denominator ``1 + sum z_j**2`` has modulus at least 0.5.
    """
    c = as_chart(c)
    z = _coords(z, complex)
    if not np.all(in_validity_region(z)):
        raise DomainError("complex chart coordinate outside the validity region V")
    s = np.sum(z * z, axis=-1)
    return _inverse_formula(z, s, c)


def transition(y) -> np.ndarray:
    """Transition map between the two charts, ``y -> y / |y|^2`` (an involution)."""
    y = _coords(y, float)
    s = np.sum(y * y, axis=-1)
    if np.any(s == 0.0):
        raise DomainError("transition map is undefined at the origin")
    return y / s[..., None]


def select_chart(x) -> ChartId:
    """Plus chart for ``x_d <= 0``, minus otherwise; keeps ``|phi(x)| <= 1``."""
    x = np.asarray(x, dtype=float)
    return ChartId.PLUS if x[-1] <= 0.0 else ChartId.MINUS
