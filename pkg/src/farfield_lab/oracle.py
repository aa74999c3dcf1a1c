"""Separation-of-variables solution for a homogeneous disc.

With the angle ``phi`` measured from the incident direction, the fields are

    exterior:  u = sum_m i^m [J_m(k r) + b_m H_m(k r)] e^{i m phi}
    interior:  u = sum_m i^m c_m J_m(kappa r) e^{i m phi},   kappa = k sqrt(n0)

and ``b_m, c_m`` follow from continuity of ``u`` and ``du/dr`` at ``r = R``.
From ``H_m(t) ~ sqrt(2/(pi t)) exp(i(t - m pi/2 - pi/4))`` the far field in the
``exp(i k r)/sqrt(r)`` normalisation is

    u_inf(phi) = sqrt(2/(pi k)) e^{-i pi/4} sum_m b_m e^{i m phi}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import NonconvergenceError

MAX_ORDER = 200


@dataclass(frozen=True, eq=False)
class MieSeries:
    """Mode coefficients ``b_m`` (scattered) and ``c_m`` (interior) for ``m = 0..M``.

    Negative modes follow from ``b_{-m} = b_m`` and ``c_{-m} = c_m``.
    """

    R: float
    n0: complex
    k: float
    b: np.ndarray
    c: np.ndarray
    matching_residual: np.ndarray

    @property
    def order(self) -> int:
        return len(self.b) - 1

    @property
    def kappa(self) -> complex:
        return self.k * np.sqrt(complex(self.n0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "re_b", "im_b"])
            for m, bm in enumerate(self.b):
                w.writerow([m, repr(float(bm.real)), repr(float(bm.imag))])


def _mode(m: int, k: float, kappa: complex, R: float):
    if kappa == k:
        return 0j, 1.0 + 0j, 0.0
    jk, djk = sp.jv(m, k * R), sp.jvp(m, k * R)
    hk, dhk = sp.hankel1(m, k * R), sp.h1vp(m, k * R)
    ji, dji = sp.jv(m, kappa * R), sp.jvp(m, kappa * R)
    A = np.array([[ji, -hk], [kappa * dji, -k * dhk]], dtype=complex)
    rhs = np.array([jk, k * djk], dtype=complex)
    c, b = np.linalg.solve(A, rhs)
    scale = max(abs(jk), abs(k * djk), 1e-300)
    res = np.abs(A @ np.array([c, b]) - rhs).max() / scale
    return b, c, res


def mie_build(R: float, n0: complex, k: float, tol: float = 1e-14) -> MieSeries:
    """Coefficients up to the first mode past the propagating range where both the
    scattered coefficient ``|b_m|`` and the interior boundary value ``|c_m J_m(kappa R)|``
    stay below ``tol`` for two consecutive modes.
    """
    if R <= 0 or k <= 0:
        raise ValueError("radius and wave number must be positive")
    n0 = complex(n0)
    if n0.real < 0 or n0.imag < 0:
        raise ValueError("index violates Re(n) >= 0, Im(n) >= 0")
    kappa = k * np.sqrt(n0)
    start = int(np.ceil(max(k, abs(kappa)) * R)) + 2
    bs, cs, rs = [], [], []
    last_small = False
    for m in range(MAX_ORDER + 1):
        b, c, res = _mode(m, k, kappa, R)
        bs.append(b)
        cs.append(c)
        rs.append(res)
        small = abs(b) < tol and abs(c * sp.jv(m, kappa * R)) < tol
        if m >= start and small and last_small:
            break
        last_small = small
    else:
        raise NonconvergenceError(f"Mie coefficients did not decay below {tol} by order {MAX_ORDER}")
    return MieSeries(float(R), n0, float(k), np.array(bs), np.array(cs), np.array(rs))


def _relative_angle(x, theta) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.arctan2(x[..., 1], x[..., 0]) - np.arctan2(theta[..., 1], theta[..., 0])


def _mode_sum(coef: np.ndarray, phi: np.ndarray) -> np.ndarray:
    m = np.arange(1, len(coef))
    return coef[0] + 2.0 * np.sum(coef[1:] * np.cos(np.multiply.outer(phi, m)), axis=-1)


def mie_far_field(s: MieSeries, x_hat, theta) -> complex | np.ndarray:
    """Far field pattern at observation ``x_hat`` for incidence ``theta`` (broadcasting)."""
    phi = _relative_angle(x_hat, theta)
    val = np.sqrt(2.0 / (np.pi * s.k)) * np.exp(-0.25j * np.pi) * _mode_sum(s.b, phi)
    return complex(val) if np.ndim(val) == 0 else val


def mie_near_field(s: MieSeries, point, theta=(1.0, 0.0)) -> complex | np.ndarray:
    """Total field at points (shape ``(..., 2)``) for a disc centred at the origin."""
    p = np.asarray(point, dtype=float)
    th = np.asarray(theta, dtype=float)
    r = np.hypot(p[..., 0], p[..., 1])
    phi = _relative_angle(p, th)
    m = np.arange(s.order + 1)
    im = 1j**m
    out = np.empty(r.shape, dtype=complex)
    inside = r <= s.R
    if np.any(inside):
        rr = r[inside]
        coef = im * s.c * sp.jv(m, s.kappa * rr[..., None])
        out[inside] = coef[..., 0] + 2 * np.sum(coef[..., 1:] * np.cos(phi[inside][..., None] * m[1:]), axis=-1)
    if np.any(~inside):
        rr = r[~inside]
        coef = im * s.b * sp.hankel1(m, s.k * rr[..., None])
        scat = coef[..., 0] + 2 * np.sum(coef[..., 1:] * np.cos(phi[~inside][..., None] * m[1:]), axis=-1)
        out[~inside] = np.exp(1j * s.k * (p[~inside] @ th)) + scat
    return complex(out) if out.ndim == 0 else out
