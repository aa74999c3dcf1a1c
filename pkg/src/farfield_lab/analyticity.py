"""Computable consequences of joint real analyticity of the far field pattern.

Three diagnostics:

* bivariate Fourier decay of ``u_inf`` sampled on the torus of observation and
  incidence angles (a bi-periodic function is jointly real analytic iff its
  Fourier coefficients decay exponentially in ``|m| + |n|``);
* a two-variable Taylor model about a single point, with coefficients from the
  tensor-product trapezoid Cauchy formula applied to the holomorphic extension;
* the function ``xy / (x^2 + y^2)``, separately but not jointly analytic, for
  which both diagnostics fail.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientSignal, OutOfRadius
from .farfield import far_field_matrix, holomorphic_extension_grid, uniform_directions
from .forward import DEFAULT_CONFIG, SolverConfig
from .geometry import (
    V_IMAG_MAX,
    V_REAL_MAX,
    ChartId,
    select_chart,
    stereo_forward,
)
from .medium import RefractiveIndexField

MIN_FIT_POINTS = 25
MAX_CAUCHY_RADIUS = 0.25


@dataclass(frozen=True, eq=False)
class TorusSamples:
    """``values[i, j] = u_inf(x(alpha_i); theta(beta_j))`` with ``alpha_i = 2 pi i / N``."""

    N: int
    values: np.ndarray
    k: float
    medium_hash: str = ""


def sample_torus(m: RefractiveIndexField, k: float, N: int, cfg: SolverConfig = DEFAULT_CONFIG) -> TorusSamples:
    if N < 8 or N % 2:
        raise ValueError("N must be even and at least 8")
    dirs = uniform_directions(N)
    U = far_field_matrix(m, k, dirs, dirs, cfg).U
    return TorusSamples(N, U, float(k), m.digest)


@dataclass
class FourierDecayReport:
    """Fit of ``log |c_mn| ~ -tau (|m| + |n|) + intercept`` above a relative floor."""

    coefficients: np.ndarray
    orders_m: np.ndarray
    orders_n: np.ndarray
    tau: float
    intercept: float
    residual_log10: float
    floor: float
    n_fit: int
    max_abs: float

    def total_order(self) -> np.ndarray:
        return np.abs(self.orders_m)[:, None] + np.abs(self.orders_n)[None, :]

    def tail_max(self, min_order: int) -> float:
        """Largest ``|c_mn| / max|c|`` with ``|m| + |n| >= min_order``."""
        mask = self.total_order() >= min_order
        if not np.any(mask):
            return 0.0
        return float(np.abs(self.coefficients[mask]).max() / self.max_abs)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "intercept": self.intercept,
            "residual_log10": self.residual_log10,
            "floor": self.floor,
            "n_fit": self.n_fit,
            "max_abs": self.max_abs,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "n", "abs", "re", "im"])
            for i, mm in enumerate(self.orders_m):
                for j, nn in enumerate(self.orders_n):
                    c = self.coefficients[i, j]
                    w.writerow([int(mm), int(nn), repr(float(abs(c))), repr(float(c.real)), repr(float(c.imag))])


def fourier_coefficients(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``c_mn = N^-2 sum_ij v_ij e^{-i(m a_i + n b_j)}`` with centred integer orders."""
    values = np.asarray(values, dtype=complex)
    Nx, Ny = values.shape
    c = np.fft.fftshift(np.fft.fft2(values)) / (Nx * Ny)
    om = np.fft.fftshift(np.fft.fftfreq(Nx, 1.0 / Nx)).astype(int)
    on = np.fft.fftshift(np.fft.fftfreq(Ny, 1.0 / Ny)).astype(int)
    return c, om, on


def fourier_decay(
    s: TorusSamples | np.ndarray, floor: float = 1e-13, min_order: int = 2, fit: str = "envelope"
) -> FourierDecayReport:
    """Exponential decay rate of the bivariate Fourier coefficients.

    ``floor`` is relative to the largest coefficient. At least 25 coefficients
    must lie above it. With ``fit="envelope"`` (default) the line is fitted to
    the largest ``|c_mn|`` of each total order ``|m| + |n| >= min_order``, which
    is the quantity an exponential bound constrains; ``fit="all"`` regresses
    every coefficient above the floor instead.
    """
    if fit not in ("envelope", "all"):
        raise ValueError(f"unknown fit mode {fit!r}")
    values = s.values if isinstance(s, TorusSamples) else np.asarray(s)
    c, om, on = fourier_coefficients(values)
    a = np.abs(c)
    cmax = float(a.max())
    if cmax == 0.0:
        raise InsufficientSignal("all Fourier coefficients vanish")
    order = np.abs(om)[:, None] + np.abs(on)[None, :]
    above = a > floor * cmax
    n_above = int(above.sum())
    if n_above < MIN_FIT_POINTS:
        raise InsufficientSignal(f"only {n_above} coefficients above the floor (need {MIN_FIT_POINTS})")
    keep = above & (order >= min_order)
    if fit == "all":
        x = order[keep].astype(float)
        y = np.log(a[keep] / cmax)
    else:
        levels = np.unique(order[keep])
        x = levels.astype(float)
        y = np.array([np.log(a[keep & (order == lv)].max() / cmax) for lv in levels])
    if len(x) < 2:
        raise InsufficientSignal("fewer than two total orders above the floor")
    slope, intercept = np.polyfit(x, y, 1)
    resid = (y - (slope * x + intercept)) / np.log(10.0)
    return FourierDecayReport(
        coefficients=c,
        orders_m=om,
        orders_n=on,
        tau=float(-slope),
        intercept=float(intercept),
        residual_log10=float(np.sqrt(np.mean(resid**2))),
        floor=floor,
        n_fit=n_above,
        max_abs=cmax,
    )


@dataclass(frozen=True, eq=False)
class TaylorModel:
    """Coefficients ``a[m, n]`` of ``sum a_mn (z - z0)^m (w - w0)^n``, ``0 <= m, n <= p``."""

    cx: ChartId
    ctheta: ChartId
    z0: float
    w0: float
    order: int
    coefficients: np.ndarray
    rho: float
    nodes: int
    bicircle_max: float = field(default=np.nan)

    def evaluate_coords(self, z, w) -> np.ndarray:
        dz = np.asarray(z, dtype=complex) - self.z0
        dw = np.asarray(w, dtype=complex) - self.w0
        p = self.order
        Pz = dz[..., None] ** np.arange(p + 1)
        Pw = dw[..., None] ** np.arange(p + 1)
        return np.einsum("...m,mn,...n->...", Pz, self.coefficients, Pw)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["m", "n", "abs", "re", "im"])
            for i in range(self.order + 1):
                for j in range(self.order + 1):
                    c = self.coefficients[i, j]
                    wr.writerow([i, j, repr(float(abs(c))), repr(float(c.real)), repr(float(c.imag))])


def cauchy_nodes(p: int) -> int:
    return max(4 * p, 32)


def _check_bicircle(center: float, rho: float) -> None:
    if not (abs(center) + rho < V_REAL_MAX and rho < V_IMAG_MAX):
        raise DomainError("Cauchy circle leaves the validity region V")


def taylor_coefficients(
    m: RefractiveIndexField,
    k: float,
    x0,
    theta0,
    p: int,
    rho: float,
    M_nodes: int | None = None,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> TaylorModel:
    """Taylor coefficients of ``u_inf`` in chart coordinates about ``(x0, theta0)``.

    ``a_mn = M^-2 sum_{s,t} H(z0 + rho e^{i phi_s}, w0 + rho e^{i phi_t}) rho^{-m-n} e^{-i(m phi_s + n phi_t)}``
    with ``phi_s = 2 pi s / M`` and ``H`` the holomorphic extension.
    """
    if p < 0:
        raise ValueError("order must be non-negative")
    if not 0.0 < rho <= MAX_CAUCHY_RADIUS:
        raise DomainError(f"Cauchy radius must lie in (0, {MAX_CAUCHY_RADIUS}]")
    M = cauchy_nodes(p) if M_nodes is None else int(M_nodes)
    if M < 4 * p or M < 1:
        raise ValueError("need at least 4p Cauchy nodes")
    cx, ct = select_chart(x0), select_chart(theta0)
    z0 = float(stereo_forward(x0, cx)[0])
    w0 = float(stereo_forward(theta0, ct)[0])
    _check_bicircle(z0, rho)
    _check_bicircle(w0, rho)
    ring = rho * np.exp(2j * np.pi * np.arange(M) / M)
    H = holomorphic_extension_grid(m, k, z0 + ring, w0 + ring, cx, ct, cfg)
    c = np.fft.fft2(H) / M**2
    idx = np.arange(p + 1)
    a = c[np.ix_(idx, idx)] * rho ** (-(idx[:, None] + idx[None, :]).astype(float))
    return TaylorModel(cx, ct, z0, w0, p, a, float(rho), M, float(np.abs(H).max()))


def taylor_evaluate(model: TaylorModel, x_hat, theta) -> complex:
    """Evaluate the Taylor model at a pair of directions within ``rho / 2`` of the centre."""
    try:
        z = float(stereo_forward(x_hat, model.cx)[0])
        w = float(stereo_forward(theta, model.ctheta)[0])
    except DomainError as exc:
        raise OutOfRadius("point lies outside the model's chart domains") from exc
    limit = 0.5 * model.rho * (1.0 + 1e-12)
    if abs(z - model.z0) > limit or abs(w - model.w0) > limit:
        raise OutOfRadius("point lies beyond rho/2 from the expansion centre")
    return complex(model.evaluate_coords(z, w))


def counterexample_eval(x: float, y: float) -> float:
    """``x y / (x^2 + y^2)`` with the value 0 at the origin.

    Both arguments are scaled by ``max(|x|, |y|)`` first, so the squares
    neither underflow nor overflow.
    """
    s = max(abs(x), abs(y))
    if s == 0.0:
        return 0.0
    xs, ys = x / s, y / s
    return xs * ys / (xs * xs + ys * ys)


def restriction_taylor(y0: float, degree: int) -> np.ndarray:
    """Taylor coefficients about 0 of ``x -> x y0 / (x^2 + y0^2)`` by power series division."""
    if y0 == 0.0:
        return np.zeros(degree + 1)
    num = np.zeros(degree + 1)
    if degree >= 1:
        num[1] = y0
    den = np.zeros(degree + 1)
    den[0] = y0 * y0
    if degree >= 2:
        den[2] = 1.0
    out = np.zeros(degree + 1)
    for j in range(degree + 1):
        out[j] = (num[j] - np.dot(out[:j][::-1], den[1 : j + 1])) / den[0]
    return out


def bivariate_fit(degree: int, half_width: float = 0.1, samples: int = 41) -> np.ndarray:
    """Least-squares polynomial of total degree ``degree`` fitted to the counterexample.

    Samples form a symmetric square grid about the origin. Returns coefficients
    ``a[i, j]`` of ``x^i y^j`` (zero where ``i + j > degree``).
    """
    t = np.linspace(-half_width, half_width, samples)
    X, Y = np.meshgrid(t, t, indexing="ij")
    F = np.vectorize(counterexample_eval)(X, Y).ravel()
    powers = [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]
    s = half_width
    V = np.column_stack([(X.ravel() / s) ** i * (Y.ravel() / s) ** j for i, j in powers])
    sol, *_ = np.linalg.lstsq(V, F, rcond=None)
    a = np.zeros((degree + 1, degree + 1))
    for (i, j), cij in zip(powers, sol):
        a[i, j] = cij / s ** (i + j)
    return a


def _poly2(a: np.ndarray, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = a.shape[0] - 1
    return np.einsum("...i,ij,...j->...", x[..., None] ** np.arange(p + 1), a, y[..., None] ** np.arange(p + 1))


def counterexample_report(
    t_min: float,
    t_max: float,
    samples: int,
    restriction_degree: int = 25,
    restriction_radius: float = 0.3,
    fit_max_degree: int = 10,
    fit_half_width: float = 0.1,
) -> dict:
    """Separate analyticity holds, joint continuity (hence joint analyticity) fails.

    * diagonal ``f(t, t)`` and axis ``f(t, 0)`` values for ``t_min <= t <= t_max``;
    * restrictions ``f(., y0)`` and ``f(x0, .)`` (``x0 = y0 = 1``) against their
      own Taylor polynomials on ``|x| <= restriction_radius``;
    * least-squares bivariate polynomials of total degree ``1..fit_max_degree``
      on ``[-h, h]^2`` and their maximum error on the diagonal ``0 < |t| <= h``.
    """
    if not 0.0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    t = np.geomspace(t_min, t_max, samples)
    diagonal = [counterexample_eval(v, v) for v in t]
    axis = [counterexample_eval(v, 0.0) for v in t]

    xs = np.linspace(-restriction_radius, restriction_radius, 201)
    coef = restriction_taylor(1.0, restriction_degree)
    series = np.polynomial.polynomial.polyval(xs, coef)
    err_x = float(np.max(np.abs(series - np.array([counterexample_eval(v, 1.0) for v in xs]))))
    err_y = float(np.max(np.abs(series - np.array([counterexample_eval(1.0, v) for v in xs]))))

    diag_t = np.concatenate([-np.geomspace(1e-6, fit_half_width, 60)[::-1], np.geomspace(1e-6, fit_half_width, 60)])
    fit_errors = {}
    for deg in range(1, fit_max_degree + 1):
        a = bivariate_fit(deg, fit_half_width)
        truth = np.array([counterexample_eval(v, v) for v in diag_t])
        fit_errors[deg] = float(np.max(np.abs(_poly2(a, diag_t, diag_t) - truth)))

    return {
        "origin_value": counterexample_eval(0.0, 0.0),
        "t": t.tolist(),
        "diagonal": diagonal,
        "axis": axis,
        "diagonal_limit": diagonal[0],
        "restriction_degree": restriction_degree,
        "restriction_radius": restriction_radius,
        "restriction_error_x": err_x,
        "restriction_error_y": err_y,
        "separately_analytic": max(err_x, err_y) < 1e-10,
        "jointly_continuous": abs(diagonal[0] - counterexample_eval(0.0, 0.0)) < 1e-12,
        "bivariate_fit_errors": {str(k): v for k, v in fit_errors.items()},
        "min_bivariate_fit_error": min(fit_errors.values()),
    }
