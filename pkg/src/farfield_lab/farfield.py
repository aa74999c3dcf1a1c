"""Far field pattern, far field operator and its factorisation.

Notation: ``q = n - 1``, ``c_d`` the far field constant, ``A`` the Herglotz
operator (densities on the circle to fields on the grid), ``A*`` its adjoint,
``T f = k^2 q (f + v)`` with ``v`` the radiating solution of the source problem.
The discrete identities ``F = W A = c_d A* T A`` hold exactly in exact
arithmetic, so their residuals measure only the linear solve.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .forward import DEFAULT_CONFIG, SolverConfig, ScatterSolution, apply_T, get_solver, solve_source, solve_total_fields
from .geometry import ChartId, angle_to_direction, as_chart, stereo_inverse_complex
from .medium import GridBox, GridField, RefractiveIndexField


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Quadrature nodes on the unit circle; weights sum to ``2 pi``."""

    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(d) != len(w):
            raise ValueError("directions and weights differ in length")
        if np.any(w <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    @property
    def angles(self) -> np.ndarray:
        return np.mod(np.arctan2(self.directions[:, 1], self.directions[:, 0]), 2 * np.pi)


def uniform_directions(N: int) -> DirectionSet:
    """``N`` equispaced angles ``2 pi j / N`` with trapezoid weights ``2 pi / N``."""
    if N < 1:
        raise ValueError("need at least one direction")
    alpha = 2.0 * np.pi * np.arange(N) / N
    return DirectionSet(angle_to_direction(alpha), np.full(N, 2.0 * np.pi / N))


@dataclass(frozen=True, eq=False)
class FarFieldSamples:
    """``U[i, j] = u_inf(x_i; theta_j)`` over observation set X and incidence set Theta."""

    X: DirectionSet
    Theta: DirectionSet
    U: np.ndarray
    k: float
    medium_hash: str = ""

    def to_csv(self, path) -> None:
        ax, at = self.X.angles, self.Theta.angles
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha_obs", "beta_inc", "re", "im"])
            for i in range(len(ax)):
                for j in range(len(at)):
                    u = self.U[i, j]
                    w.writerow([repr(float(ax[i])), repr(float(at[j])), repr(float(u.real)), repr(float(u.imag))])

    def header(self) -> dict:
        return {"k": self.k, "N_obs": len(self.X), "N_inc": len(self.Theta), "medium_hash": self.medium_hash}

    def write(self, csv_path, json_path) -> None:
        self.to_csv(csv_path)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(self.header(), fh, indent=2, sort_keys=True)


class NoSignal:
    """Result of a relative residual whose reference norm is zero."""

    def __init__(self, reason: str = "reference norm is zero"):
        self.reason = reason

    def __repr__(self):
        return f"NoSignal({self.reason!r})"

    def __bool__(self):
        return False


def far_field_constant(d: int, k: float) -> complex:
    """``e^{i pi/4} / sqrt(8 pi k)`` in 2-D, ``1 / (4 pi)`` in 3-D."""
    if d == 2:
        return complex(np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * k))
    if d == 3:
        return complex(1.0 / (4.0 * np.pi))
    raise ValueError("dimension must be 2 or 3")


def _directions(x) -> tuple[np.ndarray, bool]:
    if isinstance(x, DirectionSet):
        return x.directions, False
    a = np.asarray(x, dtype=float)
    return a.reshape(-1, 2), a.ndim == 1


def _exp_matrix(k: float, dirs: np.ndarray, grid: GridBox, sign: float) -> np.ndarray:
    return np.exp(sign * 1j * k * (dirs @ grid.points().T))


def _far_field_of_density(m: RefractiveIndexField, k: float, dens: np.ndarray, x_hat) -> np.ndarray:
    """``c_2 k^2 h^2 sum_y q(y) e^{-i k x.y} dens(y)`` for flat ``dens`` (or columns)."""
    dirs, _ = _directions(x_hat)
    q = (m.values - 1.0).ravel()
    support = np.flatnonzero(q)
    E = np.exp(-1j * k * (dirs @ m.grid.points()[support].T))
    scale = far_field_constant(2, k) * k**2 * m.grid.cell_area
    qd = q[support].reshape((-1,) + (1,) * (dens.ndim - 1)) * dens[support]
    return scale * (E @ qd)


def far_field_from_solution(m: RefractiveIndexField, k: float, sol: ScatterSolution, x_hat):
    """Midpoint quadrature of ``c_2 k^2 int q(y) e^{-i k x.y} u(y) dy``."""
    if sol.grid != m.grid:
        raise ValueError("solution and medium live on different grids")
    _, scalar = _directions(x_hat)
    out = _far_field_of_density(m, k, sol.total.ravel(), x_hat)
    return complex(out[0]) if scalar else out


def far_field_matrix(
    m: RefractiveIndexField, k: float, X: DirectionSet, Theta: DirectionSet, cfg: SolverConfig = DEFAULT_CONFIG
) -> FarFieldSamples:
    """Far field samples over ``X x Theta``, one solve per incidence sharing one factorisation."""
    if m.is_trivial:
        U = np.zeros((len(X), len(Theta)), dtype=complex)
    else:
        W = solve_total_fields(m, k, Theta.directions, cfg)
        U = _far_field_of_density(m, k, W, X)
    return FarFieldSamples(X, Theta, U, float(k), m.digest)


def herglotz_apply(psi, Theta: DirectionSet, k: float, grid: GridBox) -> GridField:
    """``(A psi)(y) = sum_j w_j psi_j e^{i k y . theta_j}`` on the cell centres."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if len(psi) != len(Theta):
        raise ValueError("density length does not match the direction set")
    E = _exp_matrix(k, Theta.directions, grid, +1.0)
    return GridField(grid, (Theta.weights * psi) @ E)


def herglotz_adjoint(phi: GridField, x_hat, k: float):
    """``(A* phi)(x) = sum_y phi(y) e^{-i k x . y} h^2`` for one or many directions."""
    dirs, scalar = _directions(x_hat)
    E = _exp_matrix(k, dirs, phi.grid, -1.0)
    out = phi.grid.cell_area * (E @ phi.flat)
    return complex(out[0]) if scalar else out


def apply_F(samples: FarFieldSamples, g) -> np.ndarray:
    """``(F g)(x_i) = sum_j w_j U[i, j] g_j``."""
    g = np.asarray(g, dtype=complex).reshape(-1)
    if len(g) != len(samples.Theta):
        raise ValueError(f"density has {len(g)} entries, incidence set has {len(samples.Theta)}")
    return samples.U @ (samples.Theta.weights * g)


def source_far_field(m: RefractiveIndexField, k: float, f, X, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``W f``: far field of the radiating solution ``v`` of the source problem."""
    fv = f.flat if isinstance(f, GridField) else np.asarray(f, dtype=complex).ravel()
    v = solve_source(m, k, fv, cfg).v.ravel()
    return _far_field_of_density(m, k, fv + v, X)


def factorized_far_field(m: RefractiveIndexField, k: float, f, X, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``c_2 (A* T f)`` over the directions ``X``."""
    Tf = apply_T(m, k, f, cfg)
    return far_field_constant(2, k) * herglotz_adjoint(Tf, X, k)


def w_identity_residual(m: RefractiveIndexField, k: float, f, X, cfg: SolverConfig = DEFAULT_CONFIG):
    """``|W f - c_2 A* T f| / |W f|`` (weighted discrete L2 over ``X``), or :class:`NoSignal`."""
    wts = X.weights if isinstance(X, DirectionSet) else 1.0
    lhs = source_far_field(m, k, f, X, cfg)
    rhs = factorized_far_field(m, k, f, X, cfg)
    ref = np.sqrt(np.sum(wts * np.abs(lhs) ** 2))
    if ref == 0.0:
        return NoSignal()
    return float(np.sqrt(np.sum(wts * np.abs(lhs - rhs) ** 2)) / ref)


def factorization_residual(
    m: RefractiveIndexField, k: float, X: DirectionSet, Theta: DirectionSet, g, cfg: SolverConfig = DEFAULT_CONFIG
):
    """``|F g - c_2 A* T A g| / |F g|`` in the quadrature-weighted L2 norm on X.

    Returns :class:`NoSignal` when ``F g`` vanishes (e.g. zero contrast).
    """
    samples = far_field_matrix(m, k, X, Theta, cfg)
    lhs = apply_F(samples, g)
    Ag = herglotz_apply(g, Theta, k, m.grid)
    rhs = factorized_far_field(m, k, Ag, X, cfg)
    ref = np.sqrt(np.sum(X.weights * np.abs(lhs) ** 2))
    if ref == 0.0:
        return NoSignal("F g vanishes")
    return float(np.sqrt(np.sum(X.weights * np.abs(lhs - rhs) ** 2)) / ref)


def far_field_via_factorization(m: RefractiveIndexField, k: float, x_hat, theta, cfg: SolverConfig = DEFAULT_CONFIG):
    """``c_2 sum_y e^{-i k x.y} (T e^{i k theta . })(y) h^2``, the bilinear-form representation."""
    theta = np.asarray(theta, dtype=float)
    incident = np.exp(1j * k * (m.grid.points() @ theta))
    Tf = apply_T(m, k, incident, cfg)
    return far_field_constant(2, k) * herglotz_adjoint(Tf, x_hat, k)


def holomorphic_extension_grid(
    m: RefractiveIndexField,
    k: float,
    z,
    w,
    cx: ChartId | str,
    ctheta: ChartId | str,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> np.ndarray:
    """Extension ``H(z_i, w_j)`` of the far field pattern to complex chart coordinates.

    ``H(z, w) = c_2 sum_y e^{-i k p(z) . y} (T e^{i k p'(w) . })(y) h^2`` where
    ``p``, ``p'`` are the complexified chart inverses and the dot product is
    bilinear. Returns an array of shape ``(len(z), len(w))``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    px = stereo_inverse_complex(z[:, None], as_chart(cx))
    pt = stereo_inverse_complex(w[:, None], as_chart(ctheta))
    if m.is_trivial:
        return np.zeros((len(z), len(w)), dtype=complex)
    P = m.grid.points()
    incident = np.exp(1j * k * (P @ pt.T))
    total, _ = get_solver(m, k, cfg).solve(incident)
    q = (m.values - 1.0).ravel()
    support = np.flatnonzero(q)
    Tg = k**2 * q[support, None] * total[support]
    Gx = np.exp(-1j * k * (px @ P[support].T))
    return far_field_constant(2, k) * m.grid.cell_area * (Gx @ Tg)


def holomorphic_extension(
    m: RefractiveIndexField,
    k: float,
    z: complex,
    w: complex,
    cx: ChartId | str,
    ctheta: ChartId | str,
    cfg: SolverConfig = DEFAULT_CONFIG,
) -> complex:
    """Single-point version of :func:`holomorphic_extension_grid`."""
    return complex(holomorphic_extension_grid(m, k, [z], [w], cx, ctheta, cfg)[0, 0])
