"""Lippmann-Schwinger solver for scattering by a penetrable medium in 2-D.

The total field solves ``u - k^2 G[q u] = u_i`` where ``G`` convolves with the
outgoing fundamental solution. Discretisation is the midpoint rule on the
cell-centred grid of the medium, with the singular self-cell integral taken
from the exact integral over the disc of equal area plus a closed-form
correction for the square shape of the cell. The discrete operator is

    M = I - k^2 h^2 G diag(q),

with ``G`` symmetric Toeplitz-block-Toeplitz. Only cells carrying contrast are
coupled, so the dense mode factorises ``M`` restricted to the support of ``q``
and recovers off-support values by one FFT convolution. The iterative mode runs
restarted GMRES on the same reduced system with an FFT matrix-vector product.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, asdict

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError, SingularMatrixError
from .medium import GridBox, GridField, RefractiveIndexField, plane_wave
from .special import bessel, cell_integral_of_greens, disc_integral_of_greens, greens_function  # noqa: F401

logger = logging.getLogger(__name__)

GMRES_RESTART = 60


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "dense"
    tolerance: float = 1e-10
    max_iterations: int = 3000

    def __post_init__(self):
        if self.mode not in ("dense", "iterative"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None) -> "SolverConfig":
        d = dict(d or {})
        return cls(
            mode=d.get("mode", "dense"),
            tolerance=float(d.get("tolerance", 1e-10)),
            max_iterations=int(d.get("max_iterations", 3000)),
        )


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True, eq=False)
class ScatterSolution:
    """Incident and scattered fields per cell; the total field is their sum."""

    grid: GridBox
    incident: np.ndarray
    scattered: np.ndarray
    residual: float = 0.0

    @property
    def total(self) -> np.ndarray:
        return self.incident + self.scattered


@dataclass(frozen=True, eq=False)
class SourceSolution:
    grid: GridBox
    v: np.ndarray
    residual: float = 0.0


def self_cell_value(k: float, grid: GridBox) -> complex:
    """Averaged self-interaction ``G_ii``: the integral of the kernel over one cell, over ``h^2``."""
    hx, hy = grid.spacing
    return cell_integral_of_greens(k, hx, hy) / grid.cell_area


def kernel_table(k: float, grid: GridBox) -> np.ndarray:
    """``G`` as a function of the index offset ``(|di|, |dj|)``, shape ``(nx, ny)``."""
    nx, ny = grid.shape
    hx, hy = grid.spacing
    di, dj = np.meshgrid(np.arange(nx) * hx, np.arange(ny) * hy, indexing="ij")
    r = np.hypot(di, dj)
    r[0, 0] = 1.0
    table = greens_function(k, r)
    table[0, 0] = self_cell_value(k, grid)
    return table


def assemble_greens_matrix(k: float, grid: GridBox, cells: np.ndarray | None = None) -> np.ndarray:
    """Dense ``G`` between the given flat cell indices (default: all cells)."""
    table = kernel_table(k, grid)
    ny = grid.shape[1]
    idx = np.arange(grid.size) if cells is None else np.asarray(cells)
    ix, iy = np.divmod(idx, ny)
    return table[np.abs(ix[:, None] - ix[None, :]), np.abs(iy[:, None] - iy[None, :])]


def assemble_ls_matrix(m: RefractiveIndexField, k: float) -> np.ndarray:
    """Full dense ``M = I - k^2 h^2 G diag(q)`` over every cell of the grid.

    Intended for small grids and for checking the reduced solver.
    """
    q = (m.values - 1.0).ravel()
    G = assemble_greens_matrix(k, m.grid)
    M = -(k**2 * m.grid.cell_area) * G * q[None, :]
    M[np.diag_indices_from(M)] += 1.0
    return M


class LippmannSchwingerSolver:
    """Factorised (or matrix-free) discrete Lippmann-Schwinger operator.

    Solves ``M w = f`` for one or many right-hand sides given on the full grid.
    Instances are immutable after construction and may be shared read-only.
    """

    def __init__(self, m: RefractiveIndexField, k: float, cfg: SolverConfig = DEFAULT_CONFIG):
        if k <= 0:
            raise ValueError("wave number must be positive")
        self.medium = m
        self.k = float(k)
        self.cfg = cfg
        self.grid = m.grid
        self.q = (m.values - 1.0).ravel()
        self.support = np.flatnonzero(self.q)
        self.q_support = self.q[self.support]
        self._coupling = self.k**2 * self.grid.cell_area
        self._setup_fft()
        self._lu = None
        if cfg.mode == "dense" and self.support.size:
            self._factorise()

    def _setup_fft(self) -> None:
        nx, ny = self.grid.shape
        table = kernel_table(self.k, self.grid)
        circ = np.zeros((2 * nx, 2 * ny), dtype=complex)
        circ[:nx, :ny] = table
        circ[nx + 1 :, :ny] = table[:0:-1, :]
        circ[:nx, ny + 1 :] = table[:, :0:-1]
        circ[nx + 1 :, ny + 1 :] = table[:0:-1, :0:-1]
        self._kernel_hat = np.fft.fft2(circ)

    def convolve(self, w: np.ndarray) -> np.ndarray:
        """``G w`` for flat grid vectors, one per column if 2-D."""
        nx, ny = self.grid.shape
        cols = w.reshape(nx, ny, -1)
        hat = np.fft.fft2(cols, s=(2 * nx, 2 * ny), axes=(0, 1))
        out = np.fft.ifft2(hat * self._kernel_hat[:, :, None], axes=(0, 1))[:nx, :ny]
        return out.reshape(w.shape)

    def _factorise(self) -> None:
        G = assemble_greens_matrix(self.k, self.grid, self.support)
        M = -self._coupling * G * self.q_support[None, :]
        M[np.diag_indices_from(M)] += 1.0
        lu, piv = sla.lu_factor(M, check_finite=False)
        d = np.abs(np.diag(lu))
        if d.min() <= 1e3 * np.finfo(float).eps * d.max() * len(d):
            raise SingularMatrixError("LU pivot breakdown in the Lippmann-Schwinger matrix")
        self._lu = (lu, piv)
        logger.debug("factorised %d x %d support system", len(d), len(d))

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Discrete operator ``M w`` on flat grid vectors."""
        qw = self.q.reshape((-1,) + (1,) * (w.ndim - 1)) * w
        return w - self._coupling * self.convolve(qw)

    def residual(self, w: np.ndarray, f: np.ndarray) -> float:
        nf = np.linalg.norm(f)
        if nf == 0.0:
            return float(np.linalg.norm(w))
        return float(np.linalg.norm(self.apply(w) - f) / nf)

    def _solve_support(self, fs: np.ndarray) -> np.ndarray:
        if self._lu is not None:
            return sla.lu_solve(self._lu, fs, check_finite=False)
        n = self.support.size
        qs = self.q_support
        full = np.zeros(self.grid.size, dtype=complex)

        def matvec(x):
            full[:] = 0.0
            full[self.support] = qs * x
            return x - self._coupling * self.convolve(full)[self.support]

        op = LinearOperator((n, n), matvec=matvec, dtype=complex)
        restart = min(GMRES_RESTART, n, self.cfg.max_iterations)
        cycles = max(1, math.ceil(self.cfg.max_iterations / restart))
        out = np.empty_like(fs)
        cols = fs.reshape(n, -1)
        for j in range(cols.shape[1]):
            b = cols[:, j]
            if not np.any(b):
                out.reshape(n, -1)[:, j] = 0.0
                continue
            x, info = gmres(op, b, rtol=0.1 * self.cfg.tolerance, atol=0.0, restart=restart, maxiter=cycles)
            if info != 0:
                raise ConvergenceError(f"GMRES did not converge within {self.cfg.max_iterations} iterations")
            out.reshape(n, -1)[:, j] = x
        return out

    def solve(self, f: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve ``M w = f`` (flat grid vector or ``(size, nrhs)``); returns ``(w, residual)``."""
        f = np.asarray(f, dtype=complex)
        if self.support.size == 0:
            return f.copy(), 0.0
        ws = self._solve_support(f[self.support])
        qw = np.zeros_like(f)
        qw[self.support] = self.q_support.reshape((-1,) + (1,) * (f.ndim - 1)) * ws
        w = f + self._coupling * self.convolve(qw)
        w[self.support] = ws
        res = self.residual(w, f)
        if res > self.cfg.tolerance:
            if self.cfg.mode == "dense":
                raise SingularMatrixError(f"dense solve residual {res:.2e} exceeds tolerance")
            raise ConvergenceError(f"iterative solve residual {res:.2e} exceeds tolerance")
        return w, res


@functools.lru_cache(maxsize=4)
def get_solver(m: RefractiveIndexField, k: float, cfg: SolverConfig = DEFAULT_CONFIG) -> LippmannSchwingerSolver:
    """Cached solver per ``(medium, k, config)``; the factorisation is reused across right-hand sides."""
    return LippmannSchwingerSolver(m, float(k), cfg)


def solve_scattering(m: RefractiveIndexField, k: float, theta, cfg: SolverConfig = DEFAULT_CONFIG) -> ScatterSolution:
    """Total field for the incident plane wave with direction ``theta``."""
    ui = plane_wave(k, theta, m.grid.points())
    w, res = get_solver(m, k, cfg).solve(ui)
    shape = m.grid.shape
    return ScatterSolution(m.grid, ui.reshape(shape), (w - ui).reshape(shape), res)


def solve_total_fields(m: RefractiveIndexField, k: float, thetas, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Total fields for several incident directions, flat, shape ``(size, len(thetas))``."""
    th = np.asarray(thetas, dtype=float).reshape(-1, 2)
    ui = np.exp(1j * k * (m.grid.points() @ th.T))
    w, _ = get_solver(m, k, cfg).solve(ui)
    return w


def _field_values(m: RefractiveIndexField, f) -> np.ndarray:
    vals = f.values if isinstance(f, GridField) else np.asarray(f)
    if vals.size != m.grid.size:
        raise ValueError("source field does not live on the medium grid")
    return vals.ravel().astype(complex)


def solve_source(m: RefractiveIndexField, k: float, f, cfg: SolverConfig = DEFAULT_CONFIG) -> SourceSolution:
    """Radiating ``v`` with ``v = k^2 G[q (f + v)]``, the discrete source problem."""
    fv = _field_values(m, f)
    w, res = get_solver(m, k, cfg).solve(fv)
    return SourceSolution(m.grid, (w - fv).reshape(m.grid.shape), res)


def apply_T(m: RefractiveIndexField, k: float, f, cfg: SolverConfig = DEFAULT_CONFIG) -> GridField:
    """``T f = k^2 q (f + v)`` with ``v`` from :func:`solve_source`."""
    fv = _field_values(m, f)
    v = solve_source(m, k, fv, cfg).v.ravel()
    q = (m.values - 1.0).ravel()
    return GridField(m.grid, k**2 * q * (fv + v))
