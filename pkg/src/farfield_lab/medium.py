"""Refractive index fields on a uniform cell-centred grid.

The index ``n`` is piecewise constant on the cells of a box ``B``; the contrast
``q = n - 1`` must vanish on the outermost ring of cells, which is the discrete
stand-in for ``supp(n - 1)`` lying compactly inside ``B``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class GridBox:
    """Uniform grid of ``resolution[0] x resolution[1]`` cells covering a box."""

    center: tuple[float, float] = (0.0, 0.0)
    half_width: tuple[float, float] = (1.5, 1.5)
    resolution: tuple[int, int] = (96, 96)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.broadcast_to(self.center, 2)))
        object.__setattr__(self, "half_width", tuple(float(c) for c in np.broadcast_to(self.half_width, 2)))
        object.__setattr__(self, "resolution", tuple(int(c) for c in np.broadcast_to(self.resolution, 2)))
        if min(self.half_width) <= 0:
            raise ValueError("half_width must be positive")
        if min(self.resolution) < 3:
            raise ValueError("resolution must be at least 3 cells per axis")

    @property
    def shape(self) -> tuple[int, int]:
        return self.resolution

    @property
    def size(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def spacing(self) -> np.ndarray:
        return 2.0 * np.asarray(self.half_width) / np.asarray(self.resolution)

    @property
    def cell_area(self) -> float:
        hx, hy = self.spacing
        return float(hx * hy)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        h = self.spacing
        out = []
        for a in range(2):
            lo = self.center[a] - self.half_width[a]
            out.append(lo + (np.arange(self.resolution[a]) + 0.5) * h[a])
        return out[0], out[1]

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates as two ``(nx, ny)`` arrays (``ij`` indexing)."""
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def points(self) -> np.ndarray:
        """Cell centres flattened row-major (``ix`` slowest), shape ``(size, 2)``."""
        X, Y = self.mesh()
        return np.column_stack([X.ravel(), Y.ravel()])

    def boundary_layer(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "half_width": list(self.half_width),
            "resolution": list(self.resolution),
        }


def square_grid(half_width: float = 1.5, resolution: int = 96, center=(0.0, 0.0)) -> GridBox:
    return GridBox(center=center, half_width=(half_width, half_width), resolution=(resolution, resolution))


def _frozen(values: np.ndarray, shape, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex cell values on a grid; an element of ``L^2(B)``."""

    grid: GridBox
    values: np.ndarray

    def __post_init__(self):
        if np.size(self.values) != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {np.size(self.values)}")
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_area))


@dataclass(frozen=True, eq=False)
class RefractiveIndexField:
    """Cellwise complex refractive index with ``Re n >= 0`` and ``Im n >= 0``."""

    grid: GridBox
    values: np.ndarray
    label: str = field(default="cells", compare=False)

    def __post_init__(self):
        if np.size(self.values) != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {np.size(self.values)}")
        vals = _frozen(self.values, self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("refractive index must be finite")
        if np.any(vals.real < 0) or np.any(vals.imag < 0):
            raise ValueError("refractive index violates Re(n) >= 0, Im(n) >= 0")
        if np.any(vals[self.grid.boundary_layer()] != 1.0):
            raise GeometryError("n must equal 1 on the boundary layer of the grid")
        object.__setattr__(self, "values", vals)

    @cached_property
    def digest(self) -> str:
        """Content hash identifying the medium (grid and values)."""
        h = hashlib.sha256()
        h.update(repr(self.grid.to_dict()).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()[:16]

    def __hash__(self):
        return hash(self.digest)

    def __eq__(self, other):
        return isinstance(other, RefractiveIndexField) and self.digest == other.digest

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.values == 1.0))


def contrast(m: RefractiveIndexField) -> GridField:
    """The contrast ``q = n - 1`` as a grid field."""
    return GridField(m.grid, m.values - 1.0)


def plane_wave(k: float, theta, points) -> np.ndarray:
    """Incident field ``exp(i k x . theta)`` at each point (shape ``(P, 2)``)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    th = np.asarray(theta, dtype=float)
    return np.exp(1j * k * (pts @ th))


def _check_index(n0: complex) -> complex:
    n0 = complex(n0)
    if n0.real < 0 or n0.imag < 0:
        raise ValueError(f"index {n0} violates Re(n) >= 0, Im(n) >= 0")
    return n0


def _check_support(grid: GridBox, support: np.ndarray, what: str) -> None:
    if np.any(support & grid.boundary_layer()):
        raise GeometryError(f"{what} reaches the boundary layer of the grid")


def disc_medium(center, R: float, n0: complex, grid: GridBox) -> RefractiveIndexField:
    """Constant index ``n0`` on cells whose centres lie in the closed disc."""
    n0 = _check_index(n0)
    if R < 0:
        raise ValueError("radius must be non-negative")
    X, Y = grid.mesh()
    inside = (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= R * R if R > 0 else np.zeros(grid.shape, bool)
    _check_support(grid, inside, "disc")
    values = np.where(inside, n0, 1.0 + 0.0j)
    return RefractiveIndexField(grid, values, label="disc")


def bump_profile(r2_over_R2: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - s))`` for ``s < 1`` and 0 otherwise (``s = |x-c|^2/R^2``)."""
    s = np.asarray(r2_over_R2, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


def bump_medium(center, R: float, amplitude: complex, grid: GridBox) -> RefractiveIndexField:
    """Smooth compactly supported index ``1 + a * bump(|x - c| / R)``."""
    amplitude = complex(amplitude)
    if R < 0:
        raise ValueError("radius must be non-negative")
    X, Y = grid.mesh()
    if R == 0:
        prof = np.zeros(grid.shape)
    else:
        prof = bump_profile(((X - center[0]) ** 2 + (Y - center[1]) ** 2) / R**2)
    _check_support(grid, prof > 0, "bump")
    values = 1.0 + amplitude * prof
    if np.any(values.real < 0) or np.any(values.imag < 0):
        raise ValueError("bump amplitude produces an index with negative real or imaginary part")
    return RefractiveIndexField(grid, values, label="bump")


def constant_medium(grid: GridBox) -> RefractiveIndexField:
    """Free space, ``n = 1`` everywhere."""
    return RefractiveIndexField(grid, np.ones(grid.shape, dtype=complex), label="free")


def builtin_media(resolution: int = 96) -> dict[str, RefractiveIndexField]:
    """Named test media on the box ``[-1.5, 1.5]^2``."""
    grid = square_grid(1.5, resolution)
    return {
        "disc": disc_medium((0.0, 0.0), 1.0, 1.5, grid),
        "bump": bump_medium((0.0, 0.0), 1.0, 1.0, grid),
        "lossy_offset_disc": disc_medium((0.25, -0.15), 0.8, 1.3 + 0.2j, grid),
    }
