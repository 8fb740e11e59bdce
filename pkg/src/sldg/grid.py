"""Uniform periodic Cartesian meshes in one and two dimensions.

Cells are half-open boxes ``[x_i, x_{i+1}) x [y_j, y_{j+1})``. A coordinate
within ``eps_geom`` of a grid line is treated as lying on it and belongs to
the cell on the positive side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError

SNAP_REL = 1e-12


class CellIndex(NamedTuple):
    i: int
    j: int | None = None


def _snapped_index(v: float, lo: float, h: float, eps: float) -> int:
    t = (v - lo) / h
    r = math.floor(t + 0.5)
    if abs(t - r) * h <= eps:
        return int(r)
    return int(math.floor(t))


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n_cells: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.n_cells <= 0:
            raise InvalidInputError(f"n_cells must be positive, got {self.n_cells}")
        if not self.x_hi > self.x_lo:
            raise InvalidInputError("x_hi must exceed x_lo")
        if self.bc != "periodic":
            raise InvalidInputError(f"unsupported boundary condition {self.bc!r}")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def eps_geom(self) -> float:
        return SNAP_REL * self.dx

    @property
    def shape(self) -> tuple[int]:
        return (self.n_cells,)

    def nodes(self) -> np.ndarray:
        """Cell interfaces x_{1/2}, ..., x_{N+1/2}."""
        return self.x_lo + self.dx * np.arange(self.n_cells + 1)

    def centers(self) -> np.ndarray:
        return self.x_lo + self.dx * (np.arange(self.n_cells) + 0.5)

    def cell_bounds(self, i: int) -> tuple[float, float]:
        return self.x_lo + i * self.dx, self.x_lo + (i + 1) * self.dx

    def wrap(self, x: float) -> tuple[float, int]:
        shift = -math.floor((x - self.x_lo) / self.length)
        xw = x + shift * self.length
        # rounding can land exactly on x_hi
        if xw >= self.x_hi:
            xw -= self.length
            shift -= 1
        return xw, shift

    def locate(self, x: float) -> CellIndex:
        if not math.isfinite(x):
            raise InvalidInputError(f"non-finite coordinate {x}")
        i = _snapped_index(x, self.x_lo, self.dx, self.eps_geom)
        return CellIndex(i % self.n_cells)


@dataclass(frozen=True)
class Grid2D:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    nx: int
    ny: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.nx <= 0 or self.ny <= 0:
            raise InvalidInputError(f"cell counts must be positive, got {self.nx}x{self.ny}")
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            raise InvalidInputError("domain box is empty")
        if self.bc != "periodic":
            raise InvalidInputError(f"unsupported boundary condition {self.bc!r}")

    @classmethod
    def square(cls, lo: float, hi: float, n: int) -> "Grid2D":
        return cls(lo, hi, lo, hi, n, n)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_hi - self.y_lo) / self.ny

    @property
    def lengths(self) -> tuple[float, float]:
        return self.x_hi - self.x_lo, self.y_hi - self.y_lo

    @property
    def area(self) -> float:
        lx, ly = self.lengths
        return lx * ly

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def eps_geom(self) -> float:
        return SNAP_REL * max(self.dx, self.dy)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def x_nodes(self) -> np.ndarray:
        return self.x_lo + self.dx * np.arange(self.nx + 1)

    def y_nodes(self) -> np.ndarray:
        return self.y_lo + self.dy * np.arange(self.ny + 1)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two (nx, ny) arrays."""
        xc = self.x_lo + self.dx * (np.arange(self.nx) + 0.5)
        yc = self.y_lo + self.dy * (np.arange(self.ny) + 0.5)
        return np.meshgrid(xc, yc, indexing="ij")

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return self.x_lo + (i + 0.5) * self.dx, self.y_lo + (j + 0.5) * self.dy

    def cell_box(self, i: int, j: int) -> tuple[float, float, float, float]:
        return (self.x_lo + i * self.dx, self.x_lo + (i + 1) * self.dx,
                self.y_lo + j * self.dy, self.y_lo + (j + 1) * self.dy)

    def flat_index(self, c: CellIndex) -> int:
        return c.i * self.ny + c.j

    def unflat_index(self, k: int) -> CellIndex:
        if not 0 <= k < self.n_cells:
            raise IndexError(k)
        return CellIndex(k // self.ny, k % self.ny)

    def cells(self):
        for i in range(self.nx):
            for j in range(self.ny):
                yield CellIndex(i, j)


def wrap_point(p, g: Grid2D) -> tuple[tuple[float, float], tuple[int, int]]:
    """Translate ``p`` by whole periods into the fundamental domain.

    Returns the wrapped point and the integer shift that was applied, so that
    ``p == wrapped - shift * period``.
    """
    lx, ly = g.lengths
    sx = -math.floor((p[0] - g.x_lo) / lx)
    sy = -math.floor((p[1] - g.y_lo) / ly)
    x = p[0] + sx * lx
    y = p[1] + sy * ly
    if x >= g.x_hi:
        x -= lx
        sx -= 1
    if y >= g.y_hi:
        y -= ly
        sy -= 1
    return (x, y), (sx, sy)


def locate_cell(p, g: Grid2D) -> CellIndex:
    """Cell containing ``p`` after periodic wrapping, with grid-line snapping."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidInputError(f"non-finite point {p!r}")
    eps = g.eps_geom
    i = _snapped_index(x, g.x_lo, g.dx, eps)
    j = _snapped_index(y, g.y_lo, g.dy, eps)
    return CellIndex(i % g.nx, j % g.ny)


def unwrapped_cell(p, g: Grid2D) -> tuple[int, int]:
    """Cell indices of ``p`` without wrapping (may lie outside 0..n-1)."""
    eps = g.eps_geom
    return (_snapped_index(p[0], g.x_lo, g.dx, eps),
            _snapped_index(p[1], g.y_lo, g.dy, eps))
