"""Modal DG fields: projection, point evaluation, error norms, mass."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import BasisSpec
from .errors import InvalidInputError
from .grid import CellIndex, Grid1D, Grid2D
from .quadrature import gauss_legendre, tensor_rule


@dataclass(frozen=True, eq=False)
class DGField:
    """Per-cell modal coefficients; ``coeffs.shape == grid.shape + (basis.dim,)``."""

    grid: Grid1D | Grid2D
    basis: BasisSpec
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        expected = self.grid.shape + (self.basis.dim,)
        if self.coeffs.shape != expected:
            raise InvalidInputError(f"coeffs shape {self.coeffs.shape} != {expected}")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInputError("non-finite DG coefficients")

    @property
    def ndim(self) -> int:
        return self.basis.ndim

    def cell_averages(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def with_coeffs(self, coeffs: np.ndarray, time: float | None = None) -> "DGField":
        return replace(self, coeffs=coeffs, time=self.time if time is None else time)

    def sample(self, ref_points: np.ndarray) -> np.ndarray:
        """Evaluate in every cell at the given reference points.

        ``ref_points`` has shape (npts,) in 1D or (npts, 2) in 2D; result is
        ``grid.shape + (npts,)``.
        """
        if self.ndim == 1:
            phi = self.basis.values(np.asarray(ref_points))
        else:
            ref_points = np.asarray(ref_points)
            phi = self.basis.values(ref_points[:, 0], ref_points[:, 1])
        return self.coeffs @ phi.T


def _grid_spec_check(g, spec: BasisSpec):
    if isinstance(g, Grid1D) != (spec.ndim == 1):
        raise InvalidInputError("grid and basis dimensions disagree")


def _quadrature_points(g, nq: int):
    """Physical quadrature points per cell and (normalized) weights summing to 1."""
    if isinstance(g, Grid1D):
        x, w = gauss_legendre(nq)
        xs = g.centers()[:, None] + 0.5 * g.dx * x[None, :]
        return (xs,), (x,), 0.5 * w
    xi, eta, w = tensor_rule(nq)
    xc, yc = g.centers()
    xs = xc[..., None] + 0.5 * g.dx * xi
    ys = yc[..., None] + 0.5 * g.dy * eta
    return (xs, ys), (xi, eta), 0.25 * w


def project(f, g, spec: BasisSpec, time: float = 0.0) -> DGField:
    """L2 projection of ``f`` with a (k+3)-point tensor Gauss rule per cell."""
    _grid_spec_check(g, spec)
    nq = spec.degree + 3
    pts, ref, w = _quadrature_points(g, nq)
    vals = np.asarray(f(*pts), dtype=float)
    vals = np.broadcast_to(vals, pts[0].shape)
    if not np.all(np.isfinite(vals)):
        raise InvalidInputError("projected function is not finite at quadrature points")
    phi = spec.values(*ref)                      # (nq^d, dim)
    coeffs = (vals * w) @ phi
    return DGField(g, spec, coeffs, time)


def evaluate(u: DGField, cell: CellIndex, p) -> float:
    """Value of the field's polynomial in ``cell`` at physical point ``p``."""
    g = u.grid
    if isinstance(g, Grid1D):
        i = cell.i if isinstance(cell, CellIndex) else int(cell)
        if not 0 <= i < g.n_cells:
            raise IndexError(f"cell {cell} out of range")
        x = float(np.ravel(p)[0])
        xi = (x - (g.x_lo + (i + 0.5) * g.dx)) / (0.5 * g.dx)
        return float(u.basis.values(xi) @ u.coeffs[i])
    i, j = cell
    if not (0 <= i < g.nx and 0 <= j < g.ny):
        raise IndexError(f"cell {cell} out of range")
    xc, yc = g.cell_center(i, j)
    xi = (p[0] - xc) / (0.5 * g.dx)
    eta = (p[1] - yc) / (0.5 * g.dy)
    return float(u.basis.values(xi, eta) @ u.coeffs[i, j])


def error_norms(u: DGField, exact, t: float | None = None, relative: bool = False,
                measure: float | None = None) -> dict:
    """L1, L2 and Linf errors against ``exact`` at time ``t``.

    L1 and L2 are averaged, ``(measure^{-1} \\int |e|^p)^{1/p}``, where
    ``measure`` defaults to the domain size.  With ``relative=True`` each norm
    is instead divided by the same norm of the exact solution.  Linf is the
    maximum over the (k+3)^d Gauss points.
    """
    t = u.time if t is None else t
    g = u.grid
    nq = u.basis.degree + 3
    pts, ref, w = _quadrature_points(g, nq)
    ue = np.broadcast_to(np.asarray(exact(*pts, t), dtype=float), pts[0].shape)
    uh = u.coeffs @ u.basis.values(*ref).T
    e = uh - ue
    # w sums to 1 per cell, so sum(f * w) * cell_size integrates f
    cell = g.dx if isinstance(g, Grid1D) else g.cell_area
    if measure is None:
        measure = cell * math.prod(g.shape)
    l1 = float(np.sum(np.abs(e) * w)) * cell / measure
    l2 = math.sqrt(float(np.sum(e * e * w)) * cell / measure)
    linf = float(np.max(np.abs(e)))
    if relative:
        l1 /= float(np.sum(np.abs(ue) * w)) * cell / measure
        l2 /= math.sqrt(float(np.sum(ue * ue * w)) * cell / measure)
        linf /= float(np.max(np.abs(ue)))
    return {"L1": l1, "L2": l2, "Linf": linf}


def total_mass(u: DGField) -> float:
    """Sum of cell_average * cell_area in fixed cell order (exactly rounded)."""
    g = u.grid
    area = g.dx if isinstance(g, Grid1D) else g.dx * g.dy
    return math.fsum((u.cell_averages() * area).ravel().tolist())


def certified_minimum(u: DGField) -> np.ndarray:
    """Per-cell minimum over the bound-preserving candidate set."""
    from .limiters import candidate_minimum
    return candidate_minimum(u)


def fmt(x: float) -> str:
    return format(float(x), ".16e")


def export_csv(u: DGField, path) -> None:
    """Write the per-cell snapshot table."""
    g = u.grid
    dim = u.basis.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(g, Grid1D):
            w.writerow(["i", "cell_center_x", "cell_average"] + [f"coeff_{m}" for m in range(dim)])
            for i, xc in enumerate(g.centers()):
                c = u.coeffs[i]
                w.writerow([i, fmt(xc), fmt(c[0])] + [fmt(v) for v in c])
            return
        w.writerow(["i", "j", "cell_center_x", "cell_center_y", "cell_average"]
                   + [f"coeff_{m}" for m in range(dim)])
        for i in range(g.nx):
            for j in range(g.ny):
                xc, yc = g.cell_center(i, j)
                c = u.coeffs[i, j]
                w.writerow([i, j, fmt(xc), fmt(yc), fmt(c[0])] + [fmt(v) for v in c])
