"""The SLDG time step in one and two dimensions.

Each Eulerian cell's new moments are ``int_{A*} u^n psi*`` over its upstream
cell, where ``psi*`` is the test function carried back along characteristics
(fitted by least squares to the traced points).  The area integral is
turned into line integrals of ``Q`` with ``dQ/dx = u psi*`` (and ``P = 0``),
evaluated piece by piece over the background cells that the upstream cell
overlaps.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .basis import BasisSpec, total_degree_exponents
from .errors import (DegenerateEdgeError, GeometryInconsistencyError, InvalidInputError,
                     InvertedCellError, SingularGeometryError)
from .field import DGField
from .flows import VelocityField
from .geometry import (REF_POINTS_9, Edge, OuterSegment, SegmentSet, UpstreamCell,
                       build_transform, edge_rows, edge_x_dy)
from .grid import CellIndex, Grid1D, Grid2D
from .quadrature import gauss_legendre, gauss_lobatto
from .tracer import trace_points

AREA_CHECK_REL = 1e-10
SINGULAR_REL = 1e-10


def _set_threads():
    n = os.environ.get("SLDG_THREADS")
    if n:
        import numba
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


# ---------------------------------------------------------------------------
# polynomials in global coordinates


@dataclass(frozen=True, eq=False)
class Poly2D:
    """``sum c[a, b] (x - x0)^a (y - y0)^b``."""

    c: np.ndarray
    origin: tuple = (0.0, 0.0)

    @property
    def degree(self) -> int:
        nz = np.argwhere(self.c != 0.0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    def __call__(self, x, y):
        x = np.asarray(x, float) - self.origin[0]
        y = np.asarray(y, float) - self.origin[1]
        n, m = self.c.shape
        out = np.zeros(np.broadcast(x, y).shape)
        for b in range(m - 1, -1, -1):
            col = np.zeros_like(out)
            for a in range(n - 1, -1, -1):
                col = col * x + self.c[a, b]
            out = out * y + col
        return out

    def __mul__(self, other: "Poly2D") -> "Poly2D":
        o = other.shift_to(self.origin)
        n1, m1 = self.c.shape
        n2, m2 = o.c.shape
        c = np.zeros((n1 + n2 - 1, m1 + m2 - 1))
        for a in range(n1):
            for b in range(m1):
                if self.c[a, b] != 0.0:
                    c[a:a + n2, b:b + m2] += self.c[a, b] * o.c
        return Poly2D(c, self.origin)

    def shift_to(self, origin) -> "Poly2D":
        """Same polynomial expanded about a new origin."""
        dx = origin[0] - self.origin[0]
        dy = origin[1] - self.origin[1]
        if dx == 0.0 and dy == 0.0:
            return self
        n, m = self.c.shape
        # (x - x0)^a = sum_i C(a, i) (x - x1)^i dx^(a - i), with dx = x1 - x0
        Sx = np.zeros((n, n))
        for a in range(n):
            for i in range(a + 1):
                Sx[i, a] = math.comb(a, i) * dx ** (a - i)
        Sy = np.zeros((m, m))
        for b in range(m):
            for j in range(b + 1):
                Sy[j, b] = math.comb(b, j) * dy ** (b - j)
        return Poly2D(Sx @ self.c @ Sy.T, (float(origin[0]), float(origin[1])))


def _legendre_monomial(k: int) -> np.ndarray:
    """L[n, p]: coefficient of t^p in the orthonormal Legendre polynomial of degree n."""
    L = np.zeros((k + 1, k + 1))
    for n in range(k + 1):
        c = np.polynomial.legendre.leg2poly(np.eye(k + 1)[n])
        L[n, :len(c)] = math.sqrt(2 * n + 1) * c
    return L


def dg_polynomial(coeffs, spec: BasisSpec, center, half) -> Poly2D:
    """The DG polynomial of one cell as a Poly2D about the cell center."""
    k = spec.degree
    L = _legendre_monomial(k)
    c = np.zeros((k + 1, k + 1))
    for m, (a, b) in enumerate(spec.exponents):
        c += coeffs[m] * np.outer(L[a] / half[0] ** np.arange(k + 1),
                                  L[b] / half[1] ** np.arange(k + 1))
    return Poly2D(c, (float(center[0]), float(center[1])))


def antiderivative_Q(f: Poly2D, x_ref: float) -> Poly2D:
    """Q with dQ/dx = f and Q(x_ref, y) = 0."""
    g = f.shift_to((x_ref, f.origin[1]))
    n, m = g.c.shape
    c = np.zeros((n + 1, m))
    c[1:] = g.c / np.arange(1, n + 1)[:, None]
    return Poly2D(c, g.origin)


def _npts(d: int, curved: bool) -> int:
    # straight: Q of degree d times constant y' ; curved: degree 2d + 1 in xi
    return d + 1 if curved else math.ceil((d + 2) / 2) + 1


def line_integral(seg, Q: Poly2D, edge=None) -> float:
    """``int Q dy`` along an outer segment (with its edge) or an inner segment."""
    d = max(Q.degree, 1)
    if isinstance(seg, OuterSegment):
        if edge is None:
            raise InvalidInputError("outer segments need their edge")
        a, b = seg.xi_from, seg.xi_to
        xg, wg = gauss_legendre(_npts(d, not edge.is_straight))
        xi = 0.5 * (a + b) + 0.5 * (b - a) * xg
        x, y = edge.point(xi)
        _, yp = edge.derivative(xi)
        return float(np.sum(wg * Q(x, y) * yp) * 0.5 * (b - a))
    (x0, y0), (x1, y1) = seg.start, seg.end
    xg, wg = gauss_legendre(_npts(d, False))
    s = 0.5 * (1.0 + xg)
    x = x0 + s * (x1 - x0)
    y = y0 + s * (y1 - y0)
    return float(np.sum(wg * Q(x, y)) * 0.5 * (y1 - y0))


# ---------------------------------------------------------------------------
# test functions


def test_point_count(spec: BasisSpec) -> int:
    return 9 if spec.degree >= 2 else 4


@dataclass(frozen=True, eq=False)
class TestFunctionStar:
    """Upstream test functions as monomials in ``((x - cx)/h, (y - cy)/h)``.

    ``coeffs[p, m]`` multiplies the p-th total-degree monomial in the fit for basis m.
    """

    owner: CellIndex
    center: tuple
    scale: float
    coeffs: np.ndarray
    exponents: tuple
    residual: float = 0.0

    def __call__(self, x, y) -> np.ndarray:
        X = (np.asarray(x, float) - self.center[0]) / self.scale
        Y = (np.asarray(y, float) - self.center[1]) / self.scale
        mono = np.stack([X ** a * Y ** b for a, b in self.exponents], axis=-1)
        return mono @ self.coeffs

    def poly(self, m: int) -> Poly2D:
        k = max(a + b for a, b in self.exponents)
        c = np.zeros((k + 1, k + 1))
        for p, (a, b) in enumerate(self.exponents):
            c[a, b] = self.coeffs[p, m] / self.scale ** (a + b)
        return Poly2D(c, self.center)


def _fit_test_functions(feet, ref, spec: BasisSpec):
    """Batched least squares. ``feet`` (..., npts, 2); ``ref`` (npts, 2)."""
    expo = spec.exponents
    B = spec.values(ref[:, 0], ref[:, 1])                     # (npts, dim)
    cen = feet.mean(axis=-2)
    ext = feet.max(axis=-2) - feet.min(axis=-2)
    h = 0.5 * np.maximum(ext[..., 0], ext[..., 1])
    if np.any(h <= 0.0):
        raise SingularGeometryError("collapsed upstream cell")
    X = (feet[..., 0] - cen[..., None, 0]) / h[..., None]
    Y = (feet[..., 1] - cen[..., None, 1]) / h[..., None]
    A = np.stack([X ** a * Y ** b for a, b in expo], axis=-1)  # (..., npts, dim)
    Qm, R = np.linalg.qr(A)
    diag = np.abs(np.diagonal(R, axis1=-2, axis2=-1))
    if np.any(diag.min(axis=-1) <= SINGULAR_REL * diag.max(axis=-1)):
        raise SingularGeometryError("rank-deficient test-function fit")
    rhs = np.swapaxes(Qm, -1, -2) @ B
    coef = np.linalg.solve(R, rhs)
    res = A @ coef - B
    return cen, h, coef, np.sqrt(np.sum(res * res, axis=(-2, -1)))


def reconstruct_test_functions(cell: UpstreamCell, spec: BasisSpec) -> TestFunctionStar:
    """Fit each basis function's image through the traced feet.

    P^1 uses the 4 corner feet, P^2 all 9.  The fit is done in a frame
    centred at the feet centroid and scaled by half the feet's extent.
    """
    n = test_point_count(spec)
    v = np.asarray(cell.vertices, float)
    if v.shape[0] < n:
        raise InvalidInputError(f"degree {spec.degree} needs {n} traced points")
    if spec.degree == 0:
        return TestFunctionStar(cell.owner, tuple(v[:4].mean(axis=0)), 1.0,
                                np.ones((1, 1)), ((0, 0),))
    cen, h, coef, res = _fit_test_functions(v[:n], REF_POINTS_9[:n], spec)
    return TestFunctionStar(cell.owner, (float(cen[0]), float(cen[1])), float(h), coef,
                            tuple(spec.exponents), float(res))


def assemble_rhs(j, u_n: DGField, cell: UpstreamCell, segs: SegmentSet,
                 psi: TestFunctionStar) -> np.ndarray:
    """``int_{A*} u^n psi*_m`` for every m, summed background cell by background cell."""
    g = u_n.grid
    spec = u_n.basis
    half = (0.5 * g.dx, 0.5 * g.dy)
    rhs = np.zeros(spec.dim)
    for cu in segs.background_cells():
        xc = g.x_lo + (cu[0] + 0.5) * g.dx
        yc = g.y_lo + (cu[1] + 0.5) * g.dy
        up = dg_polynomial(u_n.coeffs[cu[0] % g.nx, cu[1] % g.ny], spec, (xc, yc), half)
        outer = [s for s in segs.outer if s.unwrapped == cu]
        inner = [s for s in segs.inner if s.unwrapped == cu and s.start[1] != s.end[1]]
        for m in range(spec.dim):
            Q = antiderivative_Q(up * psi.poly(m), xc)
            rhs[m] += sum(line_integral(s, Q, cell.edges[s.edge_id]) for s in outer)
            rhs[m] += sum(line_integral(s, Q) for s in inner)
    return rhs


# ---------------------------------------------------------------------------
# 2D step


def _trace_layout(g: Grid2D, field: VelocityField, t_next, dt, need_mid, substeps):
    """Feet of grid nodes, edge midpoints and cell centers.

    Returns node (nx+1, ny+1, 2), hmid (nx, ny+1, 2), vmid (nx+1, ny, 2),
    center (nx, ny, 2); midpoint arrays are None unless ``need_mid``.
    """
    nx, ny, dx, dy = g.nx, g.ny, g.dx, g.dy
    lx, ly = g.lengths
    xs = g.x_lo + dx * np.arange(nx + 1)
    ys = g.y_lo + dy * np.arange(ny + 1)
    xm = g.x_lo + dx * (np.arange(nx) + 0.5)
    ym = g.y_lo + dy * (np.arange(ny) + 0.5)

    def trace(X, Y):
        P = np.stack([X.ravel(), Y.ravel()], axis=-1)
        return trace_points(P, t_next, dt, field, substeps).reshape(X.shape + (2,))

    def extend(F, ax_x, ax_y):
        # periodic images: index n is index 0 shifted by one period
        if ax_x:
            F = np.concatenate([F, F[:1] + np.array([lx, 0.0])], axis=0)
        if ax_y:
            F = np.concatenate([F, F[:, :1] + np.array([0.0, ly])], axis=1)
        return F

    groups = [("node", xs, ys, True, True)]
    if need_mid:
        groups += [("hmid", xm, ys, False, True), ("vmid", xs, ym, True, False),
                   ("center", xm, ym, False, False)]
    out = {}
    for name, gx, gy, ex, ey in groups:
        if field.periodic:
            X, Y = np.meshgrid(gx[:nx] if ex else gx, gy[:ny] if ey else gy, indexing="ij")
            out[name] = extend(trace(X, Y), ex, ey)
        else:
            X, Y = np.meshgrid(gx, gy, indexing="ij")
            out[name] = trace(X, Y)
    return out["node"], out.get("hmid"), out.get("vmid"), out.get("center")


@dataclass
class StepDiagnostics:
    min_area_ratio: float = 1.0
    max_area_ratio: float = 1.0
    quadratic_edges: int = 0
    area_flagged: int = 0


def _gather_feet(node, hmid, vmid, center, n9):
    bl = node[:-1, :-1]
    br = node[1:, :-1]
    tr = node[1:, 1:]
    tl = node[:-1, 1:]
    pts = [bl, br, tr, tl]
    if n9:
        pts += [hmid[:, :-1], vmid[1:, :], hmid[:, 1:], vmid[:-1, :], center]
    return np.stack(pts, axis=-2)


def upstream_edges(u: DGField, dt: float, field: VelocityField, mode: str, substeps=1):
    """Trace and build the shared edge arrays ``H``, ``V`` and per-cell feet."""
    g = u.grid
    spec = u.basis
    curved = mode == "qc"
    n9 = curved or spec.degree >= 2
    node, hmid, vmid, center = _trace_layout(g, field, u.time + dt, dt, n9, substeps)
    t1 = u.time + dt
    try:
        H, qh = edge_rows(node[:-1, :], hmid, node[1:, :], curved, g.eps_geom)
    except DegenerateEdgeError as exc:
        # H[i, j] is the bottom side of cell (i, j) and the top side of (i, j - 1)
        cells = sorted({c for i, j in exc.cells for c in ((i, j % g.ny), (i, (j - 1) % g.ny))})
        raise DegenerateEdgeError(str(exc), cells=cells[:10], time=t1) from exc
    try:
        V, qv = edge_rows(node[:, :-1], vmid, node[:, 1:], curved, g.eps_geom)
    except DegenerateEdgeError as exc:
        cells = sorted({c for i, j in exc.cells for c in ((i % g.nx, j), ((i - 1) % g.nx, j))})
        raise DegenerateEdgeError(str(exc), cells=cells[:10], time=t1) from exc
    feet = _gather_feet(node, hmid, vmid, center, n9)
    return H, V, feet, int(qh.sum() + qv.sum())


def cell_edge_rows(H, V):
    """Per-cell edge rows (nx, ny, 4, 10) in canonical (not traversal) orientation."""
    return np.stack([H[:, :-1], V[1:, :], H[:, 1:], V[:-1, :]], axis=2)


EDGE_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])


def _cell_areas(H, V, g: Grid2D):
    xc = g.x_lo + g.dx * (np.arange(g.nx) + 0.5)
    E = cell_edge_rows(H, V)
    return np.sum(edge_x_dy(E, xc[:, None, None]) * EDGE_SIGNS, axis=-1)


def step2d(u: DGField, dt: float, field: VelocityField, mode: str = "qc",
           substeps: int = 1, diagnostics: StepDiagnostics | None = None) -> DGField:
    """Advance a 2D field by ``dt``; ``mode`` is "quad" (straight sides) or "qc"."""
    g = u.grid
    if not isinstance(g, Grid2D):
        raise InvalidInputError("step2d needs a 2D field")
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    if mode not in ("quad", "qc"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    _set_threads()
    spec = u.basis
    k = spec.degree
    H, V, feet, nquad = upstream_edges(u, dt, field, mode, substeps)

    area = _cell_areas(H, V, g)
    ratio = area / g.cell_area
    if np.any(ratio <= 0.0):
        bad = [tuple(map(int, c)) for c in np.argwhere(ratio <= 0.0)[:10]]
        raise InvertedCellError(f"{int((ratio <= 0).sum())} upstream cell(s) inverted; "
                                "reduce the time step", cells=bad, time=u.time + dt)
    flagged = np.abs(ratio - 1.0) > 0.5
    if np.any(flagged):
        warnings.warn(f"{int(flagged.sum())} upstream cell(s) changed area by more than 50%",
                      RuntimeWarning, stacklevel=2)
    if diagnostics is not None:
        diagnostics.min_area_ratio = float(ratio.min())
        diagnostics.max_area_ratio = float(ratio.max())
        diagnostics.quadratic_edges = nquad
        diagnostics.area_flagged = int(flagged.sum())

    if k == 0:
        psi = np.ones((g.nx, g.ny, 1, 1))
        pcen = feet[..., :4, :].mean(axis=-2)
        ph = np.ones((g.nx, g.ny))
    else:
        n = test_point_count(spec)
        ref = REF_POINTS_9[:n]
        pcen, ph, psi, rdiag = K.fit_test_functions(
            np.ascontiguousarray(feet[..., :n, :]), spec.values(ref[:, 0], ref[:, 1]),
            np.array(spec.exponents, dtype=np.int64))
        if np.any(rdiag <= SINGULAR_REL):
            bad = [tuple(map(int, c)) for c in np.argwhere(rdiag <= SINGULAR_REL)[:10]]
            raise SingularGeometryError("rank-deficient test-function fit", cells=bad,
                                        time=u.time + dt)
    expo = np.array(total_degree_exponents(k), dtype=np.int64)
    gs = gauss_legendre(k + 3)
    gc = gauss_legendre(k + 4)
    gin = gauss_legendre(k + 1)
    tol = AREA_CHECK_REL * g.cell_area
    rhs, piece_area, status = K.assemble_all(
        np.ascontiguousarray(H), np.ascontiguousarray(V), np.ascontiguousarray(u.coeffs),
        np.ascontiguousarray(psi), np.ascontiguousarray(pcen), np.ascontiguousarray(ph),
        expo, k, g.x_lo, g.y_lo, g.dx, g.dy, g.eps_geom,
        gs[0], gs[1], gc[0], gc[1], gin[0], gin[1], area, tol)
    if np.any(status != K.OK):
        bad = [tuple(map(int, c)) for c in np.argwhere(status != K.OK)[:10]]
        raise GeometryInconsistencyError(
            f"{int((status != K.OK).sum())} cell(s) failed the segment area check", cells=bad,
            time=u.time + dt)
    return u.with_coeffs(rhs / g.cell_area, u.time + dt)


def build_cells(u: DGField, dt: float, field: VelocityField, mode: str = "qc", substeps=1):
    """UpstreamCell objects for every Eulerian cell, sharing edges with the stepper."""
    g = u.grid
    H, V, feet, _ = upstream_edges(u, dt, field, mode, substeps)
    cells = {}
    for i in range(g.nx):
        for j in range(g.ny):
            rows = [H[i, j], V[i + 1, j], _reverse_row(H[i, j + 1]), _reverse_row(V[i, j])]
            cells[(i, j)] = UpstreamCell(CellIndex(i, j), feet[i, j],
                                         tuple(_edge_from_row(r) for r in rows))
    return cells


def _reverse_row(r):
    # reparameterize xi -> -xi
    return np.array([r[2], r[3], r[0], r[1], r[4], -r[5], r[6], r[7], -r[8], r[9]])


def _edge_from_row(r):
    kind = "straight" if r[6] == 0.0 and r[9] == 0.0 else "quadratic"
    return Edge(kind, (r[0], r[1]), (r[2], r[3]), build_transform(r[:2], r[2:4]), row=r)


# ---------------------------------------------------------------------------
# 1D step


def step1d(u: DGField, dt: float, field: VelocityField, substeps: int = 1) -> DGField:
    """Advance a 1D field by ``dt``."""
    g = u.grid
    if not isinstance(g, Grid1D):
        raise InvalidInputError("step1d needs a 1D field")
    if not dt > 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    k = u.basis.degree
    n = g.n_cells
    t1 = u.time + dt
    x_nodes = g.nodes()
    feet_nodes = trace_points(x_nodes[:n].reshape(-1, 1), t1, dt, field, substeps).ravel()
    feet_nodes = np.append(feet_nodes, feet_nodes[0] + g.length)
    ref = gauss_lobatto(k + 1)
    if k == 0:
        pts = np.stack([feet_nodes[:-1], feet_nodes[1:]], axis=1)
        psi = np.ones((n, 1, 1))
        pc = 0.5 * (pts[:, 0] + pts[:, 1])
        ph = np.ones(n)
    else:
        interior = ref[1:-1]
        if len(interior):
            xin = g.centers()[:, None] + 0.5 * g.dx * interior[None, :]
            fin = trace_points(xin.reshape(-1, 1), t1, dt, field, substeps).reshape(n, -1)
            pts = np.concatenate([feet_nodes[:-1, None], fin, feet_nodes[1:, None]], axis=1)
        else:
            pts = np.stack([feet_nodes[:-1], feet_nodes[1:]], axis=1)
        pc = 0.5 * (pts[:, 0] + pts[:, -1])
        ph = 0.5 * (pts[:, -1] - pts[:, 0])
        if np.any(ph <= 0):
            bad = [int(c) for c in np.argwhere(ph <= 0).ravel()[:10]]
            raise InvertedCellError("upstream interval inverted; reduce the time step",
                                    cells=bad, time=t1)
        X = (pts - pc[:, None]) / ph[:, None]
        A = X[..., None] ** np.arange(k + 1)                 # (n, k+1, k+1)
        B = u.basis.values(ref)                              # (k+1, k+1)
        psi = np.linalg.solve(A, np.broadcast_to(B, A.shape))
    gx, gw = gauss_legendre(k + 1)
    rhs, status = K.assemble_1d(feet_nodes, np.ascontiguousarray(psi), pc, ph,
                                np.ascontiguousarray(u.coeffs), g.x_lo, g.dx, k,
                                gx, gw, g.eps_geom)
    if np.any(status != K.OK):
        bad = [int(c) for c in np.argwhere(status != K.OK).ravel()[:10]]
        raise InvertedCellError("upstream interval inverted; reduce the time step",
                                cells=bad, time=t1)
    return u.with_coeffs(rhs / g.dx, t1)


def step(u: DGField, dt: float, field: VelocityField, mode: str = "qc", substeps: int = 1):
    if u.ndim == 1:
        return step1d(u, dt, field, substeps)
    return step2d(u, dt, field, mode, substeps)
