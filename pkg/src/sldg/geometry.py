"""Upstream cells: edge construction, grid-line intersection and segment search.

An upstream cell is bounded by four edges (bottom, right, top, left,
counterclockwise).  Each edge is straight or a parabola written in the
edge's own xi-eta frame, where the two corner feet sit at (-1, 0) and (1, 0)
and the curve is ``eta = q (xi^2 - 1)``.  Every edge is stored as a
polynomial parameterization in xi so that the compiled kernels only see
``x(xi) = X0 + X1 xi + X2 xi^2`` and ``y(xi) = Y0 + Y1 xi + Y2 xi^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DegenerateEdgeError, GeometryInconsistencyError, InvertedCellError
from .grid import CellIndex, Grid2D
from .quadrature import gauss_legendre

AREA_BAND = 0.5
CLOSURE_FACTOR = 10.0

# corner and midpoint reference coordinates of the 9 traced points
REF_POINTS_9 = np.array([
    (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0),
    (0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0),
    (0.0, 0.0),
])
# edge e runs corner e -> corner e+1 through midpoint 4+e
EDGE_CORNERS = ((0, 1), (1, 2), (2, 3), (3, 0))


@dataclass(frozen=True)
class XiEtaTransform:
    """Similarity map sending ``p1`` to (-1, 0) and ``p3`` to (1, 0).

    ``xi = a x + b y + c`` and ``eta = b x - a y + d``.
    """

    a: float
    b: float
    c: float
    d: float
    p1: tuple
    p3: tuple

    def forward(self, x, y):
        return self.a * x + self.b * y + self.c, self.b * x - self.a * y + self.d

    def reverse(self, xi, eta):
        (x1, y1), (x3, y3) = self.p1, self.p3
        hx, hy = 0.5 * (x3 - x1), 0.5 * (y3 - y1)
        return (hx * xi + hy * eta + 0.5 * (x3 + x1),
                hy * xi - hx * eta + 0.5 * (y3 + y1))


def build_transform(p1, p3, eps: float = 0.0) -> XiEtaTransform:
    x1, y1 = map(float, p1)
    x3, y3 = map(float, p3)
    L2 = (x1 - x3) ** 2 + (y1 - y3) ** 2
    if not math.sqrt(L2) > eps:
        raise DegenerateEdgeError(f"coincident edge endpoints {p1} and {p3}")
    return XiEtaTransform(
        a=2.0 * (x3 - x1) / L2,
        b=2.0 * (y3 - y1) / L2,
        c=(x1 * x1 - x3 * x3 + y1 * y1 - y3 * y3) / L2,
        d=2.0 * (x3 * y1 - x1 * y3) / L2,
        p1=(x1, y1), p3=(x3, y3))


def edge_rows(p1, p2, p3, curved: bool, eps_flat: float):
    """Vectorized edge parameterizations.

    ``p1``, ``p3`` are endpoint arrays of shape (..., 2) and ``p2`` the traced
    midpoint (ignored unless ``curved``).  Returns rows of shape (..., 10) and
    the boolean mask of edges that are quadratic.
    """
    p1 = np.asarray(p1, float)
    p3 = np.asarray(p3, float)
    dx = p3[..., 0] - p1[..., 0]
    dy = p3[..., 1] - p1[..., 1]
    L2 = dx * dx + dy * dy
    if np.any(L2 == 0.0):
        raise DegenerateEdgeError("coincident edge endpoints")
    mx = 0.5 * (p1[..., 0] + p3[..., 0])
    my = 0.5 * (p1[..., 1] + p3[..., 1])
    q = np.zeros_like(L2)
    quad = np.zeros(L2.shape, dtype=bool)
    if curved:
        p2 = np.asarray(p2, float)
        rx = p2[..., 0] - mx
        ry = p2[..., 1] - my
        xi2 = 2.0 * (dx * rx + dy * ry) / L2
        eta2 = 2.0 * (dy * rx - dx * ry) / L2
        # physical offset of the midpoint from the chord is |eta2| * L / 2
        quad = np.abs(eta2) * np.sqrt(L2) * 0.5 >= eps_flat
        bad = quad & (np.abs(xi2) >= 1.0)
        if np.any(bad):
            raise DegenerateEdgeError(
                f"{int(bad.sum())} edge(s) with the middle foot outside its endpoints",
                cells=[tuple(map(int, e)) for e in np.argwhere(bad)])
        q = np.where(quad, eta2 / np.where(quad, xi2 * xi2 - 1.0, -1.0), 0.0)
    X2 = np.where(quad, 0.5 * dy * q, 0.0)
    Y2 = np.where(quad, -0.5 * dx * q, 0.0)
    rows = np.stack([p1[..., 0], p1[..., 1], p3[..., 0], p3[..., 1],
                     mx - X2, 0.5 * dx, X2, my - Y2, 0.5 * dy, Y2], axis=-1)
    return rows, quad


def edge_x_dy(rows, x_ref=0.0):
    """Exact ``int (x - x_ref) dy`` along each edge row (2-point Gauss is exact)."""
    rows = np.asarray(rows)
    xg, wg = gauss_legendre(2)
    tot = 0.0
    for xi, w in zip(xg, wg):
        x = rows[..., 4] + xi * (rows[..., 5] + xi * rows[..., 6])
        yp = rows[..., 8] + 2.0 * xi * rows[..., 9]
        tot = tot + w * (x - x_ref) * yp
    return tot


@dataclass(frozen=True, eq=False)
class Edge:
    kind: str
    v_start: tuple
    v_end: tuple
    transform: XiEtaTransform | None = None
    xi2: float | None = None
    eta2: float | None = None
    q: float = 0.0
    row: np.ndarray = field(default=None, repr=False)

    def point(self, xi):
        return K.edge_point(self.row, float(xi)) if np.isscalar(xi) else (
            self.row[4] + xi * (self.row[5] + xi * self.row[6]),
            self.row[7] + xi * (self.row[8] + xi * self.row[9]))

    def derivative(self, xi):
        return (self.row[5] + 2.0 * xi * self.row[6], self.row[8] + 2.0 * xi * self.row[9])

    @property
    def is_straight(self) -> bool:
        return self.kind == "straight"


def make_edge(p1, p3, p2=None, eps_flat: float = 0.0) -> Edge:
    """Straight edge p1 -> p3, or the parabola through the middle foot ``p2``."""
    p1 = (float(p1[0]), float(p1[1]))
    p3 = (float(p3[0]), float(p3[1]))
    tr = build_transform(p1, p3)
    if p2 is None:
        rows, _ = edge_rows(np.array(p1), None, np.array(p3), False, eps_flat)
        return Edge("straight", p1, p3, tr, row=rows)
    rows, quad = edge_rows(np.array(p1), np.asarray(p2, float), np.array(p3), True, eps_flat)
    xi2, eta2 = tr.forward(float(p2[0]), float(p2[1]))
    if not quad:
        return Edge("straight", p1, p3, tr, xi2, eta2, 0.0, rows)
    return Edge("quadratic", p1, p3, tr, xi2, eta2, eta2 / (xi2 * xi2 - 1.0), rows)


@dataclass(frozen=True, eq=False)
class UpstreamCell:
    """Traced image of one Eulerian cell.

    ``vertices`` are the 4 corner feet (quad) or 9 feet ordered corners,
    edge midpoints, center.  ``edges`` run counterclockwise starting at the
    bottom edge.
    """

    owner: CellIndex
    vertices: np.ndarray
    edges: tuple
    shift: tuple = (0, 0)
    area_flag: bool = False

    @property
    def edge_array(self) -> np.ndarray:
        return np.stack([e.row for e in self.edges])

    @property
    def signed_area(self) -> float:
        c = self.vertices[:4].mean(axis=0)
        return float(np.sum(edge_x_dy(self.edge_array, c[0])))

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def build_upstream_cell(owner, vertices, mode: str = "qc", grid: Grid2D | None = None,
                        eps_flat: float | None = None) -> UpstreamCell:
    """Assemble an upstream cell from traced feet.

    ``mode="quad"`` joins the corners with straight lines; ``mode="qc"`` fits
    a parabola per side through the side's midpoint foot.  A side whose
    midpoint deviates from the chord by less than ``eps_flat`` is kept straight.
    """
    v = np.asarray(vertices, dtype=float)
    if mode not in ("quad", "qc"):
        raise ValueError(f"unknown mode {mode!r}")
    need = 9 if mode == "qc" else 4
    if v.shape[0] < need:
        raise ValueError(f"{mode} cells need {need} vertices, got {v.shape[0]}")
    if eps_flat is None:
        eps_flat = grid.eps_geom if grid is not None else 0.0
    edges = []
    for e, (a, b) in enumerate(EDGE_CORNERS):
        mid = v[4 + e] if mode == "qc" else None
        edges.append(make_edge(v[a], v[b], mid, eps_flat))
    cell = UpstreamCell(CellIndex(*owner), v, tuple(edges))
    area = cell.signed_area
    if area <= 0.0:
        raise InvertedCellError(f"upstream cell {tuple(owner)} has signed area {area:.3e}",
                                cells=[tuple(owner)])
    if grid is not None:
        ratio = area / grid.cell_area
        if abs(ratio - 1.0) > AREA_BAND:
            cell = UpstreamCell(cell.owner, v, cell.edges, cell.shift, True)
    return cell


def intersect_edge_gridline(e: Edge, line, eps: float = 0.0) -> list:
    """Intersections of an edge with the grid line ``("x", v)`` or ``("y", v)``.

    Interior roots come from the quadratic in xi; endpoints within ``eps`` of
    the line are included.  Grazing roots are dropped.  Sorted by xi.
    """
    axis, val = line
    r = e.row
    if axis == "x":
        c0, c1, c2, vs, ve = r[4], r[5], r[6], r[0], r[2]
    elif axis == "y":
        c0, c1, c2, vs, ve = r[7], r[8], r[9], r[1], r[3]
    else:
        raise ValueError(f"line axis must be 'x' or 'y', got {axis!r}")
    C = c0 - val
    roots = []
    if c2 == 0.0:
        if c1 != 0.0:
            roots.append(-C / c1)
    else:
        D = c1 * c1 - 4.0 * c2 * C
        if D > K.EPS_DISC * (c1 * c1 + abs(4.0 * c2 * C)):
            sq = math.sqrt(D)
            qq = -0.5 * (c1 + math.copysign(sq, c1))
            roots += [qq / c2, C / qq]
    tol = 0.0 if eps == 0.0 else eps / max(math.hypot(r[5], r[8]), 1e-300)
    out = [xi for xi in roots if -1.0 + tol < xi < 1.0 - tol]
    if abs(vs - val) <= eps:
        out.append(-1.0)
    if abs(ve - val) <= eps:
        out.append(1.0)
    out = sorted(set(out))
    return [(xi, e.point(xi)) for xi in out]


@dataclass(frozen=True)
class OuterSegment:
    edge_id: int
    xi_from: float
    xi_to: float
    cell: CellIndex
    unwrapped: tuple

    @property
    def orientation(self) -> int:
        return 1 if self.xi_to > self.xi_from else -1


@dataclass(frozen=True)
class InnerSegment:
    start: tuple
    end: tuple
    cell: CellIndex
    unwrapped: tuple

    @property
    def vertical(self) -> bool:
        return self.start[0] == self.end[0]


@dataclass(frozen=True, eq=False)
class SegmentSet:
    outer: list
    inner: list
    owner: CellIndex
    edges: tuple

    def background_cells(self) -> list:
        cells = {s.unwrapped for s in self.outer} | {s.unwrapped for s in self.inner}
        return sorted(cells)

    def segment_endpoints(self, seg):
        if isinstance(seg, OuterSegment):
            e = self.edges[seg.edge_id]
            return e.point(seg.xi_from), e.point(seg.xi_to)
        return seg.start, seg.end

    def loop_area(self, cell_uw, g: Grid2D) -> float:
        """``oint (x - x_c) dy`` over the given background cell's segments."""
        xc = g.x_lo + (cell_uw[0] + 0.5) * g.dx
        total = 0.0
        xg, wg = gauss_legendre(2)
        for s in self.outer:
            if s.unwrapped != cell_uw:
                continue
            e = self.edges[s.edge_id]
            mid, half = 0.5 * (s.xi_from + s.xi_to), 0.5 * (s.xi_to - s.xi_from)
            for x_, w_ in zip(xg, wg):
                xi = mid + half * x_
                x, _ = e.point(xi)
                total += w_ * half * (x - xc) * e.derivative(xi)[1]
        for s in self.inner:
            if s.unwrapped == cell_uw:
                total += (0.5 * (s.start[0] + s.end[0]) - xc) * (s.end[1] - s.start[1])
        return total

    def loop_areas(self, g: Grid2D) -> dict:
        return {c: self.loop_area(c, g) for c in self.background_cells()}


def _check_closure(segs: SegmentSet, tol: float):
    by_cell: dict = {}
    for s in list(segs.outer) + list(segs.inner):
        a, b = segs.segment_endpoints(s)
        by_cell.setdefault(s.unwrapped, []).append((np.array(a, float), np.array(b, float)))
    for c, items in by_cell.items():
        starts = [a for a, _ in items]
        ends = [b for _, b in items]
        used = [False] * len(starts)
        for e in ends:
            best, bi = np.inf, -1
            for i, s in enumerate(starts):
                if not used[i]:
                    d = float(np.max(np.abs(s - e)))
                    if d < best:
                        best, bi = d, i
            if best > tol:
                raise GeometryInconsistencyError(
                    f"segment loop in background cell {c} does not close (gap {best:.3e})",
                    cells=[tuple(segs.owner)])
            used[bi] = True


def find_segments(cell: UpstreamCell, g: Grid2D, check: bool = True) -> SegmentSet:
    """Split the cell boundary by background cell and add the grid-line pieces inside it.

    Every background cell that overlaps the upstream cell receives a closed
    counterclockwise loop of outer (edge) and inner (grid-line) segments.
    """
    E = np.ascontiguousarray(cell.edge_array)
    rev = np.zeros(4, dtype=np.bool_)
    outer, inner = K.cell_segments(E, rev, g.x_lo, g.y_lo, g.dx, g.dy, g.eps_geom, True)
    out_list = []
    for e, a, b, I, J in outer:
        I, J = int(I), int(J)
        out_list.append(OuterSegment(int(e), float(a), float(b),
                                     CellIndex(I % g.nx, J % g.ny), (I, J)))
    in_list = []
    for x0, y0, x1, y1, I, J in inner:
        I, J = int(I), int(J)
        in_list.append(InnerSegment((float(x0), float(y0)), (float(x1), float(y1)),
                                    CellIndex(I % g.nx, J % g.ny), (I, J)))
    segs = SegmentSet(out_list, in_list, cell.owner, cell.edges)
    if check:
        _check_closure(segs, CLOSURE_FACTOR * g.eps_geom)
    return segs


def point_in_cell(p, cell: UpstreamCell, eps: float = 0.0) -> bool:
    """Crossing-number test; points within ``eps`` of the boundary count as inside."""
    px, py = float(p[0]), float(p[1])
    lo = cell.edge_array
    xs = np.concatenate([lo[:, 0], lo[:, 2]])
    ys = np.concatenate([lo[:, 1], lo[:, 3]])
    # bounding box including parabola extrema
    xmin, xmax, ymin, ymax = xs.min(), xs.max(), ys.min(), ys.max()
    for r in lo:
        a, b = K.coord_range(r[4], r[5], r[6], r[0], r[2])
        xmin, xmax = min(xmin, a), max(xmax, b)
        a, b = K.coord_range(r[7], r[8], r[9], r[1], r[3])
        ymin, ymax = min(ymin, a), max(ymax, b)
    if px < xmin - eps or px > xmax + eps or py < ymin - eps or py > ymax + eps:
        return False
    buf = np.empty(4)
    count = 0
    for r in lo:
        n = K.line_crossings(r[7], r[8], r[9], r[1], r[3], py, 0.0, buf)
        for c in range(n):
            x, _ = K.edge_point(r, buf[c])
            if abs(x - px) <= eps:
                return True
            if x > px:
                count += 1
        if eps > 0.0:
            n = K.line_crossings(r[4], r[5], r[6], r[0], r[2], px, 0.0, buf)
            for c in range(n):
                _, y = K.edge_point(r, buf[c])
                if abs(y - py) <= eps:
                    return True
    return count % 2 == 1


def dump_geometry(cell: UpstreamCell, segs: SegmentSet, path) -> None:
    """Plain-text trace of one upstream cell's geometry for debugging."""
    with open(path, "w") as fh:
        fh.write(f"owner {cell.owner.i} {cell.owner.j}\n")
        for v in cell.vertices:
            fh.write(f"vertex {v[0]:.16e} {v[1]:.16e}\n")
        for k, e in enumerate(cell.edges):
            fh.write(f"edge {k} {e.kind} q={e.q:.16e} "
                     + " ".join(f"{c:.16e}" for c in e.row) + "\n")
        for s in segs.outer:
            a, b = segs.segment_endpoints(s)
            fh.write(f"outer edge={s.edge_id} xi=[{s.xi_from:.16e},{s.xi_to:.16e}] "
                     f"cell={s.unwrapped[0]},{s.unwrapped[1]} "
                     f"from=({a[0]:.16e},{a[1]:.16e}) to=({b[0]:.16e},{b[1]:.16e})\n")
        for s in segs.inner:
            fh.write(f"inner cell={s.unwrapped[0]},{s.unwrapped[1]} "
                     f"from=({s.start[0]:.16e},{s.start[1]:.16e}) "
                     f"to=({s.end[0]:.16e},{s.end[1]:.16e})\n")
