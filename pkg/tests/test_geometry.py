import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sldg.basis import BasisSpec
from sldg.errors import DegenerateEdgeError, GeometryInconsistencyError, InvertedCellError
from sldg.field import project
from sldg.flows import catalog
from sldg.geometry import (REF_POINTS_9, build_transform, build_upstream_cell, dump_geometry,
                           find_segments, intersect_edge_gridline, make_edge, point_in_cell)
from sldg.grid import CellIndex, Grid2D
from sldg.update import _cell_areas, build_cells, upstream_edges


def random_cell(rng, g, curved=True, jitter=0.3, bend=0.15, shift=3.0):
    """Randomly deformed image of the cell at the origin corner of ``g``."""
    h = g.dx
    ref = 0.5 * (REF_POINTS_9 + 1.0) * h + g.x_lo
    v = ref + rng.uniform(-jitter, jitter, ref.shape) * h
    v += rng.uniform(-shift, shift, 2) * h
    if curved:
        # push midpoints off their chords
        for e, (a, b) in enumerate(((0, 1), (1, 2), (2, 3), (3, 0))):
            m = 0.5 * (v[a] + v[b])
            d = v[b] - v[a]
            n = np.array([-d[1], d[0]]) / np.hypot(*d)
            v[4 + e] = m + rng.uniform(-0.2, 0.2) * d + rng.uniform(-bend, bend) * h * n
    return build_upstream_cell((0, 0), v, "qc" if curved else "quad", g)


# ---- transform -------------------------------------------------------------

def test_transform_identity():
    tr = build_transform((-1.0, 0.0), (1.0, 0.0))
    assert (tr.a, tr.b, tr.c, tr.d) == (1.0, 0.0, 0.0, 0.0)
    # eta = b x - a y + d, so eta = -y for this pair
    assert tr.forward(0.3, 0.2) == pytest.approx((0.3, -0.2))


@pytest.mark.parametrize("p1, p3, coeffs", [
    ((0.0, 0.0), (2.0, 0.0), (1.0, 0.0, -1.0, 0.0)),
    ((0.0, 0.0), (0.0, 2.0), (0.0, 1.0, -1.0, 0.0)),
])
def test_transform_examples(p1, p3, coeffs):
    tr = build_transform(p1, p3)
    assert (tr.a, tr.b, tr.c, tr.d) == pytest.approx(coeffs, abs=1e-15)
    assert tr.forward(*p1) == pytest.approx((-1.0, 0.0), abs=1e-15)
    assert tr.forward(*p3) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_transform_rotated_case_eta_is_x():
    tr = build_transform((0.0, 0.0), (0.0, 2.0))
    xi, eta = tr.forward(0.7, 1.3)
    assert xi == pytest.approx(0.3) and eta == pytest.approx(0.7)


def test_transform_roundtrip_many():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        scale = 10.0 ** rng.uniform(-3, 1)
        p1 = rng.normal(size=2) * scale
        p3 = p1 + rng.normal(size=2) * scale
        tr = build_transform(p1, p3)
        assert tr.forward(*p1) == pytest.approx((-1.0, 0.0), abs=1e-12)
        assert tr.forward(*p3) == pytest.approx((1.0, 0.0), abs=1e-12)
        p = p1 + rng.normal(size=(100, 2)) * scale
        back = np.stack(tr.reverse(*tr.forward(p[:, 0], p[:, 1])), axis=-1)
        worst = max(worst, np.max(np.abs(back - p)) / (scale + np.max(np.abs(p1))))
    assert worst <= 1e-12


def test_transform_rejects_coincident_points():
    with pytest.raises(DegenerateEdgeError):
        build_transform((1.0, 1.0), (1.0, 1.0))


# ---- edges -----------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 3), st.floats(0, 2 * math.pi),
       st.floats(-0.8, 0.8), st.floats(-1, 1))
def test_parabola_passes_through_feet(x0, y0, length, angle, xi2, eta2):
    p1 = np.array([x0, y0])
    p3 = p1 + length * np.array([math.cos(angle), math.sin(angle)])
    tr = build_transform(p1, p3)
    p2 = np.array(tr.reverse(xi2, eta2))
    e = make_edge(p1, p3, p2, eps_flat=1e-12)
    tol = 1e-12 * (1 + abs(x0) + abs(y0) + length)
    assert e.point(-1.0) == pytest.approx(tuple(p1), abs=tol)
    assert e.point(1.0) == pytest.approx(tuple(p3), abs=tol)
    if not e.is_straight:
        assert e.point(xi2) == pytest.approx(tuple(p2), abs=tol)
        # the arc is eta = q (xi^2 - 1) in the edge frame
        for s in (-0.6, 0.1, 0.9):
            xi, eta = tr.forward(*e.point(s))
            assert eta == pytest.approx(e.q * (xi * xi - 1.0), abs=1e-10)


def test_flat_midpoint_gives_straight_edge():
    e = make_edge((0.0, 0.0), (1.0, 0.0), (0.3, 1e-15), eps_flat=1e-12)
    assert e.is_straight


def test_midpoint_outside_endpoints_is_degenerate():
    with pytest.raises(DegenerateEdgeError):
        make_edge((0.0, 0.0), (1.0, 0.0), (1.2, 0.1), eps_flat=1e-12)


# ---- intersections ---------------------------------------------------------

def test_straight_edge_intersection():
    e = make_edge((0.0, 0.0), (1.0, 1.0))
    hits = intersect_edge_gridline(e, ("x", 0.5))
    assert len(hits) == 1
    xi, p = hits[0]
    assert xi == pytest.approx(0.0, abs=1e-15)
    assert p == pytest.approx((0.5, 0.5))


def _arc_q_half():
    # eta = 0.5 (xi^2 - 1) in the frame of (-1,0) -> (1,0); eta = -y there
    e = make_edge((-1.0, 0.0), (1.0, 0.0), (0.0, 0.5), eps_flat=1e-12)
    assert e.q == pytest.approx(0.5)
    return e


def test_quadratic_edge_intersections():
    e = _arc_q_half()
    hits = intersect_edge_gridline(e, ("y", 0.375))
    assert [xi for xi, _ in hits] == pytest.approx([-0.5, 0.5])
    assert intersect_edge_gridline(e, ("y", -0.375)) == []
    # the same statement in the edge frame: eta = -0.375 has xi = +-0.5
    tr = e.transform
    for xi, p in hits:
        assert tr.forward(*p)[1] == pytest.approx(-0.375)


def test_grazing_line_is_dropped():
    e = _arc_q_half()
    assert intersect_edge_gridline(e, ("y", 0.5)) == []


def test_endpoint_on_line_is_snapped():
    e = make_edge((0.0, 0.0), (1.0, 1.0))
    hits = intersect_edge_gridline(e, ("x", 1e-14), eps=1e-12)
    assert [xi for xi, _ in hits] == [-1.0]


# ---- upstream cells --------------------------------------------------------

def test_translated_cell_is_exact():
    g = Grid2D.square(0.0, 1.0, 4)
    v = 0.5 * (REF_POINTS_9 + 1.0) * g.dx + np.array([0.31, 0.17])
    c = build_upstream_cell((0, 0), v, "qc", g)
    assert all(e.is_straight for e in c.edges)
    assert c.signed_area == pytest.approx(g.cell_area, rel=1e-14)


def test_clockwise_cell_is_inverted():
    g = Grid2D.square(0.0, 1.0, 4)
    v = 0.5 * (REF_POINTS_9 + 1.0) * g.dx
    v[:, 0] *= -1.0
    with pytest.raises(InvertedCellError) as info:
        build_upstream_cell((2, 1), v, "qc", g)
    assert info.value.cells == [(2, 1)]


def test_area_flag():
    g = Grid2D.square(0.0, 1.0, 4)
    v = 0.5 * (REF_POINTS_9 + 1.0) * g.dx
    v[:, 0] *= 2.0
    assert build_upstream_cell((0, 0), v, "quad", g).area_flag
    assert not build_upstream_cell((0, 0), 0.5 * (REF_POINTS_9 + 1.0) * g.dx, "quad", g).area_flag


def test_rotation_keeps_edges_straight():
    p = catalog("rigid2d")
    g = Grid2D(*p.domain, 16, 16)
    u = project(p.u0, g, BasisSpec(2))
    H, V, _, nquad = upstream_edges(u, 0.5 * g.dx, p.field, "qc")
    assert nquad == 0


def test_swirl_large_cfl_areas():
    p = catalog("swirl_cos")
    g = Grid2D(*p.domain, 80, 80)
    u = project(p.u0, g, BasisSpec(2))
    H, V, _, _ = upstream_edges(u, 2.5 * g.dx, p.field, "qc")
    area = _cell_areas(H, V, g)
    assert area.min() > 0
    assert math.fsum(area.ravel().tolist()) == pytest.approx(g.area, rel=1e-10)


# ---- segments --------------------------------------------------------------

def _unit_grid(n=6):
    return Grid2D.square(0.0, float(n), n)


def test_cell_inside_one_background_cell():
    g = _unit_grid()
    v = np.array([(2.2, 3.1), (2.8, 3.2), (2.9, 3.9), (2.1, 3.8)])
    segs = find_segments(build_upstream_cell((0, 0), v, "quad", g), g)
    assert len(segs.outer) == 4 and segs.inner == []
    assert {s.cell for s in segs.outer} == {CellIndex(2, 3)}


def test_cell_equal_to_background_cell():
    g = _unit_grid()
    v = np.array([(1.0, 1.0), (2.0, 1.0), (2.0, 2.0), (1.0, 2.0)])
    c = build_upstream_cell((1, 1), v, "quad", g)
    segs = find_segments(c, g)
    assert len(segs.outer) == 4
    # sides lying on grid lines go to the positive-side cell; the inner pieces
    # that close those loops enclose zero area, so the overlap is the cell itself
    areas = segs.loop_areas(g)
    assert areas.pop((1, 1)) == pytest.approx(1.0, rel=1e-14)
    assert all(a == pytest.approx(0.0, abs=1e-15) for a in areas.values())
    assert _inner_duality_ok(segs)


def test_four_cell_configuration():
    # one interior grid node, each side crossing one grid line
    g = _unit_grid()
    v = np.array([(0.3, 0.4), (1.7, 0.3), (1.6, 1.7), (0.4, 1.6)])
    c = build_upstream_cell((0, 0), v, "quad", g)
    segs = find_segments(c, g)
    assert len(segs.outer) == 8
    assert len(segs.inner) == 8
    assert len(segs.background_cells()) == 4
    areas = segs.loop_areas(g)
    assert all(a > 0 for a in areas.values())
    assert sum(areas.values()) == pytest.approx(c.signed_area, rel=1e-13)


def _edge_partition_ok(segs, tol):
    for e in range(4):
        pieces = sorted((min(s.xi_from, s.xi_to), max(s.xi_from, s.xi_to))
                        for s in segs.outer if s.edge_id == e)
        if not pieces:
            return False
        if abs(pieces[0][0] + 1.0) > tol or abs(pieces[-1][1] - 1.0) > tol:
            return False
        if any(abs(a[1] - b[0]) > tol for a, b in zip(pieces, pieces[1:])):
            return False
    return True


def _inner_duality_ok(segs):
    keyed = Counter()
    for s in segs.inner:
        keyed[(s.start, s.end)] += 1
    return all(keyed[(b, a)] == n for (a, b), n in keyed.items())


def test_edge_leaving_grid_line_at_shallow_angle():
    # starts on x = 2 and drifts left by far less than a cell but more than eps
    g = _unit_grid()
    v = np.array([(1.0, 1.0 - 1e-21), (2.0, 1.0 - 2.3e-6), (2.0 - 2e-8, 2.0), (1.0, 2.0)])
    c = build_upstream_cell((1, 1), v, "quad", g)
    segs = find_segments(c, g)
    areas = segs.loop_areas(g)
    assert sum(areas.values()) == pytest.approx(c.signed_area, rel=1e-12)
    assert all(a >= -1e-15 for a in areas.values())
    assert _inner_duality_ok(segs)


def test_random_deformations_loops_and_areas():
    rng = np.random.default_rng(2024)
    g = Grid2D.square(-1.0, 1.0, 10)
    for trial in range(200):
        c = random_cell(rng, g, curved=trial % 4 != 0)
        segs = find_segments(c, g)          # raises if any loop fails to close
        areas = segs.loop_areas(g)
        total = c.signed_area
        assert all(a >= -1e-11 * total for a in areas.values())
        assert sum(areas.values()) == pytest.approx(total, rel=1e-11)
        assert _edge_partition_ok(segs, 1e-12)
        assert _inner_duality_ok(segs)
        for s in segs.inner:
            on_x = abs((s.start[0] - g.x_lo) / g.dx - round((s.start[0] - g.x_lo) / g.dx)) < 1e-9
            on_y = abs((s.start[1] - g.y_lo) / g.dy - round((s.start[1] - g.y_lo) / g.dy)) < 1e-9
            assert on_x or on_y
            mid = 0.5 * (np.array(s.start) + np.array(s.end))
            assert point_in_cell(mid, c, eps=1e-12)


def test_closure_failure_is_reported():
    g = _unit_grid()
    v = np.array([(0.3, 0.4), (1.7, 0.3), (1.6, 1.7), (0.4, 1.6)])
    c = build_upstream_cell((3, 2), v, "quad", g)
    segs = find_segments(c, g)
    from sldg.geometry import SegmentSet, _check_closure
    broken = SegmentSet(segs.outer, segs.inner[1:], segs.owner, segs.edges)
    with pytest.raises(GeometryInconsistencyError) as info:
        _check_closure(broken, 1e-11)
    assert info.value.cells == [(3, 2)]


def test_neighbouring_cells_share_edges_bitwise():
    p = catalog("swirl_cos")
    g = Grid2D(*p.domain, 12, 12)
    u = project(p.u0, g, BasisSpec(2))
    cells = build_cells(u, 1.0 * g.dx, p.field, "qc")
    for i in range(g.nx):
        for j in range(g.ny):
            right = cells[(i, j)].edges[1].row
            left_of_next = cells[((i + 1) % g.nx, j)].edges[3].row
            if i + 1 < g.nx:
                # same points traversed in the opposite direction
                assert np.array_equal(right[:2], left_of_next[2:4])
                assert np.array_equal(right[2:4], left_of_next[:2])


# ---- point in cell ---------------------------------------------------------

def _dense_polygon(c, n=256):
    s = np.linspace(-1.0, 1.0, n, endpoint=False)
    pts = [np.stack(e.point(s), axis=-1) for e in c.edges]
    return np.concatenate(pts)


def _poly_contains(poly, p):
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = (y > p[1]) != (yn > p[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = x + (p[1] - y) * (xn - x) / (yn - y)
    return bool(np.count_nonzero(cross & (xi > p[0])) % 2)


def _dist_to_polygon(poly, p):
    a = poly
    b = np.roll(poly, -1, axis=0)
    d = b - a
    t = np.clip(np.sum((p - a) * d, axis=1) / np.sum(d * d, axis=1), 0.0, 1.0)
    return float(np.min(np.hypot(*(a + t[:, None] * d - p).T)))


def test_point_in_cell_against_dense_polygon():
    rng = np.random.default_rng(5)
    g = Grid2D.square(0.0, 1.0, 4)
    c = random_cell(rng, g, curved=True, bend=0.25, shift=0.0)
    assert not all(e.is_straight for e in c.edges)
    poly = _dense_polygon(c)
    lo, hi = poly.min(axis=0) - 0.05, poly.max(axis=0) + 0.05
    checked = 0
    for p in rng.uniform(lo, hi, (1000, 2)):
        if _dist_to_polygon(poly, p) < 1e-6:
            continue
        assert point_in_cell(p, c) == _poly_contains(poly, p)
        checked += 1
    assert checked > 990


def test_point_in_cell_trivia():
    g = Grid2D.square(0.0, 1.0, 4)
    v = np.array([(0.1, 0.1), (0.3, 0.12), (0.28, 0.3), (0.09, 0.27)])
    c = build_upstream_cell((0, 0), v, "quad", g)
    assert point_in_cell(v.mean(axis=0), c)
    assert not point_in_cell((5.0, 5.0), c)
    assert point_in_cell((0.2, 0.11), c, eps=1e-12)     # on the bottom edge


def test_dump_geometry(tmp_path):
    g = _unit_grid()
    v = np.array([(0.3, 0.4), (1.7, 0.3), (1.6, 1.7), (0.4, 1.6)])
    c = build_upstream_cell((0, 0), v, "quad", g)
    path = tmp_path / "cell.txt"
    dump_geometry(c, find_segments(c, g), path)
    kinds = Counter(line.split()[0] for line in path.read_text().splitlines())
    assert kinds == {"owner": 1, "vertex": 4, "edge": 4, "outer": 8, "inner": 8}
