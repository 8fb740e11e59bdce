import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sldg.basis import BasisSpec
from sldg.errors import InvalidInputError
from sldg.field import (DGField, error_norms, evaluate, export_csv, project, total_mass)
from sldg.grid import CellIndex, Grid1D, Grid2D
from sldg.quadrature import gauss_legendre, tensor_rule

TWO_PI = 2.0 * math.pi


@pytest.mark.parametrize("k, ndim", [(0, 1), (1, 1), (2, 1), (3, 1), (0, 2), (1, 2), (2, 2)])
def test_basis_orthonormal(k, ndim):
    spec = BasisSpec(k, ndim)
    n = 2 * k + 2
    if ndim == 1:
        x, w = gauss_legendre(n)
        phi = spec.values(x)
        gram = phi.T @ (phi * 0.5 * w[:, None])
    else:
        xi, eta, w = tensor_rule(n)
        phi = spec.values(xi, eta)
        gram = phi.T @ (phi * 0.25 * w[:, None])
    assert np.allclose(gram, np.eye(spec.dim), atol=1e-13)


def test_basis_dims():
    assert BasisSpec(2, 2).dim == 6
    assert BasisSpec(3, 1).dim == 4
    with pytest.raises(InvalidInputError):
        BasisSpec(3, 2)


def test_project_constant():
    g = Grid2D.square(0.0, 1.0, 5)
    u = project(lambda x, y: np.ones_like(x), g, BasisSpec(1))
    assert np.allclose(u.coeffs[..., 0], 1.0, atol=1e-14)
    assert np.allclose(u.coeffs[..., 1:], 0.0, atol=1e-14)


def test_project_linear_one_cell():
    g = Grid1D(0.0, 1.0, 1)
    u = project(lambda x: x, g, BasisSpec(1, 1))
    assert evaluate(u, CellIndex(0), 0.5) == pytest.approx(0.5, abs=1e-14)


def test_projection_error_sin():
    g = Grid2D.square(0.0, TWO_PI, 20)
    f = lambda x, y, t=0.0: np.sin(x + y)
    u = project(f, g, BasisSpec(2))
    # oracle: a finer rule than the one used by error_norms
    xi, eta, w = tensor_rule(8)
    xc, yc = g.centers()
    X = xc[..., None] + 0.5 * g.dx * xi
    Y = yc[..., None] + 0.5 * g.dy * eta
    e = u.coeffs @ u.basis.values(xi, eta).T - f(X, Y)
    l2 = math.sqrt(np.sum(e * e * 0.25 * w) * g.cell_area / g.area)
    assert l2 < 1e-3
    assert error_norms(u, f, 0.0)["L2"] == pytest.approx(l2, rel=1e-3)


def test_evaluate_reproduces_quadratic():
    g = Grid2D.square(-1.0, 2.0, 6)
    u = project(lambda x, y: x * y, g, BasisSpec(2))
    x, _ = gauss_legendre(3)
    for c in [CellIndex(0, 0), CellIndex(3, 4), CellIndex(5, 5)]:
        x0, x1, y0, y1 = g.cell_box(*c)
        for a in x:
            for b in x:
                p = (0.5 * (x0 + x1) + 0.5 * (x1 - x0) * a, 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * b)
                assert evaluate(u, c, p) == pytest.approx(p[0] * p[1], abs=1e-13)


def test_evaluate_constant_and_range():
    g = Grid2D.square(0.0, 1.0, 3)
    spec = BasisSpec(2)
    c = np.zeros(g.shape + (spec.dim,))
    c[..., 0] = 2.5
    u = DGField(g, spec, c)
    assert evaluate(u, CellIndex(1, 2), (0.4, 0.9)) == pytest.approx(2.5)
    with pytest.raises(IndexError):
        evaluate(u, CellIndex(3, 0), (0.0, 0.0))


@settings(max_examples=25)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6),
       st.floats(-1, 1), st.floats(-1, 1))
def test_evaluate_matches_basis_sum(cvals, xi, eta):
    g = Grid2D.square(0.0, 2.0, 2)
    spec = BasisSpec(2)
    c = np.zeros(g.shape + (6,))
    c[1, 0] = cvals
    u = DGField(g, spec, c)
    p = (1.5 + 0.5 * xi, 0.5 + 0.5 * eta)
    # Legendre by hand
    L = [1.0, math.sqrt(3) * xi, math.sqrt(5) * 0.5 * (3 * xi * xi - 1)]
    M = [1.0, math.sqrt(3) * eta, math.sqrt(5) * 0.5 * (3 * eta * eta - 1)]
    want = (cvals[0] + cvals[1] * L[1] + cvals[2] * M[1] + cvals[3] * L[2]
            + cvals[4] * L[1] * M[1] + cvals[5] * M[2])
    assert evaluate(u, CellIndex(1, 0), p) == pytest.approx(want, abs=1e-12)


def test_project_is_idempotent():
    g = Grid2D.square(0.0, 1.0, 4)
    spec = BasisSpec(2)
    u = project(lambda x, y: np.exp(x) * np.cos(3 * y), g, spec)

    def piecewise(x, y):
        i = np.clip(np.floor((x - g.x_lo) / g.dx).astype(int), 0, g.nx - 1)
        j = np.clip(np.floor((y - g.y_lo) / g.dy).astype(int), 0, g.ny - 1)
        xc = g.x_lo + (i + 0.5) * g.dx
        yc = g.y_lo + (j + 0.5) * g.dy
        phi = spec.values((x - xc) / (0.5 * g.dx), (y - yc) / (0.5 * g.dy))
        return np.sum(u.coeffs[i, j] * phi, axis=-1)

    v = project(piecewise, g, spec)
    assert np.allclose(v.coeffs, u.coeffs, atol=1e-13)
    errs = error_norms(u, lambda x, y, t: piecewise(x, y), 0.0)
    assert max(errs.values()) < 1e-13


def test_error_norms_exact_polynomial():
    g = Grid1D(0.0, 1.0, 7)
    u = project(lambda x: 3 * x * x - x, g, BasisSpec(2, 1))
    errs = error_norms(u, lambda x, t: 3 * x * x - x, 0.0)
    assert max(errs.values()) <= 1e-13


def test_error_norms_relative_and_measure():
    g = Grid1D(0.0, 1.0, 4)
    u = DGField(g, BasisSpec(0, 1), np.full((4, 1), 2.0))
    errs = error_norms(u, lambda x, t: np.ones_like(x), 0.0)
    assert errs == pytest.approx({"L1": 1.0, "L2": 1.0, "Linf": 1.0})
    assert error_norms(u, lambda x, t: np.ones_like(x), 0.0, measure=0.25)["L1"] == pytest.approx(4.0)
    rel = error_norms(u, lambda x, t: 4.0 * np.ones_like(x), 0.0, relative=True)
    assert rel == pytest.approx({"L1": 0.5, "L2": 0.5, "Linf": 0.5})


def test_total_mass():
    g = Grid2D.square(0.0, 1.0, 9)
    one = project(lambda x, y: np.ones_like(x), g, BasisSpec(1))
    assert total_mass(one) == pytest.approx(1.0, abs=1e-14)
    s = project(np.sin, Grid1D(0.0, TWO_PI, 33), BasisSpec(2, 1))
    assert abs(total_mass(s)) < 1e-13


def test_rejects_nonfinite():
    g = Grid1D(0.0, 1.0, 2)
    with pytest.raises(InvalidInputError):
        project(lambda x: np.log(x - 0.5), g, BasisSpec(1, 1))
    with pytest.raises(InvalidInputError):
        DGField(g, BasisSpec(1, 1), np.array([[0.0, np.inf], [0.0, 0.0]]))


def test_export_csv_columns(tmp_path):
    g = Grid2D.square(0.0, 1.0, 10)
    u = project(lambda x, y: x + y, g, BasisSpec(1))
    path = tmp_path / "snap.csv"
    export_csv(u, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i,j,cell_center_x,cell_center_y,cell_average,coeff_0,coeff_1,coeff_2"
    assert len(lines) == 101
    assert all(len(line.split(",")) == 8 for line in lines)
    row = lines[1].split(",")
    assert float(row[4]) == float(row[5]) == u.coeffs[0, 0, 0]
