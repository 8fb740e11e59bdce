"""Bound-preserving filter and a TVB minmod limiter.

The filter rescales each cell's polynomial toward its average,
``u <- avg + theta (u - avg)`` with ``theta = min(|avg / (m - avg)|, 1)``,
where ``m`` is the polynomial's minimum over a candidate point set that
contains the true minimum of the cell polynomial.  The minmod limiter is a
simple stand-in for a WENO limiter on discontinuous data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, InvalidInputError
from .field import DGField
from .grid import Grid1D

NEG_AVG_TOL = 1e-13
SQ3 = math.sqrt(3.0)
SQ5 = math.sqrt(5.0)
SQ7 = math.sqrt(7.0)


def _legendre_to_monomial_1d(c):
    """Coefficients of t^0..t^k for u(t) = sum_n c_n sqrt(2n+1) P_n(t)."""
    k = c.shape[-1] - 1
    m = np.zeros_like(c)
    m[..., 0] = c[..., 0]
    if k >= 1:
        m[..., 1] = SQ3 * c[..., 1]
    if k >= 2:
        m[..., 2] += 1.5 * SQ5 * c[..., 2]
        m[..., 0] -= 0.5 * SQ5 * c[..., 2]
    if k >= 3:
        m[..., 3] += 2.5 * SQ7 * c[..., 3]
        m[..., 1] -= 1.5 * SQ7 * c[..., 3]
    return m


def _polyval(m, t):
    out = np.zeros(np.broadcast(m[..., 0], t).shape)
    for a in range(m.shape[-1] - 1, -1, -1):
        out = out * t + m[..., a]
    return out


def _monomial_2d(c, k):
    """Monomial coefficients (c00, c10, c01, c20, c11, c02) in reference coordinates."""
    out = np.zeros(c.shape[:-1] + (6,))
    out[..., 0] = c[..., 0]
    if k >= 1:
        out[..., 1] = SQ3 * c[..., 1]
        out[..., 2] = SQ3 * c[..., 2]
    if k >= 2:
        out[..., 3] = 1.5 * SQ5 * c[..., 3]
        out[..., 4] = 3.0 * c[..., 4]
        out[..., 5] = 1.5 * SQ5 * c[..., 5]
        out[..., 0] -= 0.5 * SQ5 * (c[..., 3] + c[..., 5])
    return out


def _eval_2d(m, xi, eta):
    return (m[..., 0] + m[..., 1] * xi + m[..., 2] * eta + m[..., 3] * xi * xi
            + m[..., 4] * xi * eta + m[..., 5] * eta * eta)


def candidate_minimum(u: DGField) -> np.ndarray:
    """Per-cell minimum of the cell polynomial over its candidate extremum set.

    1D: endpoints plus interior critical points.  2D: corners, the extremum of
    the restriction to each edge, and the interior stationary point (each
    included only if it lies inside the cell).  For k <= 2 in 2D and k <= 3 in
    1D this is the exact minimum over the cell.
    """
    k = u.basis.degree
    if k == 0:
        return u.coeffs[..., 0].copy()
    if isinstance(u.grid, Grid1D):
        m = _legendre_to_monomial_1d(u.coeffs)
        best = np.minimum(_polyval(m, -1.0), _polyval(m, 1.0))
        if k >= 2:
            # roots of u'(t) = m1 + 2 m2 t + 3 m3 t^2
            d = np.zeros(m.shape[:-1] + (3,))
            d[..., 0] = m[..., 1]
            d[..., 1] = 2.0 * m[..., 2]
            if k >= 3:
                d[..., 2] = 3.0 * m[..., 3]
            for t in _quadratic_roots(d[..., 2], d[..., 1], d[..., 0]):
                inside = np.isfinite(t) & (np.abs(t) < 1.0)
                val = _polyval(m, np.where(inside, t, 0.0))
                best = np.where(inside, np.minimum(best, val), best)
        return best
    m = _monomial_2d(u.coeffs, k)
    best = np.full(m.shape[:-1], np.inf)
    for xi in (-1.0, 1.0):
        for eta in (-1.0, 1.0):
            best = np.minimum(best, _eval_2d(m, xi, eta))
    if k >= 2:
        for s in (-1.0, 1.0):
            # edge xi = s: quadratic in eta with leading c02 and slope c01 + c11 s
            a, b = m[..., 5], m[..., 2] + m[..., 4] * s
            t = _vertex(a, b)
            ok = np.isfinite(t)
            best = np.where(ok, np.minimum(best, _eval_2d(m, s, np.where(ok, t, 0.0))), best)
            # edge eta = s
            a, b = m[..., 3], m[..., 1] + m[..., 4] * s
            t = _vertex(a, b)
            ok = np.isfinite(t)
            best = np.where(ok, np.minimum(best, _eval_2d(m, np.where(ok, t, 0.0), s)), best)
        # interior stationary point of the full quadratic
        A, B, C = 2.0 * m[..., 3], m[..., 4], 2.0 * m[..., 5]
        det = A * C - B * B
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xs = (-m[..., 1] * C + m[..., 2] * B) / det
            ys = (-m[..., 2] * A + m[..., 1] * B) / det
        ok = (det != 0.0) & np.isfinite(xs) & np.isfinite(ys) & (np.abs(xs) < 1.0) & (np.abs(ys) < 1.0)
        val = _eval_2d(m, np.where(ok, xs, 0.0), np.where(ok, ys, 0.0))
        best = np.where(ok, np.minimum(best, val), best)
    return best


def _vertex(a, b):
    """Vertex -b / (2a) of a quadratic when it lies strictly inside (-1, 1), else nan."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = -b / (2.0 * a)
    return np.where((a != 0.0) & (np.abs(t) < 1.0), t, np.nan)


def _quadratic_roots(a, b, c):
    """Real roots of a t^2 + b t + c (nan where absent); handles the linear case."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = b * b - 4.0 * a * c
        sq = np.sqrt(np.where(disc >= 0.0, disc, np.nan))
        q = -0.5 * (b + np.copysign(sq, b))
        r1 = np.where(a != 0.0, q / a, -c / b)
        r2 = np.where(a != 0.0, c / q, np.nan)
    return r1, r2


@dataclass(frozen=True)
class FilterReport:
    cells_modified: int
    min_before: float
    min_after: float
    max_theta_deviation: float


def bp_filter(u: DGField) -> tuple[DGField, FilterReport]:
    """Scale each cell toward its average so the cell minimum is nonnegative."""
    avg = u.coeffs[..., 0]
    if np.any(avg < -NEG_AVG_TOL):
        bad = np.argwhere(avg < -NEG_AVG_TOL)[:5].tolist()
        raise ContractViolation(
            f"negative cell average {float(avg.min()):.3e} before the filter (cells {bad})")
    mprime = candidate_minimum(u)
    hit = mprime < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(hit, np.minimum(np.abs(avg / (mprime - avg)), 1.0), 1.0)
    coeffs = u.coeffs.copy()
    coeffs[..., 1:] *= theta[..., None]
    v = u.with_coeffs(coeffs)
    modified = int(np.count_nonzero(theta < 1.0))
    report = FilterReport(modified, float(mprime.min()),
                          float(candidate_minimum(v).min()) if modified else float(mprime.min()),
                          float(np.max(1.0 - theta)))
    return v, report


def _minmod(a, b, c):
    s = np.sign(a)
    same = (np.sign(b) == s) & (np.sign(c) == s)
    return np.where(same, s * np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c))), 0.0)


def _limit_direction(avg, c1, c2, M, h, axis):
    """Limited slope and change mask along one axis.

    ``c1``/``c2`` are the linear and quadratic modes in that direction (c2 is
    None for k = 1).  The edge deviations ``sqrt3 c1 +- sqrt5 c2`` are compared
    with the neighbour differences; a cell whose deviations fail the TVB test
    is marked and its slope replaced by the minmod of the linear mode and
    the two differences.
    """
    fwd = np.roll(avg, -1, axis) - avg
    bwd = avg - np.roll(avg, 1, axis)
    s = SQ3 * c1
    q = SQ5 * c2 if c2 is not None else 0.0
    dev_r, dev_l = s + q, s - q
    thr = M * h * h

    def ok(d):
        return (np.abs(d) <= thr) | (_minmod(d, fwd, bwd) == d)

    changed = ~(ok(dev_r) & ok(dev_l))
    return np.where(changed, _minmod(s, fwd, bwd), s), changed


def minmod_limiter(u: DGField, M: float = 1.0) -> DGField:
    """TVB minmod limiting against neighbour averages, direction by direction.

    A cell passes when both edge deviations from its average are at most
    ``M h^2`` or already equal their minmod with the forward and backward
    average differences.  Failing cells keep their average, get the minmod
    slope and lose their higher modes.
    """
    k = u.basis.degree
    if k < 1:
        return u
    c = u.coeffs
    avg = c[..., 0]
    out = c.copy()
    if isinstance(u.grid, Grid1D):
        s, changed = _limit_direction(avg, c[..., 1], c[..., 2] if k >= 2 else None,
                                      M, u.grid.dx, 0)
        out[changed, 1] = s[changed] / SQ3
        out[changed, 2:] = 0.0
        return u.with_coeffs(out)
    g = u.grid
    sx, cx = _limit_direction(avg, c[..., 1], c[..., 3] if k >= 2 else None, M, g.dx, 0)
    sy, cy = _limit_direction(avg, c[..., 2], c[..., 5] if k >= 2 else None, M, g.dy, 1)
    changed = cx | cy
    out[changed, 1] = sx[changed] / SQ3
    out[changed, 2] = sy[changed] / SQ3
    out[changed, 3:] = 0.0
    return u.with_coeffs(out)


def apply_limiters(u: DGField, limiter: str, tvb_m: float = 1.0):
    """Apply ``none``, ``bp``, ``minmod`` or ``minmod+bp`` (minmod first)."""
    if limiter not in LIMITERS:
        raise InvalidInputError(f"unknown limiter {limiter!r}; choose from {', '.join(LIMITERS)}")
    report = None
    if "minmod" in limiter:
        u = minmod_limiter(u, tvb_m)
    if "bp" in limiter:
        u, report = bp_filter(u)
    return u, report


LIMITERS = ("none", "bp", "minmod", "minmod+bp")
