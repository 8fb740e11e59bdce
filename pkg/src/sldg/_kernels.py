"""Compiled geometry and quadrature kernels for the SLDG step.

Edges are stored as rows ``[xs, ys, xe, ye, X0, X1, X2, Y0, Y1, Y2]`` with
``x(xi) = X0 + X1 xi + X2 xi^2`` (same for y) on ``xi in [-1, 1]``; the
endpoint columns hold the exact vertex coordinates and are used verbatim at
``xi = +-1``.  Grid lines are treated as shifted an infinitesimal amount
toward the negative side, so a point on a line belongs to the cell on the
positive side and edges lying along a line never cross it.
"""

import math

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba; prefer OpenMP, then the built-in queue
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

EPS_DISC = 1e-14

# status codes written per cell
OK = 0
AREA_MISMATCH = 1
INVERTED_INTERVAL = 2


@njit(cache=True, error_model="numpy")
def snap_index(v, lo, h, eps):
    t = (v - lo) / h
    r = math.floor(t + 0.5)
    if abs(t - r) * h <= eps:
        return int(r)
    return int(math.floor(t))


@njit(cache=True, error_model="numpy")
def edge_point(E, xi):
    if xi == -1.0:
        return E[0], E[1]
    if xi == 1.0:
        return E[2], E[3]
    return (E[4] + xi * (E[5] + xi * E[6]),
            E[7] + xi * (E[8] + xi * E[9]))


@njit(cache=True, error_model="numpy")
def coord_range(c0, c1, c2, vs, ve):
    lo = min(vs, ve)
    hi = max(vs, ve)
    if c2 != 0.0:
        xv = -c1 / (2.0 * c2)
        if -1.0 < xv < 1.0:
            v = c0 + xv * (c1 + xv * c2)
            lo = min(lo, v)
            hi = max(hi, v)
    return lo, hi


@njit(cache=True, error_model="numpy")
def line_crossings(c0, c1, c2, vs, ve, line, eps, out):
    """Parameters where the edge coordinate ``c(xi)`` crosses ``line``.

    Crossings are the side changes of the predicate ``c >= line - eps``
    along the edge, sampled at the endpoints and between consecutive roots.
    Tangential (double) roots are dropped.  Returns the count written to
    ``out`` in increasing xi.
    """
    side_s = vs >= line - eps
    side_e = ve >= line - eps
    C = c0 - line
    nb = 1
    bp0 = -1.0
    bp1 = 0.0
    bp2 = 0.0
    if c2 == 0.0:
        if c1 != 0.0:
            r = -C / c1
            if -1.0 < r < 1.0:
                bp1 = r
                nb = 2
    else:
        D = c1 * c1 - 4.0 * c2 * C
        scale = c1 * c1 + abs(4.0 * c2 * C)
        if D > EPS_DISC * scale:
            sq = math.sqrt(D)
            q = -0.5 * (c1 + math.copysign(sq, c1))
            ra = q / c2
            rb = C / q
            r1 = min(ra, rb)
            r2 = max(ra, rb)
            if -1.0 < r1 < 1.0:
                bp1 = r1
                nb = 2
                if -1.0 < r2 < 1.0:
                    bp2 = r2
                    nb = 3
            elif -1.0 < r2 < 1.0:
                bp1 = r2
                nb = 2
    n = 0
    prev = side_s
    for i in range(nb):
        if i == 0:
            a = bp0
            b = bp1 if nb > 1 else 1.0
        elif i == 1:
            a = bp1
            b = bp2 if nb > 2 else 1.0
        else:
            a = bp2
            b = 1.0
        m = 0.5 * (a + b)
        side = C + m * (c1 + m * c2) >= -eps
        if side != prev:
            out[n] = a
            n += 1
            prev = side
    if side_e != prev:
        out[n] = 1.0
        n += 1
    return n


@njit(cache=True, error_model="numpy")
def cell_segments(E, rev, x_lo, y_lo, dx, dy, eps, want_horizontal):
    """Outer and inner segments of one upstream cell.

    Returns ``(outer, inner)``:

    - ``outer[q] = [edge, xi_from, xi_to, I, J]`` in traversal order, with
      unwrapped background-cell indices (I, J);
    - ``inner[q] = [x0, y0, x1, y1, I, J]``, each grid-line piece emitted
      once per adjacent background cell with that cell's orientation.
      Horizontal pieces (zero ``dy``) are only emitted if ``want_horizontal``.
    """
    # line ranges per edge
    lmin = np.empty((4, 2), dtype=np.int64)
    lmax = np.empty((4, 2), dtype=np.int64)
    cap = 0
    for e in range(4):
        lo, hi = coord_range(E[e, 4], E[e, 5], E[e, 6], E[e, 0], E[e, 2])
        lmin[e, 0] = int(math.ceil((lo - eps - x_lo) / dx))
        lmax[e, 0] = int(math.floor((hi + eps - x_lo) / dx))
        lo, hi = coord_range(E[e, 7], E[e, 8], E[e, 9], E[e, 1], E[e, 3])
        lmin[e, 1] = int(math.ceil((lo - eps - y_lo) / dy))
        lmax[e, 1] = int(math.floor((hi + eps - y_lo) / dy))
        cap += 2 * (max(lmax[e, 0] - lmin[e, 0] + 1, 0) + max(lmax[e, 1] - lmin[e, 1] + 1, 0))
    cap += 2

    # crossings: per-edge params, plus per-line coordinate lists for inner pieces
    exi = np.empty((4, cap))
    ekind = np.empty((4, cap), dtype=np.int64)
    enew = np.empty((4, cap), dtype=np.int64)
    ecount = np.zeros(4, dtype=np.int64)
    vline = np.empty(cap, dtype=np.int64)
    vcoord = np.empty(cap)
    nv = 0
    hline = np.empty(cap, dtype=np.int64)
    hcoord = np.empty(cap)
    nh = 0
    buf = np.empty(4)
    for e in range(4):
        for L in range(lmin[e, 0], lmax[e, 0] + 1):
            xl = x_lo + L * dx
            nc = line_crossings(E[e, 4], E[e, 5], E[e, 6], E[e, 0], E[e, 2], xl, eps, buf)
            side = E[e, 0] >= xl - eps
            for c in range(nc):
                xi = buf[c]
                side = not side
                exi[e, ecount[e]] = xi
                ekind[e, ecount[e]] = 0
                enew[e, ecount[e]] = L if side else L - 1
                ecount[e] += 1
                px, py = edge_point(E[e], xi)
                vline[nv] = L
                vcoord[nv] = py
                nv += 1
        for M in range(lmin[e, 1], lmax[e, 1] + 1):
            yl = y_lo + M * dy
            nc = line_crossings(E[e, 7], E[e, 8], E[e, 9], E[e, 1], E[e, 3], yl, eps, buf)
            side = E[e, 1] >= yl - eps
            for c in range(nc):
                xi = buf[c]
                side = not side
                exi[e, ecount[e]] = xi
                ekind[e, ecount[e]] = 1
                enew[e, ecount[e]] = M if side else M - 1
                ecount[e] += 1
                px, py = edge_point(E[e], xi)
                hline[nh] = M
                hcoord[nh] = px
                nh += 1

    # outer pieces: the owning cell starts at the snapped start vertex and
    # changes at each crossing, so ownership always agrees with the crossings
    nout_cap = 4 + int(ecount.sum())
    outer = np.empty((nout_cap, 5))
    no = 0
    bps = np.empty(cap + 2)
    pI = np.empty(cap + 1, dtype=np.int64)
    pJ = np.empty(cap + 1, dtype=np.int64)
    for e in range(4):
        nc = ecount[e]
        order = np.argsort(exi[e, :nc], kind="mergesort")
        I = snap_index(E[e, 0], x_lo, dx, eps)
        J = snap_index(E[e, 1], y_lo, dy, eps)
        bps[0] = -1.0
        for c in range(nc):
            pI[c] = I
            pJ[c] = J
            q = order[c]
            bps[c + 1] = exi[e, q]
            if ekind[e, q] == 0:
                I = enew[e, q]
            else:
                J = enew[e, q]
        pI[nc] = I
        pJ[nc] = J
        bps[nc + 1] = 1.0
        npieces = nc + 1
        for s in range(npieces):
            idx = npieces - 1 - s if rev[e] else s
            a = bps[idx]
            b = bps[idx + 1]
            if b <= a:
                continue
            outer[no, 0] = e
            if rev[e]:
                outer[no, 1] = b
                outer[no, 2] = a
            else:
                outer[no, 1] = a
                outer[no, 2] = b
            outer[no, 3] = pI[idx]
            outer[no, 4] = pJ[idx]
            no += 1

    # inner pieces on vertical lines: pair sorted crossings, split at horizontal lines
    ncap_in = 8
    if nv > 0:
        ylo = vcoord[:nv].min()
        yhi = vcoord[:nv].max()
        ncap_in += 2 * nv * (int((yhi - ylo) / dy) + 3)
    if want_horizontal and nh > 0:
        xlo_ = hcoord[:nh].min()
        xhi_ = hcoord[:nh].max()
        ncap_in += 2 * nh * (int((xhi_ - xlo_) / dx) + 3)
    inner = np.empty((ncap_in, 6))
    ni = 0
    if nv > 0:
        Lmin = vline[:nv].min()
        Lmax = vline[:nv].max()
        ys = np.empty(nv)
        for L in range(Lmin, Lmax + 1):
            cnt = 0
            for c in range(nv):
                if vline[c] == L:
                    ys[cnt] = vcoord[c]
                    cnt += 1
            if cnt < 2:
                continue
            yy = np.sort(ys[:cnt])
            xl = x_lo + L * dx
            for p in range(0, cnt - 1, 2):
                ya = yy[p]
                yb = yy[p + 1]
                if yb <= ya:
                    continue
                m0 = int(math.floor((ya + eps - y_lo) / dy)) + 1
                y0 = ya
                M = m0
                while True:
                    ym = y_lo + M * dy
                    if ym < yb - eps:
                        y1 = ym
                    else:
                        y1 = yb
                    if y1 > y0:
                        row = snap_index(0.5 * (y0 + y1), y_lo, dy, eps)
                        inner[ni, 0] = xl
                        inner[ni, 1] = y0
                        inner[ni, 2] = xl
                        inner[ni, 3] = y1
                        inner[ni, 4] = L - 1
                        inner[ni, 5] = row
                        ni += 1
                        inner[ni, 0] = xl
                        inner[ni, 1] = y1
                        inner[ni, 2] = xl
                        inner[ni, 3] = y0
                        inner[ni, 4] = L
                        inner[ni, 5] = row
                        ni += 1
                    if y1 >= yb:
                        break
                    y0 = y1
                    M += 1
    if want_horizontal and nh > 0:
        Mmin = hline[:nh].min()
        Mmax = hline[:nh].max()
        xs = np.empty(nh)
        for M in range(Mmin, Mmax + 1):
            cnt = 0
            for c in range(nh):
                if hline[c] == M:
                    xs[cnt] = hcoord[c]
                    cnt += 1
            if cnt < 2:
                continue
            xx = np.sort(xs[:cnt])
            yl = y_lo + M * dy
            for p in range(0, cnt - 1, 2):
                xa = xx[p]
                xb = xx[p + 1]
                if xb <= xa:
                    continue
                L = int(math.floor((xa + eps - x_lo) / dx)) + 1
                x0 = xa
                while True:
                    xm = x_lo + L * dx
                    if xm < xb - eps:
                        x1 = xm
                    else:
                        x1 = xb
                    if x1 > x0:
                        col = snap_index(0.5 * (x0 + x1), x_lo, dx, eps)
                        # region below traverses its top side leftward
                        inner[ni, 0] = x1
                        inner[ni, 1] = yl
                        inner[ni, 2] = x0
                        inner[ni, 3] = yl
                        inner[ni, 4] = col
                        inner[ni, 5] = M - 1
                        ni += 1
                        inner[ni, 0] = x0
                        inner[ni, 1] = yl
                        inner[ni, 2] = x1
                        inner[ni, 3] = yl
                        inner[ni, 4] = col
                        inner[ni, 5] = M
                        ni += 1
                    if x1 >= xb:
                        break
                    x0 = x1
                    L += 1
    return outer[:no], inner[:ni]


# ---------------------------------------------------------------------------
# integration


@njit(cache=True, error_model="numpy")
def legendre_row(x, k, out):
    out[0] = 1.0
    if k >= 1:
        out[1] = math.sqrt(3.0) * x
    if k >= 2:
        out[2] = math.sqrt(5.0) * 0.5 * (3.0 * x * x - 1.0)
    if k >= 3:
        out[3] = math.sqrt(7.0) * 0.5 * (5.0 * x * x * x - 3.0 * x)


@njit(cache=True, error_model="numpy")
def power_row(x, k, out):
    out[0] = 1.0
    for a in range(1, k + 1):
        out[a] = out[a - 1] * x


@njit(cache=True, error_model="numpy")
def accumulate_moments(x, y, wt, xc, yc, hx, hy, ucoef, pcx, pcy, ph, expo, k,
                       gin_x, gin_w, M, lx, ly, px, py, cu, N):
    """M[p] += wt * int_{xc}^{x} u(s, y) m_p(s, y) ds for every monomial m_p.

    The upstream test functions are fixed linear combinations of the m_p, so
    their moments follow from M after all segments are summed.
    """
    dim = expo.shape[0]
    legendre_row((y - yc) / hy, k, ly)
    power_row((y - pcy) / ph, k, py)
    # u(s, y) = sum_a cu[a] L_a((s - xc) / hx) at this y
    for a in range(k + 1):
        cu[a] = 0.0
        N[a] = 0.0
    for p in range(dim):
        cu[expo[p, 0]] += ucoef[p] * ly[expo[p, 1]]
    half = 0.5 * (x - xc)
    for g in range(gin_x.shape[0]):
        s = xc + half * (1.0 + gin_x[g])
        legendre_row((s - xc) / hx, k, lx)
        power_row((s - pcx) / ph, k, px)
        u = 0.0
        for a in range(k + 1):
            u += cu[a] * lx[a]
        u *= gin_w[g]
        for a in range(k + 1):
            N[a] += u * px[a]
    f = wt * half
    for p in range(dim):
        M[p] += f * N[expo[p, 0]] * py[expo[p, 1]]


@njit(cache=True, error_model="numpy")
def integrate_cell(E, outer, inner, coeffs, psi, pcx, pcy, ph, expo, k,
                   x_lo, y_lo, dx, dy, gs_x, gs_w, gc_x, gc_w, gin_x, gin_w, rhs):
    """Write the weak-form right-hand side of one upstream cell into ``rhs``.

    Returns the area enclosed by the segments (integrand 1), used as a
    consistency check against the edge-only area.
    """
    nx = coeffs.shape[0]
    ny = coeffs.shape[1]
    dim = expo.shape[0]
    hx = 0.5 * dx
    hy = 0.5 * dy
    M = np.zeros(dim)
    lx = np.empty(k + 1)
    ly = np.empty(k + 1)
    px = np.empty(k + 1)
    py = np.empty(k + 1)
    cu = np.empty(k + 1)
    N = np.empty(k + 1)
    area = 0.0
    for q in range(outer.shape[0]):
        e = int(outer[q, 0])
        a = outer[q, 1]
        b = outer[q, 2]
        I = int(outer[q, 3])
        J = int(outer[q, 4])
        xc = x_lo + (I + 0.5) * dx
        yc = y_lo + (J + 0.5) * dy
        ucoef = coeffs[I % nx, J % ny]
        if E[e, 6] == 0.0 and E[e, 9] == 0.0:
            gx = gs_x
            gw = gs_w
        else:
            gx = gc_x
            gw = gc_w
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        for g in range(gx.shape[0]):
            xi = mid + half * gx[g]
            yp = E[e, 8] + 2.0 * xi * E[e, 9]
            wt = gw[g] * half * yp
            if wt == 0.0:
                continue
            x = E[e, 4] + xi * (E[e, 5] + xi * E[e, 6])
            y = E[e, 7] + xi * (E[e, 8] + xi * E[e, 9])
            accumulate_moments(x, y, wt, xc, yc, hx, hy, ucoef, pcx, pcy, ph, expo, k,
                               gin_x, gin_w, M, lx, ly, px, py, cu, N)
            area += wt * (x - xc)
    for q in range(inner.shape[0]):
        y0 = inner[q, 1]
        y1 = inner[q, 3]
        if y1 == y0:
            continue
        x = inner[q, 0]
        I = int(inner[q, 4])
        J = int(inner[q, 5])
        xc = x_lo + (I + 0.5) * dx
        yc = y_lo + (J + 0.5) * dy
        ucoef = coeffs[I % nx, J % ny]
        mid = 0.5 * (y0 + y1)
        half = 0.5 * (y1 - y0)
        for g in range(gs_x.shape[0]):
            y = mid + half * gs_x[g]
            wt = gs_w[g] * half
            accumulate_moments(x, y, wt, xc, yc, hx, hy, ucoef, pcx, pcy, ph, expo, k,
                               gin_x, gin_w, M, lx, ly, px, py, cu, N)
            area += wt * (x - xc)
    for m in range(dim):
        acc = 0.0
        for p in range(dim):
            acc += psi[p, m] * M[p]
        rhs[m] = acc
    return area


@njit(cache=True, error_model="numpy")
def gather_edges(H, V, i, j, E):
    # CCW: bottom, right, top (stored left->right), left (stored bottom->top)
    E[0, :] = H[i, j]
    E[1, :] = V[i + 1, j]
    E[2, :] = H[i, j + 1]
    E[3, :] = V[i, j]


@njit(cache=True, parallel=True, error_model="numpy")
def assemble_all(H, V, coeffs, psi, pcen, ph, expo, k, x_lo, y_lo, dx, dy, eps,
                 gs_x, gs_w, gc_x, gc_w, gin_x, gin_w, area_ref, area_tol):
    """Right-hand sides for every Eulerian cell.

    ``H`` (nx, ny+1, 10) and ``V`` (nx+1, ny, 10) hold the shared upstream
    edges in canonical orientation; ``psi`` (nx, ny, nmono, dim) the
    reconstructed test functions in frames centred at ``pcen`` with scale ``ph``.
    """
    nx = coeffs.shape[0]
    ny = coeffs.shape[1]
    dim = expo.shape[0]
    rhs = np.zeros((nx, ny, dim))
    piece_area = np.zeros((nx, ny))
    status = np.zeros((nx, ny), dtype=np.int64)
    rev = np.array([False, False, True, True])
    for c in prange(nx * ny):
        i = c // ny
        j = c % ny
        E = np.empty((4, 10))
        gather_edges(H, V, i, j, E)
        outer, inner = cell_segments(E, rev, x_lo, y_lo, dx, dy, eps, False)
        r = np.empty(dim)
        a = integrate_cell(E, outer, inner, coeffs, psi[i, j], pcen[i, j, 0], pcen[i, j, 1],
                           ph[i, j], expo, k, x_lo, y_lo, dx, dy, gs_x, gs_w, gc_x, gc_w,
                           gin_x, gin_w, r)
        for m in range(dim):
            rhs[i, j, m] = r[m]
        piece_area[i, j] = a
        if abs(a - area_ref[i, j]) > area_tol:
            status[i, j] = AREA_MISMATCH
    return rhs, piece_area, status


# ---------------------------------------------------------------------------
# 1D


@njit(cache=True, error_model="numpy")
def assemble_1d(feet, psi, pc, ph, coeffs, x_lo, dx, k, gx, gw, eps):
    """Right-hand sides of the 1D update.

    ``feet`` (n+1,) are the upstream cell interfaces; ``psi`` (n, k+1, k+1)
    holds monomial coefficients of each test function about ``pc`` scaled by ``ph``.
    """
    n = coeffs.shape[0]
    rhs = np.zeros((n, k + 1))
    status = np.zeros(n, dtype=np.int64)
    lv = np.empty(k + 1)
    pv = np.empty(k + 1)
    hx = 0.5 * dx
    for j in range(n):
        a = feet[j]
        b = feet[j + 1]
        if not b > a:
            status[j] = INVERTED_INTERVAL
            continue
        L = int(math.floor((a + eps - x_lo) / dx)) + 1
        p0 = a
        while True:
            xl = x_lo + L * dx
            if xl < b - eps:
                p1 = xl
            else:
                p1 = b
            if p1 > p0:
                I = snap_index(0.5 * (p0 + p1), x_lo, dx, eps)
                xc = x_lo + (I + 0.5) * dx
                uc = coeffs[I % n]
                mid = 0.5 * (p0 + p1)
                half = 0.5 * (p1 - p0)
                for g in range(gx.shape[0]):
                    x = mid + half * gx[g]
                    legendre_row((x - xc) / hx, k, lv)
                    power_row((x - pc[j]) / ph[j], k, pv)
                    u = 0.0
                    for p in range(k + 1):
                        u += uc[p] * lv[p]
                    wu = gw[g] * half * u
                    for m in range(k + 1):
                        acc = 0.0
                        for p in range(k + 1):
                            acc += psi[j, p, m] * pv[p]
                        rhs[j, m] += wu * acc
            if p1 >= b:
                break
            p0 = p1
            L += 1
    return rhs, status


# ---------------------------------------------------------------------------
# test-function fit


@njit(cache=True, parallel=True, error_model="numpy")
def fit_test_functions(feet, B, expo):
    """Least-squares images of the basis functions through traced points.

    ``feet`` (nx, ny, npts, 2), ``B`` (npts, dim) basis values at the
    Eulerian points.  Per cell, the monomials are taken in a frame centred at
    the feet centroid and scaled by half the feet's extent; the system is
    solved by Householder QR.  Returns ``(center, scale, coef, rdiag_ratio)``
    where ``rdiag_ratio`` is min|R_ii| / max|R_ii| (0 flags rank deficiency).
    """
    nx = feet.shape[0]
    ny = feet.shape[1]
    npts = feet.shape[2]
    dim = expo.shape[0]
    cen = np.empty((nx, ny, 2))
    scale = np.empty((nx, ny))
    coef = np.empty((nx, ny, dim, dim))
    ratio = np.empty((nx, ny))
    for c in prange(nx * ny):
        i = c // ny
        j = c % ny
        cx = 0.0
        cy = 0.0
        for q in range(npts):
            cx += feet[i, j, q, 0]
            cy += feet[i, j, q, 1]
        cx /= npts
        cy /= npts
        x0 = feet[i, j, 0, 0]
        x1 = x0
        y0 = feet[i, j, 0, 1]
        y1 = y0
        for q in range(npts):
            x0 = min(x0, feet[i, j, q, 0])
            x1 = max(x1, feet[i, j, q, 0])
            y0 = min(y0, feet[i, j, q, 1])
            y1 = max(y1, feet[i, j, q, 1])
        h = 0.5 * max(x1 - x0, y1 - y0)
        cen[i, j, 0] = cx
        cen[i, j, 1] = cy
        scale[i, j] = h
        if not h > 0.0:
            ratio[i, j] = 0.0
            coef[i, j] = 0.0
            continue
        A = np.empty((npts, dim))
        R = np.empty((npts, dim))
        for q in range(npts):
            X = (feet[i, j, q, 0] - cx) / h
            Y = (feet[i, j, q, 1] - cy) / h
            for p in range(dim):
                A[q, p] = X ** expo[p, 0] * Y ** expo[p, 1]
            for m in range(dim):
                R[q, m] = B[q, m]
        # Householder QR of A applied to the right-hand sides R
        v = np.empty(npts)
        for col in range(dim):
            nrm = 0.0
            for q in range(col, npts):
                nrm += A[q, col] * A[q, col]
            nrm = math.sqrt(nrm)
            if nrm == 0.0:
                continue
            alpha = -nrm if A[col, col] >= 0.0 else nrm
            vv = 0.0
            for q in range(col, npts):
                v[q] = A[q, col]
            v[col] -= alpha
            for q in range(col, npts):
                vv += v[q] * v[q]
            if vv == 0.0:
                continue
            for p in range(col, dim):
                d = 0.0
                for q in range(col, npts):
                    d += v[q] * A[q, p]
                d *= 2.0 / vv
                for q in range(col, npts):
                    A[q, p] -= d * v[q]
            for m in range(dim):
                d = 0.0
                for q in range(col, npts):
                    d += v[q] * R[q, m]
                d *= 2.0 / vv
                for q in range(col, npts):
                    R[q, m] -= d * v[q]
        dmin = abs(A[0, 0])
        dmax = dmin
        for p in range(1, dim):
            dmin = min(dmin, abs(A[p, p]))
            dmax = max(dmax, abs(A[p, p]))
        ratio[i, j] = dmin / dmax if dmax > 0.0 else 0.0
        if ratio[i, j] == 0.0:
            coef[i, j] = 0.0
            continue
        for m in range(dim):
            for p in range(dim - 1, -1, -1):
                s = R[p, m]
                for r in range(p + 1, dim):
                    s -= A[p, r] * coef[i, j, r, m]
                coef[i, j, p, m] = s / A[p, p]
    return cen, scale, coef, ratio
