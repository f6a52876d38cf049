"""Quadrature kernels: meridian region rectangles, integrand dispatch and
per-cell tensor Gauss-Legendre sums with a two-level error estimate.

All volume integrals use the axisymmetric reduction dV = 2*pi*r dA(r,x3),
expressed per rectangle through smooth coordinate transforms:

  tcode 1  polar about the origin     (u,v) -> (rho, phi)
  tcode 2  polar about (0,0,1)
  tcode 3  slab strip                 x3 = v-line, r in [a0, min(a1, rmax)]
  tcode 4  upper outer region about (0,0,1), rho up to the |x|=3 circle
  tcode 5  outer annulus              (R, phibar) in [3,4] x [0,pi]

Integrand codes:
  0  neo-Hookean density of the map              frob^2 + H(|det|)
  1  squared difference |map - v|^2
  2  density difference  e(map) - e(v)
  10 Dirichlet part frob^2 only
  11 H part only
  90 monomial test integrand r^p1 * x3^p2 (quadrature oracle)
"""

import math

import numpy as np

from ._jit import njit
from . import _kcore as C
from . import _kapprox as A
from . import _kpatch as P

PI = math.pi

_gl6 = np.polynomial.legendre.leggauss(6)
GLQ_X = 0.5 * (_gl6[0] + 1.0)
GLQ_W = 0.5 * _gl6[1]

MAP_ID = 0
MAP_V = 1
MAP_U = 2
MAP_BD = 3


@njit
def rect_point_k(tcode, a0, a1, b0, b1, u, v):
    """Map rectangle coordinates (u,v) in [0,1]^2 to (r, x3, dV-weight)."""
    if tcode == 1 or tcode == 2:
        rho = a0 + u * (a1 - a0)
        phi = b0 + v * (b1 - b0)
        r = rho * math.sin(phi)
        x3 = rho * math.cos(phi)
        if tcode == 2:
            x3 += 1.0
        w = 2.0 * PI * rho * rho * math.sin(phi) * (a1 - a0) * (b1 - b0)
        return r, x3, w
    if tcode == 3:
        x3 = b0 + v * (b1 - b0)
        rmax = math.sqrt(9.0 - x3 * x3)
        if a1 < rmax:
            rmax = a1
        r = a0 + u * (rmax - a0)
        w = 2.0 * PI * r * (rmax - a0) * (b1 - b0)
        return r, x3, w
    if tcode == 4:
        phi = b0 + v * (b1 - b0)
        c = math.cos(phi)
        rhomax = -c + math.sqrt(c * c + 8.0)
        rho = a0 + u * (rhomax - a0)
        r = rho * math.sin(phi)
        x3 = 1.0 + rho * c
        w = 2.0 * PI * rho * rho * math.sin(phi) * (rhomax - a0) * (b1 - b0)
        return r, x3, w
    # tcode 5: annulus
    R = a0 + u * (a1 - a0)
    phib = b0 + v * (b1 - b0)
    r = R * math.sin(phib)
    x3 = R * math.cos(phib)
    w = 2.0 * PI * R * R * math.sin(phib) * (a1 - a0) * (b1 - b0)
    return r, x3, w


@njit
def H_k(t, hc, hal, hbe):
    return hc * (t ** (-hal) + t ** hbe)


@njit
def map_eval_k(imap, r, x3, eps, gamma, delta):
    if imap == MAP_ID:
        return r, x3
    if imap == MAP_V:
        return C.v_eval_k(r, x3)
    if imap == MAP_U:
        return A.u_eval_k(r, x3, eps, gamma)
    return P.bd_eval_k(r, x3, delta, eps, gamma)


@njit
def map_jac_k(imap, r, x3, eps, gamma, delta):
    if imap == MAP_ID:
        return r, x3, 1.0, 0.0, 0.0, 1.0, 1.0
    if imap == MAP_V:
        return C.v_jac_k(r, x3)
    if imap == MAP_U:
        return A.u_jac_k(r, x3, eps, gamma)
    return P.bd_jac_k(r, x3, delta, eps, gamma)


@njit
def map_frob_det_k(imap, r, x3, eps, gamma, delta):
    """(frob^2, det): entries for the Frobenius part, the cancellation-safe
    path for the determinant (the thin core shells are near rank-one)."""
    wr, w3, a, b, c, d, h = map_jac_k(imap, r, x3, eps, gamma, delta)
    fr, dt = C.frob2_det_k(a, b, c, d, h)
    if imap == MAP_U:
        dt = A.u_det_k(r, x3, eps, gamma)
    elif imap == MAP_BD:
        dt = P.bd_det_k(r, x3, delta, eps, gamma)
    return fr, dt


@njit
def integrand_k(icode, imap, r, x3, eps, gamma, delta, hc, hal, hbe, p1, p2):
    if icode == 0 or icode == 10 or icode == 11:
        fr, dt = map_frob_det_k(imap, r, x3, eps, gamma, delta)
        if dt < 0.0:
            dt = -dt
        if dt < 1e-300:
            dt = 1e-300
        if icode == 10:
            return fr
        if icode == 11:
            return H_k(dt, hc, hal, hbe)
        return fr + H_k(dt, hc, hal, hbe)
    if icode == 1:
        wr, w3 = map_eval_k(imap, r, x3, eps, gamma, delta)
        vr, v3 = C.v_eval_k(r, x3)
        return (wr - vr) * (wr - vr) + (w3 - v3) * (w3 - v3)
    if icode == 2:
        fr, dt = map_frob_det_k(imap, r, x3, eps, gamma, delta)
        if dt < 0.0:
            dt = -dt
        if dt < 1e-300:
            dt = 1e-300
        e1 = fr + H_k(dt, hc, hal, hbe)
        fr, dt = map_frob_det_k(MAP_V, r, x3, eps, gamma, delta)
        if dt < 0.0:
            dt = -dt
        if dt < 1e-300:
            dt = 1e-300
        return e1 - (fr + H_k(dt, hc, hal, hbe))
    # icode 90: monomial oracle
    return (r ** p1) * (x3 ** p2)


@njit
def _cell_gauss(tcode, a0, a1, b0, b1, u0, du, v0, dv,
                icode, imap, eps, gamma, delta, hc, hal, hbe, p1, p2):
    acc = 0.0
    for i in range(GLQ_X.shape[0]):
        u = u0 + du * GLQ_X[i]
        wu = GLQ_W[i]
        for j in range(GLQ_X.shape[0]):
            v = v0 + dv * GLQ_X[j]
            r, x3, w = rect_point_k(tcode, a0, a1, b0, b1, u, v)
            f = integrand_k(icode, imap, r, x3, eps, gamma, delta, hc, hal, hbe, p1, p2)
            acc += wu * GLQ_W[j] * f * w
    return acc * du * dv


@njit
def integrate_cells_k(cells, rects, icode, imap, eps, gamma, delta,
                      hc, hal, hbe, p1, p2):
    """Coarse and 2x2-refined estimates for every cell.

    cells: (n, 5) [rect_index, u0, du, v0, dv]; rects: (m, 5) transform rows.
    """
    n = cells.shape[0]
    out = np.empty((n, 2))
    for i in range(n):
        k = int(cells[i, 0])
        tcode = int(rects[k, 0])
        a0 = rects[k, 1]
        a1 = rects[k, 2]
        b0 = rects[k, 3]
        b1 = rects[k, 4]
        u0 = cells[i, 1]
        du = cells[i, 2]
        v0 = cells[i, 3]
        dv = cells[i, 4]
        coarse = _cell_gauss(tcode, a0, a1, b0, b1, u0, du, v0, dv,
                             icode, imap, eps, gamma, delta, hc, hal, hbe, p1, p2)
        fine = 0.0
        hdu = 0.5 * du
        hdv = 0.5 * dv
        for su in range(2):
            for sv in range(2):
                fine += _cell_gauss(tcode, a0, a1, b0, b1,
                                    u0 + su * hdu, hdu, v0 + sv * hdv, hdv,
                                    icode, imap, eps, gamma, delta, hc, hal, hbe, p1, p2)
        out[i, 0] = coarse
        out[i, 1] = fine
    return out


@njit
def sample_jacs_k(imap, pts, eps, gamma, delta):
    """Frobenius^2 and determinant at given meridian points (n,2) array."""
    n = pts.shape[0]
    out = np.empty((n, 2))
    for i in range(n):
        fr, dt = map_frob_det_k(imap, pts[i, 0], pts[i, 1], eps, gamma, delta)
        out[i, 0] = fr
        out[i, 1] = dt
    return out


@njit
def sample_eval_k(imap, pts, eps, gamma, delta):
    n = pts.shape[0]
    out = np.empty((n, 2))
    for i in range(n):
        wr, w3 = map_eval_k(imap, pts[i, 0], pts[i, 1], eps, gamma, delta)
        out[i, 0] = wr
        out[i, 1] = w3
    return out


@njit
def pair_ratios_k(imap, pts3a, pts3b, eps, gamma, delta):
    """Lipschitz ratios |F(x)-F(y)|_3D / |x-y|_3D for 3D point pairs given as
    (r, x3, theta) triples (axisymmetric rotation applied to the image)."""
    n = pts3a.shape[0]
    out = np.empty(n)
    for i in range(n):
        ra, za, ta = pts3a[i, 0], pts3a[i, 1], pts3a[i, 2]
        rb, zb, tb = pts3b[i, 0], pts3b[i, 1], pts3b[i, 2]
        war, wa3 = map_eval_k(imap, ra, za, eps, gamma, delta)
        wbr, wb3 = map_eval_k(imap, rb, zb, eps, gamma, delta)
        dx = ra * math.cos(ta) - rb * math.cos(tb)
        dy = ra * math.sin(ta) - rb * math.sin(tb)
        dz = za - zb
        dom = math.sqrt(dx * dx + dy * dy + dz * dz)
        dx = war * math.cos(ta) - wbr * math.cos(tb)
        dy = war * math.sin(ta) - wbr * math.sin(tb)
        dz = wa3 - wb3
        dim = math.sqrt(dx * dx + dy * dy + dz * dz)
        out[i] = dim / dom if dom > 0.0 else math.nan
    return out
