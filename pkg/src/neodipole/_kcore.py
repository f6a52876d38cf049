"""Scalar kernels for the singular dipole deformation.

Everything here works on meridian coordinates (r, x3), r >= 0, with the map
axisymmetric about the x3 axis.  Functions are numba-njit compiled when
available (see _jit), so they only use scalar math and tuples.

Contents:
  - distance to the bad set U (lower half-ball + axis segment + top disk)
  - the auxiliary planar chart g: slab {0<=x3<=1} -> (s, z), realising the
    anchor mesh exactly (A,B,C,D -> z = 0,1,2,3 affine, s = dist on the
    level-strip dist <= 1/3, interface values s = r-1 at x3 in {0,1})
  - region classification of B(0,4) and the piecewise closed forms of the
    dipole map v, with analytic planar Jacobians per region
  - the radial-angular blend that extends v to the annulus 3 <= |x| <= 4
    with identity data on the outer sphere.
"""

import math

from ._jit import njit

PI = math.pi
SQ2 = math.sqrt(2.0)

# region codes
R_A = 0
R_B = 1
R_D = 2
R_E = 3
R_F = 4
R_OUTER = 5
R_OUTSIDE = -1

# slope of the angular reparametrisation at u=1 (see _g_H); the value at u=0
# is pinned to kappa so that det Dg = 12/pi on the interfaces x3 in {0,1}.
H_SLOPE1 = 0.75


# ---------------------------------------------------------------------------
# distance to U
# ---------------------------------------------------------------------------

@njit
def dist_to_U_k(r, x3):
    """Euclidean distance to U = {|x|<=1, x3<=0} u segment u top disk."""
    # closed lower half ball
    if x3 <= 0.0:
        d_hb = math.hypot(r, x3) - 1.0
        if d_hb < 0.0:
            d_hb = 0.0
    else:
        if r <= 1.0:
            d_hb = x3
        else:
            d_hb = math.hypot(r - 1.0, x3)
    # closed axis segment {r=0, 0<=x3<=1}
    t = x3
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    d_seg = math.hypot(r, x3 - t)
    # closed top disk {x3=1, r<=1}
    if r <= 1.0:
        d_disk = abs(x3 - 1.0)
    else:
        d_disk = math.hypot(r - 1.0, x3 - 1.0)
    d = d_hb
    if d_seg < d:
        d = d_seg
    if d_disk < d:
        d = d_disk
    return d


@njit
def dist_grad_k(r, x3):
    """A.e. gradient of dist_to_U in meridian coordinates (0,0 inside U)."""
    # recompute the three branch distances, pick the argmin branch
    if x3 <= 0.0:
        rho = math.hypot(r, x3)
        d_hb = rho - 1.0
        if d_hb < 0.0:
            return 0.0, 0.0
        g_hb = (r / rho, x3 / rho)
    else:
        if r <= 1.0:
            d_hb = x3
            g_hb = (0.0, 1.0)
        else:
            d_hb = math.hypot(r - 1.0, x3)
            g_hb = ((r - 1.0) / d_hb, x3 / d_hb)
    t = x3
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    d_seg = math.hypot(r, x3 - t)
    if d_seg <= 0.0:
        return 0.0, 0.0
    g_seg = (r / d_seg, (x3 - t) / d_seg)
    if r <= 1.0:
        d_disk = abs(x3 - 1.0)
        g_disk = (0.0, 1.0 if x3 >= 1.0 else -1.0)
    else:
        d_disk = math.hypot(r - 1.0, x3 - 1.0)
        g_disk = ((r - 1.0) / d_disk, (x3 - 1.0) / d_disk)
    if d_hb <= d_seg and d_hb <= d_disk:
        return g_hb
    if d_seg <= d_disk:
        return g_seg
    return g_disk


# ---------------------------------------------------------------------------
# the auxiliary planar chart g on the slab
# ---------------------------------------------------------------------------

@njit
def _g_Zarc(tau):
    if tau <= 1.0 / 3.0:
        return tau
    if tau <= 0.5:
        return 7.0 * tau - 2.0
    return 1.5


@njit
def _g_Zarc_p(tau):
    if tau <= 1.0 / 3.0:
        return 1.0
    if tau <= 0.5:
        return 7.0
    return 0.0


@njit
def _g_sigend(tau):
    if tau <= 0.5:
        return 0.5 * PI
    return math.asin(0.5 / tau)


@njit
def _g_sigend_p(tau):
    if tau <= 0.5:
        return 0.0
    return -1.0 / (tau * math.sqrt(4.0 * tau * tau - 1.0))


@njit
def _g_kappa(tau):
    # 12 sig_end tau / (pi Zarc); equals 6 on tau <= 1/3
    if tau <= 1.0 / 3.0:
        return 6.0
    if tau <= 0.5:
        return 6.0 * tau / (7.0 * tau - 2.0)
    return (8.0 / PI) * tau * math.asin(0.5 / tau)


@njit
def _g_kappa_p(tau):
    if tau <= 1.0 / 3.0:
        return 0.0
    if tau <= 0.5:
        d = 7.0 * tau - 2.0
        return -12.0 / (d * d)
    return (8.0 / PI) * (math.asin(0.5 / tau) - 1.0 / math.sqrt(4.0 * tau * tau - 1.0))


@njit
def _g_H(u, kappa):
    """Monotone angular profile, H(0)=0, H(1)=1, H'(0)=kappa, H'(1)=H_SLOPE1."""
    u0 = 0.25 / (kappa - H_SLOPE1)
    if u <= u0:
        return kappa * u
    return 1.0 - H_SLOPE1 * (1.0 - u)


@njit
def _g_H_du(u, kappa):
    u0 = 0.25 / (kappa - H_SLOPE1)
    if u <= u0:
        return kappa
    return H_SLOPE1


@njit
def _g_H_dk(u, kappa):
    u0 = 0.25 / (kappa - H_SLOPE1)
    if u <= u0:
        return u
    return 0.0


@njit
def g_map_k(r, x3):
    """Planar chart (r, x3) -> (s, z) on the slab 0<=x3<=1, r^2+x3^2<=9.

    Returns (s, z, piece) where piece identifies the analytic branch:
      1,2,3 blocks; 4 lower / 5 upper affine triangle pair of the middle
      square; 6 lower / 7 upper polar wedge about the rim points.
    """
    third = 1.0 / 3.0
    if r <= 1.0:
        if x3 <= third:
            s = r if r < x3 else x3
            return s, 1.0 + x3 - r, 1
        if x3 >= 2.0 * third:
            w = 1.0 - x3
            s = r if r < w else w
            return s, 1.0 + x3 + r, 3
        if r <= third:
            return r, 1.0 + x3 - 3.0 * r + 6.0 * r * x3, 2
        # middle square, piecewise affine
        a = r - third
        if x3 <= 0.5:
            b = x3 - third
            if b <= 0.25 * a:  # lower triangle (contains the bottom edge)
                return third + b, 1.0 - a + 7.0 * b, 4
            return third + 0.25 * a, 3.0 * x3, 5
        b = (2.0 * third) - x3
        if b <= 0.25 * a:  # upper triangle
            return third + b, 2.0 + a - 7.0 * b, 4
        return third + 0.25 * a, 3.0 * x3, 5
    # r > 1: polar wedges about A=(1,0) (lower) and D=(1,1) (upper)
    if x3 <= 0.5:
        tau = math.hypot(r - 1.0, x3)
        sig = math.atan2(x3, r - 1.0)
        mirrored = False
    else:
        tau = math.hypot(r - 1.0, 1.0 - x3)
        sig = math.atan2(1.0 - x3, r - 1.0)
        mirrored = True
    Z = _g_Zarc(tau)
    se = _g_sigend(tau)
    kp = _g_kappa(tau)
    u = sig / se
    if u > 1.0:
        u = 1.0
    z = Z * _g_H(u, kp)
    if mirrored:
        return tau, 3.0 - z, 7
    return tau, z, 6


@njit
def g_jac_k(r, x3):
    """g together with its analytic planar Jacobian.

    Returns (s, z, s_r, s_x3, z_r, z_x3, piece).
    """
    third = 1.0 / 3.0
    if r <= 1.0:
        if x3 <= third:
            if r < x3:
                return r, 1.0 + x3 - r, 1.0, 0.0, -1.0, 1.0, 1
            return x3, 1.0 + x3 - r, 0.0, 1.0, -1.0, 1.0, 1
        if x3 >= 2.0 * third:
            w = 1.0 - x3
            if r < w:
                return r, 1.0 + x3 + r, 1.0, 0.0, 1.0, 1.0, 3
            return w, 1.0 + x3 + r, 0.0, -1.0, 1.0, 1.0, 3
        if r <= third:
            return (r, 1.0 + x3 - 3.0 * r + 6.0 * r * x3,
                    1.0, 0.0, -3.0 + 6.0 * x3, 1.0 + 6.0 * r, 2)
        a = r - third
        if x3 <= 0.5:
            b = x3 - third
            if b <= 0.25 * a:
                return third + b, 1.0 - a + 7.0 * b, 0.0, 1.0, -1.0, 7.0, 4
            return third + 0.25 * a, 3.0 * x3, 0.25, 0.0, 0.0, 3.0, 5
        b = (2.0 * third) - x3
        if b <= 0.25 * a:
            return third + b, 2.0 + a - 7.0 * b, 0.0, -1.0, 1.0, 7.0, 4
        return third + 0.25 * a, 3.0 * x3, 0.25, 0.0, 0.0, 3.0, 5
    # polar wedges
    if x3 <= 0.5:
        dy = x3
        mirrored = False
    else:
        dy = 1.0 - x3
        mirrored = True
    dx = r - 1.0
    tau = math.hypot(dx, dy)
    sig = math.atan2(dy, dx)
    cs = math.cos(sig)
    sn = math.sin(sig)
    Z = _g_Zarc(tau)
    Zp = _g_Zarc_p(tau)
    se = _g_sigend(tau)
    sep = _g_sigend_p(tau)
    kp = _g_kappa(tau)
    kpp = _g_kappa_p(tau)
    u = sig / se
    if u > 1.0:
        u = 1.0
    H = _g_H(u, kp)
    Hu = _g_H_du(u, kp)
    Hk = _g_H_dk(u, kp)
    # z = Z(tau) * H(sig/se(tau); kappa(tau))
    z_tau = Zp * H + Z * (Hu * (-sig * sep / (se * se)) + Hk * kpp)
    z_sig = Z * Hu / se
    if mirrored:
        # tau_r = cs, tau_x3 = -sn ; sig_r = -sn/tau, sig_x3 = -cs/tau
        s_r = cs
        s_x3 = -sn
        zl_r = z_tau * cs - z_sig * sn / tau
        zl_x3 = -(z_tau * sn + z_sig * cs / tau)
        return tau, 3.0 - Z * H, s_r, s_x3, -zl_r, -zl_x3, 7
    s_r = cs
    s_x3 = sn
    z_r = z_tau * cs - z_sig * sn / tau
    z_x3 = z_tau * sn + z_sig * cs / tau
    return tau, Z * H, s_r, s_x3, z_r, z_x3, 6


# ---------------------------------------------------------------------------
# region classification
# ---------------------------------------------------------------------------

@njit
def classify_k(r, x3):
    """Region tag in the meridian half-plane; boundary tie-break a<e<d<b<f<outer."""
    R2 = r * r + x3 * x3
    if R2 > 16.0 * (1.0 + 1e-14):
        return R_OUTSIDE
    if R2 <= 1.0 and x3 <= 0.0:
        return R_A
    e2 = r * r + (x3 - 1.0) * (x3 - 1.0)
    if e2 <= 1.0 and x3 >= 1.0:
        return R_E
    inner = R2 <= 9.0 * (1.0 + 1e-14)
    if 0.0 <= x3 <= 1.0 and inner:
        return R_D
    if x3 <= 0.0 and inner:
        return R_B
    if x3 >= 1.0 and inner:
        return R_F
    return R_OUTER


# ---------------------------------------------------------------------------
# the dipole map v
# ---------------------------------------------------------------------------

@njit
def _polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho):
    """Chain (d/drho, d/dphi) to meridian (d/dr, d/dx3) for a polar chart
    centred on the axis with phi measured from +e3."""
    drr = A_rho * sphi + A_phi * cphi / rho
    dr3 = A_rho * cphi - A_phi * sphi / rho
    d3r = B_rho * sphi + B_phi * cphi / rho
    d33 = B_rho * cphi - B_phi * sphi / rho
    return drr, dr3, d3r, d33


@njit
def v_region_eval_k(reg, r, x3):
    """Evaluate v on a given inner region (no dispatch, no annulus)."""
    if reg == R_A:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        cphi = math.cos(phi)
        sphi = math.sin(phi)
        return -(1.0 - rho) * cphi * sphi, (1.0 - rho) * cphi * cphi
    if reg == R_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        Phi = 0.5 * (phi + PI)
        return (rho - 1.0) * math.sin(Phi), (rho - 1.0) * math.cos(Phi)
    if reg == R_D:
        s, z, _p = g_map_k(r, x3)
        phz = 0.25 * PI * (1.0 + z / 3.0)
        return s * math.sin(phz), -s * math.cos(phz)
    if reg == R_E:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        vr = (1.0 + rho) * math.cos(phi)
        return vr * math.sin(phi), vr * math.cos(phi)
    # region f
    rho = math.hypot(r, x3 - 1.0)
    phi = math.atan2(r, x3 - 1.0)
    vr = 2.0 * math.cos(phi) + rho - 1.0
    return vr * math.sin(phi), vr * math.cos(phi)


@njit
def v_trace3_k(phibar):
    """Image polar data (P, Psi) of v on the sphere |x| = 3."""
    sc = 3.0 * (1.0 - 1e-14)
    r = sc * math.sin(phibar)
    x3 = sc * math.cos(phibar)
    reg = classify_k(r, x3)
    wr, w3 = v_region_eval_k(reg, r, x3)
    return math.hypot(wr, w3), math.atan2(wr, w3)


@njit
def v_eval_k(r, x3):
    """The dipole deformation on B(0,4) (meridian representative)."""
    reg = classify_k(r, x3)
    if reg == R_OUTSIDE:
        return math.nan, math.nan
    if reg != R_OUTER:
        return v_region_eval_k(reg, r, x3)
    R = math.hypot(r, x3)
    phibar = math.atan2(r, x3)
    P, Psi = v_trace3_k(phibar)
    t = R - 3.0
    rho = (1.0 - t) * P + 4.0 * t
    ang = (1.0 - t) * Psi + t * phibar
    return rho * math.sin(ang), rho * math.cos(ang)


@njit
def v_region_jac_k(reg, r, x3):
    """Analytic planar Jacobian of v per inner region.

    Returns (wr, w3, drr, dr3, d3r, d33, hoop).
    """
    if reg == R_A:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        c = math.cos(phi)
        s = math.sin(phi)
        wr = -(1.0 - rho) * c * s
        w3 = (1.0 - rho) * c * c
        A_rho = s * c
        A_phi = -(1.0 - rho) * math.cos(2.0 * phi)
        B_rho = -c * c
        B_phi = -(1.0 - rho) * math.sin(2.0 * phi)
        drr, dr3, d3r, d33 = _polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
        hoop = wr / r if r > 0.0 else -(1.0 - rho) * c / rho
        return wr, w3, drr, dr3, d3r, d33, hoop
    if reg == R_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        c = math.cos(phi)
        s = math.sin(phi)
        Phi = 0.5 * (phi + PI)
        sP = math.sin(Phi)
        cP = math.cos(Phi)
        wr = (rho - 1.0) * sP
        w3 = (rho - 1.0) * cP
        A_rho = sP
        A_phi = 0.5 * (rho - 1.0) * cP
        B_rho = cP
        B_phi = -0.5 * (rho - 1.0) * sP
        drr, dr3, d3r, d33 = _polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
        hoop = wr / r if r > 0.0 else (rho - 1.0) * sP / (rho * s) if s > 0.0 else 0.0
        return wr, w3, drr, dr3, d3r, d33, hoop
    if reg == R_D:
        s, z, s_r, s_x3, z_r, z_x3, _p = g_jac_k(r, x3)
        phz = 0.25 * PI * (1.0 + z / 3.0)
        dph = PI / 12.0
        sz = math.sin(phz)
        cz = math.cos(phz)
        wr = s * sz
        w3 = -s * cz
        drr = s_r * sz + s * cz * dph * z_r
        dr3 = s_x3 * sz + s * cz * dph * z_x3
        d3r = -s_r * cz + s * sz * dph * z_r
        d33 = -s_x3 * cz + s * sz * dph * z_x3
        hoop = wr / r if r > 0.0 else sz * s_r
        return wr, w3, drr, dr3, d3r, d33, hoop
    if reg == R_E:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        c = math.cos(phi)
        s = math.sin(phi)
        vr = (1.0 + rho) * c
        wr = vr * s
        w3 = vr * c
        A_rho = c * s
        A_phi = (1.0 + rho) * math.cos(2.0 * phi)
        B_rho = c * c
        B_phi = -(1.0 + rho) * math.sin(2.0 * phi)
        drr, dr3, d3r, d33 = _polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
        hoop = wr / r if r > 0.0 else (1.0 + rho) * c / rho
        return wr, w3, drr, dr3, d3r, d33, hoop
    # region f
    rho = math.hypot(r, x3 - 1.0)
    phi = math.atan2(r, x3 - 1.0)
    c = math.cos(phi)
    s = math.sin(phi)
    vr = 2.0 * c + rho - 1.0
    wr = vr * s
    w3 = vr * c
    A_rho = s
    A_phi = vr * c - 2.0 * s * s
    B_rho = c
    B_phi = -2.0 * s * c - vr * s
    drr, dr3, d3r, d33 = _polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
    hoop = wr / r if r > 0.0 else vr / rho
    return wr, w3, drr, dr3, d3r, d33, hoop


@njit
def annulus_jac_k(r, x3, P, Psi, Pp, Psip):
    """Planar Jacobian of the radial-angular blend on 3<=|x|<=4 given the
    trace (P, Psi) at the foot angle and its phibar-derivatives."""
    R = math.hypot(r, x3)
    phibar = math.atan2(r, x3)
    t = R - 3.0
    rho = (1.0 - t) * P + 4.0 * t
    ang = (1.0 - t) * Psi + t * phibar
    sA = math.sin(ang)
    cA = math.cos(ang)
    rho_R = 4.0 - P
    rho_f = (1.0 - t) * Pp
    ang_R = phibar - Psi
    ang_f = (1.0 - t) * Psip + t
    # w = rho (sin ang, cos ang)
    a_R = rho_R * sA + rho * cA * ang_R
    a_f = rho_f * sA + rho * cA * ang_f
    b_R = rho_R * cA - rho * sA * ang_R
    b_f = rho_f * cA - rho * sA * ang_f
    s = math.sin(phibar)
    c = math.cos(phibar)
    drr, dr3, d3r, d33 = _polar_chain(a_R, a_f, b_R, b_f, s, c, R)
    wr = rho * sA
    w3 = rho * cA
    hoop = wr / r if r > 0.0 else rho * sA  # axis: sA -> 0 with ratio rho*ang/(R*phibar)
    if r <= 0.0:
        hoop = rho * ang_f / R if phibar < 1e-12 else rho
    return wr, w3, drr, dr3, d3r, d33, hoop


@njit
def v_jac_k(r, x3):
    """Planar Jacobian of v; annulus handled by a 1D finite difference of the
    boundary trace (the blend itself is exact in R)."""
    reg = classify_k(r, x3)
    if reg == R_OUTSIDE:
        return math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan
    if reg != R_OUTER:
        return v_region_jac_k(reg, r, x3)
    phibar = math.atan2(r, x3)
    h = 1e-7
    lo = phibar - h if phibar - h > 0.0 else 0.0
    hi = phibar + h if phibar + h < PI else PI
    P0, Psi0 = v_trace3_k(phibar)
    P1, Psi1 = v_trace3_k(hi)
    Pm, Psim = v_trace3_k(lo)
    Pp = (P1 - Pm) / (hi - lo)
    Psip = (Psi1 - Psim) / (hi - lo)
    return annulus_jac_k(r, x3, P0, Psi0, Pp, Psip)


@njit
def frob2_det_k(drr, dr3, d3r, d33, hoop):
    fr = drr * drr + dr3 * dr3 + d3r * d3r + d33 * d33 + hoop * hoop
    dt = hoop * (drr * d33 - dr3 * d3r)
    return fr, dt
