"""Scalar kernels for the patched boundary data b_delta.

b_delta equals the regularised map u_eps on the core dist(x,U) <= delta/2,
the dipole v outside dist >= delta, and explicit per-region interpolations in
the transition layer delta/2 <= dist <= delta.  The pair (delta, eps) is tied
by delta = c0 * eps^gamma.

Zone codes: 0 core, 1 layer, 2 exterior.
"""

import math

from ._jit import njit
from . import _kcore as C
from . import _kapprox as A

PI = math.pi
SQ2 = math.sqrt(2.0)


@njit
def chi_delta_k(t, delta):
    if t <= 0.5 * delta:
        return 1.0
    if t >= delta:
        return 0.0
    return (delta - t) / (0.5 * delta)


@njit
def bd_zone_k(r, x3, delta):
    d0 = C.dist_to_U_k(r, x3)
    if d0 >= delta:
        return 2, d0
    if d0 <= 0.5 * delta:
        return 0, d0
    return 1, d0


@njit
def bd_layer_eval_k(reg, r, x3, d0, delta, eps, gamma):
    """Transition-layer formulas, keyed by the dipole region tag."""
    eg = eps ** gamma
    chi = (delta - d0) / (0.5 * delta)
    if chi < 0.0:
        chi = 0.0
    elif chi > 1.0:
        chi = 1.0
    if reg == C.R_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        Phi = 0.5 * (phi + PI)
        s = rho - 1.0
        rad = s + chi * SQ2 * eg
        return rad * math.sin(Phi), rad * math.cos(Phi) + chi * eg
    if reg == C.R_D:
        delta_shift = r - A.rhat_k(r, x3, eps, gamma)
        rh = r - chi * delta_shift
        s, z, _p = C.g_map_k(rh, x3)
        phz = 0.25 * PI * (1.0 + z / 3.0)
        return chi * A.omega_k(z, eps, gamma) + s * math.sin(phz), -s * math.cos(phz)
    if reg == C.R_E:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        urho = ((1.0 - rho) * A.u_edge_k(phi, eps, gamma)
                + (rho - eps) * (2.0 * math.cos(phi) + 6.0 * eg)) / (1.0 - eps)
        vrho = (1.0 + rho) * math.cos(phi)
        b = (1.0 - chi) * vrho + chi * urho
        return b * math.sin(phi), b * math.cos(phi)
    # region f
    rho = math.hypot(r, x3 - 1.0)
    phi = math.atan2(r, x3 - 1.0)
    b = 2.0 * math.cos(phi) + rho - 1.0 + chi * 6.0 * eg
    return b * math.sin(phi), b * math.cos(phi)


@njit
def bd_eval_k(r, x3, delta, eps, gamma):
    zone, d0 = bd_zone_k(r, x3, delta)
    if zone == 2:
        return C.v_eval_k(r, x3)
    if zone == 0:
        return A.u_eval_k(r, x3, eps, gamma)
    reg = C.classify_k(r, x3)
    return bd_layer_eval_k(reg, r, x3, d0, delta, eps, gamma)


@njit
def bd_layer_jac_k(reg, r, x3, d0, delta, eps, gamma):
    eg = eps ** gamma
    chi = (delta - d0) / (0.5 * delta)
    if chi < 0.0:
        chi = 0.0
    elif chi > 1.0:
        chi = 1.0
    chip = -2.0 / delta
    if reg == C.R_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        Phi = 0.5 * (phi + PI)
        sP = math.sin(Phi)
        cP = math.cos(Phi)
        s = rho - 1.0
        rad = s + chi * SQ2 * eg
        radp = 1.0 + chip * SQ2 * eg  # d/ds (s = dist here)
        wr = rad * sP
        w3 = rad * cP + chi * eg
        A_rho = radp * sP
        A_phi = 0.5 * rad * cP
        B_rho = radp * cP + chip * eg
        B_phi = -0.5 * rad * sP
        drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho)
        return wr, w3, drr, dr3, d3r, d33, wr / r
    if reg == C.R_D:
        d0r, d0x = C.dist_grad_k(r, x3)
        chr_ = chip * d0r
        chx = chip * d0x
        if r >= 1.0:
            delta_shift = 0.0
            dsr = 0.0
            dsx = 0.0
        else:
            hr, hx = A.rhat_grad_k(r, x3, eps, gamma)
            delta_shift = r - A.rhat_k(r, x3, eps, gamma)
            dsr = 1.0 - hr
            dsx = -hx
        rh = r - chi * delta_shift
        rh_r = 1.0 - chr_ * delta_shift - chi * dsr
        rh_x = -chx * delta_shift - chi * dsx
        s, z, sr0, sx0, zr0, zx0, _p = C.g_jac_k(rh, x3)
        s_r = sr0 * rh_r
        s_x = sr0 * rh_x + sx0
        z_r = zr0 * rh_r
        z_x = zr0 * rh_x + zx0
        phz = 0.25 * PI * (1.0 + z / 3.0)
        dph = PI / 12.0
        sz = math.sin(phz)
        cz = math.cos(phz)
        om = A.omega_k(z, eps, gamma)
        op = A.omega_p_k(z, eps, gamma)
        wr = chi * om + s * sz
        w3 = -s * cz
        drr = chr_ * om + chi * op * z_r + s_r * sz + s * cz * dph * z_r
        dr3 = chx * om + chi * op * z_x + s_x * sz + s * cz * dph * z_x
        d3r = -s_r * cz + s * sz * dph * z_r
        d33 = -s_x * cz + s * sz * dph * z_x
        return wr, w3, drr, dr3, d3r, d33, wr / r
    if reg == C.R_E:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        edge, edgep = A.u_edge_pair_k(phi, eps, gamma)
        urho = ((1.0 - rho) * edge + (rho - eps) * (2.0 * cphi + 6.0 * eg)) / (1.0 - eps)
        ur_rho = (-edge + 2.0 * cphi + 6.0 * eg) / (1.0 - eps)
        ur_phi = ((1.0 - rho) * edgep - (rho - eps) * 2.0 * sphi) / (1.0 - eps)
        vrho = (1.0 + rho) * cphi
        vr_rho = cphi
        vr_phi = -(1.0 + rho) * sphi
        b = (1.0 - chi) * vrho + chi * urho
        # chi argument is rho*cos(phi)
        b_rho = (1.0 - chi) * vr_rho + chi * ur_rho + chip * cphi * (urho - vrho)
        b_phi = (1.0 - chi) * vr_phi + chi * ur_phi + chip * (-rho * sphi) * (urho - vrho)
        A_rho = b_rho * sphi
        A_phi = b_phi * sphi + b * cphi
        B_rho = b_rho * cphi
        B_phi = b_phi * cphi - b * sphi
        drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho)
        wr = b * sphi
        hoop = wr / r if r > 0.0 else b / rho
        return wr, b * cphi, drr, dr3, d3r, d33, hoop
    # region f
    rho = math.hypot(r, x3 - 1.0)
    phi = math.atan2(r, x3 - 1.0)
    sphi = math.sin(phi)
    cphi = math.cos(phi)
    d0r, d0x = C.dist_grad_k(r, x3)
    ddist_rho = d0r * sphi + d0x * cphi
    ddist_phi = rho * (d0r * cphi - d0x * sphi)
    b = 2.0 * cphi + rho - 1.0 + chi * 6.0 * eg
    b_rho = 1.0 + 6.0 * eg * chip * ddist_rho
    b_phi = -2.0 * sphi + 6.0 * eg * chip * ddist_phi
    A_rho = b_rho * sphi
    A_phi = b_phi * sphi + b * cphi
    B_rho = b_rho * cphi
    B_phi = b_phi * cphi - b * sphi
    drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho)
    wr = b * sphi
    hoop = wr / r if r > 0.0 else b / rho
    return wr, b * cphi, drr, dr3, d3r, d33, hoop


@njit
def bd_jac_k(r, x3, delta, eps, gamma):
    zone, d0 = bd_zone_k(r, x3, delta)
    if zone == 2:
        return C.v_jac_k(r, x3)
    if zone == 0:
        return A.u_jac_k(r, x3, eps, gamma)
    reg = C.classify_k(r, x3)
    return bd_layer_jac_k(reg, r, x3, d0, delta, eps, gamma)


@njit
def bd_det_k(r, x3, delta, eps, gamma):
    """Determinant of b_delta via the cancellation-safe core path."""
    zone, d0 = bd_zone_k(r, x3, delta)
    if zone == 0:
        return A.u_det_k(r, x3, eps, gamma)
    if zone == 2:
        out = C.v_jac_k(r, x3)
    else:
        out = bd_layer_jac_k(C.classify_k(r, x3), r, x3, d0, delta, eps, gamma)
    fr, dt = C.frob2_det_k(out[2], out[3], out[4], out[5], out[6])
    return dt
