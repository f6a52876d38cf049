"""Scalar kernels for the regularising family u_eps.

Pieces:
  - monotone profiles f_eps (inverted by bisection + Newton), the tube radius
    omega_eps on [0,3], the matching radius eta_eps
  - the inner radial profile of the upper half-ball shell, u_rho(eps, phi),
    cube-root form with a fixed 64-node Gauss-Legendre s-integral
  - the planar chart psi (cavity opener in region b): identity on the cone
    r = 1+|x3| and beyond radius 2*sqrt(2) from (0,1), prescribed arc action
    on the inner circle of radius sqrt(2)
  - per-region evaluation and analytic planar Jacobians of u_eps, including
    the surrogate charts for the small core regions the construction leaves
    free (half-ball shell, origin half-ball, axis cylinder, cavitation ball).

Region codes (u_classify_k): 0 half-ball shell, 1 origin half-ball,
2 axis cylinder, 3 cavitation ball, 4 upper shell, 5 slab, 6 region b,
7 region f, 8 outer annulus.
"""

import math

import numpy as np

from ._jit import njit
from . import _kcore as C

PI = math.pi
SQ2 = math.sqrt(2.0)

# tuning constants of the surrogate charts (documented in the README):
# K_CORE sets the logarithmic sweep profile beta_c(r) = arctan(K r/eps) that
# carries the axis cylinder over the bubble; P_PSI shapes the corner of psi.
K_CORE = 60.0
P_PSI = 0.3

U_ASHELL = 0
U_APRIME = 1
U_CPRIME = 2
U_EPRIME = 3
U_ESHELL = 4
U_DSLAB = 5
U_B = 6
U_F = 7
U_ANN = 8
U_OUTSIDE = -1

_gl64 = np.polynomial.legendre.leggauss(64)
GL64_X = 0.5 * (_gl64[0] + 1.0)
GL64_W = 0.5 * _gl64[1]


# ---------------------------------------------------------------------------
# profiles
# ---------------------------------------------------------------------------

@njit
def f_eps_k(rr, eps):
    return math.atan(rr / (eps * eps)) + math.atan(eps) * rr / eps


@njit
def fp_eps_k(rr, eps):
    e2 = eps * eps
    return e2 / (e2 * e2 + rr * rr) + math.atan(eps) / eps


@njit
def fpp_eps_k(rr, eps):
    e2 = eps * eps
    d = e2 * e2 + rr * rr
    return -2.0 * rr * e2 / (d * d)


@njit
def g_eps_k(phi, eps):
    """Inverse of f_eps on [0, eps]; f_eps(eps) = pi/2 exactly.

    Bisection (monotone bracket) followed by two Newton polish steps.
    """
    if phi <= 0.0:
        return 0.0
    if phi >= 0.5 * PI:
        return eps
    lo = 0.0
    hi = eps
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if f_eps_k(mid, eps) < phi:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(2):
        fx = f_eps_k(x, eps) - phi
        x = x - fx / fp_eps_k(x, eps)
        if x < 0.0:
            x = 0.0
        elif x > eps:
            x = eps
    return x


@njit
def g_eps_fast_k(phi, eps):
    """Seeded, safeguarded Newton inverse of f_eps (hot path; agrees with
    g_eps_k to ~1e-14 * eps)."""
    if phi <= 0.0:
        return 0.0
    if phi >= 0.5 * PI:
        return eps
    if phi < 0.5 * PI - 2.0 * eps:
        t = math.tan(phi)
        x = eps * eps * t
        if x > eps:
            x = 0.95 * eps
    else:
        x = 0.95 * eps
    lo = 0.0
    hi = eps
    for _ in range(60):
        fx = f_eps_k(x, eps) - phi
        if fx > 0.0:
            hi = x
        else:
            lo = x
        if abs(fx) < 1e-15:
            break
        step = fx / fp_eps_k(x, eps)
        xn = x - step
        if xn <= lo or xn >= hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) < 1e-18 * eps + 1e-300:
            x = xn
            break
        x = xn
    return x


@njit
def eta_k(eps, gamma):
    eg = eps ** gamma
    return ((2.0 * eg) ** 3 + 3.0 * eps / fp_eps_k(eps, eps)) ** (1.0 / 3.0)


@njit
def omega_k(z, eps, gamma):
    eg = eps ** gamma
    if z <= 1.0:
        return eg * (1.0 + z)
    if z <= 2.0:
        return (8.0 * eg ** 3 + (z - 1.0) * 3.0 * eps / fp_eps_k(eps, eps)) ** (1.0 / 3.0)
    eta = eta_k(eps, gamma)
    return (3.0 - z) * eta + (z - 2.0) * 6.0 * eg


@njit
def omega_p_k(z, eps, gamma):
    eg = eps ** gamma
    if z <= 1.0:
        return eg
    if z <= 2.0:
        w = omega_k(z, eps, gamma)
        return eps / (fp_eps_k(eps, eps) * w * w)
    return 6.0 * eg - eta_k(eps, gamma)


@njit
def u_edge_cube_k(phi, eps, gamma):
    """W(phi) = u_rho(eps, phi)^3 (the cube in the boundary profile)."""
    eg = eps ** gamma
    cp = math.cos(phi)
    sp = math.sin(phi)
    g = g_eps_fast_k(phi, eps)
    if phi > 1e-14:
        mid = 3.0 * g / (sp * fp_eps_k(g, eps))
        ratio = g / sp
    else:
        mid = 0.0
        ratio = 1.0 / fp_eps_k(0.0, eps)
    gp = 1.0 / fp_eps_k(g, eps)
    acc = 0.0
    for i in range(64):
        s = GL64_X[i]
        B = (1.0 - s) * ratio + s * eps
        A = (1.0 - s) * gp * cp + s * (eps - g * sp)
        acc += GL64_W[i] * B * A
    return (cp + 2.0 * eg) ** 3 + mid + 3.0 * eps * acc


@njit
def u_edge_k(phi, eps, gamma):
    """Radial profile u_rho(eps, phi) of the upper shell at its inner sphere."""
    return u_edge_cube_k(phi, eps, gamma) ** (1.0 / 3.0)


@njit
def u_edge_pair_k(phi, eps, gamma):
    """(u_rho(eps, phi), d/dphi u_rho(eps, phi)) with shared subexpressions."""
    if phi < 1e-5:
        h = 1e-6
        u0 = u_edge_k(phi, eps, gamma)
        du = (u_edge_k(phi + h, eps, gamma) - u_edge_k(phi + 1e-12, eps, gamma)) / (h - 1e-12)
        return u0, du
    eg = eps ** gamma
    cp = math.cos(phi)
    sp = math.sin(phi)
    g = g_eps_fast_k(phi, eps)
    fp = fp_eps_k(g, eps)
    fpp = fpp_eps_k(g, eps)
    gp = 1.0 / fp
    gpp = -fpp / (fp * fp * fp)
    ratio = g / sp
    dratio = (gp * sp - g * cp) / (sp * sp)
    acc = 0.0
    dacc = 0.0
    for i in range(64):
        s = GL64_X[i]
        B = (1.0 - s) * ratio + s * eps
        A = (1.0 - s) * gp * cp + s * (eps - g * sp)
        dB = (1.0 - s) * dratio
        dA = (1.0 - s) * (gpp * cp - gp * sp) + s * (-gp * sp - g * cp)
        acc += GL64_W[i] * B * A
        dacc += GL64_W[i] * (dB * A + B * dA)
    W = (cp + 2.0 * eg) ** 3 + 3.0 * g / (sp * fp) + 3.0 * eps * acc
    dW = (-3.0 * (cp + 2.0 * eg) ** 2 * sp
          + 3.0 * (gp / (sp * fp) - g * (cp * fp + sp * fpp * gp) / (sp * fp) ** 2)
          + 3.0 * eps * dacc)
    u = W ** (1.0 / 3.0)
    return u, dW / (3.0 * u * u)


@njit
def u_edge_dphi_k(phi, eps, gamma):
    """d/dphi of u_rho(eps, phi)."""
    u, du = u_edge_pair_k(phi, eps, gamma)
    return du


@njit
def _u_edge_ex_only(phi, eps):
    """The cube excess W - (cos phi + 2 eps^gamma)^3 = M + 3 eps int h ds."""
    cp = math.cos(phi)
    sp = math.sin(phi)
    g = g_eps_fast_k(phi, eps)
    gp = 1.0 / fp_eps_k(g, eps)
    if phi > 1e-14:
        ratio = g / sp
        mid = 3.0 * g / (sp * fp_eps_k(g, eps))
    else:
        ratio = gp
        mid = 0.0
    acc = 0.0
    for i in range(64):
        s = GL64_X[i]
        B = (1.0 - s) * ratio + s * eps
        A = (1.0 - s) * gp * cp + s * (eps - g * sp)
        acc += GL64_W[i] * B * A
    return mid + 3.0 * eps * acc


@njit
def u_edge_excess_k(phi, eps, gamma):
    """(ex, dex): the cube excess and its phi-derivative, no cancellation.

    The excess is O(eps^3) away from the equator, far below rounding when
    obtained by subtracting the cubes; the core shells are this thin.
    """
    if phi < 1e-7:
        h = 1e-7
        ex = _u_edge_ex_only(phi, eps)
        return ex, (_u_edge_ex_only(phi + h, eps) - ex) / h
    cp = math.cos(phi)
    sp = math.sin(phi)
    g = g_eps_fast_k(phi, eps)
    fp = fp_eps_k(g, eps)
    fpp = fpp_eps_k(g, eps)
    gp = 1.0 / fp
    gpp = -fpp / (fp * fp * fp)
    ratio = g / sp
    dratio = (gp * sp - g * cp) / (sp * sp)
    acc = 0.0
    dacc = 0.0
    for i in range(64):
        s = GL64_X[i]
        B = (1.0 - s) * ratio + s * eps
        A = (1.0 - s) * gp * cp + s * (eps - g * sp)
        dB = (1.0 - s) * dratio
        dA = (1.0 - s) * (gpp * cp - gp * sp) + s * (-gp * sp - g * cp)
        acc += GL64_W[i] * B * A
        dacc += GL64_W[i] * (dB * A + B * dA)
    ex = 3.0 * g / (sp * fp) + 3.0 * eps * acc
    dex = (3.0 * (gp / (sp * fp) - g * (cp * fp + sp * fpp * gp) / (sp * fp) ** 2)
           + 3.0 * eps * dacc)
    return ex, dex


# ---------------------------------------------------------------------------
# the planar chart psi
# ---------------------------------------------------------------------------

@njit
def psi_k(qr, q3):
    """psi on the meridian; identity outside radius 2*sqrt(2) from (0,1)."""
    R = math.hypot(qr, q3 - 1.0)
    if R >= 2.0 * SQ2:
        return qr, q3
    alpha = math.atan2(qr, 1.0 - q3)
    if alpha < 0.0:
        alpha = 0.0
    elif alpha > 0.25 * PI:
        alpha = 0.25 * PI
    t = (R - SQ2) / SQ2
    if t < 0.0:
        t = 0.0
    w = alpha / (0.25 * PI)
    den = t + P_PSI * w * (1.0 - w) * (1.0 - t)
    lam = t / den if den > 1e-300 else 1.0
    A = 0.5 * PI * (1.0 - 0.5 * w - lam * (1.0 - w))
    m = math.sin(0.25 * PI * w)
    Rim = (1.0 - t) * 2.0 * m + 2.0 * SQ2 * t
    return Rim * math.sin(A), 1.0 - Rim * math.cos(A)


@njit
def psi_jac_k(qr, q3):
    """psi with analytic planar Jacobian: (pr, p3, drr, dr3, d3r, d33)."""
    R = math.hypot(qr, q3 - 1.0)
    if R >= 2.0 * SQ2:
        return qr, q3, 1.0, 0.0, 0.0, 1.0
    alpha = math.atan2(qr, 1.0 - q3)
    if alpha < 0.0:
        alpha = 0.0
    elif alpha > 0.25 * PI:
        alpha = 0.25 * PI
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    t = (R - SQ2) / SQ2
    if t < 0.0:
        t = 0.0
    w = alpha / (0.25 * PI)
    den = t + P_PSI * w * (1.0 - w) * (1.0 - t)
    if den > 1e-300:
        lam = t / den
        lam_t = P_PSI * w * (1.0 - w) / (den * den)
        lam_w = -t * P_PSI * (1.0 - 2.0 * w) * (1.0 - t) / (den * den)
    else:
        lam = 1.0
        lam_t = 0.0
        lam_w = 0.0
    A = 0.5 * PI * (1.0 - 0.5 * w - lam * (1.0 - w))
    A_w = 0.5 * PI * (-0.5 - lam_w * (1.0 - w) + lam)
    A_t = -0.5 * PI * (1.0 - w) * lam_t
    m = math.sin(0.25 * PI * w)
    mc = math.cos(0.25 * PI * w)
    Rim = (1.0 - t) * 2.0 * m + 2.0 * SQ2 * t
    Rim_t = 2.0 * SQ2 - 2.0 * m
    Rim_w = (1.0 - t) * 0.5 * PI * mc
    # chain to (qr, q3): R_qr = sa, R_q3 = -ca ; al_qr = ca/R, al_q3 = sa/R
    t_qr = sa / SQ2
    t_q3 = -ca / SQ2
    w_qr = (4.0 / PI) * ca / R
    w_q3 = (4.0 / PI) * sa / R
    Rim_qr = Rim_t * t_qr + Rim_w * w_qr
    Rim_q3 = Rim_t * t_q3 + Rim_w * w_q3
    A_qr = A_t * t_qr + A_w * w_qr
    A_q3 = A_t * t_q3 + A_w * w_q3
    sA = math.sin(A)
    cA = math.cos(A)
    pr = Rim * sA
    p3 = 1.0 - Rim * cA
    drr = Rim_qr * sA + Rim * cA * A_qr
    dr3 = Rim_q3 * sA + Rim * cA * A_q3
    d3r = -Rim_qr * cA + Rim * sA * A_qr
    d33 = -Rim_q3 * cA + Rim * sA * A_q3
    return pr, p3, drr, dr3, d3r, d33


# ---------------------------------------------------------------------------
# classification and surrogate core profiles
# ---------------------------------------------------------------------------

@njit
def u_classify_k(r, x3, eps):
    R2 = r * r + x3 * x3
    if R2 > 16.0 * (1.0 + 1e-14):
        return U_OUTSIDE
    if R2 > 9.0 * (1.0 + 1e-14):
        return U_ANN
    if x3 <= 0.0:
        rho = math.sqrt(R2)
        if rho <= eps:
            return U_APRIME
        if rho <= 1.0:
            return U_ASHELL
        return U_B
    if x3 >= 1.0:
        rho = math.hypot(r, x3 - 1.0)
        if rho <= eps:
            return U_EPRIME
        if rho <= 1.0:
            return U_ESHELL
        return U_F
    if r <= eps:
        return U_CPRIME
    return U_DSLAB


@njit
def beta_c_k(rad, eps):
    """Sweep profile of the axis cylinder: near-optimal logarithmic fan."""
    return 0.5 * PI * math.atan(K_CORE * rad / eps) / math.atan(K_CORE)


@njit
def beta_c_p_k(rad, eps):
    x = K_CORE * rad / eps
    return 0.5 * PI * (K_CORE / eps) / ((1.0 + x * x) * math.atan(K_CORE))


@njit
def hhat_k(rr, eps, gamma):
    """Radial opening profile of the slab (paper branch for r <= eps^{2 gamma})."""
    e2g = eps ** (2.0 * gamma)
    if rr >= e2g:
        return rr
    return (rr - eps) * rr / (e2g - eps)


@njit
def hhat_p_k(rr, eps, gamma):
    e2g = eps ** (2.0 * gamma)
    if rr >= e2g:
        return 1.0
    return (2.0 * rr - eps) / (e2g - eps)


@njit
def rhat_k(r, x3, eps, gamma):
    """Effective slab radius: paper profile at x3=0 blended so that the
    stated upper-interface trace (r-eps)/(1-eps) is matched exactly."""
    if r >= 1.0:
        return r
    return (1.0 - x3) * hhat_k(r, eps, gamma) + x3 * (r - eps) / (1.0 - eps)


@njit
def rhat_grad_k(r, x3, eps, gamma):
    if r >= 1.0:
        return 1.0, 0.0
    hr = hhat_p_k(r, eps, gamma)
    dr = (1.0 - x3) * hr + x3 / (1.0 - eps)
    dx = (r - eps) / (1.0 - eps) - hhat_k(r, eps, gamma)
    return dr, dx


@njit
def core_R1_k(beta, eps, gamma):
    return math.cos(beta) + 2.0 * eps ** gamma


@njit
def core_stack_k(beta, eps, gamma):
    """(R1, R4, gap = R4 - R1) of the nested core shells, gap computed from
    the cube excess to avoid cancellation (gap can be ~1e-14 at small eps)."""
    R1 = math.cos(beta) + 2.0 * eps ** gamma
    ex = _u_edge_ex_only(beta, eps)
    R4 = (R1 ** 3 + ex) ** (1.0 / 3.0)
    gap = ex / (R4 * R4 + R4 * R1 + R1 * R1)
    return R1, R4, gap


@njit
def core_R2_k(beta, eps, gamma):
    R1, R4, gap = core_stack_k(beta, eps, gamma)
    return R1 + (math.cos(beta) / 3.0) * gap


@njit
def core_R3_k(beta, eps, gamma):
    R1, R4, gap = core_stack_k(beta, eps, gamma)
    return R4 - (math.cos(beta) / 3.0) * gap


@njit
def _core_R23_jac(beta, eps, gamma):
    """R1..R4 profiles, their beta-derivatives and the stable gap data."""
    cb = math.cos(beta)
    sb = math.sin(beta)
    R1 = cb + 2.0 * eps ** gamma
    R1p = -sb
    ex, dex = u_edge_excess_k(beta, eps, gamma)
    R4 = (R1 ** 3 + ex) ** (1.0 / 3.0)
    gap = ex / (R4 * R4 + R4 * R1 + R1 * R1)
    R4p = (3.0 * R1 * R1 * R1p + dex) / (3.0 * R4 * R4)
    gapp = R4p - R1p
    R2 = R1 + (cb / 3.0) * gap
    R2p = R1p + (-sb / 3.0) * gap + (cb / 3.0) * gapp
    R3 = R4 - (cb / 3.0) * gap
    R3p = R4p + (sb / 3.0) * gap - (cb / 3.0) * gapp
    return R1, R1p, R2, R2p, R3, R3p, R4, R4p, gap, gapp


# ---------------------------------------------------------------------------
# u_eps: per-region evaluation
# ---------------------------------------------------------------------------

@njit
def u_region_eval_k(ureg, r, x3, eps, gamma):
    eg = eps ** gamma
    if ureg == U_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        Phi = 0.5 * (phi + PI)
        s = rho - 1.0
        ar = (s + SQ2 * eg) * math.sin(Phi)
        a3 = (s + SQ2 * eg) * math.cos(Phi) + eg
        pr, p3 = psi_k(ar / eg, a3 / eg)
        return eg * pr, eg * p3
    if ureg == U_F:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        vr = 2.0 * math.cos(phi) + rho - 1.0 + 6.0 * eg
        return vr * math.sin(phi), vr * math.cos(phi)
    if ureg == U_ESHELL:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        edge = u_edge_k(phi, eps, gamma)
        ur = ((1.0 - rho) * edge + (rho - eps) * (2.0 * math.cos(phi) + 6.0 * eg)) / (1.0 - eps)
        return ur * math.sin(phi), ur * math.cos(phi)
    if ureg == U_DSLAB:
        rh = rhat_k(r, x3, eps, gamma)
        s, z, _p = C.g_map_k(rh, x3)
        phz = 0.25 * PI * (1.0 + z / 3.0)
        return omega_k(z, eps, gamma) + s * math.sin(phz), -s * math.cos(phz)
    if ureg == U_ASHELL:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        beta = PI - phi
        hb = hhat_k(rho, eps, gamma)
        ur = (1.0 - hb) * core_R1_k(beta, eps, gamma) + hb * eg
        return ur * math.sin(beta), ur * math.cos(beta)
    if ureg == U_APRIME:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        st = rho / eps
        q = (phi - 0.5 * PI) / (0.5 * PI)
        den = q * st + 1.0 - st
        W = q * st / den if den > 1e-300 else 1.0
        beta = beta_c_k(rho, eps) * (PI - phi) / (0.5 * PI)
        R1, _R4, gap = core_stack_k(beta, eps, gamma)
        ur = R1 + (1.0 - W) * (math.cos(beta) / 3.0) * gap
        return ur * math.sin(beta), ur * math.cos(beta)
    if ureg == U_CPRIME:
        beta = beta_c_k(r, eps)
        cb = math.cos(beta)
        R1, R4, gap = core_stack_k(beta, eps, gamma)
        R2 = R1 + (cb / 3.0) * gap
        R3 = R4 - (cb / 3.0) * gap
        diff3 = gap * (1.0 - 2.0 * cb / 3.0) * (R3 * R3 + R3 * R2 + R2 * R2)
        u3 = R2 ** 3 + x3 * diff3
        ur = u3 ** (1.0 / 3.0)
        return ur * math.sin(beta), ur * math.cos(beta)
    if ureg == U_EPRIME:
        sig = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        st = sig / eps
        q = (0.5 * PI - phi) / (0.5 * PI)
        den = q * st + 1.0 - st
        W = q * st / den if den > 1e-300 else 1.0
        beta = beta_c_k(sig, eps) * phi / (0.5 * PI)
        cb = math.cos(beta)
        R1, R4, gap = core_stack_k(beta, eps, gamma)
        R3 = R4 - (cb / 3.0) * gap
        ur = R3 + W * (cb / 3.0) * gap
        return ur * math.sin(beta), ur * math.cos(beta)
    return math.nan, math.nan


@njit
def u_trace3_k(phibar, eps, gamma):
    sc = 3.0 * (1.0 - 1e-14)
    r = sc * math.sin(phibar)
    x3 = sc * math.cos(phibar)
    ureg = u_classify_k(r, x3, eps)
    wr, w3 = u_region_eval_k(ureg, r, x3, eps, gamma)
    return math.hypot(wr, w3), math.atan2(wr, w3)


@njit
def u_eval_k(r, x3, eps, gamma):
    ureg = u_classify_k(r, x3, eps)
    if ureg == U_OUTSIDE:
        return math.nan, math.nan
    if ureg != U_ANN:
        return u_region_eval_k(ureg, r, x3, eps, gamma)
    R = math.hypot(r, x3)
    phibar = math.atan2(r, x3)
    P, Psi = u_trace3_k(phibar, eps, gamma)
    t = R - 3.0
    rho = (1.0 - t) * P + 4.0 * t
    ang = (1.0 - t) * Psi + t * phibar
    return rho * math.sin(ang), rho * math.cos(ang)


# ---------------------------------------------------------------------------
# u_eps: analytic planar Jacobians
# ---------------------------------------------------------------------------

@njit
def _axis_polar_jac(ur, ur_rho, ur_phi, beta, b_rho, b_phi, sphi, cphi, rho, r):
    """Planar Jacobian of w = ur(rho,phi) * (sin beta, cos beta)(rho,phi) in a
    polar chart centred on the axis (phi from +e3, radius rho)."""
    sb = math.sin(beta)
    cb = math.cos(beta)
    A_rho = ur_rho * sb + ur * cb * b_rho
    A_phi = ur_phi * sb + ur * cb * b_phi
    B_rho = ur_rho * cb - ur * sb * b_rho
    B_phi = ur_phi * cb - ur * sb * b_phi
    drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho)
    wr = ur * sb
    w3 = ur * cb
    if r > 0.0:
        hoop = wr / r
    else:
        hoop = drr
    return wr, w3, drr, dr3, d3r, d33, hoop


@njit
def u_region_jac_k(ureg, r, x3, eps, gamma):
    eg = eps ** gamma
    if ureg == U_B:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        Phi = 0.5 * (phi + PI)
        sP = math.sin(Phi)
        cP = math.cos(Phi)
        s = rho - 1.0
        ar = (s + SQ2 * eg) * sP
        a3 = (s + SQ2 * eg) * cP + eg
        # Jacobian of phi_eps in (r, x3)
        A_rho = sP
        A_phi = 0.5 * (s + SQ2 * eg) * cP
        B_rho = cP
        B_phi = -0.5 * (s + SQ2 * eg) * sP
        e11, e12, e21, e22 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, sphi, cphi, rho)
        pr, p3, j11, j12, j21, j22 = psi_jac_k(ar / eg, a3 / eg)
        drr = j11 * e11 + j12 * e21
        dr3 = j11 * e12 + j12 * e22
        d3r = j21 * e11 + j22 * e21
        d33 = j21 * e12 + j22 * e22
        wr = eg * pr
        w3 = eg * p3
        hoop = wr / r if r > 0.0 else drr
        return wr, w3, drr, dr3, d3r, d33, hoop
    if ureg == U_F:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        c = math.cos(phi)
        s = math.sin(phi)
        vr = 2.0 * c + rho - 1.0 + 6.0 * eg
        A_rho = s
        A_phi = vr * c - 2.0 * s * s
        B_rho = c
        B_phi = -2.0 * s * c - vr * s
        drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
        wr = vr * s
        w3 = vr * c
        hoop = wr / r if r > 0.0 else vr / rho
        return wr, w3, drr, dr3, d3r, d33, hoop
    if ureg == U_ESHELL:
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        c = math.cos(phi)
        s = math.sin(phi)
        edge, edgep = u_edge_pair_k(phi, eps, gamma)
        ur = ((1.0 - rho) * edge + (rho - eps) * (2.0 * c + 6.0 * eg)) / (1.0 - eps)
        ur_rho = (-edge + 2.0 * c + 6.0 * eg) / (1.0 - eps)
        ur_phi = ((1.0 - rho) * edgep + (rho - eps) * (-2.0 * s)) / (1.0 - eps)
        A_rho = ur_rho * s
        A_phi = ur_phi * s + ur * c
        B_rho = ur_rho * c
        B_phi = ur_phi * c - ur * s
        drr, dr3, d3r, d33 = C._polar_chain(A_rho, A_phi, B_rho, B_phi, s, c, rho)
        wr = ur * s
        w3 = ur * c
        hoop = wr / r if r > 0.0 else ur / rho
        return wr, w3, drr, dr3, d3r, d33, hoop
    if ureg == U_DSLAB:
        rh = rhat_k(r, x3, eps, gamma)
        rh_r, rh_x = rhat_grad_k(r, x3, eps, gamma)
        s, z, s_r0, s_x0, z_r0, z_x0, _p = C.g_jac_k(rh, x3)
        s_r = s_r0 * rh_r
        s_x = s_r0 * rh_x + s_x0
        z_r = z_r0 * rh_r
        z_x = z_r0 * rh_x + z_x0
        phz = 0.25 * PI * (1.0 + z / 3.0)
        dph = PI / 12.0
        sz = math.sin(phz)
        cz = math.cos(phz)
        op = omega_p_k(z, eps, gamma)
        wr = omega_k(z, eps, gamma) + s * sz
        w3 = -s * cz
        drr = op * z_r + s_r * sz + s * cz * dph * z_r
        dr3 = op * z_x + s_x * sz + s * cz * dph * z_x
        d3r = -s_r * cz + s * sz * dph * z_r
        d33 = -s_x * cz + s * sz * dph * z_x
        hoop = wr / r
        return wr, w3, drr, dr3, d3r, d33, hoop
    if ureg == U_ASHELL:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        beta = PI - phi
        hb = hhat_k(rho, eps, gamma)
        hbp = hhat_p_k(rho, eps, gamma)
        R1 = core_R1_k(beta, eps, gamma)
        ur = (1.0 - hb) * R1 + hb * eg
        ur_rho = hbp * (eg - R1)
        ur_phi = (1.0 - hb) * math.sin(beta)  # dR1/dphi = -R1'(beta) = sin(beta)... (beta = pi - phi)
        return _axis_polar_jac(ur, ur_rho, ur_phi, beta, 0.0, -1.0, sphi, cphi, rho, r)
    if ureg == U_APRIME:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        st = rho / eps
        q = (phi - 0.5 * PI) / (0.5 * PI)
        den = q * st + 1.0 - st
        if den > 1e-300:
            W = q * st / den
            W_st = q / (den * den)
            W_q = st * (1.0 - st) / (den * den)
        else:
            W = 1.0
            W_st = 0.0
            W_q = 0.0
        bc = beta_c_k(rho, eps)
        bcp = beta_c_p_k(rho, eps)
        fac = (PI - phi) / (0.5 * PI)
        beta = bc * fac
        b_rho = bcp * fac
        b_phi = -bc / (0.5 * PI)
        R1, R1p, R2, R2p, _R3, _R3p, _R4, _R4p, gap, _gapp = _core_R23_jac(beta, eps, gamma)
        cb = math.cos(beta)
        ur = R1 + (1.0 - W) * (cb / 3.0) * gap
        dWdrho = W_st / eps
        dWdphi = W_q * (2.0 / PI)
        ur_rho = -dWdrho * (cb / 3.0) * gap + (W * R1p + (1.0 - W) * R2p) * b_rho
        ur_phi = -dWdphi * (cb / 3.0) * gap + (W * R1p + (1.0 - W) * R2p) * b_phi
        return _axis_polar_jac(ur, ur_rho, ur_phi, beta, b_rho, b_phi, sphi, cphi, rho, r)
    if ureg == U_CPRIME:
        beta = beta_c_k(r, eps)
        bcp = beta_c_p_k(r, eps)
        _R1, _R1p, R2, R2p, R3, R3p, _R4, _R4p, gap, _gapp = _core_R23_jac(beta, eps, gamma)
        sb = math.sin(beta)
        cb = math.cos(beta)
        diff3 = gap * (1.0 - 2.0 * cb / 3.0) * (R3 * R3 + R3 * R2 + R2 * R2)
        u3 = R2 ** 3 + x3 * diff3
        ur = u3 ** (1.0 / 3.0)
        ur_r = ((1.0 - x3) * 3.0 * R2 * R2 * R2p + x3 * 3.0 * R3 * R3 * R3p) * bcp / (3.0 * ur * ur)
        ur_x = diff3 / (3.0 * ur * ur)
        wr = ur * sb
        w3 = ur * cb
        drr = ur_r * sb + ur * cb * bcp
        dr3 = ur_x * sb
        d3r = ur_r * cb - ur * sb * bcp
        d33 = ur_x * cb
        hoop = wr / r if r > 0.0 else ur * bcp
        return wr, w3, drr, dr3, d3r, d33, hoop
    if ureg == U_EPRIME:
        sig = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        sphi = math.sin(phi)
        cphi = math.cos(phi)
        st = sig / eps
        q = (0.5 * PI - phi) / (0.5 * PI)
        den = q * st + 1.0 - st
        if den > 1e-300:
            W = q * st / den
            W_st = q / (den * den)
            W_q = st * (1.0 - st) / (den * den)
        else:
            W = 1.0
            W_st = 0.0
            W_q = 0.0
        bc = beta_c_k(sig, eps)
        bcp = beta_c_p_k(sig, eps)
        fac = phi / (0.5 * PI)
        beta = bc * fac
        b_sig = bcp * fac
        b_phi = bc / (0.5 * PI)
        _R1, _R1p, _R2, _R2p, R3, R3p, R4, R4p, gap, _gapp = _core_R23_jac(beta, eps, gamma)
        cb = math.cos(beta)
        ur = R3 + W * (cb / 3.0) * gap
        dWdsig = W_st / eps
        dWdphi = -W_q * (2.0 / PI)
        ur_sig = dWdsig * (cb / 3.0) * gap + (W * R4p + (1.0 - W) * R3p) * b_sig
        ur_phi = dWdphi * (cb / 3.0) * gap + (W * R4p + (1.0 - W) * R3p) * b_phi
        return _axis_polar_jac(ur, ur_sig, ur_phi, beta, b_sig, b_phi, sphi, cphi, sig, r)
    return math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan


@njit
def u_region_det_k(ureg, r, x3, eps, gamma):
    """Stable determinant of u_eps.

    In the thin core shells the Jacobian is nearly rank one: the determinant
    from the matrix entries cancels catastrophically (the shells are O(eps^3)
    thin), so the surviving gap-scale cross terms are assembled directly.
    """
    if ureg == U_APRIME:
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        st = rho / eps
        q = (phi - 0.5 * PI) / (0.5 * PI)
        den = q * st + 1.0 - st
        if den > 1e-300:
            W_st = q / (den * den)
            W = q * st / den
            W_q = st * (1.0 - st) / (den * den)
        else:
            W = 1.0
            W_st = 0.0
            W_q = 0.0
        bc = beta_c_k(rho, eps)
        bcp = beta_c_p_k(rho, eps)
        fac = (PI - phi) / (0.5 * PI)
        beta = bc * fac
        b_rho = bcp * fac
        b_phi = -bc / (0.5 * PI)
        cb = math.cos(beta)
        R1, _R4, gap = core_stack_k(beta, eps, gamma)
        ur = R1 + (1.0 - W) * (cb / 3.0) * gap
        dWdrho = W_st / eps
        dWdphi = W_q * (2.0 / PI)
        cross = (cb / 3.0) * gap * (dWdphi * b_rho - dWdrho * b_phi)
        det2 = ur * cross / rho
        hoop = ur * math.sin(beta) / r if r > 0.0 else ur * b_rho  # r->0: sin(beta)/r -> b_r-limit
        return hoop * det2
    if ureg == U_EPRIME:
        sig = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        st = sig / eps
        q = (0.5 * PI - phi) / (0.5 * PI)
        den = q * st + 1.0 - st
        if den > 1e-300:
            W = q * st / den
            W_st = q / (den * den)
            W_q = st * (1.0 - st) / (den * den)
        else:
            W = 1.0
            W_st = 0.0
            W_q = 0.0
        bc = beta_c_k(sig, eps)
        bcp = beta_c_p_k(sig, eps)
        fac = phi / (0.5 * PI)
        beta = bc * fac
        b_sig = bcp * fac
        b_phi = bc / (0.5 * PI)
        cb = math.cos(beta)
        R1, R4, gap = core_stack_k(beta, eps, gamma)
        R3 = R4 - (cb / 3.0) * gap
        ur = R3 + W * (cb / 3.0) * gap
        dWdsig = W_st / eps
        dWdphi = -W_q * (2.0 / PI)
        # ur_sig b_phi - ur_phi b_sig with the tangential part cancelled
        cross = (cb / 3.0) * gap * (dWdsig * b_phi - dWdphi * b_sig)
        det2 = ur * cross / sig
        hoop = ur * math.sin(beta) / r if r > 0.0 else ur * b_sig
        return hoop * det2
    if ureg == U_CPRIME:
        beta = beta_c_k(r, eps)
        bcp = beta_c_p_k(r, eps)
        cb = math.cos(beta)
        R1, R4, gap = core_stack_k(beta, eps, gamma)
        R2 = R1 + (cb / 3.0) * gap
        R3 = R4 - (cb / 3.0) * gap
        diff3 = gap * (1.0 - 2.0 * cb / 3.0) * (R3 * R3 + R3 * R2 + R2 * R2)
        u3 = R2 ** 3 + x3 * diff3
        ur = u3 ** (1.0 / 3.0)
        ur_x = diff3 / (3.0 * ur * ur)
        det2 = ur * ur_x * bcp
        hoop = ur * math.sin(beta) / r if r > 0.0 else ur * bcp
        return hoop * det2
    out = u_region_jac_k(ureg, r, x3, eps, gamma)
    fr, dt = C.frob2_det_k(out[2], out[3], out[4], out[5], out[6])
    return dt


@njit
def u_det_k(r, x3, eps, gamma):
    ureg = u_classify_k(r, x3, eps)
    if ureg == U_OUTSIDE:
        return math.nan
    if ureg == U_ANN:
        out = u_jac_k(r, x3, eps, gamma)
        fr, dt = C.frob2_det_k(out[2], out[3], out[4], out[5], out[6])
        return dt
    return u_region_det_k(ureg, r, x3, eps, gamma)


@njit
def u_jac_k(r, x3, eps, gamma):
    ureg = u_classify_k(r, x3, eps)
    if ureg == U_OUTSIDE:
        return math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan
    if ureg != U_ANN:
        return u_region_jac_k(ureg, r, x3, eps, gamma)
    phibar = math.atan2(r, x3)
    h = 1e-7
    lo = phibar - h if phibar - h > 0.0 else 0.0
    hi = phibar + h if phibar + h < PI else PI
    P0, Psi0 = u_trace3_k(phibar, eps, gamma)
    P1, Psi1 = u_trace3_k(hi, eps, gamma)
    Pm, Psim = u_trace3_k(lo, eps, gamma)
    Pp = (P1 - Pm) / (hi - lo)
    Psip = (Psi1 - Psim) / (hi - lo)
    return C.annulus_jac_k(r, x3, P0, Psi0, Pp, Psip)
