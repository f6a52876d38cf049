"""The regularising family u_eps.

u_eps opens the collapsed sets of the dipole at scale eps^gamma: a tube of
radius omega_eps around the axis segment, a small sphere in place of the
origin, and a shifted copy of v elsewhere.  The construction follows the
per-region closed forms (shell profiles, the planar chart psi, the slab
composition with the reparametrised radius), plus explicit surrogate charts
for the four small core regions the construction leaves to a reference
(half-ball shell, origin half-ball, axis cylinder, cavitation ball); the
surrogate matches every trace of the defined regions exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kapprox as KA
from . import _kcore as K
from .dipole import v_singular_distance
from .geom import (AxiMap, HalfPlanePoint, Interface, OutsideDomain,
                   PlanarJacobian, Point3, SingularSet)

PI = math.pi
SQ2 = math.sqrt(2.0)

U_REGION_NAMES = {
    KA.U_ASHELL: "a_shell", KA.U_APRIME: "a_prime", KA.U_CPRIME: "c_prime",
    KA.U_EPRIME: "e_prime", KA.U_ESHELL: "e_shell", KA.U_DSLAB: "d_slab",
    KA.U_B: "b", KA.U_F: "f", KA.U_ANN: "outer",
}
U_REGION_CODES = {v: k for k, v in U_REGION_NAMES.items()}


class OutOfRange(ValueError):
    pass


class BracketFailure(ArithmeticError):
    pass


@dataclass
class EpsProfileSet:
    """Scalar profiles of u_eps at a fixed regularisation scale.

    gamma must satisfy 0 < gamma <= 1/3; the monotone inverse g_eps of f_eps
    is tabulated on a uniform angle grid (used as a bracketing accelerator;
    evaluation refines by bisection + Newton to 1e-12).
    """

    eps: float
    gamma: float = 1.0 / 3.0
    table_size: int = 257
    eps_gamma: float = field(init=False)
    alpha_eps: float = field(init=False)
    fp_at_eps: float = field(init=False)
    eta: float = field(init=False)
    g_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.eps > 0.0):
            raise ValueError("eps must be positive")
        if not (0.0 < self.gamma <= 1.0 / 3.0):
            raise ValueError("gamma must satisfy 0 < gamma <= 1/3")
        self.eps_gamma = self.eps ** self.gamma
        self.alpha_eps = math.atan(self.eps)
        self.fp_at_eps = KA.fp_eps_k(self.eps, self.eps)
        self.eta = KA.eta_k(self.eps, self.gamma)
        phis = np.linspace(0.0, 0.5 * PI, self.table_size)
        self.g_table = np.array([[p, KA.g_eps_k(p, self.eps)] for p in phis])

    def f_eps(self, r: float) -> float:
        if not (0.0 <= r <= self.eps):
            raise OutOfRange(f"f_eps defined on [0, eps], got {r}")
        return KA.f_eps_k(r, self.eps)

    def f_eps_prime(self, r: float) -> float:
        return KA.fp_eps_k(r, self.eps)

    def g_eps(self, t: float) -> float:
        if not (0.0 <= t <= 0.5 * PI + 1e-15):
            raise OutOfRange(f"g_eps defined on [0, pi/2], got {t}")
        g = KA.g_eps_k(t, self.eps)
        if 0.0 < t < 0.5 * PI and abs(KA.f_eps_k(g, self.eps) - t) > 1e-10:
            raise BracketFailure(f"g_eps({t}) residual too large")
        return g

    def omega(self, z: float) -> float:
        if not (0.0 <= z <= 3.0):
            raise OutOfRange(f"omega_eps defined on [0,3], got {z}")
        return KA.omega_k(z, self.eps, self.gamma)

    def u_rho_edge(self, phi: float) -> float:
        if not (0.0 <= phi <= 0.5 * PI + 1e-15):
            raise OutOfRange("edge profile defined for phi in [0, pi/2]")
        return KA.u_edge_k(phi, self.eps, self.gamma)


def omega_eps(z: float, profiles: EpsProfileSet) -> float:
    return profiles.omega(z)


def f_eps(r: float, profiles: EpsProfileSet) -> float:
    return profiles.f_eps(r)


def g_eps(t: float, profiles: EpsProfileSet) -> float:
    return profiles.g_eps(t)


def eta_eps(profiles: EpsProfileSet) -> float:
    return profiles.eta


def u_rho_e(rho: float, phi: float, profiles: EpsProfileSet) -> float:
    """Radial profile of the upper shell for rho in [eps, 1], phi in [0, pi/2]."""
    if not (profiles.eps <= rho <= 1.0):
        raise OutOfRange("u_rho_e defined for rho in [eps, 1]")
    if not (0.0 <= phi <= 0.5 * PI + 1e-15):
        raise OutOfRange("u_rho_e defined for phi in [0, pi/2]")
    eps, g = profiles.eps, profiles.gamma
    edge = KA.u_edge_k(phi, eps, g)
    return ((1.0 - rho) * edge
            + (rho - eps) * (2.0 * math.cos(phi) + 6.0 * profiles.eps_gamma)) / (1.0 - eps)


@dataclass
class PsiMap:
    """The planar cavity-opening chart of region b.

    Conditions: identity on the half-line r = 1 + |x3|; the circle of radius
    sqrt(2) about (0,1) is mapped onto the unit circle through the prescribed
    arc action; identity outside radius 2*sqrt(2) about (0,1).
    """

    corner_p: float = KA.P_PSI

    def eval(self, q: HalfPlanePoint) -> HalfPlanePoint:
        R = math.hypot(q.r, q.x3 - 1.0)
        if R < SQ2 * (1.0 - 1e-12):
            raise OutsideDomain("psi domain requires r^2 + (x3-1)^2 >= 2")
        if q.x3 > 1e-12 or q.r > 1.0 + abs(q.x3) + 1e-12:
            raise OutsideDomain("psi domain requires x3 <= 0 and r <= 1 + |x3|")
        pr, p3 = KA.psi_k(q.r, q.x3)
        return HalfPlanePoint(pr, p3)

    def jacobian(self, q: HalfPlanePoint) -> PlanarJacobian:
        pr, p3, a, b, c, d = KA.psi_jac_k(q.r, q.x3)
        hoop = pr / q.r if q.r > 0 else a
        return PlanarJacobian(a, b, c, d, hoop)


def psi_eval(q: HalfPlanePoint) -> HalfPlanePoint:
    return PsiMap().eval(q)


@dataclass
class CoreSurrogate:
    """Descriptor of the surrogate charts filling the core regions.

    The sweep of the axis cylinder over the bubble uses the near-optimal
    logarithmic profile beta_c(r) = (pi/2) arctan(K r/eps)/arctan(K); its
    Dirichlet cost tends to 2*pi*(1 + O(1/K)), the amount the energy gap
    requires.  Lipschitz constants are eps-dependent and only reported.
    """

    K: float = KA.K_CORE
    regions: tuple = ("a_shell", "a_prime", "c_prime", "e_prime")

    def lipschitz_report(self, profiles: EpsProfileSet, n: int = 4000, seed: int = 0) -> dict:
        rng = np.random.default_rng(seed)
        eps, g = profiles.eps, profiles.gamma
        out = {}
        for name in self.regions:
            code = U_REGION_CODES[name]
            sup = 0.0
            mind = math.inf
            for _ in range(n):
                r, x3 = _sample_u_region(code, eps, rng)
                j = KA.u_region_jac_k(code, r, x3, eps, g)
                fr, dt = K.frob2_det_k(*j[2:])
                sup = max(sup, math.sqrt(fr))
                mind = min(mind, dt)
            out[name] = {"sup_grad": sup, "min_det": mind}
        return out


def _sample_u_region(code: int, eps: float, rng, margin: float = 1e-3):
    """Uniform-ish sample strictly inside a u_eps region."""
    if code == KA.U_ASHELL:
        rho = rng.uniform(eps * (1 + margin), 1 - margin)
        phi = rng.uniform(PI / 2 + margin, PI - margin)
        return rho * math.sin(phi), rho * math.cos(phi)
    if code == KA.U_APRIME:
        rho = rng.uniform(eps * margin, eps * (1 - margin))
        phi = rng.uniform(PI / 2 + margin, PI - margin)
        return rho * math.sin(phi), rho * math.cos(phi)
    if code == KA.U_CPRIME:
        return rng.uniform(eps * margin, eps * (1 - margin)), rng.uniform(margin, 1 - margin)
    if code == KA.U_EPRIME:
        rho = rng.uniform(eps * margin, eps * (1 - margin))
        phi = rng.uniform(margin, PI / 2 - margin)
        return rho * math.sin(phi), 1 + rho * math.cos(phi)
    if code == KA.U_ESHELL:
        rho = rng.uniform(eps * (1 + margin), 1 - margin)
        phi = rng.uniform(margin, PI / 2 - margin)
        return rho * math.sin(phi), 1 + rho * math.cos(phi)
    if code == KA.U_DSLAB:
        x3 = rng.uniform(margin, 1 - margin)
        return rng.uniform(eps * (1 + margin), math.sqrt(9 - x3 * x3) - margin), x3
    if code == KA.U_B:
        rho = rng.uniform(1 + margin, 3 - margin)
        phi = rng.uniform(PI / 2 + margin, PI - margin)
        return rho * math.sin(phi), rho * math.cos(phi)
    if code == KA.U_F:
        while True:
            rho = rng.uniform(1 + margin, 2.0)
            phi = rng.uniform(margin, PI / 2 - margin)
            r, x3 = rho * math.sin(phi), 1 + rho * math.cos(phi)
            if r * r + x3 * x3 < 8.9:
                return r, x3
    R = rng.uniform(3 + margin, 4 - margin)
    phib = rng.uniform(margin, PI - margin)
    return R * math.sin(phib), R * math.cos(phib)


def u_eps_meridian(r: float, x3: float, profiles: EpsProfileSet) -> tuple:
    wr, w3 = KA.u_eval_k(r, x3, profiles.eps, profiles.gamma)
    if math.isnan(wr):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return wr, w3


def u_eps_eval(p: Point3, profiles: EpsProfileSet) -> Point3:
    wr, w3 = u_eps_meridian(p.r, p.x3, profiles)
    return Point3.from_meridian(wr, w3, p.theta)


def u_eps_planar_jacobian(p, profiles: EpsProfileSet,
                          region: Optional[str] = None) -> PlanarJacobian:
    if isinstance(p, (Point3, HalfPlanePoint)):
        r, x3 = p.r, p.x3
    else:
        r, x3 = p
    if region is None:
        out = KA.u_jac_k(r, x3, profiles.eps, profiles.gamma)
    else:
        code = U_REGION_CODES[region]
        if code == KA.U_ANN:
            out = KA.u_jac_k(r, x3, profiles.eps, profiles.gamma)
        else:
            out = KA.u_region_jac_k(code, r, x3, profiles.eps, profiles.gamma)
    if math.isnan(out[0]):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return PlanarJacobian(*out[2:7])


def u_singular_distance(r: float, x3: float, profiles: EpsProfileSet) -> float:
    """Distance estimate to seams/kinks of u_eps (for test-point margins)."""
    eps, eg = profiles.eps, profiles.eps_gamma
    cands = [v_singular_distance(r, x3)]
    rho0 = math.hypot(r, x3)
    rho1 = math.hypot(r, x3 - 1.0)
    cands += [abs(rho0 - eps), abs(rho1 - eps), abs(r - eps),
              abs(rho0 - eps ** (2 * profiles.gamma)),
              abs(r - eps ** (2 * profiles.gamma))]
    if x3 <= 0.0 and rho0 > 1.0:
        # psi radial-zone kinks at s/eps_gamma + sqrt2 in {sqrt2, 2 sqrt2}
        s = rho0 - 1.0
        cands += [abs(s), abs(s - SQ2 * eg)]
    return min(cands)


def u_axi_map(profiles: EpsProfileSet, include_core: bool = True) -> AxiMap:
    """u_eps as an AxiMap.

    include_core=False restricts to the regions with paper-prescribed
    formulas; the slab then excludes the axis tube r <= eps, which
    on_axis_limit reports as AxisSingular (opened tube of radius ~omega_eps).
    """
    eps, gamma = profiles.eps, profiles.gamma

    def _classify(r, x3):
        code = KA.u_classify_k(r, x3, eps)
        if code == KA.U_OUTSIDE:
            return None
        name = U_REGION_NAMES[code]
        if not include_core and name in ("a_shell", "a_prime", "c_prime", "e_prime"):
            return None
        return name

    def _eval(r, x3):
        return KA.u_eval_k(r, x3, eps, gamma)

    def _eval_region(tag, r, x3):
        code = U_REGION_CODES[tag]
        if code == KA.U_ANN:
            return KA.u_eval_k(r, x3, eps, gamma)
        return KA.u_region_eval_k(code, r, x3, eps, gamma)

    def _jac_region(tag, r, x3):
        return u_eps_planar_jacobian((r, x3), profiles, region=tag)

    def _jac(r, x3):
        return u_eps_planar_jacobian((r, x3), profiles)

    t13 = 1.0 / 3.0
    interfaces = [
        Interface("a_shell/b", ("a_shell", "b"),
                  lambda t: (math.sin(PI / 2 + t * PI / 2), math.cos(PI / 2 + t * PI / 2))),
        Interface("a_shell/d_slab", ("a_shell", "d_slab"),
                  lambda t: (eps + (1 - eps) * t, 0.0)),
        Interface("b/d_slab", ("b", "d_slab"), lambda t: (1.0 + 2.0 * t, 0.0)),
        Interface("a_shell/a_prime", ("a_shell", "a_prime"),
                  lambda t: (eps * math.sin(PI / 2 + t * PI / 2), eps * math.cos(PI / 2 + t * PI / 2))),
        Interface("a_prime/c_prime", ("a_prime", "c_prime"), lambda t: (eps * t, 0.0)),
        Interface("c_prime/d_slab", ("c_prime", "d_slab"), lambda t: (eps, t)),
        Interface("c_prime/e_prime", ("c_prime", "e_prime"), lambda t: (eps * t, 1.0)),
        Interface("e_prime/e_shell", ("e_prime", "e_shell"),
                  lambda t: (eps * math.sin(t * PI / 2), 1.0 + eps * math.cos(t * PI / 2))),
        Interface("e_shell/d_slab", ("e_shell", "d_slab"),
                  lambda t: (eps + (1 - eps) * t, 1.0), tol=1e-6),
        Interface("e_shell/f", ("e_shell", "f"),
                  lambda t: (math.sin(t * PI / 2), 1.0 + math.cos(t * PI / 2)), tol=1e-6),
        Interface("d_slab/f", ("d_slab", "f"),
                  lambda t: (1.0 + t * (math.sqrt(8.0) - 1.0 - 1e-12), 1.0)),
        Interface("inner/outer", ("d_slab", "outer"),
                  lambda t: (3.0 * math.sin(t * PI), 3.0 * math.cos(t * PI)), tol=1e-6),
    ]
    if not include_core:
        interfaces = [i for i in interfaces
                      if not (set(i.regions) & {"a_shell", "a_prime", "c_prime", "e_prime"})]

    sing = [SingularSet("u-seams", lambda r, x3: u_singular_distance(r, x3, profiles))]

    def _fd_scale(r, x3):
        # shrink the default step near the eps-scale core features
        d = min(math.hypot(r, x3), math.hypot(r, x3 - 1.0), r if 0 < x3 < 1 else math.inf)
        if d < 4.0 * eps:
            return max(eps * 1e-2, 1e-9) / 1e-6
        return 1.0

    def _axis_gap(x3):
        if include_core:
            return 0.0
        return eps if 0.0 < x3 < 1.0 else 0.0

    return AxiMap(
        name=f"u_eps[{eps:g}]",
        classify=_classify,
        evaluate=_eval,
        eval_region=_eval_region,
        jac_region=_jac_region,
        jacobian=_jac,
        singular_sets=sing,
        interfaces=interfaces,
        fd_scale=_fd_scale,
        axis_gap=_axis_gap,
    )


def dump_profiles(path_prefix: str, profiles: EpsProfileSet, n: int = 400) -> tuple:
    """CSV dumps (z, omega_eps(z)) and (r, f_eps(r)) for inspection."""
    p_omega = f"{path_prefix}_omega.csv"
    p_f = f"{path_prefix}_f.csv"
    with open(p_omega, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["z", "omega_eps"])
        for z in np.linspace(0.0, 3.0, n):
            wr.writerow([f"{z:.17g}", f"{profiles.omega(z):.17g}"])
    with open(p_f, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "f_eps"])
        for r in np.linspace(0.0, profiles.eps, n):
            wr.writerow([f"{r:.17g}", f"{profiles.f_eps(r):.17g}"])
    return p_omega, p_f
