"""The patched boundary data b_delta.

b_delta = u_eps on the core dist(x,U) <= delta/2, = v outside dist >= delta,
with explicit per-region interpolations in the transition layer; eps is tied
to delta by delta = c0 * eps^gamma with c0 > 14 (the binding constant of the
determinant chains).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kapprox as KA
from . import _kcore as K
from . import _kpatch as KP
from .approx import EpsProfileSet, u_singular_distance
from .dipole import REGION_CODES, REGION_NAMES
from .geom import AxiMap, HalfPlanePoint, Interface, OutsideDomain, PlanarJacobian, Point3, SingularSet

PI = math.pi
SQ2 = math.sqrt(2.0)


class CollisionDetected(ArithmeticError):
    """Two distinct sample points mapped within the collision tolerance."""


@dataclass
class PatchParams:
    """delta in (0,1], gamma in (0,1/3], c0 > 14; eps = (delta/c0)^(1/gamma).

    The choice takes equality in delta = c0 * eps^gamma (smallest admissible
    eps).  Derived smallness conditions are checked on construction:
    delta/2 >= 2*sqrt(2)*eps^gamma and delta/2 >= eps^(2*gamma).
    """

    delta: float
    gamma: float = 1.0 / 3.0
    c0: float = 16.0
    eps: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError("delta must lie in (0, 1]")
        if not (0.0 < self.gamma <= 1.0 / 3.0):
            raise ValueError("gamma must satisfy 0 < gamma <= 1/3")
        if not (self.c0 > 14.0):
            raise ValueError("the binding condition is c0 > 14")
        self.eps = (self.delta / self.c0) ** (1.0 / self.gamma)
        eg = self.eps_gamma
        if not (0.5 * self.delta >= 2.0 * SQ2 * eg):
            raise ValueError("need delta/2 >= 2*sqrt(2)*eps^gamma")
        if not (0.5 * self.delta >= self.eps ** (2.0 * self.gamma)):
            raise ValueError("need delta/2 >= eps^(2 gamma) in the layer")

    @property
    def eps_gamma(self) -> float:
        return self.eps ** self.gamma

    def profiles(self) -> EpsProfileSet:
        return EpsProfileSet(self.eps, self.gamma)

    def smallness_report(self) -> dict:
        eg = self.eps_gamma
        return {
            "delta": self.delta, "eps": self.eps, "c0": self.c0,
            "eps_gamma": eg,
            "delta_over_epsgamma": self.delta / eg,
            "half_delta_over_2sqrt2_epsgamma": 0.5 * self.delta / (2 * SQ2 * eg),
            "rprime_slope": 1.0 - 2.0 * SQ2 * eg / self.delta,
        }


@dataclass
class LayerGeometry:
    """The transition shell T_delta = {delta/2 <= dist(x,U) <= delta}."""

    params: PatchParams

    def in_layer(self, r: float, x3: float) -> bool:
        d = K.dist_to_U_k(r, x3)
        return 0.5 * self.params.delta <= d <= self.params.delta

    def sample(self, region: str, n: int, rng) -> np.ndarray:
        """Quasi-uniform meridian samples of T_delta within a dipole region."""
        delta = self.params.delta
        boxes = {
            "b": (1.0, 1.0 + delta + 1e-9, -(1.0 + delta), 0.0),
            "d": (0.0, 1.0 + delta + 1e-9, 0.0, 1.0),
            "e": (0.0, 1.0, 1.0, 2.0),
            "f": (0.0, 2.5, 1.0, 2.8),
        }
        lo_r, hi_r, lo_z, hi_z = boxes[region]
        code = REGION_CODES[region]
        out = []
        guard = 0
        while len(out) < n and guard < 500 * n:
            guard += 1
            r = rng.uniform(lo_r, hi_r)
            x3 = rng.uniform(lo_z, hi_z)
            if K.classify_k(r, x3) != code:
                continue
            if self.in_layer(r, x3):
                out.append((r, x3))
        if len(out) < n:
            raise RuntimeError(f"layer sampling starved in region {region}")
        return np.array(out)


def chi_delta(t: float, delta: float) -> float:
    """Affine cutoff: 1 on [0, delta/2], down to 0 at delta, 0 beyond."""
    if t < 0.0:
        raise ValueError("chi_delta defined for t >= 0")
    return KP.chi_delta_k(t, delta)


def b_delta_meridian(r: float, x3: float, params: PatchParams) -> tuple:
    wr, w3 = KP.bd_eval_k(r, x3, params.delta, params.eps, params.gamma)
    if math.isnan(wr):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return wr, w3


def b_delta_eval(p: Point3, params: PatchParams) -> Point3:
    wr, w3 = b_delta_meridian(p.r, p.x3, params)
    return Point3.from_meridian(wr, w3, p.theta)


def b_delta_planar_jacobian(p, params: PatchParams) -> PlanarJacobian:
    if isinstance(p, (Point3, HalfPlanePoint)):
        r, x3 = p.r, p.x3
    else:
        r, x3 = p
    out = KP.bd_jac_k(r, x3, params.delta, params.eps, params.gamma)
    if math.isnan(out[0]):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return PlanarJacobian(*out[2:7])


def layer_det_bound(p, params: PatchParams) -> dict:
    """Numeric determinant in the layer together with the explicit factor
    chain of the paper's Step-2 lower bound for the local region."""
    if isinstance(p, (Point3, HalfPlanePoint)):
        r, x3 = p.r, p.x3
    else:
        r, x3 = p
    zone, d0 = KP.bd_zone_k(r, x3, params.delta)
    if zone != 1:
        raise OutsideDomain("layer_det_bound expects a point of T_delta")
    delta, eps, gamma = params.delta, params.eps, params.gamma
    eg = params.eps_gamma
    reg = REGION_NAMES[K.classify_k(r, x3)]
    J = b_delta_planar_jacobian((r, x3), params)
    detv = J.det()
    chi = KP.chi_delta_k(d0, delta)
    chip = -2.0 / delta
    out = {"region": reg, "det": detv, "dist": d0, "chi": chi}
    if reg == "b":
        rho = math.hypot(r, x3)
        phi = math.atan2(r, x3)
        Phi = 0.5 * (phi + PI)
        s = rho - 1.0
        factor = 1.0 + eg * chip * (SQ2 + math.cos(Phi))
        rdelta = s + chi * SQ2 * eg
        bound = 0.5 * (rdelta ** 2 / rho ** 2) * (math.sin(Phi) / math.sin(phi)) * factor
        out.update(factor=factor, factor_floor=0.5, bound=bound, s=s)
    elif reg == "d":
        s, z, _ = K.g_map_k(r - chi * (r - KA.rhat_k(r, x3, eps, gamma)) if r < 1 else r, x3)
        phz = 0.25 * PI * (1.0 + z / 3.0)
        sphz = math.sin(phz)
        lb_absorb = (PI / 12.0) * s * (1.0 - 2.0 * (6.0 * eg / delta) * sphz)
        wr = chi * KA.omega_k(z, eps, gamma) + s * sphz
        out.update(s=s, z=z, stretch=wr / r,
                   stretch_lo=s * sphz / r, stretch_hi=2.0 + (s / r) * sphz,
                   lb_absorb=lb_absorb)
    elif reg == "e":
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        cphi = math.cos(phi)
        slope_bound = cphi * (1.0 - 14.0 * eg / delta)
        # measured radial slope of b_rho
        h = 1e-7
        b1 = _b_rho_e(rho + h, phi, params)
        b0 = _b_rho_e(rho - h, phi, params)
        brho = _b_rho_e(rho, phi, params)
        out.update(slope=(b1 - b0) / (2 * h), slope_bound=slope_bound,
                   brho_sq=brho ** 2, brho_sq_bound=0.25 * (1.0 + rho) ** 2 * cphi ** 2)
    else:
        factor_bound = 1.0 - 12.0 * eg / delta
        rho = math.hypot(r, x3 - 1.0)
        phi = math.atan2(r, x3 - 1.0)
        h = 1e-7
        b1 = _b_rho_f(rho + h, phi, params)
        b0 = _b_rho_f(rho - h, phi, params)
        out.update(slope=(b1 - b0) / (2 * h), factor_bound=factor_bound)
    return out


def _b_rho_e(rho, phi, params):
    r = rho * math.sin(phi)
    x3 = 1.0 + rho * math.cos(phi)
    wr, w3 = KP.bd_eval_k(r, x3, params.delta, params.eps, params.gamma)
    return math.hypot(wr, w3)


def _b_rho_f(rho, phi, params):
    return _b_rho_e(rho, phi, params)


def bilipschitz_probe(params: PatchParams, n_pairs: int = 20000, seed: int = 0,
                      collision_tol: float = 1e-12) -> dict:
    """Empirical Lipschitz data of b_delta over quasi-random 3D point pairs.

    Returns the max ratio L, min ratio l, the minimum sampled determinant and
    per-region layer det minima; raises CollisionDetected if two distinct
    samples map within collision_tol.
    """
    from scipy.stats import qmc
    from . import _kquad as KQ

    eng = qmc.Sobol(d=7, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(n_pairs, 2))))
    raw = eng.random(2 ** m)[:n_pairs]
    # two 3D points per row: (R, costheta_polar, theta) each, mapped into B(0,4)
    def to_pts(block):
        R = 4.0 * block[:, 0] ** (1.0 / 3.0)
        cs = 2.0 * block[:, 1] - 1.0
        ang = np.arccos(np.clip(cs, -1, 1))
        th = 2.0 * PI * block[:, 2] if block.shape[1] > 2 else np.zeros(len(block))
        return np.column_stack([R * np.sin(ang), R * np.cos(ang), th])

    A3 = to_pts(raw[:, 0:3])
    B3 = to_pts(np.column_stack([raw[:, 3], raw[:, 4], raw[:, 5]]))
    ratios = KQ.pair_ratios_k(3, A3, B3, params.eps, params.gamma, params.delta)
    ratios = ratios[np.isfinite(ratios)]
    dom = np.sqrt(np.sum((A3 - B3) ** 2, axis=1))
    img = ratios * dom[: len(ratios)]
    coll = np.where((img < collision_tol) & (dom[: len(ratios)] > 1e-9))[0]
    if len(coll):
        raise CollisionDetected(f"{len(coll)} collisions at tol {collision_tol}")
    # det sampling: uniform over the ball + structured layer sampling
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n_pairs // 2:
        x3 = rng.uniform(-4, 4)
        r = rng.uniform(0, math.sqrt(max(16 - x3 * x3, 1e-12)))
        if K.classify_k(r, x3) >= 0 and r > 1e-9:
            pts.append((r, x3))
    dets = KQ.sample_jacs_k(3, np.array(pts), params.eps, params.gamma, params.delta)[:, 1]
    geom = LayerGeometry(params)
    layer_min = {}
    for regn in ("b", "d", "e", "f"):
        sp = geom.sample(regn, 2000, rng)
        dd = KQ.sample_jacs_k(3, sp, params.eps, params.gamma, params.delta)[:, 1]
        layer_min[regn] = float(np.min(dd))
    return {
        "L_upper": float(np.max(ratios)),
        "l_lower": float(np.min(ratios)),
        "min_det": float(np.min(dets)),
        "layer_min_det": layer_min,
        "n_pairs": int(len(ratios)),
    }


def b_delta_axi_map(params: PatchParams) -> AxiMap:
    delta, eps, gamma = params.delta, params.eps, params.gamma
    prof = params.profiles()

    def _classify(r, x3):
        code = K.classify_k(r, x3)
        if code == K.R_OUTSIDE:
            return None
        zone, _ = KP.bd_zone_k(r, x3, delta)
        return f"{REGION_NAMES[code]}:{('core', 'layer', 'ext')[zone]}"

    def _eval(r, x3):
        return KP.bd_eval_k(r, x3, delta, eps, gamma)

    def _eval_region(tag, r, x3):
        name, zone = tag.split(":")
        if zone == "core":
            return KA.u_eval_k(r, x3, eps, gamma)
        if zone == "ext":
            return K.v_eval_k(r, x3)
        d0 = K.dist_to_U_k(r, x3)
        return KP.bd_layer_eval_k(REGION_CODES[name], r, x3, d0, delta, eps, gamma)

    def _jac(r, x3):
        return b_delta_planar_jacobian((r, x3), params)

    def _sing(r, x3):
        d0 = K.dist_to_U_k(r, x3)
        return min(u_singular_distance(r, x3, prof),
                   abs(d0 - 0.5 * delta), abs(d0 - delta))

    interfaces = []
    # core/layer and layer/exterior seams per region, parametrised along the
    # region-b ray, the region-d level curve leg on {x3 = const}, the
    # region-e ray and the region-f ray
    for lvl, zones in ((0.5 * delta, ("core", "layer")), (delta, ("layer", "ext"))):
        interfaces.append(Interface(
            f"b@{lvl:g}", (f"b:{zones[0]}", f"b:{zones[1]}"),
            lambda t, lvl=lvl: ((1 + lvl) * math.sin(PI / 2 + t * PI / 2),
                                (1 + lvl) * math.cos(PI / 2 + t * PI / 2))))
        interfaces.append(Interface(
            f"d-arc@{lvl:g}", (f"d:{zones[0]}", f"d:{zones[1]}"),
            lambda t, lvl=lvl: (1.0 + lvl * math.cos(t * PI / 2 * 0.999),
                                lvl * math.sin(t * PI / 2 * 0.999))))
        if lvl < 0.5:
            interfaces.append(Interface(
                f"d-tube@{lvl:g}", (f"d:{zones[0]}", f"d:{zones[1]}"),
                lambda t, lvl=lvl: (lvl, lvl + t * (1.0 - 2.0 * lvl))))
        interfaces.append(Interface(
            f"e@{lvl:g}", (f"e:{zones[0]}", f"e:{zones[1]}"),
            lambda t, lvl=lvl: ((lvl / math.cos(pphi(t, lvl))) * math.sin(pphi(t, lvl)),
                                1.0 + lvl)))
    # region-e parametrisation helper is defined below module level

    sing = [SingularSet("bdelta-seams", _sing)]
    return AxiMap(
        name=f"b_delta[{delta:g}]",
        classify=_classify,
        evaluate=_eval,
        eval_region=_eval_region,
        jac_region=None,
        jacobian=_jac,
        singular_sets=sing,
        interfaces=interfaces,
    )


def pphi(t: float, lvl: float) -> float:
    """Angle along the region-e layer level curve rho cos(phi) = lvl."""
    phimax = math.acos(min(1.0, lvl))
    return t * 0.98 * phimax


def export_sections(path: str, params: PatchParams, n: int = 120) -> int:
    """CSV meridian sections (reference and deformed) of b_delta."""
    rows = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "x3", "zone", "region", "image_r", "image_x3"])
        for r in np.linspace(1e-6, 4.0, n):
            for x3 in np.linspace(-4.0, 4.0, 2 * n):
                code = K.classify_k(r, x3)
                if code == K.R_OUTSIDE:
                    continue
                zone, _ = KP.bd_zone_k(r, x3, params.delta)
                wrr, w3 = KP.bd_eval_k(r, x3, params.delta, params.eps, params.gamma)
                wr.writerow([f"{r:.17g}", f"{x3:.17g}",
                             ("core", "layer", "ext")[zone], REGION_NAMES[code],
                             f"{wrr:.17g}", f"{w3:.17g}"])
                rows += 1
    return rows
