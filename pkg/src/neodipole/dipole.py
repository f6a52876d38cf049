"""The singular dipole deformation v on B(0,4).

Region atlas (meridian section):
  a  lower unit half-ball about the origin        (collapses onto the origin)
  b  lower shell 1 < rho <= 3                     (angle-halving cone map)
  d  slab 0 <= x3 <= 1 inside |x| <= 3            (composition with the chart g)
  e  upper unit half-ball about (0,0,1)           (cavitation at the center)
  f  upper outer region inside |x| <= 3
  outer  annulus 3 <= |x| <= 4, blended to the identity on |x| = 4

v maps the half-ball a onto the closed ball bounded by the bubble
Gamma = {y_1^2+y_2^2+(y_3-1/2)^2 = 1/4} and e onto its exterior cap; the
inverse jumps across Gamma with amplitude 1 (the distance of the two poles),
so the singular part of the inverse has total mass pi = area(Gamma).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kcore as K
from .geom import (AxiMap, HalfPlanePoint, Interface, OutsideDomain, OutsideSlab,
                   PlanarJacobian, Point3, SingularPoint, SingularSet)

PI = math.pi

REGION_NAMES = {K.R_A: "a", K.R_B: "b", K.R_D: "d", K.R_E: "e", K.R_F: "f",
                K.R_OUTER: "outer"}
REGION_CODES = {v: k for k, v in REGION_NAMES.items()}

#: deterministic tie-break order on region closures
TIE_BREAK = ("a", "e", "d", "b", "f", "outer")


class TraceInversionFailed(ArithmeticError):
    """Root-finding on a monotone radial profile did not converge."""


@dataclass(frozen=True)
class BadSetU:
    """The bad set U: closed lower half-ball, axis segment, punctured top disk."""

    ball_radius: float = 1.0
    segment: tuple = (0.0, 1.0)
    disk_height: float = 1.0

    def contains(self, p: Point3, tol: float = 0.0) -> bool:
        return dist_to_U(p) <= tol

    def distance(self, p: Point3) -> float:
        return dist_to_U(p)


@dataclass(frozen=True)
class GMeshCell:
    name: str
    vertices: tuple          # meridian (r, x3) corners
    kind: str                # "affine" | "bilinear" | "polar"


@dataclass
class GMesh:
    """Anchor data of the planar chart g (the Figure-4 mesh realisation)."""

    anchors: dict = field(default_factory=lambda: {
        "A": ((1.0, 0.0), (0.0, 0.0)),
        "B": ((0.0, 0.0), (0.0, 1.0)),
        "C": ((0.0, 1.0), (0.0, 2.0)),
        "D": ((1.0, 1.0), (0.0, 3.0)),
        "T": ((1 / 3, 0.0), (0.0, 2 / 3)),
        "U": ((0.0, 1 / 3), (0.0, 4 / 3)),
        "V": ((0.0, 2 / 3), (0.0, 5 / 3)),
        "W": ((1 / 3, 1.0), (0.0, 7 / 3)),
        "P": ((1.0, 1 / 3), (1 / 3, 1 / 3)),
        "Q": ((1 / 3, 1 / 3), (1 / 3, 1.0)),
        "R": ((1 / 3, 2 / 3), (1 / 3, 2.0)),
        "S": ((1.0, 2 / 3), (1 / 3, 8 / 3)),
        "A'": ((4 / 3, 0.0), (1 / 3, 0.0)),
        "D'": ((4 / 3, 1.0), (1 / 3, 3.0)),
    })
    cells: tuple = (
        GMeshCell("bottom-block", ((0, 0), (1, 0), (1, 1 / 3), (0, 1 / 3)), "affine"),
        GMeshCell("mid-column", ((0, 1 / 3), (1 / 3, 1 / 3), (1 / 3, 2 / 3), (0, 2 / 3)), "bilinear"),
        GMeshCell("top-block", ((0, 2 / 3), (1, 2 / 3), (1, 1), (0, 1)), "affine"),
        GMeshCell("mid-square-low", ((1 / 3, 1 / 3), (1, 1 / 3), (1, 1 / 2), (1 / 3, 1 / 2)), "affine"),
        GMeshCell("mid-square-up", ((1 / 3, 1 / 2), (1, 1 / 2), (1, 2 / 3), (1 / 3, 2 / 3)), "affine"),
        GMeshCell("rim-wedge-low", ((1, 0), (3, 0), (1, 1 / 2)), "polar"),
        GMeshCell("rim-wedge-up", ((1, 1), (3, 1), (1, 1 / 2)), "polar"),
    )

    def vertex_images(self) -> dict:
        return {k: g_map(HalfPlanePoint(*ref)) for k, (ref, _img) in self.anchors.items()}


@dataclass(frozen=True)
class JumpTrace:
    """Two-sided inverse trace at a bubble point y (meridian section)."""

    y: HalfPlanePoint
    inner: HalfPlanePoint        # limit of v^{-1} from inside the bubble
    outer: HalfPlanePoint        # limit from outside
    amplitude: float
    residual_inner: float
    residual_outer: float

    @property
    def jump(self) -> tuple:
        return (self.inner.r - self.outer.r, self.inner.x3 - self.outer.x3)


def _coerce(p) -> tuple:
    if isinstance(p, Point3):
        return p.r, p.x3
    if isinstance(p, HalfPlanePoint):
        return p.r, p.x3
    if len(p) == 3:
        return math.hypot(p[0], p[1]), p[2]
    return float(p[0]), float(p[1])


def dist_to_U(p) -> float:
    """Exact distance to the bad set U, by case analysis (no sampling)."""
    r, x3 = _coerce(p)
    return K.dist_to_U_k(r, x3)


def classify(p) -> str:
    """Region tag of a point of B(0,4); raises OutsideDomain beyond radius 4."""
    r, x3 = _coerce(p)
    code = K.classify_k(r, x3)
    if code == K.R_OUTSIDE:
        raise OutsideDomain(f"|p| = {math.hypot(r, x3):.6g} > 4")
    return REGION_NAMES[code]


def g_map(p: HalfPlanePoint) -> tuple:
    """The auxiliary planar chart (s, z) on the slab; s = dist(x,U) wherever
    the distance is <= 1/3 (same code path as dist_to_U)."""
    r, x3 = _coerce(p)
    if not (0.0 <= x3 <= 1.0) or r * r + x3 * x3 > 9.0 * (1 + 1e-12):
        raise OutsideSlab(f"({r}, {x3}) outside the slab cap")
    s, z, _piece = K.g_map_k(r, x3)
    return s, z


def g_planar_jacobian(p: HalfPlanePoint) -> tuple:
    """(s, z, ds/dr, ds/dx3, dz/dr, dz/dx3) of the chart g."""
    r, x3 = _coerce(p)
    if not (0.0 <= x3 <= 1.0) or r * r + x3 * x3 > 9.0 * (1 + 1e-12):
        raise OutsideSlab(f"({r}, {x3}) outside the slab cap")
    s, z, sr, sx, zr, zx, _piece = K.g_jac_k(r, x3)
    return s, z, sr, sx, zr, zx


def v_eval_meridian(r: float, x3: float) -> tuple:
    wr, w3 = K.v_eval_k(r, x3)
    if math.isnan(wr):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return wr, w3


def v_eval(p: Point3) -> Point3:
    """The dipole deformation (3D points; axisymmetric, swirl-free)."""
    wr, w3 = v_eval_meridian(p.r, p.x3)
    return Point3.from_meridian(wr, w3, p.theta)


def v_planar_jacobian(p, region: Optional[str] = None) -> PlanarJacobian:
    """Analytic planar Jacobian of v (per-region closed forms; the outer
    annulus differentiates its boundary trace by a 1D finite difference)."""
    r, x3 = _coerce(p)
    if region is None:
        out = K.v_jac_k(r, x3)
    else:
        code = REGION_CODES[region]
        if code == K.R_OUTER:
            out = K.v_jac_k(r, x3)
        else:
            out = K.v_region_jac_k(code, r, x3)
    if math.isnan(out[0]):
        raise OutsideDomain(f"|({r},{x3})| > 4")
    return PlanarJacobian(*out[2:7])


def v_det(p, region: Optional[str] = None, guard: float = 1e-9) -> float:
    """det Dv via the closed forms; raises SingularPoint within `guard` of the
    declared singular sets (bad-set boundary, poles, chart corner)."""
    r, x3 = _coerce(p)
    if guard > 0.0:
        d = min(K.dist_to_U_k(r, x3), math.hypot(r, x3 - 1.0),
                math.hypot(r - 1.0, x3 - 0.5))
        if d < guard:
            raise SingularPoint(f"({r},{x3}) within {guard} of a singular set")
    return v_planar_jacobian((r, x3), region=region).det()


def v_outer_extension(p: Point3) -> Point3:
    """The annulus blend on 3 <= |p| <= 4 (identity on the outer sphere)."""
    R = p.norm()
    if not (3.0 - 1e-12 <= R <= 4.0 + 1e-12):
        raise OutsideDomain("outer extension defined on 3 <= |p| <= 4")
    return v_eval(p)


def _invert_monotone_radial(target: float, lo: float, hi: float, profile,
                            tol: float = 1e-14, iters: int = 200) -> float:
    """Bisection for profile(rho) = target on a monotone bracket [lo, hi]."""
    flo = profile(lo) - target
    fhi = profile(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise TraceInversionFailed(
            f"no bracket: f({lo})={flo:.3g}, f({hi})={fhi:.3g}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = profile(mid) - target
        if fm == 0.0 or (hi - lo) < tol:
            return mid
        if flo * fm <= 0.0:
            hi = mid
            fhi = fm
        else:
            lo = mid
            flo = fm
    return 0.5 * (lo + hi)


def jump_trace(phi_img: float, h: float = 1e-9) -> JumpTrace:
    """Two-sided inverse trace at the bubble point with image polar angle
    phi_img in (0, pi/2).

    The inner trace inverts the region-a radial profile at image radius
    cos(phi) - h, the outer trace the region-e profile at cos(phi) + h.
    """
    c = math.cos(phi_img)
    s = math.sin(phi_img)
    y = HalfPlanePoint(c * s, c * c)
    # region a: radius profile rho -> (1 - rho) cos(phi_img), decreasing
    rho_in = _invert_monotone_radial(c - h, 0.0, 1.0, lambda t: (1.0 - t) * c)
    inner = HalfPlanePoint(rho_in * s, -rho_in * c)
    # region e: rho -> (1 + rho) cos(phi_img), increasing
    rho_out = _invert_monotone_radial(c + h, 0.0, 1.0, lambda t: (1.0 + t) * c)
    outer = HalfPlanePoint(rho_out * s, 1.0 + rho_out * c)
    wi = K.v_region_eval_k(K.R_A, inner.r, inner.x3)
    wo = K.v_region_eval_k(K.R_E, outer.r, outer.x3)
    ri = math.hypot(wi[0] - (c - h) * s, wi[1] - (c - h) * c)
    ro = math.hypot(wo[0] - (c + h) * s, wo[1] - (c + h) * c)
    amp = math.hypot(inner.r - outer.r, inner.x3 - outer.x3)
    return JumpTrace(y, inner, outer, amp, ri, ro)


def singular_inverse_norm(n_nodes: int = 96, h: float = 1e-9) -> dict:
    """Total variation of the singular part of Dv^{-1}: the jump amplitude of
    the inverse integrated over the bubble.

    Gauss-Legendre in the bubble's own polar angle beta in (0, pi), with
    surface measure dH^2 = (pi/2) sin(beta) dbeta (total mass pi).
    """
    t0 = time.perf_counter()
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    beta = 0.5 * PI * (x + 1.0)
    wq = 0.5 * PI * w
    traces = []
    total = 0.0
    amp_min, amp_max = math.inf, -math.inf
    for b, wt in zip(beta, wq):
        tr = jump_trace(0.5 * b, h=h)
        traces.append(tr)
        total += wt * 0.5 * PI * math.sin(b) * tr.amplitude
        amp_min = min(amp_min, tr.amplitude)
        amp_max = max(amp_max, tr.amplitude)
    return {
        "norm": total,
        "area": PI,
        "amplitude_min": amp_min,
        "amplitude_max": amp_max,
        "max_residual": max(max(t.residual_inner, t.residual_outer) for t in traces),
        "n_nodes": n_nodes,
        "traces": traces,
        "runtime_s": time.perf_counter() - t0,
    }


# ---------------------------------------------------------------------------
# AxiMap assembly
# ---------------------------------------------------------------------------

def _seam_point_distance(r, x3, pts):
    return min(math.hypot(r - a, x3 - b) for a, b in pts)


def _g_seam_distance(r, x3):
    """Distance estimate to the internal seams of the chart g (slab only)."""
    cands = [abs(x3), abs(1.0 - x3)]
    if r <= 1.05:
        cands += [abs(x3 - 1 / 3), abs(x3 - 2 / 3), abs(x3 - 0.5), abs(r - 1 / 3)]
        if r <= 1 / 3:
            pass
        else:
            cands += [abs(x3 - (1 / 3 + (r - 1 / 3) / 4)) / 1.1,
                      abs(x3 - (2 / 3 - (r - 1 / 3) / 4)) / 1.1]
        cands += [abs(r - x3), abs(r - (1.0 - x3))]
    cands.append(abs(r - 1.0))
    for cx in (0.0, 1.0):
        tau = math.hypot(r - 1.0, x3 - cx)
        cands += [abs(tau - 1 / 3), abs(tau - 0.5)]
        if r > 1.0 and tau > 1e-12:
            sig = math.atan2(abs(x3 - cx), r - 1.0)
            se = K._g_sigend(tau)
            u = min(sig / se, 1.0)
            u0 = 0.25 / (K._g_kappa(tau) - K.H_SLOPE1)
            cands.append(abs(u - u0) * se * tau)
    cands.append(math.hypot(r - 1.0, x3 - 0.5))   # sqrt-cusp corner
    return min(cands)


def v_singular_distance(r: float, x3: float) -> float:
    """Distance to the declared singular/seam set of v."""
    code = K.classify_k(r, x3)
    cands = [K.dist_to_U_k(r, x3),                  # bad set (det -> 0 / poles)
             math.hypot(r, x3 - 1.0),               # cavitation point 0'
             abs(math.hypot(r, x3) - 1.0),          # a/b interface sphere
             abs(math.hypot(r, x3 - 1.0) - 1.0),    # e/f interface sphere
             abs(math.hypot(r, x3) - 3.0),          # annulus seam
             ]
    if code == K.R_D or (0.0 - 0.05 <= x3 <= 1.05):
        cands.append(_g_seam_distance(r, x3))
    else:
        cands += [abs(x3), abs(x3 - 1.0)]
    return min(cands)


def v_axi_map() -> AxiMap:
    """The dipole as an AxiMap (region dispatch, closed-form Jacobians)."""

    def _classify(r, x3):
        code = K.classify_k(r, x3)
        return None if code == K.R_OUTSIDE else REGION_NAMES[code]

    def _eval_region(tag, r, x3):
        code = REGION_CODES[tag]
        if code == K.R_OUTER:
            return K.v_eval_k(r, x3)
        return K.v_region_eval_k(code, r, x3)

    def _jac_region(tag, r, x3):
        return v_planar_jacobian((r, x3), region=tag)

    def _jac(r, x3):
        return v_planar_jacobian((r, x3))

    interfaces = [
        Interface("a/b", ("a", "b"),
                  lambda t: (math.sin(PI / 2 + t * PI / 2), math.cos(PI / 2 + t * PI / 2))),
        Interface("a/d", ("a", "d"), lambda t: (t, 0.0)),
        Interface("b/d", ("b", "d"), lambda t: (1.0 + 2.0 * t, 0.0)),
        Interface("d/e", ("d", "e"), lambda t: (t, 1.0)),
        Interface("d/f", ("d", "f"), lambda t: (1.0 + t * (math.sqrt(8.0) - 1.0 - 1e-12), 1.0)),
        Interface("e/f", ("e", "f"),
                  lambda t: (math.sin(t * PI / 2), 1.0 + math.cos(t * PI / 2))),
        Interface("inner/outer", ("d", "outer"),
                  lambda t: (3.0 * math.sin(t * PI), 3.0 * math.cos(t * PI))),
    ]

    sing = [SingularSet("v-singular", v_singular_distance)]
    return AxiMap(
        name="v",
        classify=_classify,
        evaluate=K.v_eval_k,
        eval_region=_eval_region,
        jac_region=_jac_region,
        jacobian=_jac,
        singular_sets=sing,
        interfaces=interfaces,
    )


def export_region_atlas(path: str, n: int = 200) -> int:
    """CSV (x1, x3, region, tag_color) over the meridian section (Fig. 1 style)."""
    colors = {"a": "#1f77b4", "b": "#ff7f0e", "d": "#2ca02c", "e": "#d62728",
              "f": "#9467bd", "outer": "#7f7f7f"}
    rows = 0
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x1", "x3", "region", "tag_color"])
        for x1 in np.linspace(0.0, 4.0, n):
            for x3 in np.linspace(-4.0, 4.0, 2 * n):
                code = K.classify_k(x1, x3)
                if code == K.R_OUTSIDE:
                    continue
                tag = REGION_NAMES[code]
                wr.writerow([f"{x1:.17g}", f"{x3:.17g}", tag, colors[tag]])
                rows += 1
    return rows
