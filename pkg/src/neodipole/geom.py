"""Coordinate frames, axisymmetric map representation and Jacobian kernels.

Every axisymmetric deformation in this package is evaluated through its
meridian (planar) representative: a map (r, x3) -> (w_r, w_3) on the right
half plane, with zero swirl.  The full 3x3 gradient reduces to the 2x2
meridian block plus the hoop stretch w_r / r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence


class OutsideDomain(ValueError):
    """Point outside the map's domain."""


class OutsideSlab(ValueError):
    """Point outside the slab 0 <= x3 <= 1 of the auxiliary chart."""


class StepCrossesInterface(ValueError):
    """Finite-difference stencil leaves the region of its base point."""


class AxisSingular(ArithmeticError):
    """Hoop stretch diverges on the axis (the map opens a cavity/tube)."""

    def __init__(self, msg, tube_radius=None):
        super().__init__(msg)
        self.tube_radius = tube_radius


class SingularPoint(ArithmeticError):
    """Evaluation requested too close to a declared singular set."""


@dataclass(frozen=True)
class Point3:
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2) and math.isfinite(self.x3)):
            raise ValueError("Point3 components must be finite")

    @property
    def r(self) -> float:
        return math.hypot(self.x1, self.x2)

    @property
    def theta(self) -> float:
        return math.atan2(self.x2, self.x1)

    def norm(self) -> float:
        return math.sqrt(self.x1 ** 2 + self.x2 ** 2 + self.x3 ** 2)

    def meridian(self) -> "HalfPlanePoint":
        return HalfPlanePoint(self.r, self.x3)

    @staticmethod
    def from_meridian(r: float, x3: float, theta: float = 0.0) -> "Point3":
        return Point3(r * math.cos(theta), r * math.sin(theta), x3)


@dataclass(frozen=True)
class HalfPlanePoint:
    r: float
    x3: float

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError("meridian radius must be >= 0")

    def norm(self) -> float:
        return math.hypot(self.r, self.x3)


@dataclass(frozen=True)
class SphPoint:
    rho: float
    phi: float
    theta: float = 0.0

    def __post_init__(self):
        if self.rho < 0.0 or not (0.0 <= self.phi <= math.pi):
            raise ValueError("spherical ranges: rho >= 0, phi in [0, pi]")


@dataclass(frozen=True)
class PlanarJacobian:
    """Meridian derivative block plus hoop stretch.

    d_ab = d(image_a)/d(reference_b) with a, b in {r, 3}; hoop = image_r / r.
    """

    d_rr: float
    d_r3: float
    d_3r: float
    d_33: float
    hoop: float

    def frobenius_sq(self) -> float:
        return (self.d_rr ** 2 + self.d_r3 ** 2 + self.d_3r ** 2
                + self.d_33 ** 2 + self.hoop ** 2)

    def det(self) -> float:
        return self.hoop * (self.d_rr * self.d_33 - self.d_r3 * self.d_3r)


def frobenius_sq(J: PlanarJacobian) -> float:
    """|Du|^2 of the axisymmetric map: sum of squares of the five entries."""
    return J.frobenius_sq()


def det(J: PlanarJacobian) -> float:
    """Volume ratio: hoop times the 2x2 meridian determinant."""
    return J.det()


def sph_from_halfplane(p: HalfPlanePoint, center: HalfPlanePoint) -> SphPoint:
    """Spherical coordinates about an on-axis center; phi from the upward axis.

    phi is 0 by convention when rho = 0.
    """
    dr = p.r - center.r
    dz = p.x3 - center.x3
    rho = math.hypot(dr, dz)
    phi = math.atan2(dr, dz) if rho > 0.0 else 0.0
    return SphPoint(rho, phi)


def halfplane_from_sph(s: SphPoint, center: HalfPlanePoint) -> HalfPlanePoint:
    return HalfPlanePoint(center.r + s.rho * math.sin(s.phi),
                          center.x3 + s.rho * math.cos(s.phi))


@dataclass
class SingularSet:
    """Named singular locus with a meridian distance estimate."""

    name: str
    distance: Callable[[float, float], float]


@dataclass
class Interface:
    """Shared boundary of two regions, parametrised over t in [0, 1]."""

    name: str
    regions: tuple
    param: Callable[[float], tuple]
    tol: float = 1e-9


@dataclass
class AxiMap:
    """A piecewise axisymmetric deformation through its meridian data.

    classify returns a region tag (None outside the domain); eval_region and
    jac_region evaluate a specific region's closed form, so interface tests
    can compare the two sides on the shared boundary.  jac_region may be None
    (finite differences only).
    """

    name: str
    classify: Callable[[float, float], Optional[str]]
    evaluate: Callable[[float, float], tuple]
    eval_region: Callable[[str, float, float], tuple]
    jac_region: Optional[Callable[[str, float, float], PlanarJacobian]] = None
    jacobian: Optional[Callable[[float, float], PlanarJacobian]] = None
    singular_sets: Sequence[SingularSet] = field(default_factory=list)
    interfaces: Sequence[Interface] = field(default_factory=list)
    fd_scale: Callable[[float, float], float] = lambda r, x3: 1.0
    axis_gap: Callable[[float], float] = lambda x3: 0.0
    domain_radius: float = 4.0

    def singular_distance(self, r: float, x3: float) -> float:
        if not self.singular_sets:
            return math.inf
        return min(s.distance(r, x3) for s in self.singular_sets)


def planar_jacobian_fd(axi_map: AxiMap, p: HalfPlanePoint, h: Optional[float] = None) -> PlanarJacobian:
    """Central-difference planar Jacobian.

    Default step 1e-6 * max(1, |p|), scaled down by the map's local feature
    hint.  Raises StepCrossesInterface when the stencil leaves the region of
    the base point, and requires r > 0 (axis handled by on_axis_limit).
    """
    r, x3 = p.r, p.x3
    if r <= 0.0:
        raise OutsideDomain("planar_jacobian_fd requires r > 0")
    if h is None:
        h = 1e-6 * max(1.0, p.norm()) * axi_map.fd_scale(r, x3)
    base = axi_map.classify(r, x3)
    if base is None:
        raise OutsideDomain(f"({r}, {x3}) outside {axi_map.name}")
    stencil = [(r + h, x3), (r - h, x3), (r, x3 + h), (r, x3 - h)]
    for (rr, xx) in stencil:
        if axi_map.classify(rr, xx) != base:
            raise StepCrossesInterface(
                f"stencil around ({r}, {x3}) leaves region {base!r}")
    wp = axi_map.evaluate(r + h, x3)
    wm = axi_map.evaluate(r - h, x3)
    zp = axi_map.evaluate(r, x3 + h)
    zm = axi_map.evaluate(r, x3 - h)
    w0 = axi_map.evaluate(r, x3)
    return PlanarJacobian(
        d_rr=(wp[0] - wm[0]) / (2 * h),
        d_r3=(zp[0] - zm[0]) / (2 * h),
        d_3r=(wp[1] - wm[1]) / (2 * h),
        d_33=(zp[1] - zm[1]) / (2 * h),
        hoop=w0[0] / r,
    )


def on_axis_limit(axi_map: AxiMap, x3: float, h0: float = 1e-3) -> PlanarJacobian:
    """Planar Jacobian limit on the axis via one-sided radial probes.

    The hoop stretch is taken as the limit of image_radius / r.  If the image
    radius does not vanish as r -> rmin+ (the map opens a tube or the domain
    excludes the axis), AxisSingular is raised with the tube radius.
    """
    rmin = axi_map.axis_gap(x3)
    radii = [rmin + h0 * 0.5 ** k for k in range(10)]
    img_r = []
    for r in radii:
        w = axi_map.evaluate(r, x3)
        img_r.append(w[0])
    if rmin > 0.0 or abs(img_r[-1]) > 1e-6:
        raise AxisSingular(
            f"{axi_map.name}: image radius -> {img_r[-1]:.6g} as r -> {rmin}+ at x3={x3}",
            tube_radius=abs(img_r[-1]))
    hoops = [img_r[k] / (radii[k] - rmin) for k in range(len(radii))]
    # crude convergence acceleration: last two levels
    hoop = 2.0 * hoops[-1] - hoops[-2]
    if not math.isfinite(hoop) or abs(hoops[-1] - hoops[-2]) > 0.1 * (abs(hoop) + 1.0):
        raise AxisSingular(f"{axi_map.name}: hoop limit diverges at x3={x3}",
                           tube_radius=None)
    h = radii[1] - rmin
    w0 = axi_map.evaluate(rmin + h, x3)
    w1 = axi_map.evaluate(rmin + 2 * h, x3)
    wz_p = axi_map.evaluate(rmin + h, x3 + h)
    wz_m = axi_map.evaluate(rmin + h, x3 - h)
    return PlanarJacobian(
        d_rr=(w1[0] - w0[0]) / h,
        d_r3=(wz_p[0] - wz_m[0]) / (2 * h),
        d_3r=(w1[1] - w0[1]) / h,
        d_33=(wz_p[1] - wz_m[1]) / (2 * h),
        hoop=hoop,
    )
