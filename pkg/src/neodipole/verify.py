"""Property-check harness: continuity, determinant bounds, convergence
trends, injectivity and the inverse jump, with machine-readable ledgers.

Each check returns a VerifyReport; run_suite merges them by check id and the
CLI exits nonzero when any check fails.  Sampling is quasi-random (Sobol)
with fixed seeds, so reports are reproducible bit-for-bit from (spec, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import _kcore as K
from . import _kquad as KQ
from .approx import EpsProfileSet, u_axi_map
from .dipole import REGION_CODES, v_axi_map, singular_inverse_norm, classify
from .energy import HParams, QuadSpec, energy_difference, energy_integrate, l2_distance_to_v
from .geom import AxiMap, planar_jacobian_fd, HalfPlanePoint
from .patch import LayerGeometry, PatchParams, bilipschitz_probe, layer_det_bound

PI = math.pi
SQ2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    target: str
    n_samples: int
    tolerance: float
    seed: int = 0
    claim: str = ""


@dataclass
class VerifyReport:
    spec: CheckSpec
    passed: bool
    measured: dict
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def _sobol(n, d, seed):
    eng = qmc.Sobol(d=d, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(n, 2))))
    return eng.random(2 ** m)[:n]


# ---------------------------------------------------------------------------
# interface continuity
# ---------------------------------------------------------------------------

def check_interfaces(axi_map: AxiMap, n: int = 10000, seed: int = 7) -> VerifyReport:
    """Two-sided evaluation mismatch on every declared interface."""
    spec = CheckSpec("interfaces:" + axi_map.name, axi_map.name, n, 1e-9, seed,
                     claim="per-region closed forms share their interface traces")
    failures = []
    worst = {}
    ts = _sobol(n, 1, seed)[:, 0]
    for itf in axi_map.interfaces:
        mx = 0.0
        for t in ts:
            r, x3 = itf.param(float(t))
            w1 = axi_map.eval_region(itf.regions[0], r, x3)
            w2 = axi_map.eval_region(itf.regions[1], r, x3)
            d = math.hypot(w1[0] - w2[0], w1[1] - w2[1])
            if d > mx:
                mx = d
        worst[itf.name] = mx
        if mx > itf.tol:
            failures.append(f"interface {itf.name}: mismatch {mx:.3e} > {itf.tol:g}")
    return VerifyReport(spec, not failures, {"max_mismatch": worst}, failures)


def check_interfaces_bdelta(params: PatchParams, n: int = 10000, seed: int = 7) -> VerifyReport:
    """Core/layer and layer/exterior seams of b_delta, per region, plus the
    inter-region seams inside the layer."""
    from . import _kpatch as KP
    from . import _kapprox as KA

    spec = CheckSpec(f"interfaces:b_delta[{params.delta:g}]", "b_delta", n, 1e-9, seed,
                     claim="b_delta matches u_eps at dist=delta/2 and v at dist=delta")
    delta, eps, gamma = params.delta, params.eps, params.gamma
    ts = _sobol(n, 1, seed)[:, 0]
    worst = {}
    failures = []

    def record(name, mx, tol=1e-9):
        worst[name] = mx
        if mx > tol:
            failures.append(f"seam {name}: {mx:.3e} > {tol:g}")

    def on_level(region_code, lvl, t):
        """A point of the given region at dist(x,U) = lvl."""
        if region_code == K.R_B:
            phi = PI / 2 + t * PI / 2
            rho = 1.0 + lvl
            return rho * math.sin(phi), rho * math.cos(phi)
        if region_code == K.R_D:
            sg = t * PI / 2
            return 1.0 + lvl * math.cos(sg), lvl * math.sin(sg)
        if region_code == K.R_E:
            phimax = math.acos(min(1.0 - 1e-12, lvl))
            phi = t * 0.98 * phimax
            rho = lvl / math.cos(phi)
            return rho * math.sin(phi), 1.0 + rho * math.cos(phi)
        # region f: walk out the ray until dist = lvl (monotone)
        phi = t * (PI / 2 - 1e-6)
        lo, hi = 1.0, 2.9
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if K.dist_to_U_k(mid * math.sin(phi), 1.0 + mid * math.cos(phi)) < lvl:
                lo = mid
            else:
                hi = mid
        rho = 0.5 * (lo + hi)
        return rho * math.sin(phi), 1.0 + rho * math.cos(phi)

    for regname in ("b", "d", "e", "f"):
        code = REGION_CODES[regname]
        for lvl, other in ((0.5 * delta, "core"), (delta, "ext")):
            mx = 0.0
            for t in ts:
                r, x3 = on_level(code, lvl, float(t))
                d0 = K.dist_to_U_k(r, x3)
                if abs(d0 - lvl) > 1e-9:
                    continue
                wl = KP.bd_layer_eval_k(code, r, x3, d0, delta, eps, gamma)
                if other == "core":
                    wo = KA.u_eval_k(r, x3, eps, gamma)
                else:
                    wo = K.v_eval_k(r, x3)
                mx = max(mx, math.hypot(wl[0] - wo[0], wl[1] - wo[1]))
            record(f"{regname}@{lvl:g}", mx)
    # inter-region seams inside the layer
    mx = 0.0
    for t in ts:
        r = 1.0 + delta * (0.5 + 0.5 * float(t))
        d0 = K.dist_to_U_k(r, 0.0)
        w1 = KP.bd_layer_eval_k(K.R_B, r, 0.0, d0, delta, eps, gamma)
        w2 = KP.bd_layer_eval_k(K.R_D, r, 0.0, d0, delta, eps, gamma)
        mx = max(mx, math.hypot(w1[0] - w2[0], w1[1] - w2[1]))
    record("b/d-layer", mx)
    mx = 0.0
    for t in ts:
        r = 1.0 + delta * (0.5 + 0.5 * float(t))
        d0 = K.dist_to_U_k(r, 1.0)
        w1 = KP.bd_layer_eval_k(K.R_F, r, 1.0, d0, delta, eps, gamma)
        w2 = KP.bd_layer_eval_k(K.R_D, r, 1.0, d0, delta, eps, gamma)
        mx = max(mx, math.hypot(w1[0] - w2[0], w1[1] - w2[1]))
    record("d/f-layer", mx)
    mx = 0.0
    for t in ts:
        phi = math.acos(min(1.0, delta * (0.5 + 0.5 * float(t))))
        r, x3 = math.sin(phi), 1.0 + math.cos(phi)
        d0 = K.dist_to_U_k(r, x3)
        if not (0.5 * delta <= d0 <= delta):
            continue
        w1 = KP.bd_layer_eval_k(K.R_E, r, x3, d0, delta, eps, gamma)
        w2 = KP.bd_layer_eval_k(K.R_F, r, x3, d0, delta, eps, gamma)
        mx = max(mx, math.hypot(w1[0] - w2[0], w1[1] - w2[1]))
    record("e/f-layer", mx)
    return VerifyReport(spec, not failures, {"max_mismatch": worst}, failures)


# ---------------------------------------------------------------------------
# determinant bounds
# ---------------------------------------------------------------------------

def check_det_bounds_v(n: int = 10000, seed: int = 11) -> VerifyReport:
    """Region-d determinant identity of v on its pinned interfaces and
    positivity everywhere sampled.

    On the pinned sets x3 in {0,1}, r > 1 the chart is normalised so that
    det Dv = s^2 sin(phi(z)) / r exactly (there sin(phi) in {sqrt2/2, 1}, so
    the ratio det/(s^2/r) >= sqrt2/2 holds with equality at x3 = 0).  Away
    from the pinned sets the ratio det/(s^2/r) stays positive but depends on
    the admissible chart; its sampled minimum is reported, not asserted.
    """
    spec = CheckSpec("det_bounds:v", "v", n, 1e-6, seed,
                     claim="det Dv = s^2 sin(phi(z))/r on the pinned interfaces")
    failures = []
    pts = _sobol(n, 1, seed)[:, 0]
    worst = 0.0
    for t in pts:
        r = 1.0 + 1e-4 + (2.0 - 2e-4) * float(t)
        for x3, zval in ((0.0, 0.0), (1.0, 3.0)):
            out = K.v_region_jac_k(K.R_D, r, x3)
            fr, dt = K.frob2_det_k(*out[2:])
            s = r - 1.0
            ref = s * s * math.sin(0.25 * PI * (1.0 + zval / 3.0)) / r
            rel = abs(dt - ref) / ref
            worst = max(worst, rel)
            if rel > 1e-6:
                failures.append(f"pinned det identity off at ({r},{x3}): rel {rel:.2e}")
    # global positivity + reported min ratio in region d
    rng = np.random.default_rng(seed)
    min_det = math.inf
    min_ratio = math.inf
    neg = 0
    for _ in range(n):
        x3 = rng.uniform(-3.9, 3.9)
        r = rng.uniform(1e-6, math.sqrt(max(16 - x3 * x3, 1e-12)))
        code = K.classify_k(r, x3)
        if code < 0:
            continue
        out = K.v_jac_k(r, x3)
        fr, dt = K.frob2_det_k(*out[2:])
        min_det = min(min_det, dt)
        if dt <= 0:
            neg += 1
        if code == K.R_D:
            s, z, _ = K.g_map_k(r, x3)
            if s > 1e-8:
                min_ratio = min(min_ratio, dt / (s * s / r))
    if neg:
        failures.append(f"{neg} nonpositive determinants sampled")
    return VerifyReport(spec, not failures,
                        {"pinned_rel_max": worst, "min_det": min_det,
                         "region_d_min_ratio": min_ratio}, failures)


def check_det_bounds_bdelta(params: PatchParams, n: int = 10000, seed: int = 13) -> VerifyReport:
    """Step-2 factor chains of b_delta in the transition layer."""
    spec = CheckSpec(f"det_bounds:b_delta[{params.delta:g}]", "b_delta", n, 0.0, seed,
                     claim="layer factor chains: b >= 1/2; e slope >= cos(phi)(1-14 eps^g/delta); "
                           "f factor >= 1-12 eps^g/delta; d stretch bracket")
    geom = LayerGeometry(params)
    rng = np.random.default_rng(seed)
    failures = []
    measured = {}
    for regname in ("b", "d", "e", "f"):
        sp = geom.sample(regname, n // 4, rng)
        vals = []
        for (r, x3) in sp:
            out = layer_det_bound((r, x3), params)
            if out["det"] <= 0:
                failures.append(f"nonpositive layer det in {regname} at ({r},{x3})")
            if regname == "b":
                vals.append(out["factor"])
                if out["factor"] < 0.5:
                    failures.append(f"region-b factor {out['factor']:.4f} < 1/2")
            elif regname == "e":
                vals.append(out["slope"] - out["slope_bound"])
                if out["slope"] < out["slope_bound"] - 1e-7:
                    failures.append(
                        f"region-e slope {out['slope']:.5f} < bound {out['slope_bound']:.5f}")
                if out["brho_sq"] < out["brho_sq_bound"] - 1e-12:
                    failures.append("region-e b_rho^2 bound violated")
            elif regname == "f":
                vals.append(out["slope"] - out["factor_bound"])
                if out["slope"] < out["factor_bound"] - 1e-7:
                    failures.append(
                        f"region-f slope {out['slope']:.5f} < 1-12eps^g/delta")
            else:
                lo = out["stretch_lo"] - 1e-9
                hi = out["stretch_hi"] + 1e-9
                vals.append(out["stretch"])
                if not (lo <= out["stretch"] <= hi):
                    failures.append(
                        f"region-d stretch {out['stretch']:.5f} outside [{lo:.5f},{hi:.5f}]")
        measured[regname] = {"min": float(np.min(vals)), "max": float(np.max(vals))}
    return VerifyReport(spec, not failures, measured, failures)


def check_det_positivity_bdelta(params: PatchParams, n: int = 100000,
                                seed: int = 17) -> VerifyReport:
    """det D b_delta > 0 at n quasi-random samples of B(0,4)."""
    spec = CheckSpec(f"det_positive:b_delta[{params.delta:g}]", "b_delta", n, 0.0, seed)
    raw = _sobol(n, 2, seed)
    x3 = -4.0 + 8.0 * raw[:, 0]
    rmax = np.sqrt(np.maximum(16.0 - x3 ** 2, 1e-12))
    r = np.maximum(raw[:, 1] * rmax, 1e-9)
    pts = np.column_stack([r, x3])
    dets = KQ.sample_jacs_k(3, pts, params.eps, params.gamma, params.delta)[:, 1]
    nneg = int(np.sum(dets <= 0))
    rep = VerifyReport(spec, nneg == 0,
                       {"min_det": float(np.min(dets)), "n": int(len(dets)),
                        "nonpositive": nneg},
                       [f"{nneg} nonpositive dets"] if nneg else [])
    return rep


def layer_min_det_scaling(deltas=(1.0, 0.5, 0.25, 0.125), n: int = 4000,
                          seed: int = 19, gamma: float = 1.0 / 3.0,
                          c0: float = 16.0) -> dict:
    """Minimum layer determinant per region across the delta ladder, scaled by
    delta^2 (regions b, d, f) or delta^3 (region e)."""
    rng = np.random.default_rng(seed)
    out = {reg: {} for reg in ("b", "d", "e", "f")}
    for d in deltas:
        pp = PatchParams(delta=d, gamma=gamma, c0=c0)
        geom = LayerGeometry(pp)
        for reg in out:
            sp = geom.sample(reg, n, rng)
            dets = KQ.sample_jacs_k(3, sp, pp.eps, pp.gamma, pp.delta)[:, 1]
            power = 3.0 if reg == "e" else 2.0
            out[reg][d] = float(np.min(dets)) / d ** power
    stability = {reg: max(v.values()) / min(v.values()) for reg, v in out.items()}
    return {"scaled_min": out, "stability": stability}


# ---------------------------------------------------------------------------
# injectivity
# ---------------------------------------------------------------------------

def check_injectivity(params: PatchParams, n_pairs: int = 100000,
                      seed: int = 23) -> VerifyReport:
    """Collision-freeness and empirical Lipschitz data of b_delta, plus the
    inverse-matrix bound |J^{-1}| <= 3 |J|^2 / det J on sampled Jacobians."""
    spec = CheckSpec(f"injectivity:b_delta[{params.delta:g}]", "b_delta",
                     n_pairs, 1e-12, seed,
                     claim="no collisions; |A^{-1}| <= 3|A|^2/det A")
    failures = []
    probe = bilipschitz_probe(params, n_pairs=n_pairs, seed=seed)
    if probe["l_lower"] <= 0:
        failures.append("empirical inverse-Lipschitz constant is zero")
    if probe["min_det"] <= 0:
        failures.append("nonpositive det sampled")
    # matrix bound on sampled 3x3 axisymmetric Jacobians + random SPD-ish ones
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(2000):
        x3 = rng.uniform(-3.9, 3.9)
        r = rng.uniform(1e-3, math.sqrt(max(16 - x3 * x3, 1e-9)))
        if K.classify_k(r, x3) < 0:
            continue
        out = KQ.map_jac_k(3, r, x3, params.eps, params.gamma, params.delta)
        J = np.array([[out[2], 0.0, out[3]], [0.0, out[6], 0.0],
                      [out[4], 0.0, out[5]]])
        dt = np.linalg.det(J)
        if dt <= 0:
            continue
        lhs = np.linalg.norm(np.linalg.inv(J))
        rhs = 3.0 * np.linalg.norm(J) ** 2 / dt
        worst = max(worst, lhs / rhs)
        if lhs > rhs * (1 + 1e-9):
            failures.append(f"matrix bound violated at ({r},{x3})")
    for _ in range(2000):
        M = rng.normal(size=(3, 3))
        A = M @ M.T + 0.05 * np.eye(3)
        lhs = np.linalg.norm(np.linalg.inv(A))
        rhs = 3.0 * np.linalg.norm(A) ** 2 / np.linalg.det(A)
        worst = max(worst, lhs / rhs)
        if lhs > rhs * (1 + 1e-9):
            failures.append("matrix bound violated on random SPD matrix")
    measured = dict(probe)
    measured["matrix_bound_max_ratio"] = worst
    return VerifyReport(spec, not failures, measured, failures)


# ---------------------------------------------------------------------------
# jump of the inverse
# ---------------------------------------------------------------------------

def check_jump(n_nodes: int = 96, seed: int = 29) -> VerifyReport:
    """Jump amplitude 1 on the bubble, integrated norm pi, traces in a/e."""
    spec = CheckSpec("jump:v", "v", n_nodes, 5e-3, seed,
                     claim="||D^s v^{-1}|| = pi; amplitude = pole distance = 1")
    out = singular_inverse_norm(n_nodes=n_nodes)
    failures = []
    if abs(out["norm"] - PI) > 0.005 * PI:
        failures.append(f"norm {out['norm']:.6f} vs pi off by >0.5%")
    if abs(out["amplitude_min"] - 1.0) > 1e-6 or abs(out["amplitude_max"] - 1.0) > 1e-6:
        failures.append("jump amplitude not 1 within 1e-6")
    if out["max_residual"] > 1e-9:
        failures.append(f"trace residual {out['max_residual']:.2e} > 1e-9")
    for tr in out["traces"][:: max(1, len(out["traces"]) // 16)]:
        if classify((tr.inner.r, tr.inner.x3)) != "a":
            failures.append("inner trace not in region a closure")
        if classify((tr.outer.r, tr.outer.x3)) != "e":
            failures.append("outer trace not in region e closure")
    meas = {k: out[k] for k in ("norm", "amplitude_min", "amplitude_max",
                                "max_residual", "runtime_s")}
    return VerifyReport(spec, not failures, meas, failures)


# ---------------------------------------------------------------------------
# convergence trends
# ---------------------------------------------------------------------------

def check_convergence(eps_ladder=(1e-1, 3e-2, 1e-2, 3e-3), gamma: float = 1.0 / 3.0,
                      quad: QuadSpec = QuadSpec(), H: HParams = HParams(),
                      seed: int = 31, include_energy: bool = True) -> VerifyReport:
    """L2 distance decreasing, eta_eps trend, energy deviation decreasing."""
    spec = CheckSpec("convergence:ueps", "u_eps", len(eps_ladder), 0.0, seed,
                     claim="u_eps -> v in L2; E(u_eps) -> E(v) + 2 pi")
    failures = []
    l2 = [l2_distance_to_v("ueps", quad=quad, eps=e, gamma=gamma) for e in eps_ladder]
    if not all(l2[i + 1] < l2[i] for i in range(len(l2) - 1)):
        failures.append(f"L2 ladder not strictly decreasing: {l2}")
    etas = [EpsProfileSet(e, gamma).eta / e ** gamma for e in eps_ladder]
    measured = {"l2": l2, "eta_over_epsgamma": etas}
    if include_energy:
        devs = []
        for e in eps_ladder:
            d = energy_difference("ueps", quad=quad, eps=e, gamma=gamma)
            devs.append(abs(d["difference"] - 2.0 * PI))
        if not all(devs[i + 1] < devs[i] for i in range(len(devs) - 1)):
            failures.append(f"|E(u_eps) - F(v)| not decreasing: {devs}")
        measured["gap_deviation"] = devs
    return VerifyReport(spec, not failures, measured, failures)


# ---------------------------------------------------------------------------
# suite driver
# ---------------------------------------------------------------------------

def run_suite(suites=("interfaces", "det", "jump", "inject"), seed: int = 7,
              n: int = 10000, delta: float = 0.5, eps: float = 1e-2,
              fast: bool = False) -> list:
    """Run the requested check families; returns a list of VerifyReports."""
    reports = []
    nn = n if not fast else max(200, n // 50)
    params = PatchParams(delta=delta)
    if "interfaces" in suites:
        reports.append(check_interfaces(v_axi_map(), n=nn, seed=seed))
        prof = EpsProfileSet(eps)
        reports.append(check_interfaces(u_axi_map(prof), n=nn, seed=seed))
        reports.append(check_interfaces_bdelta(params, n=nn, seed=seed))
    if "det" in suites:
        reports.append(check_det_bounds_v(n=nn, seed=seed + 1))
        reports.append(check_det_bounds_bdelta(params, n=nn, seed=seed + 2))
        reports.append(check_det_positivity_bdelta(params, n=10 * nn, seed=seed + 3))
    if "jump" in suites:
        reports.append(check_jump(seed=seed + 4))
    if "inject" in suites:
        reports.append(check_injectivity(params, n_pairs=10 * nn, seed=seed + 5))
    if "convergence" in suites:
        reports.append(check_convergence(seed=seed + 6,
                                         quad=QuadSpec(tol=1e-2 if not fast else 5e-2)))
    return reports


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, default=float)
