"""The neo-Hookean functional E(u) = int |Du|^2 + H(|det Du|).

All volume integrals are computed as 2*pi * iint f(r,x3) r dr dx3 over the
meridian half-disk, decomposed into per-region rectangles in coordinates
adapted to each region (polar about the origin / about (0,0,1), slab strips,
the outer annulus).  Cells are refined adaptively with a two-level
(coarse vs 2x2-split) error estimate, pre-graded toward the declared
singular sets, and accumulated in fixed cell order so a given QuadSpec
reproduces bit-identical totals.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import _kquad as KQ
from .patch import PatchParams

PI = math.pi
SQ2 = math.sqrt(2.0)


class NonpositiveJacobian(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True)
class HParams:
    """H(t) = c (t^-alpha + t^beta), convex, blowing up at 0 and superlinear
    at infinity.  The admissible ranges are alpha in (0, 1/3), beta in (1, 3/2);
    construct with validate=False for threshold probes outside the ranges."""

    c: float = 1.0
    alpha: float = 0.25
    beta: float = 1.25
    validate: bool = True

    def __post_init__(self):
        if self.validate:
            if not (0.0 < self.alpha < 1.0 / 3.0):
                raise ValueError("alpha must satisfy alpha < 1/3 (and > 0)")
            if not (1.0 < self.beta < 1.5):
                raise ValueError("beta must satisfy beta < 3/2 (and > 1)")
            if not (self.c > 0.0):
                raise ValueError("c must be positive")


def H_eval(t: float, params: HParams) -> float:
    """Energy density H(t); raises NonpositiveJacobian for t <= 0."""
    if t <= 0.0:
        raise NonpositiveJacobian(f"H defined on (0, inf), got {t}")
    return params.c * (t ** (-params.alpha) + t ** params.beta)


@dataclass(frozen=True)
class QuadSpec:
    """Adaptive quadrature controls (deterministic given identical fields)."""

    tol: float = 1e-2
    max_depth: int = 30
    max_cells: int = 300000
    batch: int = 2048
    seed: int = 0


@dataclass
class EnergyReport:
    map_name: str
    params: dict
    dirichlet: float
    hterm: float
    total: float
    error_est: float
    cells: int
    regions: dict
    converged: bool
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class Rect:
    region: str
    tcode: int
    a0: float
    a1: float
    b0: float
    b1: float
    # attractors: (axis 0=u/1=v, side 0/1, target width in rect coords)
    attractors: tuple = ()


_BIG = 1e9


def rects_identity() -> list:
    return [Rect("ball", 1, 0.0, 4.0, 0.0, PI)]


def rects_v() -> list:
    return [
        Rect("a", 1, 0.0, 1.0, PI / 2, PI, ((0, 1, 1e-4), (0, 0, 1e-4))),
        Rect("b", 1, 1.0, 3.0, PI / 2, PI, ((0, 0, 1e-4),)),
        Rect("d", 3, 0.0, _BIG, 0.0, 1.0, ((0, 0, 1e-4), (1, 0, 1e-4), (1, 1, 1e-4))),
        Rect("e", 2, 0.0, 1.0, 0.0, PI / 2, ((0, 0, 1e-4), (1, 1, 1e-4))),
        Rect("f", 4, 1.0, _BIG, 0.0, PI / 2, ((0, 0, 1e-3), (1, 1, 1e-3))),
        Rect("outer", 5, 3.0, 4.0, 0.0, PI),
    ]


def rects_u(eps: float, gamma: float) -> list:
    eg = eps ** gamma
    tube_u = max(0.25 * eps / 3.0, 1e-9)
    return [
        Rect("a_shell", 1, eps, 1.0, PI / 2, PI, ((0, 1, 1e-4), (0, 0, max(eps, 1e-7)))),
        Rect("a_prime", 1, 0.0, eps, PI / 2, PI),
        Rect("c_prime", 3, 0.0, eps, 0.0, 1.0, ((0, 0, 1.0 / (4.0 * 60.0)),)),
        Rect("e_prime", 2, 0.0, eps, 0.0, PI / 2),
        Rect("e_shell", 2, eps, 1.0, 0.0, PI / 2, ((0, 0, 1e-3), (1, 1, max(eps, 1e-7)))),
        Rect("d_slab", 3, eps, _BIG, 0.0, 1.0, ((0, 0, tube_u), (1, 0, 1e-4), (1, 1, 1e-4))),
        Rect("b_psi", 1, 1.0, 1.0 + SQ2 * eg, PI / 2, PI),
        Rect("b", 1, 1.0 + SQ2 * eg, 3.0, PI / 2, PI, ((0, 0, 1e-3),)),
        Rect("f", 4, 1.0, _BIG, 0.0, PI / 2, ((0, 0, 1e-3), (1, 1, 1e-3))),
        Rect("outer", 5, 3.0, 4.0, 0.0, PI),
    ]


def rects_bd(params: PatchParams) -> list:
    # the b_delta dispatch shares the u_eps core structure; the chi kinks on
    # the dist level curves are left to the adaptive refinement
    return rects_u(params.eps, params.gamma)


def _graded_edges(scale: float, reverse: bool) -> np.ndarray:
    """Geometric 1D partition of [0,1] toward one side, finest = scale."""
    if scale >= 0.5:
        return np.array([0.0, 0.5, 1.0])
    edges = [0.0]
    w = scale
    pos = scale
    edges.append(pos)
    while pos < 0.5:
        w *= 2.0
        pos = min(1.0, pos + w)
        edges.append(pos)
    if edges[-1] < 1.0:
        edges.append(1.0)
    e = np.array(edges)
    if reverse:
        e = 1.0 - e[::-1]
    return e


def _initial_cells(rects: list) -> np.ndarray:
    cells = []
    for k, rc in enumerate(rects):
        ue = np.array([0.0, 0.5, 1.0])
        ve = np.array([0.0, 0.5, 1.0])
        for (axis, side, scale) in rc.attractors:
            e = _graded_edges(scale, reverse=bool(side))
            if axis == 0:
                ue = np.unique(np.concatenate([ue, e]))
            else:
                ve = np.unique(np.concatenate([ve, e]))
        for i in range(len(ue) - 1):
            for j in range(len(ve) - 1):
                cells.append((k, ue[i], ue[i + 1] - ue[i], ve[j], ve[j + 1] - ve[j]))
    return np.array(cells, dtype=np.float64)


def _rect_array(rects: list) -> np.ndarray:
    return np.array([[rc.tcode, rc.a0, rc.a1, rc.b0, rc.b1] for rc in rects],
                    dtype=np.float64)


def _adaptive(rects, icode, imap, eps, gamma, delta, hp: HParams, quad: QuadSpec,
              p1: float = 0.0, p2: float = 0.0):
    """Deterministic adaptive driver; returns (total, err, cells, per-rect sums,
    converged flag, final cell array)."""
    rarr = _rect_array(rects)
    cells = _initial_cells(rects)
    vals = KQ.integrate_cells_k(cells, rarr, icode, imap, eps, gamma, delta,
                                hp.c, hp.alpha, hp.beta, p1, p2)
    depth = np.zeros(len(cells), dtype=np.int64)
    converged = False
    while True:
        fine = vals[:, 1]
        err = np.abs(vals[:, 1] - vals[:, 0])
        total = float(np.sum(fine))
        err_tot = float(np.sum(err))
        scale = max(abs(total), 1e-12)
        if err_tot <= quad.tol * scale:
            converged = True
            break
        if len(cells) >= quad.max_cells:
            break
        splittable = np.where(depth < quad.max_depth)[0]
        if len(splittable) == 0:
            break
        order = splittable[np.lexsort((splittable, -err[splittable]))]
        # refine the worst cells: enough to plausibly halve the error budget
        nref = int(min(max(1, math.ceil(len(order) / 6)), quad.batch))
        take = order[:nref]
        keep = np.ones(len(cells), dtype=bool)
        keep[take] = False
        new_cells = []
        new_depth = []
        for idx in take:
            k, u0, du, v0, dv = cells[idx]
            hdu, hdv = 0.5 * du, 0.5 * dv
            for su in range(2):
                for sv in range(2):
                    new_cells.append((k, u0 + su * hdu, hdu, v0 + sv * hdv, hdv))
                    new_depth.append(depth[idx] + 1)
        new_cells = np.array(new_cells)
        new_vals = KQ.integrate_cells_k(new_cells, rarr, icode, imap, eps, gamma,
                                        delta, hp.c, hp.alpha, hp.beta, p1, p2)
        cells = np.vstack([cells[keep], new_cells])
        vals = np.vstack([vals[keep], new_vals])
        depth = np.concatenate([depth[keep], new_depth])
    # deterministic final reduction: sort by (rect, u0, v0, du)
    key = np.lexsort((cells[:, 3], cells[:, 1], cells[:, 0]))
    cells = cells[key]
    vals = vals[key]
    per_rect = {}
    for k, rc in enumerate(rects):
        m = cells[:, 0] == k
        per_rect.setdefault(rc.region, 0.0)
        per_rect[rc.region] += float(np.sum(vals[m, 1]))
    total = float(sum(per_rect.values()))
    err_tot = float(np.sum(np.abs(vals[:, 1] - vals[:, 0])))
    return total, err_tot, cells, vals, per_rect, converged


_MAP_CODES = {"identity": KQ.MAP_ID, "v": KQ.MAP_V, "ueps": KQ.MAP_U, "bdelta": KQ.MAP_BD}


def _map_setup(map_name, eps=None, gamma=None, delta=None):
    if map_name == "identity":
        return KQ.MAP_ID, rects_identity(), 0.0, 1.0 / 3.0, 0.0
    if map_name == "v":
        return KQ.MAP_V, rects_v(), 0.0, 1.0 / 3.0, 0.0
    if map_name == "ueps":
        if eps is None:
            raise ValueError("ueps requires eps")
        gamma = 1.0 / 3.0 if gamma is None else gamma
        return KQ.MAP_U, rects_u(eps, gamma), eps, gamma, 0.0
    if map_name == "bdelta":
        if delta is None:
            raise ValueError("bdelta requires delta")
        pp = PatchParams(delta=delta, gamma=1.0 / 3.0 if gamma is None else gamma)
        return KQ.MAP_BD, rects_bd(pp), pp.eps, pp.gamma, pp.delta
    raise ValueError(f"unknown map {map_name!r}")


def energy_integrate(map_name: str, quad: QuadSpec = QuadSpec(),
                     H: HParams = HParams(), eps: Optional[float] = None,
                     gamma: Optional[float] = None, delta: Optional[float] = None,
                     raise_on_budget: bool = False) -> EnergyReport:
    """Adaptive neo-Hookean energy of one of the built-in maps.

    map_name in {"identity", "v", "ueps", "bdelta"}.
    """
    t0 = time.perf_counter()
    imap, rects, e, g, d = _map_setup(map_name, eps, gamma, delta)
    total, err, cells, vals, per_rect, conv = _adaptive(
        rects, 0, imap, e, g, d, H, quad)
    # Dirichlet split on the final cell set (same accumulation tree)
    rarr = _rect_array(rects)
    dvals = KQ.integrate_cells_k(cells, rarr, 10, imap, e, g, d,
                                 H.c, H.alpha, H.beta, 0.0, 0.0)
    dirichlet = float(np.sum(dvals[:, 1]))
    report = EnergyReport(
        map_name=map_name,
        params={"alpha": H.alpha, "beta": H.beta, "c": H.c, "gamma": g,
                "eps": e, "delta": d, "tol": quad.tol},
        dirichlet=dirichlet,
        hterm=total - dirichlet,
        total=total,
        error_est=err,
        cells=int(len(cells)),
        regions=per_rect,
        converged=bool(conv),
        meta={"runtime_ms": 1000.0 * (time.perf_counter() - t0)},
    )
    if raise_on_budget and not conv:
        raise BudgetExceeded("quadrature tolerance unmet at max depth", report)
    return report


def energy_difference(map_name: str, quad: QuadSpec = QuadSpec(),
                      H: HParams = HParams(), eps: Optional[float] = None,
                      gamma: Optional[float] = None, delta: Optional[float] = None) -> dict:
    """int (e_map - e_v) over B(0,4): the energy deviation from the dipole.

    Computing the difference directly keeps the absolute error of the small
    gap quantity under control.
    """
    imap, rects, e, g, d = _map_setup(map_name, eps, gamma, delta)
    total, err, cells, _vals, per_rect, conv = _adaptive(
        rects, 2, imap, e, g, d, H, quad)
    return {"difference": total, "error_est": err, "cells": int(len(cells)),
            "regions": per_rect, "converged": bool(conv)}


def l2_distance_to_v(map_name: str, quad: QuadSpec = QuadSpec(),
                     eps: Optional[float] = None, gamma: Optional[float] = None,
                     delta: Optional[float] = None) -> float:
    imap, rects, e, g, d = _map_setup(map_name, eps, gamma, delta)
    total, err, *_ = _adaptive(rects, 1, imap, e, g, d, HParams(), quad)
    return math.sqrt(max(total, 0.0))


def relaxed_value(quad: QuadSpec = QuadSpec(), H: HParams = HParams(),
                  n_nodes: int = 96) -> dict:
    """F(v) = E(v) + 2 ||D^s v^{-1}||, with the singular norm computed from
    the jump of the inverse across the bubble."""
    from .dipole import singular_inverse_norm
    ev = energy_integrate("v", quad=quad, H=H)
    sn = singular_inverse_norm(n_nodes=n_nodes)
    return {
        "E_v": ev.total,
        "E_v_error": ev.error_est,
        "singular_norm": sn["norm"],
        "F_v": ev.total + 2.0 * sn["norm"],
        "two_norm": 2.0 * sn["norm"],
        "report": ev,
    }


def gap_experiment(eps_ladder=(1e-1, 3e-2, 1e-2, 3e-3),
                   delta_ladder=(1.0, 0.5, 0.25, 0.125),
                   H: HParams = HParams(), quad: QuadSpec = QuadSpec(),
                   gamma: float = 1.0 / 3.0) -> dict:
    """Energy ladders of u_eps and b_delta against E(v) and E(v) + 2*pi.

    Deviations E(u_eps) - E(v) are computed as difference integrals; the gap
    evidence is their approach to 2*pi from above as eps decreases.
    """
    ev = energy_integrate("v", quad=quad, H=H)
    rows_u = []
    for e in eps_ladder:
        d = energy_difference("ueps", quad=quad, H=H, eps=e, gamma=gamma)
        rows_u.append({"eps": e, "E": ev.total + d["difference"],
                       "deviation": d["difference"] - 2.0 * PI,
                       "err": d["error_est"]})
    rows_b = []
    for dl in delta_ladder:
        d = energy_difference("bdelta", quad=quad, H=H, delta=dl, gamma=gamma)
        rows_b.append({"delta": dl, "E": ev.total + d["difference"],
                       "err": d["error_est"]})
    eu = [r["E"] for r in rows_u]
    eb = [r["E"] for r in rows_b]
    devs = [abs(r["deviation"]) for r in rows_u]
    return {
        "E_v": ev.total,
        "F_v": ev.total + 2.0 * PI,
        "u_ladder": rows_u,
        "b_ladder": rows_b,
        "u_equibounded": max(eu) / min(eu),
        "b_equibounded": max(eb) / min(eb),
        "b_monotone_blowup": all(eb[i + 1] > eb[i] for i in range(len(eb) - 1)),
        "gap_deviation_final": devs[-1],
        "gap_deviation_monotone": all(devs[i + 1] < devs[i] for i in range(len(devs) - 1)),
    }


# ---------------------------------------------------------------------------
# integrability threshold probes
# ---------------------------------------------------------------------------

def hterm_probe_region_d(alpha: float, levels: int = 4, c0: float = 1.0 / 3.0,
                         shrink: float = 64.0, quad: QuadSpec = QuadSpec(tol=2e-3),
                         beta: float = 1.25) -> list:
    """H-term of v over the part of region d adjacent to the bad set, with the
    cutoff dist >= c shrunk geometrically: I_l over {dist >= c0 * shrink^-l}.

    Blocks at distance c from U: [c,1]x[c,1/3], [c,1/3]x[1/3,2/3],
    [c,1]x[2/3,1-c] plus the fixed middle square.
    """
    hp = HParams(c=1.0, alpha=alpha, beta=beta, validate=False)
    out = []
    for l in range(levels + 1):
        c = c0 * shrink ** (-l)
        rects = [
            Rect("B1", 3, c, 1.0, c, 1.0 / 3.0, ((0, 0, 1e-3), (1, 0, 1e-3))),
            Rect("B2", 3, c, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, ((0, 0, 1e-3),)),
            Rect("B3", 3, c, 1.0, 2.0 / 3.0, 1.0 - c, ((0, 0, 1e-3), (1, 1, 1e-3))),
            Rect("P", 3, 1.0 / 3.0, 1.0, 1.0 / 3.0, 2.0 / 3.0),
        ]
        total, err, cells, _v, _p, conv = _adaptive(rects, 11, KQ.MAP_V, 0.0,
                                                    1.0 / 3.0, 0.0, hp, quad)
        out.append({"level": l, "cutoff": c, "integral": total, "err": err,
                    "converged": bool(conv)})
    return out


def hterm_probe_region_e(alpha: float, beta: float, levels: int = 4,
                         mode: str = "auto", shrink: float = 64.0,
                         quad: QuadSpec = QuadSpec(tol=2e-3)) -> list:
    """H-term of v over region e with a geometric cutoff ladder.

    mode 'alpha': shrink the angular cutoff cos(phi) >= c (det -> 0 edge,
    threshold alpha = 1/3); mode 'beta': shrink the radial cutoff rho >= c
    (cavitation point, threshold beta = 3/2).
    """
    if mode == "auto":
        mode = "beta" if beta >= 1.5 else "alpha"
    hp = HParams(c=1.0, alpha=alpha, beta=beta, validate=False)
    out = []
    for l in range(levels + 1):
        c = (1.0 / 3.0) * shrink ** (-l)
        if mode == "alpha":
            rects = [Rect("e", 2, 1e-3, 1.0, 0.0, math.acos(c), ((1, 1, 1e-3),))]
        else:
            rects = [Rect("e", 2, c, 1.0, 0.0, 0.5 * PI, ((0, 0, 1e-3), (1, 1, 1e-3)))]
        total, err, cells, _v, _p, conv = _adaptive(rects, 11, KQ.MAP_V, 0.0,
                                                    1.0 / 3.0, 0.0, hp, quad)
        out.append({"level": l, "cutoff": c, "integral": total, "err": err,
                    "converged": bool(conv)})
    return out


def probe_trend(rows: list) -> dict:
    """Convergence/divergence statistics of a cutoff ladder."""
    vals = [r["integral"] for r in rows]
    increments = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    last_rel = abs(increments[-1]) / max(abs(vals[-1]), 1e-300)
    growth = None
    if len(increments) >= 2 and abs(increments[-2]) > 0:
        growth = increments[-1] / increments[-2]
    return {"values": vals, "last_rel_change": last_rel, "growth_ratio": growth}


def ladder_csv(path: str, rows: list, key: str) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["eps_or_delta", "E", "err"])
        for r in rows:
            wr.writerow([f"{r[key]:.17g}", f"{r['E']:.17g}", f"{r['err']:.17g}"])
