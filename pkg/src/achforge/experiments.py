"""The ten configurable verification experiments behind the command line."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import chyp as C
from . import jet as J
from . import preglue as P
from .einstein import (
    DecayFit,
    decay_fit,
    einstein_residual,
    l2_weight_integrability,
    trace_free_part,
    weitzenbock_terms,
    wplus_action_alpha,
)
from .models import product_h2h2, random_polynomial_sym2
from .nu import CoordinateBox, integrate_region, nu_integrand, surgery_bookkeeping
from .report import Report, Sweep
from .sampling import sample_boundary_ball, sample_interior, sample_region, sample_shell
from .tensor import curvature, norm2, sectional_curvature

__all__ = ["CLAIMS", "COLUMNS", "RUNNERS", "run", "thread_count"]

THREADS_ENV = "ACH_FORGE_THREADS"

CLAIMS = {
    "isometry-suite": "The model isometries preserve the complex hyperbolic metric; the inversions are involutions",
    "einstein-residual": "The complex hyperbolic metric has Ric = -(n+1)/2 g and curvature pinched in [-1, -1/4]",
    "preglue-sweep": "The preglued metric is within O(w) of the model and Einstein up to O(w)",
    "weitzenbock": "Weitzenbock formula on trace-free symmetric 2-tensors of an Einstein 4-manifold",
    "wplus-spectrum": "W+ of the complex hyperbolic plane has spectrum (s/6, -s/12, -s/12)",
    "fefferman": "-ln f is a Kahler potential of the model metric solving the Fefferman equation",
    "nu-integrand": "The characteristic-number integrand vanishes on the model; a 1-handle shifts nu by one",
    "weight-bounds": "The glued weight is seam-continuous with bounded logarithmic gradient",
    "l2-weights": "f^(delta/2) lies in the weighted L^2 space exactly when delta + delta' < n",
    "bracket-constants": "Brackets of the adapted frame converge to the model constants",
}

COLUMNS = {
    "isometry-suite": ["map", "param_id", "point_id", "pullback_dev", "involution_dev", "holomorphy_dev",
                       "status"],
    "einstein-residual": ["quantity", "n", "point_id", "value", "status"],
    "preglue-sweep": ["experiment_id", "scale", "point_id", "residual", "weight", "weighted_residual",
                      "metric_deviation", "T0", "T1", "T2", "status"],
    "weitzenbock": ["metric", "pair_id", "residual", "residual_without_wminus", "status"],
    "wplus-spectrum": ["kind", "point_id", "xi_id", "scalar", "value", "target", "deviation", "status"],
    "fefferman": ["kind", "point_id", "deviation", "status"],
    "nu-integrand": ["point_id", "wminus2", "wplus2", "ric0_2", "scal2", "value", "status"],
    "weight-bounds": ["kind", "scale", "side", "point_id", "value", "status"],
    "l2-weights": ["case_id", "n", "delta", "delta_prime", "expected", "verdict", "far_slope", "status"],
    "bracket-constants": ["point_id", "u", "y0y1", "y0yj", "y2y3", "remainder", "status"],
}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _pmap(fn: Callable, items: Sequence) -> list:
    """Order-preserving map; exceptions become ``("error", message)`` entries."""
    def safe(x):
        try:
            return fn(x)
        except Exception as e:  # numerical failure flags the row, the run goes on
            return ("error", f"{type(e).__name__}: {e}")

    items = list(items)
    k = thread_count()
    if k == 1:
        return [safe(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(safe, items))


def _is_err(r) -> bool:
    return isinstance(r, tuple) and len(r) == 2 and r[0] == "error"


def _flag(report: Report, row: dict, res, label: str) -> bool:
    """Mark ``row`` as failed when ``res`` is an error; returns True if it was."""
    if _is_err(res):
        row["status"] = res[1]
        report.failures.append(f"{label}: {res[1]}")
        report.rows.append(row)
        return True
    return False


def _new_report(cfg: dict) -> Report:
    exp = cfg["experiment"]
    return Report(exp, CLAIMS[exp], cfg, COLUMNS[exp], seed=cfg["seed"])


def _ratio(values) -> float:
    lo = min(values)
    return float(max(values) / lo) if lo > 0 else float("inf")


def _fit(report: Report, name: str, scales, values):
    """Decay fit, or a recorded failure with a NaN slope when the data are unusable."""
    try:
        return decay_fit(list(zip(scales, values)))
    except ValueError as e:
        report.failures.append(f"{name}: {e}")
        return DecayFit(float("nan"), float("nan"), float("nan"), len(scales))


# ---------------------------------------------------------------- isometries
def run_isometry_suite(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol, prm = cfg["n"], cfg["N"], cfg["tolerances"], cfg["params"]
    rng = np.random.default_rng(cfg["seed"])
    pts = sample_interior(N, cfg["seed"], n)
    g = C.chyp_metric(n)
    lo, hi = prm["lambda_range"]
    maps = []
    for i in range(prm["dilations"]):
        mu = np.exp(rng.uniform(-1, 1)) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        U = unitary_group.rvs(n - 1, random_state=rng) if n > 2 else np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.eye(1)
        maps.append(("H", i, C.dilation_H(mu, n, np.atleast_2d(U))))
    for i in range(prm["inversions"]):
        lam = rng.uniform(lo, hi)
        maps.append(("I", i, C.inversion_I(lam, n)))
    for i in range(prm["inversions"]):
        lam = rng.uniform(lo, hi)
        maps.append(("K", i, C.conversion_K(lam, n)))
    Jst = C.J_std(n)

    def one(args):
        kind, iso, h = args
        pb = C.pullback_metric(g, iso.on_horo, 2 * n)
        G = g.at(h)
        dev = float(np.sqrt(norm2(pb.at(h) - G, np.linalg.inv(G))))
        inv = float("nan")
        if kind != "H":
            inv = float(np.abs(iso.on_horo(iso.on_horo(h)) - h).max() / max(1.0, np.abs(h).max()))
        s = np.asarray(C.horo_to_siegel(h), dtype=float)
        D = iso.on_siegel(J.seed(s, 1)).derivative_tensor(1).T
        sign = -1.0 if iso.antiholomorphic else 1.0
        hol = float(np.abs(D @ Jst - sign * Jst @ D).max() / np.abs(D).max())
        return dev, inv, hol

    jobs = [(kind, iso, h) for kind, _, iso in maps for h in pts]
    labels = [(kind, i, pid) for kind, i, _ in maps for pid in range(len(pts))]
    results = _pmap(one, jobs)
    worst = {"pullback": 0.0, "involution": 0.0, "holomorphy": 0.0}
    for (kind, i, pid), res in zip(labels, results):
        row = {"map": kind, "param_id": i, "point_id": pid}
        if _flag(rep, row, res, f"{kind}{i} point {pid}"):
            continue
        dev, inv, hol = res
        row.update(pullback_dev=dev, involution_dev=inv, holomorphy_dev=hol, status="ok")
        rep.rows.append(row)
        worst["pullback"] = max(worst["pullback"], dev)
        if np.isfinite(inv):
            worst["involution"] = max(worst["involution"], inv)
        worst["holomorphy"] = max(worst["holomorphy"], hol)
    rep.summary.update(max_pullback_dev=worst["pullback"], max_involution_dev=worst["involution"],
                       max_holomorphy_dev=worst["holomorphy"], maps=len(maps), points=len(pts))
    rep.check("max pullback deviation", worst["pullback"], f"< {tol['pullback']}", worst["pullback"] < tol["pullback"])
    rep.check("max involution deviation", worst["involution"], f"< {tol['involution']}",
              worst["involution"] < tol["involution"])
    rep.check("max (anti)holomorphy defect", worst["holomorphy"], f"< {tol['holomorphy']}",
              worst["holomorphy"] < tol["holomorphy"])
    return rep


# ------------------------------------------------------------ Einstein model
def _pinching_planes(n: int, count: int, rng, pts):
    gs = C.chyp_metric_siegel(n)
    Jst = C.J_std(n)
    out = []
    for i in range(count):
        s = np.asarray(C.horo_to_siegel(pts[i % len(pts)]), dtype=float)
        X, Y = rng.normal(size=2 * n), rng.normal(size=2 * n)
        out.append(("sectional", i, gs, s, X, Y))
    for i in range(min(count, len(pts))):
        s = np.asarray(C.horo_to_siegel(pts[i]), dtype=float)
        X = rng.normal(size=2 * n)
        out.append(("complex_line", i, gs, s, X, Jst @ X))
        Y = rng.normal(size=2 * n)
        out.append(("totally_real", i, gs, s, X, Y))
    return out, Jst


def run_einstein_residual(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol = cfg["n"], cfg["N"], cfg["tolerances"]
    rng = np.random.default_rng(cfg["seed"])
    g = C.chyp_metric(n)
    pts = sample_interior(N, cfg["seed"], n)
    res = _pmap(lambda h: einstein_residual(g, n, h)[1], pts)
    worst = 0.0
    for pid, r in enumerate(res):
        row = {"quantity": "einstein_residual", "n": n, "point_id": pid}
        if _flag(rep, row, r, f"point {pid}"):
            continue
        row.update(value=r, status="ok")
        rep.rows.append(row)
        worst = max(worst, r)
    planes, Jst = _pinching_planes(n, cfg["params"]["planes"], rng, pts)

    def sec(args):
        kind, _, gs, s, X, Y = args
        pk = curvature(gs, s)
        if kind == "totally_real":
            G = pk.metric
            JX = Jst @ X
            for v in (X, JX):
                Y = Y - (v @ G @ Y) / (v @ G @ v) * v
        return sectional_curvature(pk, X, Y)

    vals = _pmap(sec, planes)
    ranges = {"sectional": [], "complex_line": [], "totally_real": []}
    for (kind, i, *_), v in zip(planes, vals):
        row = {"quantity": kind, "n": n, "point_id": i}
        if _flag(rep, row, v, f"{kind} {i}"):
            continue
        row.update(value=v, status="ok")
        rep.rows.append(row)
        ranges[kind].append(v)
    allv = np.array(sum(ranges.values(), []))
    rep.summary.update(max_einstein_residual=worst, sectional_min=float(allv.min()),
                       sectional_max=float(allv.max()))
    rep.check("max |Ric + (n+1)/2 g|", worst, f"< {tol['einstein']}", worst < tol["einstein"])
    p = tol["pinching"]
    rep.check("sectional curvature range", f"[{allv.min():.12g}, {allv.max():.12g}]",
              f"within [-1 - {p}, -1/4 + {p}]", bool(allv.min() >= -1 - p and allv.max() <= -0.25 + p))
    e = tol["extremal"]
    cl = float(np.abs(np.array(ranges["complex_line"]) + 1.0).max())
    tr = float(np.abs(np.array(ranges["totally_real"]) + 0.25).max())
    rep.check("complex lines at -1", cl, f"< {e}", cl < e)
    rep.check("totally real planes at -1/4", tr, f"< {e}", tr < e)
    return rep


# ------------------------------------------------------------ preglue sweep
def _cr_from(prm: dict, n: int) -> C.CRStructure:
    kind = prm.get("cr", "normal-form")
    amp = prm.get("cr_amplitude", 0.1)
    if kind == "normal-form":
        return C.normal_form_cr(n, amp)
    if kind == "generic":
        return C.generic_cr(n, amp)
    if kind == "standard":
        return C.standard_cr(n)
    raise ValueError(f"unknown CR structure {kind!r}")


def est0_norms(cr: P.GluedCR, q: np.ndarray, tau1: float, n: int):
    """Norms of ``T`` and its first two derivatives in rescaled coordinates.

    ``T`` is the difference between the glued structure, pulled back by the
    dilation taking the unit ball to the ball of radius ``tau1``, and ``J0``.
    """
    x = J.seed(q, 2)
    comps = [x[0] * 0.0, x[0] * tau1] + [x[k] * np.sqrt(tau1) for k in range(1, 2 * n - 1)]
    Tq = cr.frame_matrix(J.stack(comps)) - C.J0_matrix(n)
    return (float(np.linalg.norm(Tq.value)), float(np.linalg.norm(Tq.derivative_tensor(1))),
            float(np.linalg.norm(Tq.derivative_tensor(2))))


def run_preglue_sweep(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol, prm = cfg["n"], cfg["N"], cfg["tolerances"], cfg["params"]
    exp_id = cfg.get("id", cfg["experiment"])
    J1 = _cr_from(prm, n)
    kappa = P.default_kappa(n, prm.get("kappa_amplitude", 1.0))
    gch = C.chyp_metric(n)
    ks = list(range(cfg["sweep"]["k_min"], cfg["sweep"]["k_max"] + 1))
    scales, sup_dev, sup_wres, supT = [], [], [], [[], [], []]
    for k in ks:
        t1 = 2.0 ** -k
        tau = (t1 / 2.0, t1)
        g = P.GluedMetric(J1, tau, kappa)
        cr = P.GluedCR(J1, tau)
        pts = sample_shell(tau[0], tau[1], N, cfg["seed"], n)
        bpts = sample_boundary_ball(1.0, N, cfg["seed"] + 1, n)

        def one(args):
            h, q = args
            G, G0 = g.at(h), gch.at(h)
            dev = float(np.sqrt(norm2(G - G0, np.linalg.inv(G0))))
            E, r = einstein_residual(g, n, h)
            return dev, r, float(np.sqrt(h[0])), est0_norms(cr, q, t1, n)

        results = _pmap(one, list(zip(pts, bpts)))
        dmax, wmax, Tm = 0.0, 0.0, [0.0, 0.0, 0.0]
        for pid, res in enumerate(results):
            row = {"experiment_id": exp_id, "scale": t1, "point_id": pid}
            if _flag(rep, row, res, f"k={k} point {pid}"):
                continue
            dev, r, w, T = res
            row.update(residual=r, weight=w, weighted_residual=r / w, metric_deviation=dev,
                       T0=T[0], T1=T[1], T2=T[2], status="ok")
            rep.rows.append(row)
            dmax, wmax = max(dmax, dev), max(wmax, r / w)
            Tm = [max(a, b) for a, b in zip(Tm, T)]
        scales.append(t1)
        sup_dev.append(dmax)
        sup_wres.append(wmax)
        for i in range(3):
            supT[i].append(Tm[i])
    fit = _fit(rep, "metric deviation fit", scales, sup_dev)
    fits_T = [_fit(rep, f"T derivative {i} fit", scales, s) for i, s in enumerate(supT)]
    wfit = _fit(rep, "weighted residual fit", scales, sup_wres)
    ratio = _ratio(sup_wres)
    rep.summary.update(scales=scales, sup_metric_deviation=sup_dev, sup_weighted_residual=sup_wres,
                       sup_T=supT[0], sup_dT=supT[1], sup_d2T=supT[2], slope=fit.slope, r2=fit.r2,
                       slope_band=list(fit.band()), weighted_residual_slope=wfit.slope,
                       T_slopes=[f.slope for f in fits_T])
    lo, hi = tol["slope_low"], tol["slope_high"]
    rep.check("slope of sup|g_tau - g^CH|", fit.slope, f"in [{lo}, {hi}]", lo <= fit.slope <= hi)
    rep.check("max/min of sup w^-1 |Ric + (n+1)/2 g|", ratio, f"< {tol['ratio_max']}", ratio < tol["ratio_max"])
    rep.check("slope of sup|T|", fits_T[0].slope, f">= {tol['T_slope_min']}", fits_T[0].slope >= tol["T_slope_min"])
    rep.check("slope of sup|dT|", fits_T[1].slope, f">= {tol['dT_slope_min']}", fits_T[1].slope >= tol["dT_slope_min"])
    rep.sweep = Sweep("tau1", scales,
                      {"sup|g_tau - g^CH|": sup_dev, "sup w^-1 Einstein": sup_wres,
                       "sup|T|": supT[0], "sup|dT|": supT[1]},
                      {"sup|g_tau - g^CH|": {"slope": fit.slope, "intercept": fit.intercept},
                       "sup|T|": {"slope": fits_T[0].slope, "intercept": fits_T[0].intercept},
                       "sup|dT|": {"slope": fits_T[1].slope, "intercept": fits_T[1].intercept}})
    return rep


# --------------------------------------------------------------- Weitzenbock
def run_weitzenbock(cfg: dict) -> Report:
    rep = _new_report(cfg)
    N, tol = cfg["N"], cfg["tolerances"]
    rng = np.random.default_rng(cfg["seed"])
    g = C.chyp_metric(2)
    pts = sample_interior(N, cfg["seed"], 2)
    fields = [random_polynomial_sym2(rng) for _ in range(N)]
    ctrl = product_h2h2()
    cpts = pts.copy()
    cpts[:, 1] = 0.5 + np.abs(cpts[:, 1])
    cpts[:, 3] = 0.5 + np.abs(cpts[:, 3])

    def one(args):
        gg, h, p = args
        t = weitzenbock_terms(gg, trace_free_part(h, gg), p)
        return t.residual, float(np.linalg.norm(t.lhs - (t.dd - t.scal_term)))

    worst, ctrl_min = 0.0, np.inf
    for name, gg, P_ in (("complex hyperbolic", g, pts), ("H2 x H2", ctrl, cpts)):
        results = _pmap(one, [(gg, h, p) for h, p in zip(fields, P_)])
        for pid, res in enumerate(results):
            row = {"metric": name, "pair_id": pid}
            if _flag(rep, row, res, f"{name} pair {pid}"):
                continue
            r, r0 = res
            row.update(residual=r, residual_without_wminus=r0, status="ok")
            rep.rows.append(row)
            if name == "H2 x H2":
                ctrl_min = min(ctrl_min, r0)
                worst = max(worst, r)
            else:
                worst = max(worst, r)
    rep.summary.update(max_residual=worst, control_min_without_wminus=ctrl_min)
    rep.check("max identity residual", worst, f"< {tol['residual']}", worst < tol["residual"])
    rep.check("control: residual without W- on H2 x H2", ctrl_min, f"> {tol['control_min']}",
              ctrl_min > tol["control_min"])
    return rep


# --------------------------------------------------------------- W+ spectrum
def run_wplus_spectrum(cfg: dict) -> Report:
    rep = _new_report(cfg)
    tol = cfg["tolerances"]
    rng = np.random.default_rng(cfg["seed"])
    g = C.chyp_metric(2)
    pts = sample_interior(cfg["params"]["points"], cfg["seed"], 2)
    worst_s, worst_a = 0.0, 0.0
    for pid, h in enumerate(pts):
        pk = curvature(g, h, g.complex_orientation)
        s = pk.scalar
        ev = np.sort(np.linalg.eigvalsh(pk.weyl_plus))
        target = np.sort([s / 6.0, -s / 12.0, -s / 12.0])
        for i in range(3):
            d = abs(ev[i] - target[i])
            worst_s = max(worst_s, d)
            rep.rows.append({"kind": "eigenvalue", "point_id": pid, "xi_id": i, "scalar": s, "value": ev[i],
                             "target": target[i], "deviation": d, "status": "ok"})
        for xi_id in range(cfg["N"]):
            xi = rng.normal(size=3)
            row = {"kind": "alpha", "point_id": pid, "xi_id": xi_id, "scalar": s}
            res = _pmap(lambda x: wplus_action_alpha(g, x, h), [xi])[0]
            if _flag(rep, row, res, f"alpha point {pid} xi {xi_id}"):
                continue
            ratio, spread = res
            d = max(abs(ratio - s / 6.0), spread)
            worst_a = max(worst_a, d)
            row.update(value=ratio, target=s / 6.0, deviation=d, status="ok")
            rep.rows.append(row)
    rep.summary.update(max_spectrum_dev=worst_s, max_alpha_dev=worst_a)
    rep.check("W+ eigenvalues vs (s/6, -s/12, -s/12)", worst_s, f"< {tol['spectrum']}", worst_s < tol["spectrum"])
    rep.check("W+(omega xi) / (omega xi) vs s/6", worst_a, f"< {tol['alpha']}", worst_a < tol["alpha"])
    return rep


# --------------------------------------------------------------- Fefferman
def run_fefferman(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol = cfg["n"], cfg["N"], cfg["tolerances"]
    gs = C.chyp_metric_siegel(n)
    Jst = C.J_std(n)
    sp = [np.asarray(C.horo_to_siegel(h), dtype=float) for h in sample_interior(N, cfg["seed"], n)]

    def potential(s):
        return -1.0 * J.log(C.height_siegel(s))

    def kahler(s):
        G = gs.at(s)
        D = C.kahler_metric_from_potential(potential, Jst, s) - G
        return float(np.sqrt(norm2(D, np.linalg.inv(G))))

    wk, wf = 0.0, 0.0
    for pid, res in enumerate(_pmap(kahler, sp)):
        row = {"kind": "kahler", "point_id": pid}
        if _flag(rep, row, res, f"kahler point {pid}"):
            continue
        row.update(deviation=res, status="ok")
        rep.rows.append(row)
        wk = max(wk, res)
    fp = sp[: cfg["params"]["fefferman_points"]]
    for pid, res in enumerate(_pmap(lambda s: abs(C.fefferman_residual(C.height_siegel, s)), fp)):
        row = {"kind": "fefferman", "point_id": pid}
        if _flag(rep, row, res, f"fefferman point {pid}"):
            continue
        row.update(deviation=res, status="ok")
        rep.rows.append(row)
        wf = max(wf, res)
    rep.summary.update(max_kahler_dev=wk, max_fefferman_residual=wf)
    rep.check("metric of -dd^c ln f vs g^CH", wk, f"< {tol['kahler']}", wk < tol["kahler"])
    rep.check("Fefferman residual", wf, f"< {tol['fefferman']}", wf < tol["fefferman"])
    return rep


# ------------------------------------------------------------- nu integrand
def run_nu_integrand(cfg: dict) -> Report:
    rep = _new_report(cfg)
    N, tol, prm = cfg["N"], cfg["tolerances"], cfg["params"]
    g = C.chyp_metric(2)
    pts = sample_interior(N, cfg["seed"], 2)
    worst = 0.0
    for pid, res in enumerate(_pmap(lambda h: nu_integrand(g, h), pts)):
        row = {"point_id": pid}
        if _flag(rep, row, res, f"point {pid}"):
            continue
        row.update(wminus2=res.wminus2, wplus2=res.wplus2, ric0_2=res.ric0_2, scal2=res.scal2,
                   value=res.value, status="ok")
        rep.rows.append(row)
        worst = max(worst, abs(res.value))
    u0, u1 = prm["collar"]
    a = prm["window"]
    box = CoordinateBox([u0, -a, -a, -a], [u1, a, a, a])
    qN = prm["quadrature_N"]
    est = integrate_region(g, box, qN, cfg["seed"])
    vol = integrate_region(g, box, qN, cfg["seed"], integrand=lambda p: 1.0)
    bar = 3.0 * est.error + tol["pointwise"] * vol.value
    ledgers = {int(k): surgery_bookkeeping(int(k)) for k in prm["ledger_k"]}
    rep.summary.update(max_pointwise=worst, collar_integral=est.value, collar_error=est.error,
                       collar_volume=vol.value, error_bar=bar,
                       ledgers={k: L.to_dict() for k, L in ledgers.items()},
                       inner_boundary="cancels by region identity")
    rep.check("max |integrand| on g^CH", worst, f"< {tol['pointwise']}", worst < tol["pointwise"])
    rep.check("collar integral", est.value, f"|value| <= {bar:.3e} (3 sigma + pointwise tol x volume)",
              abs(est.value) <= bar)
    single = surgery_bookkeeping(1)
    for k, L in ledgers.items():
        ok = L.as_tuple() == (-k, 0, k)
        acc = single
        for _ in range(k - 1):
            acc = acc + single
        rep.check(f"ledger k={k}", str(L.as_tuple()), f"== ({-k}, 0, {k}) and equals {k} single handles",
                  ok and acc == L)
    return rep


# ------------------------------------------------------------ weight bounds
def run_weight_bounds(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol, prm = cfg["n"], cfg["N"], cfg["tolerances"], cfg["params"]
    gch = C.chyp_metric(n)
    ks = list(range(cfg["sweep"]["k_min"], cfg["sweep"]["k_max"] + 1))
    seam_worst, sups, scales = 0.0, [], []
    for k in ks:
        t1 = 2.0 ** -k
        params = P.GluingParams.from_scales(t1 / 4.0, t1, theta=prm["theta"])
        conf = P.klein_assemble(params, n)
        lam0, lam1 = params.lam[0]
        m = params.m
        disk = sample_region(C.Region("Disk", (lam1,)), N, cfg["seed"], n)
        inner = sample_shell(lam0 * (1 + 1e-9), lam1, N, cfg["seed"] + 1, n)

        def seam(h, j):
            f_out = float(h[0])
            f_in = float(m * P.f_check(conf.to_reference(j, h), conf.eps))
            return abs(f_in - f_out) / f_out

        def ident(h):
            f0 = float(P.weight_sharp(conf, h, "p0")[0])
            f1 = float(P.weight_sharp(conf, np.asarray(conf.iota(h), dtype=float), "p1")[0])
            return abs(f0 - f1) / f0

        for j in (0, 1):
            for pid, res in enumerate(_pmap(lambda h: seam(h, j), disk)):
                row = {"kind": "seam", "scale": t1, "side": j, "point_id": pid}
                if _flag(rep, row, res, f"seam k={k} side {j} point {pid}"):
                    continue
                row.update(value=res, status="ok")
                rep.rows.append(row)
                seam_worst = max(seam_worst, res)
        for pid, res in enumerate(_pmap(ident, inner)):
            row = {"kind": "identification", "scale": t1, "side": 0, "point_id": pid}
            if _flag(rep, row, res, f"identification k={k} point {pid}"):
                continue
            row.update(value=res, status="ok")
            rep.rows.append(row)
            seam_worst = max(seam_worst, res)
        grid = sample_shell(lam0 * (1 + 1e-9), 2.0 * t1, N, cfg["seed"] + 2, n)
        gmax = 0.0
        for pid, res in enumerate(_pmap(lambda h: P.log_weight_gradient(conf, h, "p0", gch), grid)):
            row = {"kind": "log_gradient", "scale": t1, "side": 0, "point_id": pid}
            if _flag(rep, row, res, f"gradient k={k} point {pid}"):
                continue
            row.update(value=res, status="ok")
            rep.rows.append(row)
            gmax = max(gmax, res)
        sups.append(gmax)
        scales.append(t1)
    ratio = _ratio(sups)
    rep.summary.update(max_seam_defect=seam_worst, scales=scales, sup_log_gradient=sups)
    rep.check("seam and identification defect of f#", seam_worst, f"< {tol['seam']}", seam_worst < tol["seam"])
    rep.check("max/min of sup |d ln w#| across sweep", ratio, f"< {tol['ratio_max']}", ratio < tol["ratio_max"])
    rep.sweep = Sweep("tau1", scales, {"sup |d ln w#|": sups})
    return rep


# -------------------------------------------------------------- L^2 weights
def run_l2_weights(cfg: dict) -> Report:
    rep = _new_report(cfg)
    prm = cfg["params"]
    cases = prm["cases"]
    res = _pmap(lambda c: l2_weight_integrability(c[1], c[2], int(c[0]), shells=prm["shells"]), cases)
    for cid, (c, r) in enumerate(zip(cases, res)):
        n, d, dp = int(c[0]), float(c[1]), float(c[2])
        expected = "convergent" if d + dp < n else "divergent"
        row = {"case_id": cid, "n": n, "delta": d, "delta_prime": dp, "expected": expected}
        if _flag(rep, row, r, f"case {cid}"):
            continue
        row.update(verdict=r.verdict, far_slope=r.far_slope, status="ok")
        rep.rows.append(row)
        rep.check(f"case {cid} (n={n}, delta={d}, delta'={dp})", r.verdict, f"== {expected}",
                  r.verdict == expected)
    return rep


# --------------------------------------------------------- bracket constants
def run_bracket_constants(cfg: dict) -> Report:
    rep = _new_report(cfg)
    n, N, tol, prm = cfg["n"], cfg["N"], cfg["tolerances"], cfg["params"]
    rng = np.random.default_rng(cfg["seed"])
    t1 = prm["tau1"]
    cr = P.GluedCR(C.normal_form_cr(n, prm["cr_amplitude"]), (t1 / 2.0, t1))
    fr = P.adapted_frame(cr, n)
    us = [t1 * 2.0 ** -k for k in range(4, 16, 2)]
    lim = {"y0y1": 1.0, "y0yj": 0.5, "y2y3": -1.0}
    rem_yj, rem_other = [[] for _ in us], [[] for _ in us]
    dev_end = 0.0
    for pid in range(N):
        r = t1 * rng.uniform(0.55, 0.95)
        th = rng.uniform(-1.2, 1.2)
        d = rng.normal(size=2 * n - 2)
        d /= np.linalg.norm(d)
        for iu, u in enumerate(us):
            c = r * np.cos(th)
            h = np.concatenate([[u, -r * np.sin(th)], np.sqrt(4.0 * (c - u)) * d])
            row = {"point_id": pid, "u": u}
            res = _pmap(lambda x: P.frame_brackets(fr, x), [h])[0]
            if _flag(rep, row, res, f"point {pid} u={u}"):
                continue
            cb = res
            diag = np.array([cb[j, 0, j] for j in range(2, 2 * n)])
            y0yj = float(diag[np.argmax(np.abs(diag - lim["y0yj"]))])
            mask = np.ones(2 * n, bool)
            mask[1] = False
            other = float(np.abs(cb[mask, 2, 3]).max())
            row.update(y0y1=cb[1, 0, 1], y0yj=y0yj, y2y3=cb[1, 2, 3], remainder=other, status="ok")
            rep.rows.append(row)
            rem_yj[iu].append(abs(y0yj - lim["y0yj"]))
            rem_other[iu].append(other)
            if iu == len(us) - 1:
                dev_end = max(dev_end, abs(cb[1, 0, 1] - lim["y0y1"]), abs(cb[1, 2, 3] - lim["y2y3"]),
                              abs(y0yj - lim["y0yj"]))
    sup_yj = [max(v, default=float("nan")) for v in rem_yj]
    sup_o = [max(v, default=float("nan")) for v in rem_other]
    f2 = _fit(rep, "[Y0,Yj] remainder fit", us, sup_yj)
    f1 = _fit(rep, "[Y2,Y3] remainder fit", us, sup_o)
    rep.summary.update(constants=lim, u=us, sup_y0yj_remainder=sup_yj, sup_y2y3_other=sup_o,
                       y0yj_remainder_slope=f2.slope, y2y3_other_slope=f1.slope)
    rep.check("constants at smallest u", dev_end, f"< {tol['limit']}", dev_end < tol["limit"])
    rep.check("[Y0,Yj] - Yj/2 decay slope in u", f2.slope, f">= {tol['w2_slope_min']}",
              f2.slope >= tol["w2_slope_min"])
    rep.check("[Y2,Y3] off-Y1 part decay slope in u", f1.slope, f">= {tol['w_slope_min']}",
              f1.slope >= tol["w_slope_min"])
    rep.sweep = Sweep("u", us, {"sup |[Y0,Yj] - Yj/2|": sup_yj, "sup off-Y1 part of [Y2,Y3]": sup_o},
                      {"sup |[Y0,Yj] - Yj/2|": {"slope": f2.slope, "intercept": f2.intercept},
                       "sup off-Y1 part of [Y2,Y3]": {"slope": f1.slope, "intercept": f1.intercept}})
    return rep


RUNNERS = {
    "isometry-suite": run_isometry_suite,
    "einstein-residual": run_einstein_residual,
    "preglue-sweep": run_preglue_sweep,
    "weitzenbock": run_weitzenbock,
    "wplus-spectrum": run_wplus_spectrum,
    "fefferman": run_fefferman,
    "nu-integrand": run_nu_integrand,
    "weight-bounds": run_weight_bounds,
    "l2-weights": run_l2_weights,
    "bracket-constants": run_bracket_constants,
}


def run(cfg: dict) -> Report:
    """Run the experiment described by a validated configuration."""
    return RUNNERS[cfg["experiment"]](cfg)
