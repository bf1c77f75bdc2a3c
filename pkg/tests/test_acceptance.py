"""Acceptance criteria 1 to 11, one test each.

Every test prints a ``PASS``/``FAIL`` line; the lines are repeated in the
pytest terminal summary.  Run ``python tests/test_acceptance.py`` to get
just the lines.
"""

import functools
import time

import pytest

from achforge import experiments as X
from achforge.config import make_config
from achforge.report import render_csv

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # executed as a script from elsewhere
    ACCEPTANCE_LINES = []

START = time.perf_counter()


@functools.lru_cache(maxsize=None)
def report(experiment, n=2, seed=0):
    return X.run(make_config(experiment, {"n": n, "seed": seed}))


def checks(rep):
    return {c.name: c for c in rep.checks}


def verdict(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_einstein_model():
    t0 = time.perf_counter()
    worst = {}
    for n in (2, 3):
        rep = X.run(make_config("einstein-residual", {"n": n, "N": 100, "params": {"planes": 1}}))
        c = checks(rep)["max |Ric + (n+1)/2 g|"]
        assert sum(r["quantity"] == "einstein_residual" and r["status"] == "ok" for r in rep.rows) == 100
        worst[n] = c.value
    dt = time.perf_counter() - t0
    ok = all(v < 1e-8 for v in worst.values()) and dt < 30
    verdict(1, "Einstein model", ok,
            f"max residual n=2 {worst[2]:.2e}, n=3 {worst[3]:.2e}, runtime {dt:.1f} s")


def test_criterion_02_pinching():
    rep = report("einstein-residual")
    assert rep.config["params"]["planes"] == 500
    c = checks(rep)
    rng = c["sectional curvature range"]
    cl = c["complex lines at -1"]
    tr = c["totally real planes at -1/4"]
    ok = rng.passed and cl.value < 1e-8 and tr.value < 1e-8
    verdict(2, "pinching", ok, f"range {rng.value}, complex {cl.value:.1e}, totally real {tr.value:.1e}")


def test_criterion_03_isometries():
    rep = report("isometry-suite")
    prm = rep.config["params"]
    assert rep.config["N"] == 50 and prm["dilations"] == 10 and prm["inversions"] == 5
    c = checks(rep)
    pb = c["max pullback deviation"].value
    inv = c["max involution deviation"].value
    hol = c["max (anti)holomorphy defect"].value
    ok = pb < 1e-9 and inv < 1e-13 and hol < 1e-10 and not rep.failures
    verdict(3, "isometry suite", ok, f"pullback {pb:.1e}, involution {inv:.1e}, holomorphy {hol:.1e}")


def test_criterion_04_kahler_potential():
    rep = report("fefferman")
    assert rep.config["N"] == 100 and rep.config["params"]["fefferman_points"] == 50
    c = checks(rep)
    k = c["metric of -dd^c ln f vs g^CH"].value
    f = c["Fefferman residual"].value
    verdict(4, "Kahler potential and Fefferman equation", k < 1e-10 and f < 1e-10,
            f"metric {k:.1e}, Fefferman {f:.1e}")


def test_criterion_05_preglue_rates():
    rep = report("preglue-sweep")
    assert rep.config["sweep"] == {"k_min": 3, "k_max": 7}
    c = checks(rep)
    slope = c["slope of sup|g_tau - g^CH|"].value
    ratio = c["max/min of sup w^-1 |Ric + (n+1)/2 g|"].value
    ok = 0.4 <= slope <= 0.6 and ratio < 3
    verdict(5, "preglued metric rates", ok, f"deviation slope {slope:.4f}, weighted residual ratio {ratio:.4f}")


def test_criterion_06_structure_rates():
    c = checks(report("preglue-sweep"))
    s0 = c["slope of sup|T|"].value
    s1 = c["slope of sup|dT|"].value
    verdict(6, "CR perturbation rates", s0 >= 0.4 and s1 >= 0.8, f"sup|T| slope {s0:.4f}, sup|dT| slope {s1:.4f}")


def test_criterion_07_weitzenbock():
    rep = report("weitzenbock")
    assert rep.config["N"] == 20
    r = checks(rep)["max identity residual"].value
    verdict(7, "Weitzenbock identity", r < 1e-5 and not rep.failures, f"max residual {r:.1e} over 20 pairs")


def test_criterion_08_wplus_spectrum():
    rep = report("wplus-spectrum")
    c = checks(rep)
    sp = c["W+ eigenvalues vs (s/6, -s/12, -s/12)"].value
    al = c["W+(omega xi) / (omega xi) vs s/6"].value
    verdict(8, "W+ spectrum and alpha ratio", sp < 1e-7 and al < 1e-6 and not rep.failures,
            f"spectrum {sp:.1e}, alpha {al:.1e}")


def test_criterion_09_nu_invariant():
    rep = report("nu-integrand")
    assert rep.config["N"] == 100
    c = checks(rep)
    pw = c["max |integrand| on g^CH"]
    col = c["collar integral"]
    ledgers = [c[f"ledger k={k}"] for k in (1, 2, 3)]
    ok = pw.value < 1e-8 and col.passed and all(x.passed for x in ledgers)
    verdict(9, "nu integrand and surgery ledger", ok,
            f"pointwise {pw.value:.1e}, collar {col.value:.1e}, ledgers {[x.value for x in ledgers]}")


def test_criterion_10_weights():
    wb = checks(report("weight-bounds"))
    seam = wb["seam and identification defect of f#"].value
    grad = wb["max/min of sup |d ln w#| across sweep"].value
    l2 = report("l2-weights")
    table = [c.passed for c in l2.checks]
    ok = seam < 1e-10 and grad < 1.5 and len(table) == 6 and all(table)
    verdict(10, "weight machinery", ok,
            f"seam {seam:.1e}, gradient ratio {grad:.4f}, truth table {sum(table)}/{len(table)}")


def test_criterion_11_determinism_and_runtime():
    cfgs = [("preglue-sweep", {"N": 16}), ("nu-integrand", {}), ("isometry-suite", {})]
    same = True
    for exp, over in cfgs:
        a = render_csv(X.run(make_config(exp, over))).encode()
        b = render_csv(X.run(make_config(exp, over))).encode()
        same = same and a == b
    elapsed = time.perf_counter() - START
    verdict(11, "determinism and runtime", same and elapsed < 600,
            f"byte-identical CSV {same}, suite time {elapsed:.1f} s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
