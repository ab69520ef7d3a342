"""Exit criteria.  Each test records one PASS/FAIL line, printed after the run."""

import json
import math
import time

import numpy as np
import pytest

from clusterlab import GrowthConfig, grow
from clusterlab import experiments as ex
from clusterlab.cli import main
from clusterlab.geometry import emst_exact, emst_fast

from test_geometry import brute_mst_length

SEED = 1
SCALING_NS = [2**k for k in range(10, 17)]
SCALING_TRIALS = 20


def _random_instance(rng, n, d):
    kind = rng.integers(3)
    if kind == 0:
        return rng.random((n, d))
    if kind == 1:
        return rng.normal(size=(n, d)) * rng.exponential(size=d)
    return grow(GrowthConfig(d, float(rng.uniform(0.1, 1.5)), n, int(rng.integers(2**63)))).points


def test_c01_emst_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(2, 2001))
        d = (2, 3, 5)[i % 3]
        pts = _random_instance(rng, n, d)
        a, b = emst_exact(pts).total_length, emst_fast(pts).total_length
        worst = max(worst, abs(a - b) / a if a > 0 else abs(b))
    enum_worst = 0.0
    for i in range(100):
        n = int(rng.integers(2, 7))
        pts = _random_instance(rng, n, (2, 3, 5)[i % 3])
        ref = brute_mst_length(pts)
        enum_worst = max(enum_worst, abs(emst_exact(pts).total_length - ref) / ref)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and enum_worst <= 1e-9 and elapsed < 120
    verdict("1 EMST oracle equivalence", ok,
            f"fast/exact max rel diff {worst:.3g}, exact/enumeration {enum_worst:.3g}, {elapsed:.1f}s (< 120s)")
    assert ok


def _scaling(verdict, label, alpha):
    rep = ex.scaling_experiment(2, alpha, SCALING_NS, SCALING_TRIALS, seed=SEED)
    lo, hi = rep.exponent_window()
    ok = rep.fit.r_squared >= 0.99 and lo <= rep.fitted_exponent <= hi
    verdict(label, ok, f"exponent {rep.fitted_exponent:.4f} in [{lo:.4f}, {hi:.4f}], R^2 {rep.fit.r_squared:.5f}")
    return rep, ok


def test_c02_scaling_below_critical(verdict):
    rep, ok = _scaling(verdict, "2 MST scaling d=2 alpha=0.25", 0.25)
    assert rep.exponent_window() == pytest.approx((0.42, 0.58))
    assert ok


def test_c03_scaling_above_critical(verdict):
    rep, ok = _scaling(verdict, "3 MST scaling d=2 alpha=0.75", 0.75)
    assert rep.exponent_window() == pytest.approx((0.17, 0.40))
    assert ok


def test_c04_scaling_critical(verdict):
    rep, ok = _scaling(verdict, "4 MST scaling d=2 alpha=0.5", 0.5)
    n = np.array(SCALING_NS, dtype=float)
    slow = ex.fit_power_law(n, np.sqrt(n / np.log(n))).slope
    assert rep.exponent_window() == pytest.approx((slow - 0.05, 0.58))
    assert ok


def test_c05_radius_tail(verdict):
    rep = ex.tail_experiment(2, 0.5, 100_000, 1000, range(1, 11), seed=SEED)
    bad = [r for r in rep.grid if r.empirical > math.exp(-r.L**2 / 1200)]
    detail = ", ".join(f"L={r.L:g}: {r.empirical:.3g}<={r.bound:.5f}" for r in rep.grid[:4])
    if bad:
        detail += "; violated at L=" + ",".join(f"{r.L:g}" for r in bad)
    verdict("5 radius tail P(rho>=L) <= exp(-L^2/1200), L=1..10", not bad, detail)
    assert not bad


def test_c06_urn_moments(verdict):
    rep = ex.urn_validation([2, 5, 10, 50], 10_000, 1000, seed=SEED)
    failed = [c.name for c in rep.checks if not c.passed]
    detail = "; ".join(f"m={r.m}: mean {r.mean:.1f} vs {r.analytic_mean:.1f} (se {r.mean_se:.1f}), "
                       f"E W^2 {r.second_moment:.4g} vs {r.analytic_second:.4g}" for r in rep.rows)
    verdict("6 urn moments", not failed, detail + (f"; failed {failed}" if failed else ""))
    assert not failed


def test_c07_depth_tail(verdict):
    rep = ex.depth_tail_experiment([100, 1000], 1000, seed=SEED)
    viol = {r.m: r.violations for r in rep.rows}
    ok = all(v == 0 for v in viol.values())
    verdict("7 depth tail", ok, ", ".join(f"m={m}: {v} violations (max depth {r.max_max_depth}, "
                                          f"threshold {r.threshold:.1f})"
                                          for (m, v), r in zip(viol.items(), rep.rows)))
    assert ok


def test_c08_close_pair_envelope(verdict):
    ns = [2**12, 2**13, 2**14, 2**15]
    parts, ok = [], True
    for alpha in (0.25, 0.5, 0.75):
        rep = ex.close_pair_experiment(2, alpha, ns, 30, epsilon=0.1, seed=SEED)
        ok &= rep.growth <= 1.5
        parts.append(f"{rep.regime}: x{rep.growth:.3f} (ratios "
                     + "/".join(f"{r.ratio:.2e}" for r in rep.rows) + ")")
    verdict("8 close-pair Z/n growth <= x1.5 over three doublings", ok, "; ".join(parts))
    assert ok


def test_c09_alpha_zero(verdict):
    rep = ex.alpha_zero_experiment(2, SCALING_NS, 20, seed=SEED)
    lower = rep.fit.slope - rep.fit.half_width
    ok = lower > 0
    verdict("9 alpha=0 radius vs ln n", ok, f"slope {rep.fit.slope:.4f} +- {rep.fit.half_width:.4f}")
    assert ok


COMMANDS = [
    ["grow", "--dim", "2", "--alpha", "0.5", "--n", "2000", "--seed", "5", "--out", "{d}/c.csv"],
    ["mst", "--in", "{d}/c.csv"],
    ["mst", "--in", "{d}/c.csv", "--exact", "--out", "{d}/exact.csv"],
    ["experiment", "--kind", "scaling", "--n-list", "64,128,256,512,1024,2048", "--trials", "10",
     "--out-dir", "{d}"],
    ["experiment", "--kind", "tail", "--n", "5000", "--trials", "50", "--out-dir", "{d}"],
    ["experiment", "--kind", "pairs", "--n-list", "512,1024,2048,4096", "--trials", "5", "--out-dir", "{d}"],
    ["experiment", "--kind", "depth", "--m", "100", "--trials", "100", "--out-dir", "{d}"],
    ["experiment", "--kind", "urn", "--m", "2,5", "--n", "1000", "--trials", "100", "--out-dir", "{d}"],
    ["experiment", "--kind", "alpha-zero", "--n-list", "64,128,256", "--trials", "5", "--out-dir", "{d}"],
]


def test_c10_determinism(tmp_path, verdict):
    first = tmp_path / "first"
    first.mkdir()
    for argv in COMMANDS:
        main([a.replace("{d}", str(first)) for a in argv])
    manifests = sorted(first.glob("*.manifest.json"))
    assert len(manifests) == len(COMMANDS)
    again = tmp_path / "again"
    mismatched, compared = [], 0
    for m in manifests:
        main(["replay", str(m), "--out-dir", str(again)])
        for out in json.loads(m.read_text())["outputs"]:
            if not out.endswith(".csv"):
                continue
            name = out.rsplit("/", 1)[-1]
            compared += 1
            if (again / name).read_bytes() != (first / name).read_bytes():
                mismatched.append(name)
    ok = not mismatched and compared >= len(COMMANDS)
    verdict("10 manifest replay reproduces CSV bytes", ok,
            f"{compared} CSV files compared, {len(mismatched)} mismatched")
    assert ok
