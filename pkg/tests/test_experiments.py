import math

import numpy as np
import pytest

from clusterlab import experiments as ex


def test_regimes_and_exponents():
    assert ex.regime(2, 0.25) == "below"
    assert ex.regime(2, 0.5) == "critical"
    assert ex.regime(3, 1 / 3) == "critical"
    assert ex.regime(2, 0.75) == "above"
    assert ex.theoretical_exponent(2, 0.25) == 0.5
    assert ex.theoretical_exponent(2, 0.75) == pytest.approx(0.25)
    assert ex.theoretical_exponent(3, 0.5) == pytest.approx(0.5)
    assert ex.theoretical_exponent(2, 0.0) is None
    assert ex.effective_dimension(2, 0.0) == 2


def test_fit_line_exact():
    x = np.arange(1, 8, dtype=float)
    fit = ex.fit_line(x, 3 * x - 1)
    assert fit.slope == pytest.approx(3) and fit.intercept == pytest.approx(-1)
    assert fit.r_squared == pytest.approx(1) and fit.half_width == pytest.approx(0, abs=1e-9)
    n = 2.0 ** np.arange(10, 17)
    assert ex.fit_power_law(n, 5 * n**0.3).slope == pytest.approx(0.3)


def test_delta_schedule():
    assert ex.close_pair_delta(100, 2, 0.25, 0.1) == pytest.approx(0.01)
    assert ex.close_pair_delta(100, 2, 0.75, 0.1) == pytest.approx(0.1 * 100**-0.75)
    assert ex.close_pair_delta(100, 2, 0.5, 0.1) == pytest.approx(0.1 / math.sqrt(100 * math.log(100)))


def test_scaling_validation():
    good = [64, 128, 256, 512, 1024, 2048]
    with pytest.raises(ValueError):
        ex.scaling_experiment(2, 0.5, [64, 128, 256, 512, 1024, 1024], 10)
    with pytest.raises(ValueError):
        ex.scaling_experiment(2, 0.5, [64, 70, 80, 90, 100, 110], 10)  # < 3 octaves
    with pytest.raises(ValueError):
        ex.scaling_experiment(2, 0.5, good[:4], 10)
    with pytest.raises(ValueError):
        ex.scaling_experiment(2, 0.5, good, 5)


def test_scaling_small_run_is_deterministic():
    ns = [64, 128, 256, 512, 1024, 2048]
    a = ex.scaling_experiment(2, 0.25, ns, 10, seed=3)
    b = ex.scaling_experiment(2, 0.25, ns, 10, seed=3, threads=3)
    assert [r.mean_L_n for r in a.rows] == [r.mean_L_n for r in b.rows]
    assert [r.n for r in a.rows] == ns
    assert all(r.std_err > 0 for r in a.rows)
    assert a.theoretical_exponent == 0.5
    assert 0.3 < a.fitted_exponent < 0.7
    assert a.file_stem == "scaling_2_0.25_3"
    names = [c.name for c in a.checks]
    assert any("exponent" in nm for nm in names)


def test_critical_window_uses_log_corrected_slope():
    ns = [2**k for k in range(10, 17)]
    n = np.array(ns, dtype=float)
    r = ex.ScalingReport(2, 0.5, 0, [ex.ScalingRow(k, 20, 1.0, 0.1) for k in ns],
                         ex.LineFit(0.45, 0, 0.01, 0.999), 0.5, "critical")
    lo, hi = r.exponent_window()
    slow = ex.fit_power_law(n, np.sqrt(n / np.log(n))).slope
    assert lo == pytest.approx(slow - 0.05)
    assert hi == pytest.approx(0.58)
    assert 0.39 < lo < 0.40


def test_tail_experiment_shape():
    rep = ex.tail_experiment(2, 0.5, 2000, 50, [0, 0.5, 1, 2, 4, 8], seed=1)
    emp = [r.empirical for r in rep.grid]
    assert emp[0] == 1.0
    assert all(a >= b for a, b in zip(emp, emp[1:]))
    assert rep.grid[0].bound == 1.0
    # saturation check plus one per L with bound < 1 (L = 0 has bound 1)
    assert len(rep.checks) == 1 + 5
    with pytest.raises(ValueError):
        ex.tail_experiment(2, 0.0, 100, 10, [1])


def test_saturation_heuristic():
    n = ex.saturation_n(2, 1.0, trials=5, seed=0, n0=256, n_max=2**14)
    assert 256 <= n <= 2**14


def test_close_pair_experiment_small():
    rep = ex.close_pair_experiment(2, 0.25, [512, 1024, 2048, 4096], 8, epsilon=0.1, seed=2)
    assert [r.n for r in rep.rows] == [512, 1024, 2048, 4096]
    assert all(r.mean_pairs >= 0 for r in rep.rows)
    assert rep.regime == "below"
    with pytest.raises(ValueError):
        ex.close_pair_experiment(2, 0.25, [512, 1024], 8, epsilon=0.0)
    with pytest.raises(ValueError):
        ex.close_pair_experiment(2, 0.25, [512, 1024], 8, epsilon=1.5)


def test_depth_tail_small():
    rep = ex.depth_tail_experiment([100], 200, seed=4)
    row = rep.rows[0]
    assert row.violations == 0 and row.expected_bound == pytest.approx(200 * 100**-3)
    assert row.max_max_depth < row.threshold
    assert rep.passed


def test_alpha_zero_small():
    rep = ex.alpha_zero_experiment(2, [64, 256, 1024, 4096], 20, seed=5)
    means = [r.mean_radius for r in rep.rows]
    assert all(a < b for a, b in zip(means, means[1:]))
    assert rep.fit.slope > 0
    assert rep.alpha == 0.0


def test_urn_validation_small():
    rep = ex.urn_validation([1, 3, 10], 300, 400, seed=6)
    first = rep.rows[0]
    assert first.mean == 300 and first.mean_se == 0 and first.second_moment == 300**2
    assert rep.passed
    with pytest.raises(ValueError):
        ex.urn_validation([0], 300, 10)
    with pytest.raises(ValueError):
        ex.urn_validation([301], 300, 10)


def test_report_csv(tmp_path):
    rep = ex.urn_validation([2, 5], 100, 50, seed=7)
    p = rep.to_csv(tmp_path / f"{rep.file_stem}.csv")
    lines = p.read_text().splitlines()
    assert lines[0].startswith("m,n,trials,mean,mean_se")
    assert len(lines) == 3
    q = ex.urn_validation([2, 5], 100, 50, seed=7).to_csv(tmp_path / "again.csv")
    assert p.read_bytes() == q.read_bytes()


def test_check_line_format():
    c = ex.Check("x", True, "1", "<= 2")
    assert c.line() == "PASS  x: measured 1, expected <= 2"
    assert ex.Check("x", False, "3", "<= 2").line().startswith("FAIL")
