"""Monte Carlo experiments on the growing cluster.

Every experiment is a pure function of its parameters and base seed.  The
cluster for cell ``(n, t)`` -- size ``n``, trial ``t`` -- is grown from
``trial_seed(seed, n, t)``, so cells are independent and results do not
depend on how trials are scheduled across threads.  Aggregates are always
reduced in trial order.

Each report carries a list of :class:`Check` verdicts and can write itself
as a plot-ready CSV (one x column, paired value / standard-error columns).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy import stats

from clusterlab.geometry import close_pairs, emst_fast
from clusterlab.io import fmt_short, write_csv
from clusterlab.process import GrowthConfig, grow, levels, radius, radius_profile, trial_seed
from clusterlab.trees import subtree_sizes, urn_moments

SE_BAND = 3.0
R2_MIN = 0.99
SATURATION_TOL = 0.01


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: str
    expected: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: measured {self.measured}, expected {self.expected}"


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    half_width: float  # 95% confidence half-width of the slope
    r_squared: float


def fit_line(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least three points for a fit with a confidence interval")
    res = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, x.size - 2) * res.stderr)
    return LineFit(float(res.slope), float(res.intercept), half, float(res.rvalue**2))


def fit_power_law(n, values) -> LineFit:
    """Least-squares slope of ``log values`` against ``log n``."""
    return fit_line(np.log(np.asarray(n, dtype=float)), np.log(np.asarray(values, dtype=float)))


def regime(d: int, alpha: float) -> str:
    """``"below"``, ``"critical"`` or ``"above"`` according to ``alpha`` versus ``1/d``."""
    if math.isclose(alpha * d, 1.0, rel_tol=1e-12, abs_tol=1e-12):
        return "critical"
    return "below" if alpha * d < 1 else "above"


def effective_dimension(d: int, alpha: float) -> float:
    return float(d) if alpha == 0 else min(float(d), 1.0 / alpha)


def theoretical_exponent(d: int, alpha: float) -> float | None:
    """Growth exponent ``1 - 1/beta`` of E(L_n); ``None`` for ``alpha = 0``."""
    if alpha == 0:
        return None
    return 1.0 - 1.0 / effective_dimension(d, alpha)


def mean_and_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return mean, se


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _cluster(d, alpha, n, seed, t):
    return grow(GrowthConfig(d, alpha, n, trial_seed(seed, n, t)))


def _alpha_tag(alpha: float) -> str:
    return repr(float(alpha))


def _check_n_list(n_list, min_octaves: float, min_len: int) -> list[int]:
    ns = [int(n) for n in n_list]
    if len(ns) < min_len:
        raise ValueError(f"n_list needs at least {min_len} values, got {len(ns)}")
    if any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise ValueError("n_list must be positive and strictly increasing")
    if math.log2(ns[-1] / ns[0]) < min_octaves - 1e-12:
        raise ValueError(f"n_list must span at least {min_octaves:g} octaves")
    return ns


@dataclass
class Report:
    """Fields shared by every experiment report."""

    kind: ClassVar[str] = ""
    d: int
    alpha: float
    seed: int

    @property
    def file_stem(self) -> str:
        return f"{self.kind}_{self.d}_{_alpha_tag(self.alpha)}_{self.seed}"

    @property
    def checks(self) -> list[Check]:
        return []

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def header(self) -> list[str]:
        raise NotImplementedError

    def csv_rows(self):
        raise NotImplementedError

    def to_csv(self, path) -> Path:
        return write_csv(path, self.header(), self.csv_rows())


# -- MST scaling ---------------------------------------------------------------


@dataclass
class ScalingRow:
    n: int
    trials: int
    mean_L_n: float
    std_err: float


@dataclass
class ScalingReport(Report):
    kind: ClassVar[str] = "scaling"
    rows: list[ScalingRow]
    fit: LineFit
    theoretical_exponent: float | None
    regime: str

    @property
    def fitted_exponent(self) -> float:
        return self.fit.slope

    def exponent_window(self) -> tuple[float, float] | None:
        """Accepted range for the fitted exponent, widened for the log factors in each regime."""
        th = self.theoretical_exponent
        if th is None:
            return None
        if self.regime == "below":
            return th - 0.08, th + 0.08
        if self.regime == "above":
            return th - 0.08, th + 0.15
        ns = np.array([r.n for r in self.rows], dtype=float)
        slow = fit_power_law(ns, (ns / np.log(ns)) ** th).slope
        return slow - 0.05, th + 0.08

    @property
    def checks(self) -> list[Check]:
        out = [Check("scaling fit R^2", self.fit.r_squared >= R2_MIN,
                     fmt_short(self.fit.r_squared), f">= {R2_MIN}")]
        window = self.exponent_window()
        if window is not None:
            lo, hi = window
            slope = self.fitted_exponent
            out.append(Check(
                f"MST exponent d={self.d} alpha={self.alpha:g} ({self.regime})",
                self.fit.r_squared >= R2_MIN and lo <= slope <= hi,
                f"{fmt_short(slope)} +- {fmt_short(self.fit.half_width)}",
                f"[{fmt_short(lo)}, {fmt_short(hi)}] (theory {fmt_short(self.theoretical_exponent)})",
            ))
        return out

    def header(self):
        return ["n", "trials", "mean_L_n", "std_err", "fitted_exponent", "fit_half_width",
                "r_squared", "theoretical_exponent"]

    def csv_rows(self):
        th = "" if self.theoretical_exponent is None else self.theoretical_exponent
        for r in self.rows:
            yield (r.n, r.trials, r.mean_L_n, r.std_err, self.fit.slope, self.fit.half_width,
                   self.fit.r_squared, th)


def scaling_experiment(d: int, alpha: float, n_list, trials: int, seed: int = 0,
                       threads: int = 1) -> ScalingReport:
    """Mean EMST length per n and the fitted log-log growth exponent."""
    ns = _check_n_list(n_list, 3, 6)
    if trials < 10:
        raise ValueError("scaling_experiment needs at least 10 trials per n")
    rows = []
    for n in ns:
        lengths = _map(lambda t: emst_fast(_cluster(d, alpha, n, seed, t).points).total_length,
                       range(trials), threads)
        rows.append(ScalingRow(n, trials, *mean_and_se(lengths)))
    fit = fit_power_law(ns, [r.mean_L_n for r in rows])
    return ScalingReport(d, float(alpha), seed, rows, fit, theoretical_exponent(d, alpha), regime(d, alpha))


# -- radius tail ---------------------------------------------------------------


def tail_bound(L: float, d: int) -> float:
    return math.exp(-(L * L) / (600.0 * d))


@dataclass
class TailRow:
    L: float
    exceedances: int
    empirical: float
    bound: float


@dataclass
class TailReport(Report):
    kind: ClassVar[str] = "tail"
    n: int
    trials: int
    grid: list[TailRow]
    mean_radius: float
    saturation_change: float  # relative change of mean radius over the last doubling of n

    @property
    def checks(self) -> list[Check]:
        out = [Check("radius saturated (mean change over last doubling of n)",
                     self.saturation_change < SATURATION_TOL,
                     fmt_short(self.saturation_change), f"< {SATURATION_TOL:g}")]
        for row in self.grid:
            if row.bound < 1.0:
                out.append(Check(f"P(radius >= {row.L:g}) <= exp(-L^2/{600 * self.d})",
                                 row.empirical <= row.bound,
                                 fmt_short(row.empirical), f"<= {fmt_short(row.bound)}"))
        return out

    def header(self):
        return ["L", "trials", "exceedances", "empirical", "bound", "mean_radius", "saturation_change"]

    def csv_rows(self):
        for r in self.grid:
            yield r.L, self.trials, r.exceedances, r.empirical, r.bound, self.mean_radius, self.saturation_change


def tail_experiment(d: int, alpha: float, n: int, trials: int, L_grid, seed: int = 0,
                    threads: int = 1) -> TailReport:
    """Empirical P(radius >= L) at a finite n against ``exp(-L^2 / 600 d)``.

    The finite-n radius is dominated by the radius of the infinite cluster,
    so the empirical curve underestimates the infinite-process tail; the
    comparison is a necessary check only.
    """
    if alpha <= 0:
        raise ValueError("the radius tail bound does not hold for alpha = 0")
    if trials < 2:
        raise ValueError("need at least two trials")
    grid = sorted(float(L) for L in L_grid)

    def one(t):
        prof = radius_profile(_cluster(d, alpha, n, seed, t))
        return prof[-1], prof[max(0, n // 2 - 1)]

    res = np.array(_map(one, range(trials), threads))
    radii, half = res[:, 0], res[:, 1]
    rows = []
    for L in grid:
        k = int(np.count_nonzero(radii >= L))
        rows.append(TailRow(L, k, k / trials, tail_bound(L, d)))
    mean_r = float(radii.mean())
    change = float((mean_r - half.mean()) / mean_r) if mean_r > 0 else 0.0
    return TailReport(d, float(alpha), seed, n, trials, rows, mean_r, change)


def saturation_n(d: int, alpha: float, trials: int = 20, seed: int = 0, n0: int = 1024,
                 n_max: int = 2**20, tol: float = SATURATION_TOL) -> int:
    """Smallest ``n = n0 * 2^j`` where mean radius grows by less than ``tol`` over one more doubling."""
    profiles = np.array([radius_profile(_cluster(d, alpha, n_max, seed, t)) for t in range(trials)])
    n = n0
    while 2 * n <= n_max:
        a, b = profiles[:, n - 1].mean(), profiles[:, 2 * n - 1].mean()
        if b == 0 or (b - a) / b < tol:
            return n
        n *= 2
    return n_max


# -- close pairs ---------------------------------------------------------------


def close_pair_delta(n: int, d: int, alpha: float, epsilon: float) -> float:
    """Distance scale that keeps the expected close-pair count linear in n."""
    r = regime(d, alpha)
    if r == "below":
        return epsilon * n ** (-1.0 / d)
    if r == "above":
        return epsilon * n ** (-alpha)
    return epsilon * (n * math.log(n)) ** (-1.0 / d)


@dataclass
class ClosePairRow:
    n: int
    delta: float
    trials: int
    mean_pairs: float
    std_err: float

    @property
    def ratio(self) -> float:
        return self.mean_pairs / self.n


@dataclass
class ClosePairReport(Report):
    kind: ClassVar[str] = "pairs"
    epsilon: float
    regime: str
    rows: list[ClosePairRow]
    max_growth: float = 1.5

    @property
    def growth(self) -> float:
        """Largest later ratio Z/n relative to the first."""
        first = self.rows[0].ratio
        later = max(r.ratio for r in self.rows[1:])
        if first == 0:
            return math.inf if later > 0 else 1.0
        return later / first

    @property
    def checks(self) -> list[Check]:
        return [Check(f"Z_delta/n growth d={self.d} alpha={self.alpha:g} ({self.regime})",
                      self.growth <= self.max_growth, fmt_short(self.growth), f"<= {self.max_growth:g}")]

    def header(self):
        return ["n", "delta", "trials", "mean_pairs", "std_err", "ratio", "ratio_std_err"]

    def csv_rows(self):
        for r in self.rows:
            yield r.n, r.delta, r.trials, r.mean_pairs, r.std_err, r.ratio, r.std_err / r.n


def close_pair_experiment(d: int, alpha: float, n_list, trials: int, epsilon: float = 0.1,
                          seed: int = 0, threads: int = 1) -> ClosePairReport:
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    ns = _check_n_list(n_list, 0, 2)
    if trials < 2:
        raise ValueError("need at least two trials")
    rows = []
    for n in ns:
        delta = close_pair_delta(n, d, alpha, epsilon)
        counts = _map(lambda t: close_pairs(_cluster(d, alpha, n, seed, t).points, delta),
                      range(trials), threads)
        rows.append(ClosePairRow(n, delta, trials, *mean_and_se(counts)))
    return ClosePairReport(d, float(alpha), seed, float(epsilon), regime(d, alpha), rows)


# -- depth tail ----------------------------------------------------------------


def depth_threshold(m: int) -> float:
    return 10.0 * (1.0 + math.log(m))


@dataclass
class DepthRow:
    m: int
    trials: int
    threshold: float
    violations: int
    expected_bound: float  # trials * m * m^-4
    mean_max_depth: float
    max_max_depth: int


@dataclass
class DepthTailReport(Report):
    kind: ClassVar[str] = "depth"
    rows: list[DepthRow]

    @property
    def checks(self) -> list[Check]:
        return [Check(f"levels >= 10(1+ln m) among first {r.m}", r.violations == 0,
                      str(r.violations), f"0 (expected <= {fmt_short(r.expected_bound)})")
                for r in self.rows]

    def header(self):
        return ["m", "trials", "threshold", "violations", "expected_bound", "mean_max_depth",
                "max_max_depth", "e_ln_m"]

    def csv_rows(self):
        for r in self.rows:
            yield (r.m, r.trials, r.threshold, r.violations, r.expected_bound, r.mean_max_depth,
                   r.max_max_depth, math.e * math.log(r.m))


def depth_tail_experiment(m_list, trials: int, seed: int = 0, d: int = 2, alpha: float = 0.5,
                          threads: int = 1) -> DepthTailReport:
    """Count vertices among the first m whose level reaches ``10 (1 + ln m)``.

    Levels never change once a vertex exists, so growing exactly m points
    suffices.
    """
    rows = []
    for m in sorted(int(x) for x in m_list):
        thr = depth_threshold(m)
        depths = _map(lambda t: levels(_cluster(d, alpha, m, seed, t)), range(trials), threads)
        viol = sum(int(np.count_nonzero(lv >= thr)) for lv in depths)
        maxima = np.array([lv.max() for lv in depths])
        rows.append(DepthRow(m, trials, thr, viol, trials * m * float(m) ** -4,
                             float(maxima.mean()), int(maxima.max())))
    return DepthTailReport(d, float(alpha), seed, rows)


# -- alpha = 0 -----------------------------------------------------------------


@dataclass
class AlphaZeroRow:
    n: int
    trials: int
    mean_radius: float
    std_err: float
    mean_max_depth: float


@dataclass
class AlphaZeroReport(Report):
    kind: ClassVar[str] = "alpha-zero"
    rows: list[AlphaZeroRow]
    fit: LineFit  # mean radius against ln n

    @property
    def checks(self) -> list[Check]:
        lower = self.fit.slope - self.fit.half_width
        return [Check(f"alpha=0 radius vs ln n slope d={self.d}", lower > 0,
                      f"{fmt_short(self.fit.slope)} +- {fmt_short(self.fit.half_width)}",
                      "> 0 at 95% confidence")]

    def header(self):
        return ["n", "trials", "mean_radius", "std_err", "mean_max_depth", "e_ln_n",
                "slope_vs_ln_n", "slope_half_width"]

    def csv_rows(self):
        for r in self.rows:
            yield (r.n, r.trials, r.mean_radius, r.std_err, r.mean_max_depth, math.e * math.log(r.n),
                   self.fit.slope, self.fit.half_width)


def alpha_zero_experiment(d: int, n_list, trials: int, seed: int = 0, threads: int = 1) -> AlphaZeroReport:
    """Radius growth when every displacement is standard normal."""
    ns = _check_n_list(n_list, 0, 3)

    def one(n, t):
        c = _cluster(d, 0.0, n, seed, t)
        return radius(c), levels(c).max()

    rows = []
    for n in ns:
        res = np.array(_map(lambda t: one(n, t), range(trials), threads), dtype=float)
        mean, se = mean_and_se(res[:, 0])
        rows.append(AlphaZeroRow(n, trials, mean, se, float(res[:, 1].mean())))
    fit = fit_line(np.log(ns), [r.mean_radius for r in rows])
    return AlphaZeroReport(d, 0.0, seed, rows, fit)


# -- urn validation ------------------------------------------------------------


@dataclass
class UrnRow:
    m: int  # 1-based point number; the subtree root is vertex m - 1
    trials: int
    mean: float
    mean_se: float
    analytic_mean: float
    second_moment: float
    second_se: float
    analytic_second: float
    bound: float

    def _within(self, value, target, se):
        return abs(value - target) <= SE_BAND * se + 1e-9 * max(1.0, abs(target))

    @property
    def mean_ok(self) -> bool:
        return self._within(self.mean, self.analytic_mean, self.mean_se)

    @property
    def second_ok(self) -> bool:
        return self._within(self.second_moment, self.analytic_second, self.second_se)

    @property
    def bound_ok(self) -> bool:
        return self.second_moment <= self.bound + SE_BAND * self.second_se + 1e-9 * self.bound


@dataclass
class UrnReport(Report):
    kind: ClassVar[str] = "urn"
    n: int
    rows: list[UrnRow]

    @property
    def checks(self) -> list[Check]:
        out = []
        for r in self.rows:
            out.append(Check(f"subtree mean m={r.m}", r.mean_ok,
                             f"{fmt_short(r.mean)} (se {fmt_short(r.mean_se)})",
                             f"{fmt_short(r.analytic_mean)} within {SE_BAND:g} se"))
            out.append(Check(f"subtree second moment m={r.m}", r.second_ok,
                             f"{fmt_short(r.second_moment)} (se {fmt_short(r.second_se)})",
                             f"{fmt_short(r.analytic_second)} within {SE_BAND:g} se"))
            out.append(Check(f"second moment envelope m={r.m}", r.bound_ok,
                             fmt_short(r.second_moment), f"<= {fmt_short(r.bound)} + {SE_BAND:g} se"))
        return out

    def header(self):
        return ["m", "n", "trials", "mean", "mean_se", "analytic_mean", "second_moment",
                "second_se", "analytic_second", "bound"]

    def csv_rows(self):
        for r in self.rows:
            yield (r.m, self.n, r.trials, r.mean, r.mean_se, r.analytic_mean, r.second_moment,
                   r.second_se, r.analytic_second, r.bound)


def urn_validation(m_list, n: int, trials: int, seed: int = 0, d: int = 2, alpha: float = 0.5,
                   threads: int = 1) -> UrnReport:
    """Subtree sizes of the m-th point (1-based) against the urn moments."""
    ms = sorted(int(m) for m in m_list)
    if not ms or ms[0] < 1 or ms[-1] > n:
        raise ValueError(f"m_list must lie in [1, {n}]")
    if trials < 2:
        raise ValueError("need at least two trials")
    idx = np.array(ms) - 1
    sizes = np.array(_map(lambda t: subtree_sizes(_cluster(d, alpha, n, seed, t))[idx],
                          range(trials), threads), dtype=float)
    rows = []
    for col, m in enumerate(ms):
        w = sizes[:, col]
        mean, mean_se = mean_and_se(w)
        second, second_se = mean_and_se(w * w)
        u = urn_moments(m, n)
        rows.append(UrnRow(m, trials, mean, mean_se, u.mean, second, second_se, u.second_moment,
                           u.upper_bound))
    return UrnReport(d, float(alpha), seed, n, rows)
