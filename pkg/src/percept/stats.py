"""Single-sided test battery, effect sizes, correlations, type-1 quantiles.

Everything here is a pure function over plain sequences. Statistics, degrees
of freedom, exact enumeration, tie handling, and alternative logic are all
computed directly; the only external primitives are the Student-t CDF
(scipy.special.stdtr) and the normal CDF via math.erfc. Exact nonparametric
p-values follow the permutation definition: the signed-rank null enumerates
all sign assignments of the observed (tie-averaged) ranks, the rank-sum null
enumerates all group assignments of the observed combined ranks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional

from scipy.special import stdtr

from .errors import PerceptError

LESS = "less"
GREATER = "greater"

# Largest sample sizes served by the exact enumeration paths.
SIGNED_RANK_EXACT_LIMIT = 25
RANK_SUM_EXACT_LIMIT = 14


class DegenerateSampleError(PerceptError, ValueError):
    """Too few observations or zero variance where variance is required."""


class LengthMismatchError(PerceptError, ValueError):
    """Paired data with unequal lengths."""


class AllZeroDifferencesError(PerceptError, ValueError):
    """Signed-rank test where every paired difference is zero."""


class EmptySampleError(PerceptError, ValueError):
    """An operation received an empty sample."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    alternative: str
    method: str
    p_adjusted: Optional[float] = None
    df: Optional[float] = None
    z_statistic: Optional[float] = None
    exact: Optional[bool] = None
    n: Optional[int] = None

    def with_bonferroni(self, m: int) -> "TestResult":
        return replace(self, p_adjusted=bonferroni(self.p_value, m))


@dataclass(frozen=True)
class EffectSize:
    kind: str  # "cohens_d" | "wilcoxon_r"
    value: float


@dataclass(frozen=True)
class GroupSummary:
    mode: str  # "continuous" | "discrete"
    n: int
    mean: Optional[float] = None
    std: Optional[float] = None
    median: Optional[float] = None
    q25: Optional[float] = None
    q75: Optional[float] = None
    small_n: bool = False


def _check_alternative(alternative: str) -> str:
    if alternative not in (LESS, GREATER):
        raise ValueError(f"alternative must be '{LESS}' or '{GREATER}'")
    return alternative


def _mean(xs) -> float:
    return math.fsum(xs) / len(xs)


def _sample_var(xs, mean: float) -> float:
    return math.fsum((v - mean) ** 2 for v in xs) / (len(xs) - 1)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _t_cdf(df: float, t: float) -> float:
    return float(stdtr(df, t))


def _one_sided_t_p(t: float, df: float, alternative: str) -> float:
    return _t_cdf(df, t) if alternative == LESS else _t_cdf(df, -t)


def average_ranks(values) -> list:
    """Ranks 1..n with tied values sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # positions are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def t_test_one_sided(x, y, paired: bool = False, alternative: str = LESS,
                     equal_var: bool = False) -> TestResult:
    """Student's t test with a one-sided alternative on mean(x) - mean(y).

    Paired data reduce to a one-sample test on the differences. Unpaired data
    use the Welch unequal-variance form by default; pass equal_var=True for
    the pooled-variance variant.
    """
    _check_alternative(alternative)
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if paired:
        if len(x) != len(y):
            raise LengthMismatchError(f"paired samples differ in length: {len(x)} vs {len(y)}")
        if len(x) < 2:
            raise DegenerateSampleError("need at least 2 pairs")
        diffs = [a - b for a, b in zip(x, y)]
        mean = _mean(diffs)
        var = _sample_var(diffs, mean)
        if var <= 0:
            raise DegenerateSampleError("zero variance of paired differences")
        n = len(diffs)
        t = mean / math.sqrt(var / n)
        df = float(n - 1)
        method = "paired_t"
    else:
        if len(x) < 2 or len(y) < 2:
            raise DegenerateSampleError("need at least 2 observations per group")
        mx, my = _mean(x), _mean(y)
        vx, vy = _sample_var(x, mx), _sample_var(y, my)
        nx, ny = len(x), len(y)
        if equal_var:
            pooled = ((nx - 1) * vx + (ny - 1) * vy) / (nx + ny - 2)
            if pooled <= 0:
                raise DegenerateSampleError("zero pooled variance")
            t = (mx - my) / math.sqrt(pooled * (1 / nx + 1 / ny))
            df = float(nx + ny - 2)
            method = "pooled_t"
        else:
            sx2, sy2 = vx / nx, vy / ny
            if sx2 + sy2 <= 0:
                raise DegenerateSampleError("zero variance in both groups")
            t = (mx - my) / math.sqrt(sx2 + sy2)
            df = (sx2 + sy2) ** 2 / (
                (sx2**2 / (nx - 1)) + (sy2**2 / (ny - 1))
            )
            method = "welch_t"
    return TestResult(
        statistic=t,
        p_value=_one_sided_t_p(t, df, alternative),
        alternative=alternative,
        method=method,
        df=df,
        n=len(x) + len(y),
    )


def _signed_rank_exact_p(scaled_ranks, w_scaled: int, alternative: str) -> float:
    """Exact tail probability of W+ over all 2^n sign assignments.

    `scaled_ranks` are the tie-averaged ranks times two (integers), so the
    distribution is an exact convolution; identical to brute-force
    enumeration of sign vectors.
    """
    total = sum(scaled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in scaled_ranks:
        for s in range(total - r, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
    denom = float(2 ** len(scaled_ranks))
    if alternative == LESS:
        return sum(counts[: w_scaled + 1]) / denom
    return sum(counts[w_scaled:]) / denom


def wilcoxon_signed_rank_one_sided(x, y, alternative: str = LESS) -> TestResult:
    """Paired signed-rank test; exact for n <= 25, normal approximation beyond.

    Zero differences are dropped; tied absolute differences share average
    ranks. The statistic is W+, the rank sum of positive differences. A z
    from the tie-corrected normal approximation (continuity correction
    matching the alternative) is always reported for effect sizes.
    """
    _check_alternative(alternative)
    if len(x) != len(y):
        raise LengthMismatchError(f"paired samples differ in length: {len(x)} vs {len(y)}")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    diffs = [d for d in diffs if d != 0]
    if not diffs:
        raise AllZeroDifferencesError("all paired differences are zero")
    n = len(diffs)
    ranks = average_ranks([abs(d) for d in diffs])
    w_plus = math.fsum(r for r, d in zip(ranks, diffs) if d > 0)

    mu = n * (n + 1) / 4.0
    tie_counts = _tie_counts([abs(d) for d in diffs])
    var = n * (n + 1) * (2 * n + 1) / 24.0 - sum(t**3 - t for t in tie_counts) / 48.0
    correction = 0.5 if alternative == GREATER else -0.5
    if var > 0:
        z = (w_plus - mu - correction) / math.sqrt(var)
    else:
        z = 0.0  # all differences tied at one magnitude and n tiny

    exact = n <= SIGNED_RANK_EXACT_LIMIT
    if exact:
        scaled = [int(round(2 * r)) for r in ranks]
        p = _signed_rank_exact_p(scaled, int(round(2 * w_plus)), alternative)
    else:
        p = _norm_cdf(z) if alternative == LESS else 1.0 - _norm_cdf(z)
    return TestResult(
        statistic=w_plus,
        p_value=p,
        alternative=alternative,
        method="wilcoxon_signed_rank",
        z_statistic=z,
        exact=exact,
        n=n,
    )


def _tie_counts(values) -> list:
    counts = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return [c for c in counts.values() if c > 1]


def wilcoxon_rank_sum_one_sided(x, y, alternative: str = LESS) -> TestResult:
    """Two-sample rank-sum test; exact for n_x + n_y <= 14, else normal approx.

    The statistic is the rank sum of x within the pooled sample using average
    ranks for ties. The exact path enumerates every assignment of the pooled
    rank multiset to group x.
    """
    _check_alternative(alternative)
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if not x or not y:
        raise EmptySampleError("both samples must be non-empty")
    nx, ny = len(x), len(y)
    n = nx + ny
    ranks = average_ranks(x + y)
    w = math.fsum(ranks[:nx])

    mu = nx * (n + 1) / 2.0
    tie_counts = _tie_counts(x + y)
    tie_term = sum(t**3 - t for t in tie_counts) / (n * (n - 1))
    var = nx * ny / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        raise DegenerateSampleError("every pooled observation is identical")
    correction = 0.5 if alternative == GREATER else -0.5
    z = (w - mu - correction) / math.sqrt(var)

    exact = n <= RANK_SUM_EXACT_LIMIT
    if exact:
        scaled = [int(round(2 * r)) for r in ranks]
        w_scaled = int(round(2 * w))
        hits = 0
        combos = 0
        for combo in itertools.combinations(range(n), nx):
            s = sum(scaled[i] for i in combo)
            combos += 1
            if (s <= w_scaled) if alternative == LESS else (s >= w_scaled):
                hits += 1
        p = hits / combos
    else:
        p = _norm_cdf(z) if alternative == LESS else 1.0 - _norm_cdf(z)
    return TestResult(
        statistic=w,
        p_value=p,
        alternative=alternative,
        method="wilcoxon_rank_sum",
        z_statistic=z,
        exact=exact,
        n=n,
    )


def bonferroni(p: float, m: int) -> float:
    """min(1, m*p) for a family of m comparisons."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return min(1.0, m * p)


def cohens_d(x, y) -> EffectSize:
    """(mean(x) - mean(y)) / pooled sd with the (n-1)-weighted pooled variance."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if len(x) < 2 or len(y) < 2:
        raise DegenerateSampleError("need at least 2 observations per group")
    mx, my = _mean(x), _mean(y)
    pooled = ((len(x) - 1) * _sample_var(x, mx) + (len(y) - 1) * _sample_var(y, my)) / (
        len(x) + len(y) - 2
    )
    if pooled <= 0:
        raise DegenerateSampleError("zero pooled variance")
    return EffectSize(kind="cohens_d", value=(mx - my) / math.sqrt(pooled))


def wilcoxon_r(z_statistic: float, n: int) -> EffectSize:
    """r = z / sqrt(n), clamped to [-1, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r = z_statistic / math.sqrt(n)
    return EffectSize(kind="wilcoxon_r", value=max(-1.0, min(1.0, r)))


def _corr_t_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return 2.0 * _t_cdf(n - 2, -abs(t))


def pearson(x, y):
    """Sample correlation and its two-sided p via the t transform."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    if len(x) != len(y):
        raise LengthMismatchError(f"samples differ in length: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise DegenerateSampleError("need at least 3 points")
    mx, my = _mean(x), _mean(y)
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx <= 0 or syy <= 0:
        raise DegenerateSampleError("zero variance")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    return r, _corr_t_p(r, n)


def spearman(x, y):
    """Rank correlation (tie-aware average ranks) and two-sided p."""
    if len(x) != len(y):
        raise LengthMismatchError(f"samples differ in length: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise DegenerateSampleError("need at least 3 points")
    return pearson(average_ranks([float(v) for v in x]), average_ranks([float(v) for v in y]))


def quantile_type1(sample, p: float) -> float:
    """Inverse empirical CDF (R type 1): always returns a sample element."""
    values = sorted(float(v) for v in sample)
    if not values:
        raise EmptySampleError("empty sample")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    n = len(values)
    if p == 0.0:
        return values[0]
    h = n * p
    fuzz = 4 * 2.220446049250313e-16 * max(1.0, h)
    j = math.floor(h + fuzz)
    g = h - j
    if g > fuzz:
        j += 1
    return values[min(max(j, 1), n) - 1]


def group_summary(sample, mode: str) -> GroupSummary:
    """Continuous data as mean and sample sd, discrete as median and type-1 quartiles."""
    values = [float(v) for v in sample]
    if not values:
        raise EmptySampleError("empty sample")
    if mode == "continuous":
        mean = _mean(values)
        if len(values) < 2:
            return GroupSummary(mode=mode, n=1, mean=mean, std=0.0, small_n=True)
        return GroupSummary(
            mode=mode,
            n=len(values),
            mean=mean,
            std=math.sqrt(_sample_var(values, mean)),
        )
    if mode == "discrete":
        return GroupSummary(
            mode=mode,
            n=len(values),
            median=quantile_type1(values, 0.5),
            q25=quantile_type1(values, 0.25),
            q75=quantile_type1(values, 0.75),
        )
    raise ValueError(f"unknown mode {mode!r}")
