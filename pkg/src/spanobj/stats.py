"""Significance testing over per-seed score samples.

Model comparisons run on n scores per configuration (one per training
seed).  An Anderson-Darling check (mean and variance estimated from the
sample) vouches for the paired t-test's normality assumption, and a
one-tailed paired t-test decides whether one configuration beats another.

The Student-t tail probability is computed here via the regularized
incomplete beta function (continued fraction, modified Lentz iteration) so
the package itself carries no statistics dependency; the test suite pins
the results to an independent reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePairsError, DegenerateSampleError, InvalidInputError

ALPHA = 0.05
AD_CRITICAL_5PCT = 0.752   # case-3 critical value at significance 0.05
MIN_AD_SAMPLE = 5

VERDICT_NORMAL = "normal"
VERDICT_NOT_NORMAL = "not-normal"
VERDICT_INSUFFICIENT = "insufficient"


@dataclass(frozen=True)
class RunSample:
    """Per-seed scores for one training configuration."""

    label: str
    values: tuple

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) < 2:
            raise InvalidInputError(f"sample {self.label!r} needs >= 2 values")
        if any(not (0.0 <= v <= 100.0) for v in values):
            raise InvalidInputError(f"sample {self.label!r} has scores outside [0, 100]")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)


def _values(sample) -> np.ndarray:
    if isinstance(sample, RunSample):
        return np.asarray(sample.values, dtype=np.float64)
    arr = np.asarray(sample, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidInputError("expected a 1-d sample with >= 2 values")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("sample contains non-finite values")
    return arr


# ---------------------------------------------------------------------------
# Student-t tail via the regularized incomplete beta function


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz iteration for the continued fraction of I_x(a, b).
    tiny = 1e-300
    eps = 1e-15
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < eps:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to ~1e-14 for moderate a, b."""
    if a <= 0 or b <= 0:
        raise InvalidInputError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_tail(t: float, df: int) -> float:
    """Upper-tail probability P(T > t) of Student's t with df degrees of freedom."""
    if df < 1:
        raise InvalidInputError(f"degrees of freedom must be >= 1, got {df}")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t > 0 else 1.0 - tail


# ---------------------------------------------------------------------------
# Anderson-Darling (mean and variance estimated from the sample)


@dataclass(frozen=True)
class ADResult:
    statistic: float         # A^2
    adjusted: float          # A*^2 with the small-sample correction
    verdict: str             # normal / not-normal / insufficient


def _norm_logcdf(w: np.ndarray) -> np.ndarray:
    return np.log(0.5 * np.array([math.erfc(-v / math.sqrt(2.0)) for v in w]))


def anderson_darling(sample) -> ADResult:
    """Normality check with estimated mean and variance.

    The statistic is A^2 = -n - (1/n) sum (2i-1)(ln z_i + ln(1 - z_{n+1-i}))
    over the standardized, sorted sample; the small-sample adjustment is
    A*^2 = A^2 (1 + 0.75/n + 2.25/n^2), compared against the 0.752 critical
    value at the 0.05 level.  Fewer than five values cannot support a
    verdict and return "insufficient".
    """
    x = np.sort(_values(sample))
    n = x.size
    std = x.std(ddof=1)
    if std == 0.0:
        raise DegenerateSampleError("sample variance is zero")
    w = (x - x.mean()) / std
    log_cdf = _norm_logcdf(w)
    log_sf = _norm_logcdf(-w)  # symmetry: 1 - Phi(w) = Phi(-w)
    i = np.arange(1, n + 1)
    a2 = -n - np.sum((2 * i - 1) / n * (log_cdf + log_sf[::-1]))
    adjusted = a2 * (1.0 + 0.75 / n + 2.25 / (n * n))
    if n < MIN_AD_SAMPLE:
        verdict = VERDICT_INSUFFICIENT
    elif adjusted < AD_CRITICAL_5PCT:
        verdict = VERDICT_NORMAL
    else:
        verdict = VERDICT_NOT_NORMAL
    return ADResult(float(a2), float(adjusted), verdict)


# ---------------------------------------------------------------------------
# Paired t-test


def paired_t_test_one_tailed(a, b) -> tuple[float, float]:
    """One-tailed paired t-test of the hypothesis mean(a) > mean(b).

    Values are paired positionally (one pair per seed).  Returns (t, p)
    with p the upper-tail Student-t probability at n-1 degrees of freedom.
    All-equal differences have no variance to test against and raise
    instead of reporting a fake zero p-value.
    """
    va = _values(a)
    vb = _values(b)
    if va.size != vb.size:
        raise InvalidInputError(f"paired samples differ in size ({va.size} vs {vb.size})")
    d = va - vb
    sd = d.std(ddof=1)
    if sd == 0.0:
        raise DegeneratePairsError("paired differences have zero variance")
    t = d.mean() / (sd / math.sqrt(d.size))
    return float(t), student_t_tail(float(t), d.size - 1)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class ComparisonRow:
    pair: tuple
    t: float | None
    p: float | None
    significant: bool
    degenerate: bool
    normality_a: str
    normality_b: str

    def format(self) -> str:
        if self.degenerate:
            body = "t=nan p=nan significant=no degenerate=yes"
        else:
            body = (
                f"t={self.t:.6f} p={self.p:.6f} "
                f"significant={'yes' if self.significant else 'no'} degenerate=no"
            )
        return (
            f"{self.pair[0]} > {self.pair[1]}: {body} "
            f"normality[{self.pair[0]}]={self.normality_a} "
            f"normality[{self.pair[1]}]={self.normality_b}"
        )


@dataclass
class SignificanceReport:
    rows: list

    def format(self) -> str:
        return "\n".join(row.format() for row in self.rows)


def significance_report(samples, comparisons) -> SignificanceReport:
    """Run every requested (better, baseline) comparison.

    Each row carries both samples' normality verdicts and the one-tailed
    paired t-test at the 0.05 level.  Identical samples come back flagged
    degenerate rather than significant.
    """
    by_label = {}
    for sample in samples:
        if sample.label in by_label:
            raise InvalidInputError(f"duplicate sample label {sample.label!r}")
        by_label[sample.label] = sample
    rows = []
    for label_a, label_b in comparisons:
        if label_a not in by_label or label_b not in by_label:
            raise InvalidInputError(f"comparison ({label_a}, {label_b}) references unknown samples")
        a = by_label[label_a]
        b = by_label[label_b]
        if a.n != b.n:
            raise InvalidInputError(
                f"samples {label_a!r} and {label_b!r} have different seed counts"
            )
        verdict_a = _safe_verdict(a)
        verdict_b = _safe_verdict(b)
        try:
            t, p = paired_t_test_one_tailed(a, b)
        except DegeneratePairsError:
            rows.append(
                ComparisonRow((label_a, label_b), None, None, False, True, verdict_a, verdict_b)
            )
            continue
        rows.append(
            ComparisonRow(
                (label_a, label_b), t, p, p < ALPHA, False, verdict_a, verdict_b
            )
        )
    return SignificanceReport(rows)


def _safe_verdict(sample: RunSample) -> str:
    try:
        return anderson_darling(sample).verdict
    except DegenerateSampleError:
        return "degenerate"
