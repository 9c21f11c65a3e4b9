"""T1-measurement analytics.

Synthetic relaxation experiments, exponential-decay fitting, Pearson
correlation with bootstrap confidence intervals, and the CSV formats for
measurement series and correlation reports.

A relaxation experiment prepares the excited state, waits a delay t and
measures, so the excited-state count at delay t is binomial with success
probability exp(-t/T1).  The decay curve is fitted to
A exp(-t/T1) + B, the baseline absorbing state-preparation and
measurement error.  Correlations between per-qubit T1 series use the
sample Pearson coefficient; 95% confidence intervals come from paired
bootstrap resampling (2.5th/97.5th percentiles), and |r| >= 0.6 is the
significance threshold.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import DomainError, FitError, NumericalError, SchemaError, \
    UsageError
from .rng import as_generator, derive_seed, RngStream

SIGNIFICANCE_THRESHOLD = 0.6
DEFAULT_RESAMPLES = 2000
DEFAULT_SHOTS = 4000
DEFAULT_DELAY_COUNT = 20

T1_CSV_HEADER = ("timestamp", "qubit_id", "t1_us")
REPORT_CSV_HEADER = ("qubit_i", "qubit_j", "r", "ci_low", "ci_high",
                     "verdict")
DECAY_CSV_HEADER = ("delay_us", "shots", "excited_count")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayCurve:
    """Excited-state counts over a strictly increasing delay grid."""

    delays: np.ndarray
    shots: int
    excited_counts: np.ndarray

    def __post_init__(self):
        if self.delays.size != self.excited_counts.size:
            raise UsageError("delays and counts must have equal length")
        if np.any(np.diff(self.delays) <= 0):
            raise UsageError("delays must be strictly increasing")
        if np.any(self.excited_counts < 0) or \
                np.any(self.excited_counts > self.shots):
            raise UsageError("counts must lie in [0, shots]")

    @property
    def survival(self) -> np.ndarray:
        return self.excited_counts / self.shots


@dataclass(frozen=True)
class T1Series:
    """One qubit's sequence of measured relaxation times."""

    qubit_id: str
    timestamps: np.ndarray
    t1_values: np.ndarray

    def __post_init__(self):
        if self.timestamps.size != self.t1_values.size:
            raise UsageError("timestamps and values must have equal length")
        if np.any(self.t1_values <= 0):
            raise UsageError("t1 values must be positive")

    def __len__(self):
        return self.t1_values.size


@dataclass(frozen=True)
class Verdict:
    label: str  # negligible | significant
    borderline: bool

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class PairCorrelation:
    qubit_i: str
    qubit_j: str
    r: float
    ci_low: float
    ci_high: float
    verdict: Verdict


@dataclass(frozen=True)
class CorrelationReport:
    pairs: tuple

    def all_negligible(self) -> bool:
        return all(p.verdict.label == "negligible" for p in self.pairs)


# ---------------------------------------------------------------------------
# synthetic experiments and decay fitting
# ---------------------------------------------------------------------------

def default_delay_grid(true_t1: float,
                       count: int = DEFAULT_DELAY_COUNT) -> np.ndarray:
    """Uniform delays from 1 us to twice the relaxation time."""
    return np.linspace(1.0, 2.0 * true_t1, count)


def simulate_relaxation_experiment(true_t1: float, shots: int, delays,
                                   rng) -> DecayCurve:
    """Binomial excited-state counts with survival exp(-t/T1)."""
    if true_t1 <= 0:
        raise DomainError(f"true_t1 must be positive, got {true_t1}")
    if shots < 1:
        raise UsageError("shots must be >= 1")
    delays = np.asarray(delays, dtype=float)
    gen = as_generator(rng)
    p1 = np.exp(-delays / true_t1)
    counts = gen.binomial(shots, p1)
    return DecayCurve(delays, shots, counts)


def _decay_model(t, amp, t1, base):
    return amp * np.exp(-t / t1) + base


def fit_t1_decay(curve: DecayCurve):
    """Least-squares fit of A exp(-t/T1) + B; returns (t1_hat, stderr).

    Initial values come from a log-linear regression on baseline-
    subtracted survival; the fit itself is Levenberg-Marquardt.  The
    standard error is taken from the local quadratic model at the
    optimum.
    """
    if curve.delays.size < 4:
        raise UsageError("need at least 4 delay points to fit")
    p_obs = curve.survival
    if np.ptp(p_obs) == 0:
        raise FitError("degenerate decay curve: all counts equal",
                       residuals=np.zeros_like(p_obs))

    base0 = max(float(p_obs.min()) - 0.01, 0.0)
    shifted = p_obs - base0
    mask = shifted > 1e-9
    if mask.sum() >= 2:
        slope, intercept = np.polyfit(curve.delays[mask],
                                      np.log(shifted[mask]), 1)
        t1_0 = -1.0 / slope if slope < 0 else float(curve.delays[-1])
        amp0 = float(np.exp(intercept))
    else:
        t1_0, amp0 = float(curve.delays[-1]), 1.0
    t1_0 = min(max(t1_0, 1e-3), 1e7)
    amp0 = min(max(amp0, 1e-3), 2.0)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, pcov = curve_fit(_decay_model, curve.delays, p_obs,
                                   p0=(amp0, t1_0, base0), maxfev=20000)
    except RuntimeError as exc:
        residuals = p_obs - _decay_model(curve.delays, amp0, t1_0, base0)
        raise FitError(f"decay fit did not converge: {exc}",
                       residuals=residuals) from exc
    t1_hat = float(popt[1])
    if t1_hat <= 0 or not np.isfinite(t1_hat):
        residuals = p_obs - _decay_model(curve.delays, *popt)
        raise FitError(f"decay fit produced invalid T1 {t1_hat}",
                       residuals=residuals)
    stderr = float(np.sqrt(np.abs(pcov[1, 1])))
    return t1_hat, stderr


# ---------------------------------------------------------------------------
# correlation analysis
# ---------------------------------------------------------------------------

def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient.

    r = (n sum(xy) - sum(x) sum(y)) /
        (sqrt(n sum(x^2) - sum(x)^2) sqrt(n sum(y^2) - sum(y)^2))
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise UsageError("series must have equal length")
    if x.size < 3:
        raise UsageError("need at least 3 points")
    n = x.size
    num = n * (x @ y) - x.sum() * y.sum()
    den_x = n * (x @ x) - x.sum() ** 2
    den_y = n * (y @ y) - y.sum() ** 2
    if den_x <= 0 or den_y <= 0:
        raise DomainError("correlation undefined for zero-variance series")
    return float(np.clip(num / math.sqrt(den_x * den_y), -1.0, 1.0))


def _pearson_rows(xs: np.ndarray, ys: np.ndarray):
    """Row-wise Pearson r for resampled pairs; NaN rows mark degeneracy."""
    n = xs.shape[1]
    sx, sy = xs.sum(axis=1), ys.sum(axis=1)
    num = n * (xs * ys).sum(axis=1) - sx * sy
    den_x = n * (xs * xs).sum(axis=1) - sx * sx
    den_y = n * (ys * ys).sum(axis=1) - sy * sy
    bad = (den_x <= 0) | (den_y <= 0)
    den = np.sqrt(np.where(bad, 1.0, den_x * den_y))
    r = np.where(bad, np.nan, num / den)
    return np.clip(r, -1.0, 1.0)


def bootstrap_ci(x, y, resamples: int = DEFAULT_RESAMPLES,
                 level: float = 0.95, rng=None):
    """Percentile bootstrap confidence interval for the Pearson r.

    Pairs are resampled jointly with replacement; the interval spans the
    2.5th and 97.5th percentiles (at the default level) of the resampled
    coefficients.  Zero-variance resamples are skipped; more than 10%
    skips aborts.  Deterministic given the rng seed.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise UsageError("series must have equal length")
    if x.size < 10:
        raise UsageError("need at least 10 points to bootstrap")
    if resamples < DEFAULT_RESAMPLES:
        raise UsageError(f"resamples must be >= {DEFAULT_RESAMPLES}")
    gen = as_generator(rng if rng is not None else RngStream(0))
    idx = gen.integers(0, x.size, size=(resamples, x.size))
    r = _pearson_rows(x[idx], y[idx])
    good = r[~np.isnan(r)]
    skipped = resamples - good.size
    if skipped > 0.1 * resamples:
        raise NumericalError(
            f"{skipped}/{resamples} degenerate bootstrap resamples")
    alpha = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(good, [alpha, 100.0 - alpha])
    return float(lo), float(hi)


def classify_correlation(r: float, ci) -> Verdict:
    """Significant iff |r| >= 0.6; borderline when the CI reaches 0.6."""
    ci_low, ci_high = ci
    if not -1.0 <= ci_low <= ci_high <= 1.0:
        raise UsageError(f"invalid confidence interval ({ci_low}, {ci_high})")
    if abs(r) >= SIGNIFICANCE_THRESHOLD:
        return Verdict("significant", borderline=False)
    borderline = max(abs(ci_low), abs(ci_high)) >= SIGNIFICANCE_THRESHOLD
    return Verdict("negligible", borderline=borderline)


def correlation_report(series, resamples: int = DEFAULT_RESAMPLES,
                       seed: int = 0) -> CorrelationReport:
    """Pearson r, bootstrap CI and verdict for every pair of series."""
    series = list(series)
    if len(series) < 2:
        raise UsageError("need at least two series")
    length = len(series[0])
    for s in series:
        if len(s) != length:
            raise UsageError(
                f"series {s.qubit_id} has length {len(s)}, expected {length}")
    pairs = []
    for a in range(len(series)):
        for b in range(a + 1, len(series)):
            si, sj = series[a], series[b]
            r = pearson(si.t1_values, sj.t1_values)
            stream = RngStream(derive_seed(seed, si.qubit_id, sj.qubit_id))
            lo, hi = bootstrap_ci(si.t1_values, sj.t1_values, resamples,
                                  rng=stream)
            pairs.append(PairCorrelation(si.qubit_id, sj.qubit_id, r, lo, hi,
                                         classify_correlation(r, (lo, hi))))
    return CorrelationReport(tuple(pairs))


def summary_stats(series: T1Series):
    """Sample mean, sample standard deviation (n-1) and c_v = sigma/mu."""
    if len(series) < 2:
        raise UsageError("need at least 2 samples")
    mu_hat = float(np.mean(series.t1_values))
    sigma_hat = float(np.std(series.t1_values, ddof=1))
    return mu_hat, sigma_hat, sigma_hat / mu_hat


def format_report_table(report: CorrelationReport) -> str:
    """Human-readable pairwise table: r (ci_low, ci_high) per qubit pair."""
    lines = ["pair          r (95% CI)                verdict"]
    for p in report.pairs:
        tag = p.verdict.label + (" [borderline]" if p.verdict.borderline
                                 else "")
        lines.append(f"{p.qubit_i}-{p.qubit_j:<10s}"
                     f"{p.r: .4f} ({p.ci_low: .4f},{p.ci_high: .4f})   {tag}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CSV schemas
# ---------------------------------------------------------------------------

def _read_rows(path, header):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty input file") from None
        if tuple(first) != header:
            raise SchemaError(f"expected header {','.join(header)}, got "
                              f"{','.join(first)}", row=1)
        return list(reader)


def load_t1_series(path):
    """Read timestamp,qubit_id,t1_us rows into per-qubit series."""
    rows = _read_rows(path, T1_CSV_HEADER)
    if not rows:
        warnings.warn(f"{path}: header-only file, no series loaded")
        return []
    data = {}
    order = []
    for k, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise SchemaError(f"expected 3 fields, got {len(row)}", row=k)
        ts_raw, qubit_id, t1_raw = row
        try:
            ts, t1 = float(ts_raw), float(t1_raw)
        except ValueError as exc:
            raise SchemaError(str(exc), row=k) from exc
        if t1 <= 0:
            raise SchemaError(f"t1_us must be positive, got {t1}", row=k)
        if qubit_id not in data:
            data[qubit_id] = ([], [])
            order.append(qubit_id)
        data[qubit_id][0].append(ts)
        data[qubit_id][1].append(t1)
    return [T1Series(q, np.array(data[q][0]), np.array(data[q][1]))
            for q in order]


def save_t1_series(series, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(T1_CSV_HEADER) + "\n")
        for s in series:
            for ts, t1 in zip(s.timestamps, s.t1_values):
                fh.write(f"{float(ts)!r},{s.qubit_id},{float(t1)!r}\n")


def save_report(report: CorrelationReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(REPORT_CSV_HEADER) + "\n")
        for p in report.pairs:
            fh.write(f"{p.qubit_i},{p.qubit_j},{p.r!r},{p.ci_low!r},"
                     f"{p.ci_high!r},{p.verdict.label}\n")


def load_decay_curve(path) -> DecayCurve:
    rows = _read_rows(path, DECAY_CSV_HEADER)
    if not rows:
        raise SchemaError(f"{path}: no decay data rows")
    delays, counts, shots = [], [], None
    for k, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise SchemaError(f"expected 3 fields, got {len(row)}", row=k)
        try:
            delay, row_shots, count = float(row[0]), int(row[1]), int(row[2])
        except ValueError as exc:
            raise SchemaError(str(exc), row=k) from exc
        if shots is None:
            shots = row_shots
        elif row_shots != shots:
            raise SchemaError(f"inconsistent shots {row_shots} != {shots}",
                              row=k)
        delays.append(delay)
        counts.append(count)
    return DecayCurve(np.array(delays), shots, np.array(counts))


def save_decay_curve(curve: DecayCurve, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(DECAY_CSV_HEADER) + "\n")
        for delay, count in zip(curve.delays, curve.excited_counts):
            fh.write(f"{float(delay)!r},{curve.shots},{int(count)}\n")
