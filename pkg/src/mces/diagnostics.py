"""Chain quality metrics: autocorrelation, effective sample size, summaries.

The effective sample size uses ESS = n / (1 + 2 sum_k rho(k)) with the
infinite sum truncated by the initial-positive-sequence rule: consecutive
lag-pair sums Gamma_j = rho(2j) + rho(2j+1) are accumulated while they
stay positive. ESS per leapfrog step divides by the mean L over the same
window, the cost-normalized efficiency measure used throughout the
benchmark harness.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError

__all__ = [
    "ESSReport",
    "autocorrelation",
    "ess",
    "ess_per_l",
    "performance_ratio",
    "summarize",
]


def autocorrelation(series, lag):
    """Sample autocorrelation at one lag (biased, divide-by-n normalization).

    A constant series is flagged and gets autocorrelation 0 for lag >= 1.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.size
    if not 0 <= lag < n:
        raise ContractViolationError(f"lag must lie in [0, {n}), got {lag}")
    if lag == 0:
        return 1.0
    centered = series - series.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        warnings.warn("autocorrelation of a constant series is defined as 0", stacklevel=2)
        return 0.0
    return float(centered[:-lag] @ centered[lag:]) / denom


def _autocorr_fft(series):
    """All-lag autocorrelations rho(0..n-1) via FFT (biased normalization)."""
    n = series.size
    centered = series - series.mean()
    size = 1 << int(np.ceil(np.log2(2 * n - 1)))
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    return acov / acov[0]


def ess(series):
    """Effective sample size of a scalar chain, clamped to (0, n]."""
    series = np.asarray(series, dtype=np.float64)
    n = series.size
    if n < 10:
        raise ContractViolationError("ess needs at least 10 samples")
    if np.all(series == series[0]):
        raise ContractViolationError("ess of a constant (degenerate) series is undefined")
    rho = _autocorr_fft(series)
    tau = 0.0
    for j in range(n // 2):
        pair = rho[2 * j] + rho[2 * j + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    tau -= 1.0
    if tau <= 0.0:
        return float(n)
    return float(min(n, n / tau))


@dataclass(frozen=True)
class ESSReport:
    """Per-dimension ESS and ESS per leapfrog step for one chain window."""

    ess: np.ndarray
    ess_per_l: np.ndarray
    mean_l: float
    n_samples: int

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("dim,ess,ess_per_l\n")
            for i in range(self.ess.size):
                fh.write(f"{i},{self.ess[i]:.17g},{self.ess_per_l[i]:.17g}\n")


def ess_per_l(trace, discard=0, transform=None):
    """ESS and ESS/L per dimension over the post-discard window of a trace.

    ``transform`` optionally maps the retained samples to the reported
    parameterization before the per-column ESS is computed.
    """
    if not 0 <= discard < len(trace):
        raise ContractViolationError("discard must be smaller than the trace length")
    window = trace.samples[discard:]
    if transform is not None:
        window = transform(window)
    mean_l = float(trace.l_history[discard:].mean())
    values = np.array([ess(window[:, i]) for i in range(window.shape[1])])
    return ESSReport(
        ess=values,
        ess_per_l=values / mean_l,
        mean_l=mean_l,
        n_samples=window.shape[0],
    )


def performance_ratio(e, e_prime):
    """Mean of the per-dimension ratios e_i / e'_i."""
    e = np.asarray(e, dtype=np.float64)
    e_prime = np.asarray(e_prime, dtype=np.float64)
    if e.shape != e_prime.shape or e.ndim != 1:
        raise ContractViolationError("inputs must be equal-length vectors")
    if np.any(e_prime <= 0):
        raise ContractViolationError("reference efficiencies must be positive")
    return float(np.mean(e / e_prime))


def summarize(trace, discard=0, transform=None):
    """Per-dimension (mean, sd) over the retained window (n-1 divisor sd)."""
    if not 0 <= discard < len(trace):
        raise ContractViolationError("discard must be smaller than the trace length")
    window = trace.samples[discard:]
    if transform is not None:
        window = transform(window)
    means = window.mean(axis=0)
    sds = window.std(axis=0, ddof=1) if window.shape[0] > 1 else np.zeros(window.shape[1])
    return means, sds
