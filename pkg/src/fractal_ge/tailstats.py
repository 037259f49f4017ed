"""Heavy-tail diagnostics for censored runtime samples."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

R_GRID = (0.01, 0.025, 0.05, 0.10, 0.15, 0.20)


class TailError(ValueError):
    pass


class InsufficientTailError(TailError):
    pass


class DegenerateTailError(TailError):
    pass


@dataclass(frozen=True)
class RunSample:
    """Observed (uncensored) runtimes plus a count of censored runs."""

    observed: tuple[float, ...]
    censored: int = 0
    tau: float | None = None

    def __post_init__(self):
        obs = tuple(sorted(float(v) for v in self.observed))
        if self.censored < 0:
            raise ValueError("censored count must be nonnegative")
        if self.tau is not None and obs and obs[-1] > self.tau:
            raise ValueError("observed value exceeds the censorship threshold")
        object.__setattr__(self, "observed", obs)

    @classmethod
    def from_values(cls, values: Iterable[float], censored: Iterable[bool] | None = None, tau: float | None = None) -> "RunSample":
        values = list(values)
        if censored is None:
            return cls(tuple(values), 0, tau)
        flags = list(censored)
        obs = [v for v, c in zip(values, flags) if not c]
        return cls(tuple(obs), sum(bool(c) for c in flags), tau)

    @property
    def n(self) -> int:
        return len(self.observed)

    @property
    def total(self) -> int:
        return self.n + self.censored

    def tail_count(self, r_fraction: float | None = None, r: int | None = None) -> int:
        if r is None:
            if r_fraction is None:
                raise ValueError("give r or r_fraction")
            r = max(2, round(r_fraction * self.n))
        if r >= self.n:
            raise InsufficientTailError(f"tail count r={r} needs more than {self.n} observations")
        return r


@dataclass(frozen=True)
class TailEstimate:
    alpha: float
    r: int
    r_fraction: float
    estimator: str
    # False when the data shows no hyperbolic decay (estimator denominator <= 0)
    evidence: bool = True

    @property
    def heavy_tailed(self) -> bool:
        return self.evidence and self.alpha < 2


def hill_hall_alpha(sample: RunSample, r_fraction: float | None = None, r: int | None = None) -> TailEstimate:
    """Hill-Hall estimate of the tail exponent, adapted to ``u`` censored runs.

    With ordered statistics ``X(1) <= ... <= X(n)``::

        1/alpha = (1/r) sum_{j=1}^{r-1} ln X(n-r+j) + (u+1)/r ln X(n)
                  - (u+r)/r ln X(n-r)
    """
    r = sample.tail_count(r_fraction, r)
    x = sample.observed
    n, u = sample.n, sample.censored
    pivot = x[n - r - 1]
    if pivot <= 0:
        raise TailError("tail pivot must be positive")
    logs = np.log(np.asarray(x[n - r:], dtype=float))
    denom = logs[:-1].sum() / r + (u + 1) / r * logs[-1] - (u + r) / r * math.log(pivot)
    frac = r / n if r_fraction is None else r_fraction
    if denom <= 0:
        return TailEstimate(math.inf, r, frac, "hill-hall", evidence=False)
    return TailEstimate(float(1.0 / denom), r, frac, "hill-hall")


def _tail_points(sample: RunSample, r: int) -> tuple[np.ndarray, np.ndarray]:
    """(ln X(i), ln((k - i)/k)) for i = n-r .. n, dropping zero-survival points."""
    n, k = sample.n, sample.total
    i = np.arange(n - r, n + 1)
    surv = (k - i) / k
    keep = surv > 0
    x = np.asarray(sample.observed, dtype=float)[i[keep] - 1]
    return np.log(x), np.log(surv[keep])


def regression_alpha(sample: RunSample, r_fraction: float | None = None, r: int | None = None) -> TailEstimate:
    """Least-squares slope of log-survival against log-runtime over the tail."""
    r = sample.tail_count(r_fraction, r)
    if sample.observed[sample.n - r - 1] <= 0:
        raise TailError("tail values must be positive")
    lx, ls = _tail_points(sample, r)
    m = len(lx)
    sxx = (lx**2).sum() - lx.sum() ** 2 / m
    if m < 2 or sxx <= 1e-15 * max(1.0, (lx**2).sum()):
        raise DegenerateTailError("log-runtimes of the tail have no spread")
    slope = ((ls * lx).sum() - ls.sum() * lx.sum() / m) / sxx
    frac = r / sample.n if r_fraction is None else r_fraction
    if slope >= 0:
        return TailEstimate(math.inf, r, frac, "regression", evidence=False)
    return TailEstimate(float(-slope), r, frac, "regression")


def tail_loglog(sample: RunSample, r_fraction: float | None = None, r: int | None = None) -> list[tuple[float, float]]:
    r = sample.tail_count(r_fraction, r)
    lx, ls = _tail_points(sample, r)
    return list(zip(lx.tolist(), ls.tolist()))


def kurtosis(values: Sequence[float]) -> float:
    x = np.asarray(values, dtype=float)
    d = x - x.mean()
    m2 = (d**2).mean()
    if m2 == 0:
        raise DegenerateTailError("zero variance")
    return float((d**4).mean() / m2**2)


def central_moments(values: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    d = x - x.mean()
    return float((d**2).mean()), float((d**4).mean())


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Right-continuous step points ``(x, F(x))`` at each distinct value."""
    x = np.sort(np.asarray(values, dtype=float))
    if len(x) == 0:
        raise ValueError("empty sample")
    uniq, counts = np.unique(x, return_counts=True)
    return list(zip(uniq.tolist(), (np.cumsum(counts) / len(x)).tolist()))


def summary(values: Sequence[float]) -> dict[str, float]:
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        raise ValueError("empty sample")
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return {
        "min": float(x.min()),
        "q1": float(q1),
        "median": float(med),
        "mean": float(x.mean()),
        "q3": float(q3),
        "max": float(x.max()),
    }


def running_mean(values: Sequence[float]) -> list[float]:
    x = np.asarray(values, dtype=float)
    if len(x) == 0:
        raise ValueError("empty sample")
    return (np.cumsum(x) / np.arange(1, len(x) + 1)).tolist()


def running_variance(values: Sequence[float]) -> list[float]:
    """Prefix population variances, numerically stable (Welford)."""
    out = []
    mean = m2 = 0.0
    for t, v in enumerate(values, start=1):
        delta = v - mean
        mean += delta / t
        m2 += delta * (v - mean)
        out.append(m2 / t)
    return out


def pareto_sample(alpha: float, size: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Classical Pareto draws: ``P(X > x) = (scale / x)**alpha`` for ``x >= scale``."""
    return scale * (1.0 - rng.random(size)) ** (-1.0 / alpha)
