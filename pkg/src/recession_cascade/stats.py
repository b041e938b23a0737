"""Kolmogorov-Smirnov tests, exponential rate fitting, exponential NLS, correlation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

RATE_GRID_LO = 1e-3
RATE_GRID_HI = 10.0
RATE_GRID_STEP = 1e-3


@dataclass
class FitResult:
    parameters: dict[str, float]
    standard_errors: dict[str, float] = field(default_factory=dict)
    fitted_values: list[float] = field(default_factory=list)
    statistic: float = math.nan
    p_value: float | None = None
    iterations: int = 0
    converged: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def kolmogorov_q(lam: float) -> float:
    """Asymptotic Kolmogorov tail probability Q(lam) = 2 sum (-1)^(j-1) exp(-2 j^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    a2 = -2.0 * lam * lam
    total = 0.0
    sign = 1.0
    prev = 0.0
    for j in range(1, 101):
        term = sign * 2.0 * math.exp(a2 * j * j)
        total += term
        if abs(term) <= 1e-3 * prev or abs(term) <= 1e-8 * total:
            return min(1.0, max(0.0, total))
        sign = -sign
        prev = abs(term)
    # series did not settle: lam is tiny, Q -> 1
    return 1.0


def ks_p_value(d: float, n_eff: float) -> float:
    root = math.sqrt(n_eff)
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d)


def _exp_cdf(x, rate):
    return -np.expm1(-rate * np.asarray(x, dtype=float))


def _ecdf_steps(sample: NDArray) -> tuple[NDArray, NDArray, NDArray]:
    """Distinct values with the empirical CDF just below and at each value."""
    vals, counts = np.unique(sample, return_counts=True)
    cum = np.cumsum(counts) / sample.size
    below = np.concatenate(([0.0], cum[:-1]))
    return vals, below, cum


def ks_statistic_exp(sample, rate: float) -> float:
    x = np.asarray(sample, dtype=float)
    vals, below, at = _ecdf_steps(x)
    f = _exp_cdf(vals, rate)
    return float(max(np.max(np.abs(at - f)), np.max(np.abs(f - below))))


def ks_one_sample_exp(sample: Sequence[float], rate: float) -> tuple[float, float]:
    """One-sample KS of ``sample`` against Exp(rate). Returns (D, p).

    Ties (integer data) are handled through the right-continuous empirical
    CDF; against a continuous reference this makes p conservative.
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("KS test needs a non-empty sample")
    if not rate > 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    if np.any(x < 0):
        raise ValueError("exponential KS test needs non-negative data")
    d = ks_statistic_exp(x, rate)
    return d, ks_p_value(d, x.size)


def _ks_stat_many_rates(vals, below, at, rates) -> NDArray:
    f = _exp_cdf(vals[None, :], rates[:, None])
    return np.maximum(np.abs(at[None, :] - f).max(axis=1), np.abs(f - below[None, :]).max(axis=1))


def fit_exp_rate_max_p(sample: Sequence[float]) -> tuple[float, float]:
    """Exponential rate maximizing the KS p-value (minimizing D).

    Scans rates 0.001..10 in steps of 0.001, then refines around the best grid
    point by golden-section search. Returns (rate, p).
    """
    x = np.asarray(sample, dtype=float)
    if x.size == 0 or not np.any(x > 0):
        raise ValueError("rate fit needs a sample with positive mean")
    if np.any(x < 0):
        raise ValueError("exponential rate fit needs non-negative data")
    vals, below, at = _ecdf_steps(x)
    n_grid = int(round((RATE_GRID_HI - RATE_GRID_LO) / RATE_GRID_STEP)) + 1
    rates = RATE_GRID_LO + RATE_GRID_STEP * np.arange(n_grid)
    chunk = max(1, 2_000_000 // max(vals.size, 1))
    best_d = math.inf
    best_i = 0
    for lo in range(0, n_grid, chunk):
        d = _ks_stat_many_rates(vals, below, at, rates[lo:lo + chunk])
        i = int(np.argmin(d))
        if d[i] < best_d:
            best_d, best_i = float(d[i]), lo + i

    def dstat(r):
        return float(_ks_stat_many_rates(vals, below, at, np.array([r]))[0])

    a = rates[max(best_i - 1, 0)]
    b = rates[min(best_i + 1, n_grid - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    c, d_ = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = dstat(c), dstat(d_)
    for _ in range(60):
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = dstat(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = dstat(d_)
    rate, d_ref = (c, fc) if fc < fd else (d_, fd)
    if d_ref > best_d:
        rate, d_ref = float(rates[best_i]), best_d
    return float(rate), ks_p_value(d_ref, x.size)


def ks_two_sample(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value. Returns (D, p)."""
    a = np.sort(np.asarray(x, dtype=float))
    b = np.sort(np.asarray(y, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS test needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    return d, ks_p_value(d, a.size * b.size / (a.size + b.size))


def ks_two_sample_counts(hx: Mapping[float, float], hy: Mapping[float, float]) -> tuple[float, float]:
    """Two-sample KS on frequency tables ``value -> count``.

    Identical to expanding both tables into raw samples.
    """
    keys = sorted(set(hx) | set(hy))
    cx = np.array([hx.get(k, 0) for k in keys], dtype=float)
    cy = np.array([hy.get(k, 0) for k in keys], dtype=float)
    nx, ny = cx.sum(), cy.sum()
    if nx <= 0 or ny <= 0:
        raise ValueError("KS test needs two non-empty samples")
    d = float(np.max(np.abs(np.cumsum(cx) / nx - np.cumsum(cy) / ny)))
    return d, ks_p_value(d, nx * ny / (nx + ny))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("pearson needs two vectors of equal length >= 2")
    da, db = a - a.mean(), b - b.mean()
    sa, sb = math.sqrt(float(da @ da)), math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        raise ValueError("pearson undefined for a zero-variance input")
    return float(np.clip((da @ db) / (sa * sb), -1.0, 1.0))


def exp_model_jacobian(d: NDArray, a: float, b: float) -> NDArray:
    f = np.exp(a + b * d)
    return np.column_stack([f, d * f])


def nls_exp(d: Sequence[float], y: Sequence[float], max_iter: int = 200, rtol: float = 1e-9) -> FitResult:
    """Least-squares fit of ``y ~ exp(a + b d)`` by damped Gauss-Newton.

    Starts from a log-linear fit on the positive observations and halves the
    step until the residual sum of squares does not increase. Standard errors
    are sqrt(diag((J'J)^-1) * RSS / (n - 2)).
    """
    dd = np.asarray(d, dtype=float)
    yy = np.asarray(y, dtype=float)
    if dd.shape != yy.shape or dd.ndim != 1:
        raise ValueError("d and y must be vectors of equal length")
    if dd.size < 3:
        raise ValueError("nls_exp needs at least 3 points")
    if np.any(yy < 0):
        raise ValueError("nls_exp needs y >= 0")
    pos = yy > 0
    if pos.sum() < 2 or np.ptp(dd[pos]) == 0:
        raise ValueError("need two positive observations at distinct d for initial values")
    b0, a0 = np.polyfit(dd[pos], np.log(yy[pos]), 1)
    theta = np.array([a0, b0])

    def rss_at(t):
        r = yy - np.exp(t[0] + t[1] * dd)
        return float(r @ r)

    rss = rss_at(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = exp_model_jacobian(dd, *theta)
        r = yy - np.exp(theta[0] + theta[1] * dd)
        JtJ = J.T @ J
        if np.linalg.cond(JtJ) > 1e14:
            raise np.linalg.LinAlgError("singular normal equations in nls_exp")
        delta = np.linalg.solve(JtJ, J.T @ r)
        lam = 1.0
        while lam > 1e-10:
            cand = theta + lam * delta
            new_rss = rss_at(cand)
            if new_rss <= rss:
                break
            lam *= 0.5
        else:
            cand, new_rss = theta, rss
        change = np.max(np.abs(cand - theta) / np.maximum(np.abs(theta), 1e-12))
        theta, rss = cand, new_rss
        if change < rtol:
            converged = True
            break

    J = exp_model_jacobian(dd, *theta)
    n = dd.size
    sigma2 = rss / (n - 2) if n > 2 else math.nan
    cov = np.linalg.inv(J.T @ J) * sigma2
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    fitted = np.exp(theta[0] + theta[1] * dd)
    return FitResult(
        parameters={"a": float(theta[0]), "b": float(theta[1])},
        standard_errors={"a": float(se[0]), "b": float(se[1])},
        fitted_values=[float(v) for v in fitted],
        statistic=rss,
        iterations=it,
        converged=converged,
    )


def shares(counts: Mapping[int, int], support: Sequence[int]) -> NDArray[np.float64]:
    """Frequencies on ``support`` divided by the total over all keys."""
    total = float(sum(counts.values()))
    if total <= 0:
        return np.zeros(len(support))
    return np.array([counts.get(k, 0) / total for k in support])
