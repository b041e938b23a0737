"""Fits and comparisons layered over the extractors and the statistics routines."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from . import stats
from .empirics import StylizedFacts

WAIT_RANGES = ((1, 25), (1, 31))
SHARE_SUPPORT = tuple(range(1, 8))


def duration_fit(duration_counts: Mapping[int, int]) -> stats.FitResult | None:
    """NLS exponential fit over the full span of observed durations."""
    if not duration_counts:
        return None
    span = range(1, max(duration_counts) + 1)
    d = list(span)
    y = [duration_counts.get(k, 0) for k in span]
    try:
        return stats.nls_exp(d, y)
    except (ValueError, np.linalg.LinAlgError):
        return None


def rate_fit(sample) -> dict | None:
    try:
        rate, p = stats.fit_exp_rate_max_p(sample)
    except ValueError:
        return None
    d, _ = stats.ks_one_sample_exp(sample, rate)
    return {"rate": rate, "p_value": p, "D": d, "n": int(len(sample))}


def facts_payload(facts: StylizedFacts) -> dict:
    covered = [c for c, cov in zip(facts.counts_per_year, facts.coverage_per_year) if cov > 0]
    total = sum(facts.counts_hist)
    pct = [100.0 * c / total for c in facts.counts_hist] if total else []
    fit = duration_fit(facts.duration_counts)
    return {
        "facts": {
            "counts_hist": facts.counts_hist,
            "duration_counts": facts.duration_counts,
            "wait_counts": facts.wait_counts,
            "total_spells": facts.total_spells,
            "aggregate_recession_years": facts.aggregate_recession_years,
            "years": facts.years,
            "counts_per_year": facts.counts_per_year,
            "coverage_per_year": facts.coverage_per_year,
            "n_years": facts.n_years,
        },
        "fits": {
            "exp_rate_yearly_counts": rate_fit(covered) if covered else None,
            "exp_rate_hist_percentages": rate_fit(pct) if pct else None,
            "duration_nls": fit.to_dict() if fit else None,
        },
    }


def _restrict(h: Mapping[int, int], lo: int, hi: int) -> dict[int, int]:
    return {k: v for k, v in h.items() if lo <= k <= hi}


def _ks(a, b) -> dict:
    try:
        d, p = stats.ks_two_sample_counts(a, b)
    except ValueError:
        return {"D": None, "p_value": None}
    return {"D": d, "p_value": p}


def _corr(a, b) -> float | None:
    support = sorted(set(a) | set(b))
    try:
        return stats.pearson(stats.shares(a, support), stats.shares(b, support))
    except ValueError:
        return None


def compare_distributions(actual: Mapping[str, Mapping[int, int]],
                          simulated: Mapping[str, Mapping[int, int]]) -> dict:
    """KS distances, share correlations and a duration-share table, actual vs simulated."""
    out: dict = {"ks": {}, "correlation": {}}
    for name in ("counts", "durations", "waits"):
        out["ks"][name] = _ks(actual[name], simulated[name])
        out["correlation"][name] = _corr(actual[name], simulated[name])
    for lo, hi in WAIT_RANGES:
        key = f"waits_{lo}_{hi}"
        a, s = _restrict(actual["waits"], lo, hi), _restrict(simulated["waits"], lo, hi)
        out["ks"][key] = _ks(a, s)
        out["correlation"][key] = _corr(a, s)
    out["duration_shares"] = {
        "duration": list(SHARE_SUPPORT),
        "actual": [float(x) for x in stats.shares(actual["durations"], SHARE_SUPPORT)],
        "simulated": [float(x) for x in stats.shares(simulated["durations"], SHARE_SUPPORT)],
    }
    return out
