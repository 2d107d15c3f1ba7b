"""Compare a generated trace against the original it imitates.

Three distributions are compared, each both empirically and through a
refitted parametric model: times between session starts (exponential),
gaps between requests within a session (lognormal) and session lengths
(Zeta).  Cache hit-rate curves under LFU and LRU are compared on a shared
capacity grid.
"""
from __future__ import annotations

import csv
import json
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cache_sim import CachePolicy, default_capacity_grid, sweep, write_curves_csv
from .distfit import (
    EmpiricalCdf,
    ExponentialParams,
    fit_lognormal,
    fit_poisson_rate,
    fit_zeta,
    ks_2samp_statistic,
    ks_statistic,
)
from .exceptions import EmptyInput, FitError, TooFewSessions
from .ingest import DEFAULT_TIMEOUT, sessionize


def extract_inter_session_times(sessions) -> np.ndarray:
    """Gaps between consecutive session starts across all agents."""
    if len(sessions) < 2:
        raise TooFewSessions("need at least two sessions")
    return np.diff(np.sort([s.start_time for s in sessions]))


def extract_intra_session_iats(sessions) -> np.ndarray:
    gaps = [np.diff(s.times) for s in sessions if len(s.requests) > 1]
    return np.concatenate(gaps) if gaps else np.empty(0)


def session_length_pmf(sessions) -> list:
    """``(k, probability)`` pairs for every observed session length."""
    if not sessions:
        raise EmptyInput("no sessions")
    counts = Counter(len(s.requests) for s in sessions)
    n = len(sessions)
    return [(k, counts[k] / n) for k in sorted(counts)]


def _fit_exponential(gaps):
    return fit_poisson_rate(gaps.size, float(gaps.sum()))


def _fit_lognormal(gaps):
    return fit_lognormal(gaps[gaps > 0])


def _fit_zeta(lengths):
    return fit_zeta(lengths)


_FITTERS = {
    "inter_session_time": _fit_exponential,
    "intra_session_iat": _fit_lognormal,
    "session_length": _fit_zeta,
}


def _params_dict(p):
    if p is None:
        return None
    if isinstance(p, ExponentialParams):
        return {"lambda": p.rate}
    return dict(vars(p))


@dataclass
class ComparisonReport:
    metric_name: str
    empirical_original: Optional[EmpiricalCdf]
    empirical_generated: Optional[EmpiricalCdf]
    fitted_original: object = None
    fitted_generated: object = None
    ks_original_vs_fit: Optional[float] = None
    ks_generated_vs_fit: Optional[float] = None
    ks_original_vs_generated: Optional[float] = None
    notes: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "fitted_original": _params_dict(self.fitted_original),
            "fitted_generated": _params_dict(self.fitted_generated),
            "ks_original_vs_fit": self.ks_original_vs_fit,
            "ks_generated_vs_fit": self.ks_generated_vs_fit,
            "ks_original_vs_generated": self.ks_original_vs_generated,
            "n_original": len(self.empirical_original) if self.empirical_original else 0,
            "n_generated": len(self.empirical_generated) if self.empirical_generated else 0,
            "notes": list(self.notes),
        }


def compare_samples(metric, original, generated) -> ComparisonReport:
    """Empirical CDFs, refitted models and KS distances for one metric."""
    original = np.asarray(original, dtype=float)
    generated = np.asarray(generated, dtype=float)
    report = ComparisonReport(
        metric,
        EmpiricalCdf(original) if original.size else None,
        EmpiricalCdf(generated) if generated.size else None,
    )
    fitter = _FITTERS[metric]
    for side, data in (("original", original), ("generated", generated)):
        if not data.size:
            report.notes.append(f"{side}: no samples")
            continue
        try:
            params = fitter(data)
        except FitError as exc:
            report.notes.append(f"{side}: fit failed ({exc})")
            continue
        setattr(report, f"fitted_{side}", params)
        setattr(report, f"ks_{side}_vs_fit", ks_statistic(data, params.cdf))
    if original.size and generated.size:
        report.ks_original_vs_generated = ks_2samp_statistic(original, generated)
    return report


@dataclass
class ComparisonResult:
    reports: list
    curves: dict
    capacities: list
    timeout: float
    labels: tuple

    def report(self, metric) -> ComparisonReport:
        return next(r for r in self.reports if r.metric_name == metric)

    def max_curve_gap(self, policy) -> float:
        a, b = self.curves[CachePolicy(policy)]
        return float(np.max(np.abs(np.subtract(a.hit_rates, b.hit_rates))))

    def summary(self) -> dict:
        return {
            "labels": {"original": self.labels[0], "generated": self.labels[1]},
            "timeout": self.timeout,
            "metrics": {r.metric_name: r.summary() for r in self.reports},
            "cache": {
                p.value: {"max_abs_hit_rate_gap": self.max_curve_gap(p)} for p in self.curves
            },
            "capacities": list(self.capacities),
        }


def compare(original, generated, timeout=DEFAULT_TIMEOUT, capacities=None,
            policies=(CachePolicy.LFU, CachePolicy.LRU), *, n_jobs=None) -> ComparisonResult:
    """Compare two request traces.

    Both traces are sessionized with the same ``timeout``.  When
    ``capacities`` is omitted, the default log grid up to the larger
    distinct-path count of the two traces is used for both.
    """
    labels = (_label(original, "original"), _label(generated, "generated"))
    original = list(original)
    generated = list(generated)
    if not original or not generated:
        raise EmptyInput("both traces must be nonempty")
    so = sessionize(original, timeout)
    sg = sessionize(generated, timeout)

    reports = [
        compare_samples("inter_session_time", _starts_gaps(so), _starts_gaps(sg)),
        compare_samples("intra_session_iat", extract_intra_session_iats(so), extract_intra_session_iats(sg)),
    ]
    reports.append(compare_samples(
        "session_length",
        [len(s.requests) for s in so],
        [len(s.requests) for s in sg],
    ))

    po = [r.path for r in original]
    pg = [r.path for r in generated]
    if capacities is None:
        capacities = default_capacity_grid(po if len(set(po)) >= len(set(pg)) else pg)
    curves = {}
    for policy in policies:
        policy = CachePolicy(policy)
        curves[policy] = (
            sweep(po, capacities, policy, label=labels[0], n_jobs=n_jobs),
            sweep(pg, capacities, policy, label=labels[1], n_jobs=n_jobs),
        )
    return ComparisonResult(reports, curves, list(capacities), float(timeout), labels)


def _starts_gaps(sessions):
    return extract_inter_session_times(sessions) if len(sessions) > 1 else np.empty(0)


def _label(trace, default):
    return getattr(trace, "label", "") or default


def _merged_grid(*cdfs):
    xs = [c.sorted_values for c in cdfs if c is not None]
    return np.unique(np.concatenate(xs)) if xs else np.empty(0)


def _fmt(v):
    return "" if v is None else repr(float(v))


def write_cdf_csv(report: ComparisonReport, path):
    grid = _merged_grid(report.empirical_original, report.empirical_generated)
    cols = [
        report.empirical_original, report.empirical_generated,
        report.fitted_original.cdf if report.fitted_original else None,
        report.fitted_generated.cdf if report.fitted_generated else None,
    ]
    values = [np.asarray(f(grid)) if f is not None else None for f in cols]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "cdf_original", "cdf_generated", "cdf_fit_original", "cdf_fit_generated"])
        for i, x in enumerate(grid):
            w.writerow([repr(float(x))] + [_fmt(v[i]) if v is not None else "" for v in values])


def write_pmf_csv(report: ComparisonReport, path):
    def pmf(cdf):
        if cdf is None:
            return {}
        ks, c = np.unique(cdf.sorted_values, return_counts=True)
        return dict(zip(ks.astype(int).tolist(), (c / cdf.sorted_values.size).tolist()))

    po, pg = pmf(report.empirical_original), pmf(report.empirical_generated)
    ks = sorted(set(po) | set(pg))
    fo, fg = report.fitted_original, report.fitted_generated
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "pmf_original", "pmf_generated", "pmf_fit_original", "pmf_fit_generated"])
        for k in ks:
            w.writerow([
                k, _fmt(po.get(k, 0.0)), _fmt(pg.get(k, 0.0)),
                _fmt(fo.pmf(k)) if fo else "", _fmt(fg.pmf(k)) if fg else "",
            ])


def write_bundle(result: ComparisonResult, outdir, *, extra=None) -> dict:
    """Write CSVs and ``summary.json`` into ``outdir``; return the file map."""
    os.makedirs(outdir, exist_ok=True)
    files = {}
    for r in result.reports:
        name = f"{r.metric_name}.csv"
        (write_pmf_csv if r.metric_name == "session_length" else write_cdf_csv)(r, os.path.join(outdir, name))
        files[r.metric_name] = name
    for policy, pair in result.curves.items():
        name = f"cache_{policy.value.lower()}.csv"
        write_curves_csv(pair, os.path.join(outdir, name))
        files[f"cache_{policy.value.lower()}"] = name
    summary = result.summary()
    summary["files"] = files
    summary.update(extra or {})
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return files
