"""
Comparison Statistics

Summary statistics, weighted ranking, Wilcoxon signed-rank tests and
the before/after improvement report over collected RunRecords.
"""

import itertools
import warnings
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata, wilcoxon

from ledfit.errors import NoNonzeroPairsError, StatisticsError
from ledfit.state import RankTable, RunRecord, SummaryStats, WilcoxonResult

CRITERIA = ("Best", "Mean")
# Largest sample for which exact p-values are computed.
EXACT_MAX_N = 20
SIGNIFICANCE = 0.05


def records_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    """One row per record with the columns the statistics need."""
    frame = pd.DataFrame(
        [
            {
                "config": r.config_name,
                "instance": r.instance_id,
                "repeat": r.repeat,
                "rmsp": r.best_rmsp,
                "pre_newton_rmsp": r.pre_newton_rmsp,
            }
            for r in records
        ],
        columns=["config", "instance", "repeat", "rmsp", "pre_newton_rmsp"],
    )
    if frame.empty:
        raise StatisticsError("no records")
    return frame


def _config_order(frame: pd.DataFrame) -> List[str]:
    return list(dict.fromkeys(frame["config"]))


def summarize(values: Sequence[float]) -> SummaryStats:
    """Mean, sample standard deviation (n - 1), min and max."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise StatisticsError("no values to summarize")
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return SummaryStats(
        mean=float(values.mean()), std_dev=std, min=float(values.min()), max=float(values.max())
    )


def summary_stats(records: Iterable[RunRecord], config: str) -> SummaryStats:
    """Statistics of best_rmsp over every record of ``config``."""
    frame = records_frame(records)
    values = frame.loc[frame["config"] == config, "rmsp"]
    if values.empty:
        raise StatisticsError(f"no records for configuration {config!r}")
    return summarize(values)


def summary_table(records: Iterable[RunRecord]) -> pd.DataFrame:
    frame = records_frame(records)
    rows = []
    for config in _config_order(frame):
        values = frame.loc[frame["config"] == config, "rmsp"]
        stats = summarize(values)
        rows.append(
            {
                "config": config,
                "n": int(values.size),
                "mean": stats.mean,
                "std_dev": stats.std_dev,
                "min": stats.min,
                "max": stats.max,
            }
        )
    return pd.DataFrame(rows)


def per_instance(records: Iterable[RunRecord], criterion: str = "Best") -> pd.DataFrame:
    """
    Instance x config table of best_rmsp aggregated over repeats.

    "Best" takes the minimum, "Mean" the average.
    """
    if criterion not in CRITERIA:
        raise StatisticsError(f"unknown criterion {criterion!r}")
    frame = records_frame(records)
    configs = _config_order(frame)
    grouped = frame.groupby(["instance", "config"], sort=False)["rmsp"]
    values = grouped.min() if criterion == "Best" else grouped.mean()
    table = values.unstack("config").reindex(columns=configs)
    if table.isna().any().any():
        raise StatisticsError("every configuration must have a result on every instance")
    return table


def weighted_ranking(records: Iterable[RunRecord]) -> RankTable:
    """
    Per instance, give k configurations the weights k (best) down to 1.

    Ties share the mean of their weight positions. Totals are computed
    once over the best and once over the mean value of each
    (config, instance) cell.
    """
    records = list(records)
    scores: Dict[str, Dict[str, float]] = {}
    table = None
    for criterion in CRITERIA:
        table = per_instance(records, criterion)
        k = table.shape[1]
        weights = k + 1 - np.apply_along_axis(rankdata, 1, table.to_numpy())
        scores[criterion] = {
            config: float(total) for config, total in zip(table.columns, weights.sum(axis=0))
        }
    return RankTable(scores=scores, instance_count=table.shape[0], config_count=table.shape[1])


def rank_frame(table: RankTable) -> pd.DataFrame:
    configs = list(table.scores[CRITERIA[0]])
    return pd.DataFrame(
        {
            "config": configs,
            **{criterion: [table.scores[criterion][c] for c in configs] for criterion in CRITERIA},
        }
    )


def _nonzero_differences(x: Sequence[float], y: Optional[Sequence[float]]) -> np.ndarray:
    d = np.asarray(x, dtype=float)
    if y is not None:
        other = np.asarray(y, dtype=float)
        if other.shape != d.shape:
            raise StatisticsError(f"paired samples differ in length ({d.size} vs {other.size})")
        d = d - other
    d = d[d != 0]
    if d.size < 1:
        raise NoNonzeroPairsError()
    return d


def wilcoxon_exact_p(x: Sequence[float], y: Optional[Sequence[float]] = None) -> float:
    """
    Exact two-sided p-value of the signed-rank statistic.

    Counts, over all 2**n sign assignments of the ranks, how often
    min(W+, W-) is at most the observed value. Mid-ranks are doubled so
    the rank sums stay integral.
    """
    d = _nonzero_differences(x, y)
    ranks2 = np.rint(2 * rankdata(np.abs(d))).astype(int)
    total = int(ranks2.sum())
    observed = min(int(ranks2[d > 0].sum()), int(ranks2[d < 0].sum()))

    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted

    sums = np.arange(total + 1)
    extreme = np.minimum(sums, total - sums) <= observed
    return float(min(1.0, counts[extreme].sum() / 2.0**d.size))


def wilcoxon_signed_rank(
    x: Sequence[float],
    y: Optional[Sequence[float]] = None,
    pair: Tuple[str, str] = ("x", "y"),
) -> WilcoxonResult:
    """
    Two-sided Wilcoxon signed-rank test on paired values.

    Zero differences are dropped before ranking. W and the asymptotic
    p-value come from scipy's normal approximation with tie-corrected
    variance and continuity correction.

    Args:
        x: First sample, or the differences when ``y`` is None
        y: Second sample
        pair: Labels of the two samples

    Returns:
        WilcoxonResult, with the exact p-value as well for small samples

    Raises:
        NoNonzeroPairsError: If every difference is zero
    """
    d = _nonzero_differences(x, y)
    n = d.size
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        result = wilcoxon(d, zero_method="wilcox", correction=True, method="approx")

    exact = wilcoxon_exact_p(d) if n <= EXACT_MAX_N else None
    return WilcoxonResult(
        pair=pair,
        n_effective=int(n),
        w_statistic=float(result.statistic),
        asymptotic_p=float(min(1.0, result.pvalue)),
        exact_p=exact,
    )


def wilcoxon_table(
    records: Iterable[RunRecord],
    configs: Optional[Sequence[str]] = None,
    criterion: str = "Best",
) -> pd.DataFrame:
    """Pairwise tests between configurations over per-instance values."""
    table = per_instance(records, criterion)
    configs = list(configs) if configs else list(table.columns)
    rows = []
    for first, second in itertools.combinations(configs, 2):
        try:
            result = wilcoxon_signed_rank(table[first], table[second], (first, second))
        except NoNonzeroPairsError:
            result = WilcoxonResult((first, second), 0, 0.0, 1.0, 1.0)
        rows.append(
            {
                "config_a": first,
                "config_b": second,
                "n_effective": result.n_effective,
                "w_statistic": result.w_statistic,
                "asymptotic_p": result.asymptotic_p,
                "exact_p": result.exact_p,
                "significant": result.asymptotic_p < SIGNIFICANCE,
            }
        )
    return pd.DataFrame(rows)


def improvement_report(
    before: Sequence[float],
    after: Sequence[float],
    instances: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    """
    Relative quality increase per instance, delta = 100 (before - after) / before.

    Raises:
        StatisticsError: If the lists differ in length or a before value is 0
    """
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    if before.shape != after.shape:
        raise StatisticsError(f"before and after differ in length ({before.size} vs {after.size})")
    if np.any(before == 0):
        raise StatisticsError("improvement is undefined for a before value of 0")
    if instances is None:
        instances = [str(i) for i in range(before.size)]
    return pd.DataFrame(
        {
            "instance": list(instances),
            "before": before,
            "after": after,
            "delta_pct": 100.0 * (before - after) / before,
        }
    )


def improvement_from_records(records: Iterable[RunRecord]) -> pd.DataFrame:
    """Improvement of the Newton stage over the heuristic stage of each record."""
    frame = records_frame(records).dropna(subset=["pre_newton_rmsp"])
    if frame.empty:
        raise StatisticsError("no records carry a pre-Newton rmsp")
    report = improvement_report(
        frame["pre_newton_rmsp"], frame["rmsp"], frame["instance"].tolist()
    )
    report.insert(0, "config", frame["config"].tolist())
    return report


def scatter_report(records: Iterable[RunRecord]) -> pd.DataFrame:
    """Min and max best_rmsp over repeats per configuration and instance."""
    frame = records_frame(records)
    grouped = frame.groupby(["config", "instance"], sort=False)["rmsp"]
    return pd.DataFrame(
        {
            "min_rmsp": grouped.min(),
            "max_rmsp": grouped.max(),
            "repeats": grouped.size(),
        }
    ).reset_index()
