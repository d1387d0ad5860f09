"""
Regression comparison of two results.csv files.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np
import pandas as pd

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, SchemaError
from shapinglab.utils.xstorage import ResultStorage


KEY_COLUMNS = ["preset", "series", "seed", "x"]
MODES = ("abs", "ci")
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SeriesDeviation:
    """Comparison outcome of one (preset, series) pair."""
    preset: str
    series: str
    max_deviation: float
    tolerance: float
    n_points: int
    passed: bool
    n_disjoint: int = 0


@dataclass
class CompareReport:
    mode: str
    series: List[SeriesDeviation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s.passed for s in self.series)

    @property
    def failing(self) -> List[str]:
        return [s.series for s in self.series if not s.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {"mode": self.mode, "ok": self.ok, "failing": self.failing,
                "series": [s.__dict__ for s in self.series]}


def _tolerance(tolerances: Union[float, Dict[str, float], None], series: str) -> float:
    if tolerances is None:
        return DEFAULT_TOLERANCE
    if isinstance(tolerances, (int, float)):
        return float(tolerances)
    return float(tolerances.get(series, tolerances.get("default", DEFAULT_TOLERANCE)))


def _intervals(frame: pd.DataFrame, suffix: str) -> pd.DataFrame:
    lo, hi = frame[f"ci_lo{suffix}"], frame[f"ci_hi{suffix}"]
    y = frame[f"y{suffix}"]
    # rows without a CI count as point intervals
    return pd.DataFrame({"lo": lo.fillna(y), "hi": hi.fillna(y)})


def compare(baseline: Union[str, pd.DataFrame],
            run: Union[str, pd.DataFrame],
            tolerances: Union[float, Dict[str, float], None] = None,
            mode: str = "abs") -> CompareReport:
    """
    Per-series comparison of a run against a baseline.

    Args:
        baseline: baseline results.csv path or its frame
        run: run results.csv path or its frame
        tolerances: one absolute tolerance, or series -> tolerance with an optional "default"
        mode: "abs" (max |dy| within tolerance) or "ci" (every pair of CIs intersects,
            widened by the tolerance)

    Raises:
        SchemaError: column mismatch, or the files do not cover the same points
        ConfigError: unknown mode
    """
    if mode not in MODES:
        raise ConfigError(f"compare mode must be one of {MODES}, got '{mode}'")
    base = ResultStorage.read_csv(baseline) if isinstance(baseline, str) else baseline
    other = ResultStorage.read_csv(run) if isinstance(run, str) else run
    if list(base.columns) != list(other.columns):
        raise SchemaError(f"column mismatch: {list(base.columns)} vs {list(other.columns)}")

    merged = base.merge(other, on=KEY_COLUMNS, how="outer", suffixes=("_base", "_run"), indicator=True)
    unmatched = merged[merged["_merge"] != "both"]
    if len(unmatched):
        first = unmatched.iloc[0]
        raise SchemaError(f"{len(unmatched)} points present in only one file, "
                          f"e.g. series '{first['series']}' at x={first['x']}")

    report = CompareReport(mode)
    for (preset, series), group in merged.groupby(["preset", "series"], sort=True):
        tol = _tolerance(tolerances, series)
        dy = np.abs(group["y_base"].to_numpy(float) - group["y_run"].to_numpy(float))
        both_nan = np.isnan(group["y_base"].to_numpy(float)) & np.isnan(group["y_run"].to_numpy(float))
        dy = np.where(both_nan, 0.0, dy)
        max_dev = float(np.max(dy)) if dy.size else 0.0
        n_disjoint = 0
        if mode == "abs":
            passed = bool(max_dev <= tol)
        else:
            a, b = _intervals(group, "_base"), _intervals(group, "_run")
            disjoint = (a["lo"].to_numpy() > b["hi"].to_numpy() + tol) | (b["lo"].to_numpy() > a["hi"].to_numpy() + tol)
            n_disjoint = int(np.count_nonzero(disjoint))
            passed = n_disjoint == 0
        report.series.append(SeriesDeviation(str(preset), str(series), max_dev, tol, int(len(group)),
                                             passed, n_disjoint))

    log = xlogger.success if report.ok else xlogger.warning
    log(f"compare ({mode}): {len(report.series)} series, {len(report.failing)} failing",
        data={"failing": report.failing})
    return report


def render_report(report: CompareReport, title: Optional[str] = None):
    """Rich table of a comparison, one row per series."""
    from rich.table import Table

    table = Table(title=title or f"compare ({report.mode})")
    for col in ("preset", "series", "max |dy|", "tolerance", "points", "result"):
        table.add_column(col)
    for s in report.series:
        table.add_row(s.preset, s.series, f"{s.max_deviation:.3g}", f"{s.tolerance:.3g}", str(s.n_points),
                      "[green]pass[/green]" if s.passed else "[red]FAIL[/red]")
    return table
