"""Held-out metrics, alpha sweeps, Pareto frontiers, and CSV reports.

Relaxed metrics are computed in one global pass over the full prediction
vector (no batching). Hard metrics threshold at 0.5 unless told otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import FrontierRangeError, ParameterError
from .losses import demographic_parity_gap, equal_opportunity_gap, equalized_odds_gap
from .subspace import SubspaceModel, predict
from .tensor import masked_mean

DEFAULT_ALPHA_GRID = tuple(k / 20 for k in range(21))

REPORT_HEADER = "alpha,A,error_rate,dp_relaxed,dp_hard,eo_relaxed,eodd_relaxed,wall_time_s,seed"


@dataclass(frozen=True)
class MetricsRecord:
    """Metrics of one evaluated point; alpha is set for subspace sweeps,
    fairness_weight (the report's A column) for fixed-training points."""

    alpha: float | None
    fairness_weight: float | None
    error_rate: float
    dp_relaxed: float
    dp_hard: float
    eo_relaxed: float
    eodd_relaxed: float
    wall_time_s: float | None = None
    seed: int | None = None


def evaluate_predictions(pred: np.ndarray, y: np.ndarray, s: np.ndarray,
                         threshold: float = 0.5) -> MetricsRecord:
    """Error rate plus the hard and relaxed group-gap metrics.

    Raises EmptyGroupError when a group (or group/label cell needed by the
    EO/Eodd metrics) has no samples.
    """
    hard = (pred >= threshold).astype(np.float64)
    error_rate = float(np.mean(hard != y))
    dp_hard = abs(masked_mean(hard, s == 0.0) - masked_mean(hard, s == 1.0))
    dp_relaxed = demographic_parity_gap(pred, s).value
    eo_relaxed = equal_opportunity_gap(pred, y, s).value
    eodd_relaxed = equalized_odds_gap(pred, y, s).value
    return MetricsRecord(None, None, error_rate, dp_relaxed, dp_hard,
                         eo_relaxed, eodd_relaxed)


def _meta_seed(meta: dict[str, str]) -> int | None:
    raw = meta.get("config.seed", "")
    return int(raw) if raw else None


def alpha_sweep(model: SubspaceModel, test: Dataset,
                grid=DEFAULT_ALPHA_GRID) -> list[MetricsRecord]:
    """Evaluate the single checkpoint at every grid alpha on identical data."""
    grid = [float(a) for a in grid]
    for a in grid:
        if not 0.0 <= a <= 1.0:
            raise ParameterError(f"alpha grid value {a} outside [0, 1]")
    seed = _meta_seed(model.train_meta)
    records = []
    for a in grid:
        pred = predict(model, a, test.features)
        rec = evaluate_predictions(pred, test.labels, test.sensitive)
        records.append(replace(rec, alpha=a, seed=seed))
    return records


def pareto_frontier(points: list[MetricsRecord], fairness_field: str
                    ) -> list[MetricsRecord]:
    """Maximal non-dominated subset under minimization of
    (error_rate, fairness_field), sorted by error_rate ascending.

    A point is dominated when another is <= on both coordinates and < on one.
    Exact ties on both coordinates keep the first occurrence.
    """
    if not points:
        raise ParameterError("pareto_frontier: empty point list")
    keyed = sorted(
        ((p.error_rate, getattr(p, fairness_field), i, p) for i, p in enumerate(points)),
        key=lambda t: (t[0], t[1], t[2]),
    )
    frontier = []
    best_fair = np.inf
    for _, fair, _, p in keyed:
        if fair < best_fair:
            frontier.append(p)
            best_fair = fair
    return frontier


def _step_value(errors: np.ndarray, fairness: np.ndarray, e: float) -> float:
    """Fairness of the last frontier point with error <= e (step curve)."""
    ix = int(np.searchsorted(errors, e, side="right")) - 1
    return float(fairness[max(ix, 0)])


def frontier_gap(f1: list[MetricsRecord], f2: list[MetricsRecord],
                 fairness_field: str) -> float:
    """Mean absolute vertical gap between two step-interpolated frontiers
    over their overlapping error-rate range, in fairness-metric units."""
    if not f1 or not f2:
        raise ParameterError("frontier_gap: empty frontier")
    e1 = np.array([p.error_rate for p in f1])
    v1 = np.array([getattr(p, fairness_field) for p in f1])
    e2 = np.array([p.error_rate for p in f2])
    v2 = np.array([getattr(p, fairness_field) for p in f2])
    lo = max(e1[0], e2[0])
    hi = min(e1[-1], e2[-1])
    if lo > hi:
        raise FrontierRangeError(
            f"error-rate ranges [{e1[0]}, {e1[-1]}] and [{e2[0]}, {e2[-1]}] do not overlap")
    if lo == hi:
        return abs(_step_value(e1, v1, lo) - _step_value(e2, v2, lo))
    cuts = np.unique(np.concatenate(
        [[lo, hi], e1[(e1 > lo) & (e1 < hi)], e2[(e2 > lo) & (e2 < hi)]]))
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += abs(_step_value(e1, v1, a) - _step_value(e2, v2, a)) * (b - a)
    return total / (hi - lo)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def write_report(records: list[MetricsRecord], path) -> None:
    """CSV report, one row per record in the given order, 9 significant
    digits, missing fields empty. Byte-identical for identical records."""
    lines = [REPORT_HEADER]
    for r in records:
        lines.append(",".join([
            _fmt(r.alpha), _fmt(r.fairness_weight), _fmt(r.error_rate),
            _fmt(r.dp_relaxed), _fmt(r.dp_hard), _fmt(r.eo_relaxed),
            _fmt(r.eodd_relaxed), _fmt(r.wall_time_s), _fmt(r.seed),
        ]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report(path) -> list[MetricsRecord]:
    """Parse a report written by write_report."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != REPORT_HEADER:
        raise ParameterError(f"{path}: not a report file")
    records = []
    for ln in lines[1:]:
        cells = ln.split(",")
        f = lambda c: None if c == "" else float(c)
        records.append(MetricsRecord(
            alpha=f(cells[0]), fairness_weight=f(cells[1]),
            error_rate=float(cells[2]), dp_relaxed=float(cells[3]),
            dp_hard=float(cells[4]), eo_relaxed=float(cells[5]),
            eodd_relaxed=float(cells[6]), wall_time_s=f(cells[7]),
            seed=None if cells[8] == "" else int(cells[8]),
        ))
    return records
