"""Retrieval metrics, hyperparameter search and report formatting."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "QueryResult",
    "HyperGrid",
    "auc",
    "average_precision",
    "map_over_queries",
    "mean_auc",
    "grid_search",
    "mean_std",
    "format_table",
    "dumps_report",
]


class UndefinedMetricError(ValueError):
    pass


def _check(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    if not labels.any() or labels.all():
        raise UndefinedMetricError("need at least one positive and one negative")
    return scores, labels


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg), ties count one half."""
    scores, labels = _check(scores, labels)
    ranks = rankdata(scores)  # average ranks give ties half credit
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean precision at the rank of each positive.

    Items are sorted by descending score; equal scores keep input order.
    """
    scores, labels = _check(scores, labels)
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    precision = np.arange(1, ranks.size + 1) / ranks
    return float(precision.mean())


@dataclass
class QueryResult:
    expr_id: int
    ids: list
    scores: np.ndarray
    labels: np.ndarray

    @property
    def auc(self) -> float:
        return auc(self.scores, self.labels)

    @property
    def ap(self) -> float:
        return average_precision(self.scores, self.labels)


def map_over_queries(results: Sequence[QueryResult]) -> float:
    return float(np.mean([r.ap for r in results]))


def mean_auc(results: Sequence[QueryResult]) -> float:
    return float(np.mean([r.auc for r in results]))


@dataclass
class HyperGrid:
    taus: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    alphas: list = field(default_factory=lambda: [1e-6, 1e-4, 1e-3, 1e-2, 1e-1])
    gammas: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])

    def __post_init__(self):
        if not (self.taus and self.alphas and self.gammas):
            raise ValueError("grid lists must be non-empty")
        if any(not 0 <= t <= 1 for t in self.taus):
            raise ValueError("taus must lie in [0, 1]")
        if any(a <= 0 for a in self.alphas) or any(g <= 0 for g in self.gammas):
            raise ValueError("alphas and gammas must be positive")

    def points(self, kind: str) -> list[dict]:
        if kind == "deterministic":
            return [{"tau": t} for t in self.taus]
        if kind == "probabilistic":
            return [{"alpha": a, "gamma": g} for a, g in itertools.product(self.alphas, self.gammas)]
        raise ValueError(f"unknown scorer kind {kind!r}")


def _tie_key(point: dict) -> tuple:
    # smaller alpha, then gamma nearest 1, then smaller tau
    return (point.get("alpha", 0.0), abs(point.get("gamma", 1.0) - 1.0), point.get("tau", 0.0))


def grid_search(grid: HyperGrid, evaluate: Callable[[dict], float], kind: str):
    """Return ``(best_point, [(point, value), ...])`` maximising ``evaluate``.

    ``evaluate`` maps a hyperparameter dict to a validation MAP.
    """
    table = [(p, float(evaluate(p))) for p in grid.points(kind)]
    best = max(table, key=lambda pv: (pv[1], tuple(-x for x in _tie_key(pv[0]))))
    return best[0], table


def mean_std(values) -> tuple[float, float]:
    """Mean and population standard deviation (0 for a single value)."""
    values = np.asarray(values, dtype=np.float64)
    return float(values.mean()), float(values.std())


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def format_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    """Aligned plain-text table; floats use 6 significant digits."""
    cells = [[_fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(v.rjust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(float(obj)) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
