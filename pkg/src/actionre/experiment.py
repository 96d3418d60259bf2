"""Score synthetic datasets and run the repeated noise-robustness protocol."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from .automata import compile_pattern
from .detscore import DeterministicScorer
from .eval import HyperGrid, QueryResult, grid_search, map_over_queries, mean_auc, mean_std
from .probscore import ProbabilisticScorer
from .synth import Dataset, ExprParams, make_dataset

__all__ = ["KINDS", "make_scorer", "score_dataset", "evaluate_dataset", "select_hypers", "run_protocol"]

KINDS = ("deterministic", "probabilistic")
DEFAULT_HYPERS = {
    "deterministic": {"tau": 0.5},
    "probabilistic": {"alpha": 1e-3, "gamma": 1.0},
}


def make_scorer(kind: str, dfa, hypers: dict):
    if kind == "deterministic":
        return DeterministicScorer(dfa, hypers.get("tau", 0.5))
    if kind == "probabilistic":
        return ProbabilisticScorer(
            dfa, hypers.get("alpha", 1e-3), hypers.get("gamma", 1.0), hypers.get("root", "total")
        )
    raise ValueError(f"unknown scorer kind {kind!r}")


class _Compiled:
    """Per-dataset cache of compiled machines."""

    def __init__(self, dataset: Dataset, untrimmed: bool):
        self.dfas = [compile_pattern(q.pattern, untrimmed=untrimmed) for q in dataset.queries]


def score_dataset(dataset: Dataset, kind: str, hypers: dict, untrimmed: bool = False,
                  compiled: _Compiled | None = None) -> list[QueryResult]:
    compiled = compiled or _Compiled(dataset, untrimmed)
    results = []
    for q, dfa in zip(dataset.queries, compiled.dfas):
        scorer = make_scorer(kind, dfa, hypers)
        scores = scorer.score_many(q.videos)
        results.append(QueryResult(q.expr_id, [v.id for v in q.videos], scores, q.labels))
    return results


def evaluate_dataset(dataset: Dataset, kind: str, hypers: dict, untrimmed: bool = False,
                     compiled: _Compiled | None = None) -> dict:
    results = score_dataset(dataset, kind, hypers, untrimmed, compiled)
    return {"auc": mean_auc(results), "map": map_over_queries(results)}


def select_hypers(dataset: Dataset, kind: str, grid: HyperGrid, untrimmed: bool = False) -> dict:
    compiled = _Compiled(dataset, untrimmed)
    best, _ = grid_search(
        grid, lambda p: evaluate_dataset(dataset, kind, p, untrimmed, compiled)["map"], kind
    )
    return best


def run_protocol(
    params: ExprParams = ExprParams(),
    noise: float = 0.0,
    n_expressions: int = 20,
    n_positive: int = 10,
    repetitions: int = 5,
    seed: int = 0,
    kinds=KINDS,
    grid: HyperGrid | None = None,
    hypers: dict | None = None,
) -> dict:
    """Repeat generate→(validate)→score; report mean and std of AUC and MAP.

    With ``grid`` set, each repetition picks hyperparameters on its own
    validation dataset, generated from a separate seed stream.
    """
    hypers = hypers or {}
    children = np.random.SeedSequence(seed).spawn(repetitions)
    per_rep = {k: [] for k in kinds}
    for child in children:
        test_seed, val_seed = (int(s.generate_state(1)[0]) for s in child.spawn(2))
        test = make_dataset(params, n_expressions, n_positive, noise=noise, seed=test_seed)
        val = None
        if grid is not None:
            val = make_dataset(params, n_expressions, n_positive, noise=noise, seed=val_seed)
        for kind in kinds:
            chosen = dict(DEFAULT_HYPERS[kind])
            chosen.update(hypers.get(kind, {}))
            if val is not None:
                chosen.update(select_hypers(val, kind, grid))
            metrics = evaluate_dataset(test, kind, chosen)
            per_rep[kind].append({**metrics, "hypers": chosen})
    summary = {}
    for kind, reps in per_rep.items():
        auc_m, auc_s = mean_std([r["auc"] for r in reps])
        map_m, map_s = mean_std([r["map"] for r in reps])
        summary[kind] = {
            "auc_mean": auc_m,
            "auc_std": auc_s,
            "map_mean": map_m,
            "map_std": map_s,
            "repetitions": reps,
        }
    return {
        "config": {
            "params": asdict(params),
            "noise": noise,
            "n_expressions": n_expressions,
            "n_positive": n_positive,
            "repetitions": repetitions,
            "seed": seed,
            "grid": None if grid is None else asdict(grid),
        },
        "results": summary,
    }
